#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "merozero/core.hpp"
#include "merozero/families.hpp"

namespace merozero::detail {

struct SumResult {
    cplx value{0.0, 0.0};
    double tail_bound = 0.0;
    double abs_sum = 0.0;
    bool order_dependent = false;
    std::size_t terms_used = 0;
};

inline SumResult merge(SumResult x, const SumResult& y) {
    x.value += y.value;
    x.tail_bound += y.tail_bound;
    x.abs_sum += y.abs_sum;
    x.order_dependent = x.order_dependent || y.order_dependent;
    x.terms_used += y.terms_used;
    return x;
}

// ---------------------------------------------------------------------------
// Gauss-Legendre rules on [0, 1], used for tail integrals.

struct GLRule {
    std::vector<double> x, w;
};

inline GLRule make_gl_rule(int n) {
    GLRule r;
    r.x.resize(n);
    r.w.resize(n);
    for (int i = 0; i < n; ++i) {
        double t = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double p1 = 0.0, dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0;
            p1 = t;
            for (int j = 2; j <= n; ++j) {
                double p2 = ((2 * j - 1) * t * p1 - (j - 1) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (t * p1 - p0) / (t * t - 1.0);
            double dt = p1 / dp;
            t -= dt;
            if (std::abs(dt) < 1e-15) break;
        }
        r.x[i] = 0.5 * (1.0 + t);
        r.w[i] = 1.0 / ((1.0 - t * t) * dp * dp);
    }
    return r;
}

inline const GLRule& gl64() {
    static const GLRule r = make_gl_rule(64);
    return r;
}

inline const GLRule& gl96() {
    static const GLRule r = make_gl_rule(96);
    return r;
}

// ---------------------------------------------------------------------------

/// w^-e for integer e >= 1.
inline cplx inv_pow(cplx w, int e) {
    return cplx(1.0, 0.0) / pow_int(w, static_cast<std::size_t>(e));
}

/// Throws when the evaluation point sits on top of a pole (relative threshold).
inline void check_proximity(cplx t, cplx t_minus_z) {
    const double thr2 =
        100.0 * kMachineEps * kMachineEps * std::max(1.0, std::norm(t));
    if (std::norm(t_minus_z) < thr2)
        throw PoleProximityError("evaluation point within relative threshold of a pole");
}

/// Smallest k with |a| k^p >= 2B, used as validity onset for all tail formulas.
inline std::size_t guard_index(double A, double p, double B) {
    double k = std::pow(2.0 * B / A, 1.0 / p);
    if (!std::isfinite(k)) throw ValidationError("degenerate pole family");
    return std::max<std::size_t>(8, static_cast<std::size_t>(std::ceil(k)) + 1);
}

/// Coefficient family c_k = kappa * k^-q over poles t_k = a k^p + b.
struct SmoothFamily {
    cplx kappa;
    double q;
    cplx a;
    double p;
    cplx b;
};

/// Sum_{k>=1} kappa k^-q (a k^p + b - z)^-e with an Euler-Maclaurin midpoint
/// tail when the decay rate s = pe + q allows it, else a plain integral bound.
inline SumResult smooth_family_sum(const SmoothFamily& F, int e, cplx z,
                                   const TruncationPolicy& pol, double eps) {
    const double A = std::abs(F.a), p = F.p, q = F.q;
    const cplx beta = F.b - z;
    const double B = std::abs(beta);
    const double s = p * e + q;
    const double kap = std::abs(F.kappa);
    SumResult out;
    if (kap == 0.0) return out;
    if (eps <= 0.0) throw ValidationError("tail target must be positive");

    const std::size_t Kg = guard_index(A, p, B);
    const double lead = kap * std::pow(2.0 / A, e);

    auto sum_terms = [&](std::size_t K) {
        CompensatedSum acc;
        double absacc = 0.0;
        for (std::size_t k = 1; k <= K; ++k) {
            const cplx t = F.a * index_pow(k, p) + F.b;
            const cplx tmz = t - z;
            check_proximity(t, tmz);
            cplx term = F.kappa * inv_pow(tmz, e);
            if (q != 0.0) term /= index_pow(k, q);
            acc.add(term);
            absacc += std::abs(term);
        }
        out.value = acc.value();
        out.abs_sum = absacc;
        out.terms_used = K;
    };

    if (s >= 2.0) {
        // midpoint-rule remainder constant for g(x) = kappa x^-q (a x^p + b-z)^-e
        const double C2 = q * (q + 1.0) + 2.0 * q * e * p +
                          2.0 * e * p * std::abs(p - q - 1.0) +
                          4.0 * e * (e + 1.0) * p * p;
        auto em_rem = [&](double X) {
            return (lead * C2 / 12.0) *
                   (std::pow(X, -s - 2.0) + std::pow(X, -s - 1.0) / (s + 1.0));
        };
        std::size_t K = std::max<std::size_t>(64, Kg);
        while (K < pol.max_terms && em_rem(K + 0.5) > 0.5 * eps) K *= 2;
        K = std::min(K, pol.max_terms);
        for (;;) {
            sum_terms(K);
            const double X = K + 0.5;
            const cplx aXp = F.a * std::pow(X, p);
            auto integral = [&](const GLRule& g) {
                CompensatedSum I;
                for (std::size_t i = 0; i < g.x.size(); ++i) {
                    const double u = g.x[i];
                    const cplx den = aXp + beta * std::pow(u, p);
                    I.add(g.w[i] * std::pow(u, s - 2.0) * inv_pow(den, e));
                }
                return I.value();
            };
            const cplx i64 = integral(gl64());
            const cplx i96 = integral(gl96());
            const double scale = kap * std::pow(X, 1.0 - q);
            const cplx tail_int = F.kappa * std::pow(X, 1.0 - q) * i96;
            const double slop =
                10.0 * scale * std::abs(i96 - i64) + 8.0 * kMachineEps * std::abs(tail_int);
            const double bound = em_rem(X) + slop;
            if (bound <= eps) {
                out.value += tail_int;
                out.abs_sum += std::abs(tail_int);
                out.tail_bound = bound;
                return out;
            }
            if (K >= pol.max_terms)
                throw TailNotConvergentError("tail bound cannot reach target within term budget");
            K = std::min(pol.max_terms, K * 2);
        }
    }

    if (s > 1.0) {
        const double k_req = std::pow(lead / ((s - 1.0) * eps), 1.0 / (s - 1.0));
        if (!(k_req < static_cast<double>(pol.max_terms)))
            throw TailNotConvergentError("tail bound cannot reach target within term budget");
        const std::size_t K = std::max<std::size_t>(
            {Kg, 64, static_cast<std::size_t>(std::ceil(k_req))});
        if (K > pol.max_terms)
            throw TailNotConvergentError("tail bound cannot reach target within term budget");
        sum_terms(K);
        out.tail_bound = lead * std::pow(static_cast<double>(K), 1.0 - s) / (s - 1.0);
        return out;
    }

    throw DivergentSumError("series of absolute values diverges at this exponent");
}

/// Plain summation with the integral bound, for coefficient families whose
/// modulus is kappa k^-q but whose phase oscillates (no midpoint estimate).
inline SumResult oscillating_family_sum(const PowerFamily& pf, const CoefficientSequence& cs,
                                        double kap, double q, int e, cplx z,
                                        const TruncationPolicy& pol, double eps) {
    const double A = std::abs(pf.a), p = pf.p;
    const double B = std::abs(pf.b - z);
    const double s = p * e + q;
    SumResult out;
    if (kap == 0.0) return out;
    if (s <= 1.0)
        throw DivergentSumError("series of absolute values diverges at this exponent");
    const std::size_t Kg = guard_index(A, p, B);
    const double lead = kap * std::pow(2.0 / A, e);
    const double k_req = std::pow(lead / ((s - 1.0) * eps), 1.0 / (s - 1.0));
    if (!(k_req < static_cast<double>(pol.max_terms)))
        throw TailNotConvergentError("tail bound cannot reach target within term budget");
    const std::size_t K =
        std::max<std::size_t>({Kg, 64, static_cast<std::size_t>(std::ceil(k_req))});
    if (K > pol.max_terms)
        throw TailNotConvergentError("tail bound cannot reach target within term budget");
    CompensatedSum acc;
    for (std::size_t k = 1; k <= K; ++k) {
        const cplx t = pf.a * index_pow(k, p) + pf.b;
        const cplx tmz = t - z;
        check_proximity(t, tmz);
        const cplx term = coeff_at(cs, k) * inv_pow(tmz, e);
        acc.add(term);
        out.abs_sum += std::abs(term);
    }
    out.value = acc.value();
    out.tail_bound = lead * std::pow(static_cast<double>(K), 1.0 - s) / (s - 1.0);
    out.terms_used = K;
    return out;
}

/// Geometrically decaying coefficients |sigma| < 1: tail bounded by the
/// remaining geometric series times the smallest retained pole modulus.
inline SumResult geometric_family_sum(const PowerFamily& pf, const DecayingCoeffs& dc,
                                      int e, cplx z, const TruncationPolicy& pol,
                                      double eps) {
    const double A = std::abs(pf.a), p = pf.p, q = dc.q;
    const double B = std::abs(pf.b - z);
    const double sig = std::abs(dc.sigma);
    const double kap = std::abs(dc.kappa);
    SumResult out;
    if (kap == 0.0) return out;
    const std::size_t Kg = guard_index(A, p, B);
    auto bound_at = [&](std::size_t K) {
        const double kk = static_cast<double>(K + 1);
        return kap * std::pow(sig, kk) * std::pow(kk, -q) *
               std::pow(A * std::pow(kk, p) / 2.0, -static_cast<double>(e)) / (1.0 - sig);
    };
    std::size_t K = std::max<std::size_t>(64, Kg);
    while (K < pol.max_terms && bound_at(K) > eps) K *= 2;
    K = std::min(K, pol.max_terms);
    if (bound_at(K) > eps)
        throw TailNotConvergentError("tail bound cannot reach target within term budget");
    CompensatedSum acc;
    CoefficientSequence cs{dc};
    for (std::size_t k = 1; k <= K; ++k) {
        const cplx t = pf.a * index_pow(k, p) + pf.b;
        const cplx tmz = t - z;
        check_proximity(t, tmz);
        const cplx term = coeff_at(cs, k) * inv_pow(tmz, e);
        acc.add(term);
        out.abs_sum += std::abs(term);
    }
    out.value = acc.value();
    out.tail_bound = bound_at(K);
    out.terms_used = K;
    return out;
}

/// Alternating coefficients over a real, eventually positive and increasing
/// pole family: canonical-order sum closed with half the first omitted term.
inline SumResult alternating_family_sum(const PowerFamily& pf, const AlternatingCoeffs& ac,
                                        int e, cplx z, const TruncationPolicy& pol,
                                        double eps) {
    const double a = pf.a.real(), p = pf.p;
    const double beta = (pf.b - z).real();
    const double kap = std::abs(ac.kappa);
    SumResult out;
    if (kap == 0.0) return out;

    std::size_t k_pos = 1;
    if (beta <= 0.0)
        k_pos = static_cast<std::size_t>(std::ceil(std::pow(-beta / a, 1.0 / p))) + 1;
    while (a * index_pow(k_pos, p) + beta <= 0.0) ++k_pos;

    auto mag = [&](std::size_t k) {
        return kap * std::pow(a * index_pow(k, p) + beta, -static_cast<double>(e));
    };
    std::size_t K = std::max<std::size_t>({64, k_pos + 1});
    while (K < pol.max_terms && mag(K + 1) > 2.0 * eps) K *= 2;
    K = std::min(K, pol.max_terms);
    if (mag(K + 1) > 2.0 * eps)
        throw TailNotConvergentError("tail bound cannot reach target within term budget");

    CompensatedSum acc;
    CoefficientSequence cs{ac};
    for (std::size_t k = 1; k <= K; ++k) {
        const cplx t = pf.a * index_pow(k, p) + pf.b;
        const cplx tmz = t - z;
        check_proximity(t, tmz);
        const cplx term = coeff_at(cs, k) * inv_pow(tmz, e);
        acc.add(term);
        out.abs_sum += std::abs(term);
    }
    // midpoint of the Leibniz bracket [S_K, S_K + next term]
    const cplx t_next = pf.a * index_pow(K + 1, p) + pf.b;
    const cplx half_next = 0.5 * coeff_at(cs, K + 1) * inv_pow(t_next - z, e);
    acc.add(half_next);
    out.value = acc.value();
    out.abs_sum += std::abs(half_next);
    out.tail_bound = std::abs(half_next) + 4.0 * kMachineEps * kap;
    out.order_dependent = (p * e <= 1.0);
    out.terms_used = K;
    return out;
}

/// Conditionally convergent lattice sum at exponent 1, constant coefficients:
/// symmetric pairs 1/(n+beta) + 1/(-n+beta) = 2 beta/(beta^2 - n^2) turn the
/// canonical-order limit into an absolutely convergent series with a closed
/// tail integral.
inline SumResult lattice_pairing_sum(const ShiftedLattice& lat, cplx kappa, cplx z,
                                     const TruncationPolicy& pol, double eps) {
    const cplx beta = lat.offset - z;
    const double B = std::abs(beta);
    const double kap = std::abs(kappa);
    SumResult out;
    out.order_dependent = true;
    if (kap == 0.0) return out;

    const std::size_t n1 =
        std::max<std::size_t>(8, static_cast<std::size_t>(std::ceil(2.0 * (B + 1.0))));
    CompensatedSum acc;
    for (std::size_t k = 1; k <= 2 * n1 + 1; ++k) {
        const long long n = lattice_index(k);
        const cplx t = cplx(static_cast<double>(n), 0.0) + lat.offset;
        const cplx tmz = t - z;
        check_proximity(t, tmz);
        const cplx term = kappa / tmz;
        acc.add(term);
        out.abs_sum += std::abs(term);
    }

    // remainder bound for h(x) = 2 beta/(beta^2 - x^2), valid once x >= 2B + 2
    auto rem = [&](double X) {
        const double h2 = 46.0 * kap * std::max(B, 0.125);
        return (h2 / 12.0) * (std::pow(X, -4.0) + std::pow(X, -3.0) / 3.0);
    };
    std::size_t K = std::max<std::size_t>(
        {n1 + 1, 64, static_cast<std::size_t>(std::ceil(2.0 * B + 2.0))});
    while (K < pol.max_terms && rem(K + 0.5) > 0.5 * eps) K *= 2;
    K = std::min(K, pol.max_terms);
    if (rem(K + 0.5) > 0.5 * eps)
        throw TailNotConvergentError("tail bound cannot reach target within term budget");

    const cplx b2 = beta * beta;
    for (std::size_t n = n1 + 1; n <= K; ++n) {
        const double nn = static_cast<double>(n);
        const cplx pair = kappa * 2.0 * beta / (b2 - nn * nn);
        acc.add(pair);
        out.abs_sum += std::abs(pair);
    }
    const double X = K + 0.5;
    const cplx tail_int = kappa * std::log((X - beta) / (X + beta));
    acc.add(tail_int);
    out.abs_sum += std::abs(tail_int);
    out.value = acc.value();
    out.tail_bound = rem(X) + 8.0 * kMachineEps * std::abs(tail_int);
    out.terms_used = K;
    return out;
}

/// Lattice sum at exponent >= 2: explicit middle block plus two one-sided
/// power families (a = +1 and a = -1, p = 1).
inline SumResult lattice_absolute_sum(const ShiftedLattice& lat, cplx kappa, int e,
                                      cplx z, const TruncationPolicy& pol, double eps) {
    const cplx beta = lat.offset - z;
    const double B = std::abs(beta);
    SumResult out;
    if (std::abs(kappa) == 0.0) return out;
    const std::size_t n1 =
        std::max<std::size_t>(8, static_cast<std::size_t>(std::ceil(2.0 * (B + 1.0))));
    CompensatedSum acc;
    for (std::size_t k = 1; k <= 2 * n1 + 1; ++k) {
        const long long n = lattice_index(k);
        const cplx t = cplx(static_cast<double>(n), 0.0) + lat.offset;
        const cplx tmz = t - z;
        check_proximity(t, tmz);
        const cplx term = kappa * inv_pow(tmz, e);
        acc.add(term);
        out.abs_sum += std::abs(term);
    }
    out.value = acc.value();
    out.terms_used = 2 * n1 + 1;

    const double dn1 = static_cast<double>(n1);
    SumResult up = smooth_family_sum({kappa, 0.0, cplx(1.0, 0.0), 1.0, lat.offset + dn1},
                                     e, z, pol, eps / 2.0);
    SumResult dn = smooth_family_sum({kappa, 0.0, cplx(-1.0, 0.0), 1.0, lat.offset - dn1},
                                     e, z, pol, eps / 2.0);
    return merge(merge(out, up), dn);
}

/// Sum_k c_k (t_k - z)^-e over one segment, with a certified truncation tail.
inline SumResult segment_inverse_power_sum(const Segment& seg, int e, cplx z,
                                           const TruncationPolicy& pol, double eps) {
    if (e < 1) throw ValidationError("exponent must be a positive integer");

    if (const auto* ex = std::get_if<ExplicitPoles>(&seg.poles.family)) {
        SumResult out;
        CompensatedSum acc;
        for (std::size_t k = 1; k <= ex->values.size(); ++k) {
            const cplx t = ex->values[k - 1];
            const cplx tmz = t - z;
            check_proximity(t, tmz);
            const cplx term = coeff_at(seg.coeffs, k) * inv_pow(tmz, e);
            acc.add(term);
            out.abs_sum += std::abs(term);
        }
        out.value = acc.value();
        out.terms_used = ex->values.size();
        return out;
    }

    if (const auto* pf = std::get_if<PowerFamily>(&seg.poles.family)) {
        if (const auto* c = std::get_if<ConstantCoeffs>(&seg.coeffs.kind))
            return smooth_family_sum({c->kappa, 0.0, pf->a, pf->p, pf->b}, e, z, pol, eps);
        if (const auto* d = std::get_if<DecayingCoeffs>(&seg.coeffs.kind)) {
            const double sig = std::abs(d->sigma);
            if (sig < 1.0) return geometric_family_sum(*pf, *d, e, z, pol, eps);
            if (d->sigma == cplx(1.0, 0.0))
                return smooth_family_sum({d->kappa, d->q, pf->a, pf->p, pf->b}, e, z, pol,
                                         eps);
            return oscillating_family_sum(*pf, seg.coeffs, std::abs(d->kappa), d->q, e, z,
                                          pol, eps);
        }
        if (const auto* alt = std::get_if<AlternatingCoeffs>(&seg.coeffs.kind)) {
            const bool real_family = pf->a.imag() == 0.0 && pf->a.real() > 0.0 &&
                                     pf->b.imag() == 0.0 && z.imag() == 0.0;
            if (real_family) return alternating_family_sum(*pf, *alt, e, z, pol, eps);
            return oscillating_family_sum(*pf, seg.coeffs, std::abs(alt->kappa), 0.0, e, z,
                                          pol, eps);
        }
        throw ValidationError("explicit coefficient lists require explicit pole lists");
    }

    const auto& lat = std::get<ShiftedLattice>(seg.poles.family);
    const auto* c = std::get_if<ConstantCoeffs>(&seg.coeffs.kind);
    if (!c)
        throw ValidationError("lattice pole families support constant coefficients only");
    if (e == 1) return lattice_pairing_sum(lat, c->kappa, z, pol, eps);
    return lattice_absolute_sum(lat, c->kappa, e, z, pol, eps);
}

/// True when the segment's coefficient/pole combination admits a finite
/// certified bound on Sum |c_k| / |t_k|^e.
inline bool absolutely_summable(const Segment& seg, int e) {
    if (seg.poles.is_finite()) return true;
    if (const auto* pf = std::get_if<PowerFamily>(&seg.poles.family)) {
        double q = 0.0;
        if (const auto* d = std::get_if<DecayingCoeffs>(&seg.coeffs.kind)) {
            if (std::abs(d->sigma) < 1.0) return true;
            q = d->q;
        }
        return pf->p * e + q > 1.0;
    }
    return e > 1;  // lattice
}

}  // namespace merozero::detail
