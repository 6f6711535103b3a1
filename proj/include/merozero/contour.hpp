#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include "merozero/core.hpp"
#include "merozero/detail/sum_engine.hpp"
#include "merozero/kernel.hpp"

namespace merozero {

/// Circle used for argument-principle quadrature.
struct ContourSpec {
    cplx center{0.0, 0.0};
    double radius = 1.0;
    int quadrature_points = 256;
};

struct LocatedZero {
    cplx location{0.0, 0.0};
    int multiplicity = 1;
    double refinement_error = 0.0;
};

struct ZeroList {
    std::vector<LocatedZero> zeros;
    std::optional<ContourSpec> exhaustive_in;
    int unresolved_cells = 0;

    long long total_multiplicity() const {
        long long m = 0;
        for (const auto& z : zeros) m += z.multiplicity;
        return m;
    }
};

/// Evaluation surface the oracle works against. Kernel specs adapt to it, and
/// closed-form fixtures (entire functions) plug in the same way.
struct MeromorphicModel {
    std::function<cplx(cplx)> f;
    std::function<cplx(cplx)> df;
    std::function<ValueWithError(cplx)> f_certified;
    std::function<std::vector<std::pair<cplx, int>>(double)> poles_within;
};

inline MeromorphicModel make_model(const KernelSpec& spec,
                                   const TruncationPolicy& policy = {}) {
    // iteration-grade accuracy for the quadrature loops, certified accuracy
    // only where a residual is accepted
    TruncationPolicy fast = policy.with_target(std::max(1e-8, policy.target_tail));
    MeromorphicModel m;
    m.f = [spec, fast](cplx z) { return evaluate(spec, z, fast).value; };
    m.df = [spec, fast](cplx z) { return evaluate_derivative(spec, z, 1, fast).value; };
    m.f_certified = [spec, policy](cplx z) { return evaluate(spec, z, policy); };
    m.poles_within = [spec](double r) { return spec.poles_within(r); };
    return m;
}

/// sin(pi z)/(pi z): entire, zeros exactly at the nonzero integers.
inline MeromorphicModel sinc_pi_model() {
    auto val = [](cplx z) {
        const cplx w = std::numbers::pi * z;
        if (std::abs(w) < 0.3) {
            cplx acc{1.0, 0.0}, term{1.0, 0.0};
            const cplx w2 = w * w;
            for (int n = 1; n <= 10; ++n) {
                term *= -w2 / static_cast<double>(2 * n * (2 * n + 1));
                acc += term;
            }
            return acc;
        }
        return std::sin(w) / w;
    };
    auto der = [](cplx z) {
        const cplx w = std::numbers::pi * z;
        if (std::abs(w) < 0.3) {
            // pi * sum_{n>=1} (-1)^n 2n w^{2n-1} / (2n+1)!
            cplx acc{0.0, 0.0};
            cplx wpow = w;
            double fact = 6.0, sign = -1.0;
            for (int n = 1; n <= 10; ++n) {
                acc += sign * 2.0 * n * wpow / fact;
                wpow *= w * w;
                fact *= (2.0 * n + 2.0) * (2.0 * n + 3.0);
                sign = -sign;
            }
            return std::numbers::pi * acc;
        }
        return std::numbers::pi * (std::cos(w) / w - std::sin(w) / (w * w));
    };
    MeromorphicModel m;
    m.f = val;
    m.df = der;
    m.f_certified = [val](cplx z) {
        const cplx v = val(z);
        return ValueWithError{v, 16.0 * kMachineEps * (1.0 + std::abs(v))};
    };
    m.poles_within = [](double) { return std::vector<std::pair<cplx, int>>{}; };
    return m;
}

struct CountResult {
    long long value = 0;
    double margin = 0.0;
    int points_used = 0;
    ContourSpec used;
};

namespace detail {

inline bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

/// Poles merged by location (repeated entries add up their orders).
inline std::vector<std::pair<cplx, int>> merged_poles(
    const std::vector<std::pair<cplx, int>>& raw) {
    std::vector<std::pair<cplx, int>> out;
    for (const auto& [t, mult] : raw) {
        bool fused = false;
        for (auto& [u, m] : out) {
            if (std::abs(u - t) <= 1e-12 * std::max(1.0, std::abs(u))) {
                m += mult;
                fused = true;
                break;
            }
        }
        if (!fused) out.emplace_back(t, mult);
    }
    return out;
}

/// One trapezoidal pass of (1/2pi i) \oint f'/f dz on a circle.
inline cplx circle_logderiv_integral(const MeromorphicModel& model, cplx c, double r,
                                     int Q) {
    CompensatedSum acc;
    for (int j = 0; j < Q; ++j) {
        const double th = 2.0 * std::numbers::pi * j / Q;
        const cplx e{std::cos(th), std::sin(th)};
        const cplx z = c + r * e;
        acc.add(model.df(z) / model.f(z) * (r * e));
    }
    return acc.value() / static_cast<double>(Q);
}

inline bool circle_is_clear(const MeromorphicModel& model, cplx c, double r) {
    for (const auto& [t, mult] : model.poles_within(std::abs(c) + 2.0 * r)) {
        (void)mult;
        if (std::abs(std::abs(t - c) - r) < 1e-6 * r) return false;
    }
    double min_f = std::numeric_limits<double>::infinity();
    double med_scale = 0.0;
    constexpr int kProbe = 64;
    for (int j = 0; j < kProbe; ++j) {
        const double th = 2.0 * std::numbers::pi * (j + 0.5) / kProbe;
        const cplx z = c + r * cplx(std::cos(th), std::sin(th));
        const double a = std::abs(model.f(z));
        min_f = std::min(min_f, a);
        med_scale += a;
    }
    med_scale /= kProbe;
    return min_f > 1e-9 * med_scale;
}

}  // namespace detail

/// (1/2pi i) \oint f'/f dz over the contour, rounded to the nearest integer.
/// The contour is jittered (up to +-1%, three attempts) off poles and zeros;
/// quadrature points double until the raw value lands within 0.25 of an
/// integer.
inline CountResult count_zeros_minus_poles(const MeromorphicModel& model,
                                           const ContourSpec& contour) {
    if (!(contour.radius > 0.0)) throw ValidationError("contour radius must be positive");
    if (!detail::is_power_of_two(contour.quadrature_points))
        throw ValidationError("quadrature_points must be a power of two");

    const double jitters[] = {0.0, +0.01, -0.01};
    for (double j : jitters) {
        const double r = contour.radius * (1.0 + j);
        if (!detail::circle_is_clear(model, contour.center, r)) continue;
        for (int Q = std::max(contour.quadrature_points, 32); Q <= (1 << 16); Q *= 2) {
            const cplx raw = detail::circle_logderiv_integral(model, contour.center, r, Q);
            const auto n = static_cast<long long>(std::llround(raw.real()));
            const double margin = std::abs(raw - cplx(static_cast<double>(n), 0.0));
            if (margin < 0.25)
                return {n, margin, Q, {contour.center, r, Q}};
        }
        throw QuadratureError("argument-principle quadrature did not converge");
    }
    throw QuadratureError("contour could not be perturbed clear of poles/zeros");
}

inline CountResult count_zeros_minus_poles(const KernelSpec& spec,
                                           const ContourSpec& contour,
                                           const TruncationPolicy& policy = {}) {
    return count_zeros_minus_poles(make_model(spec, policy), contour);
}

// ---------------------------------------------------------------------------
// Zero search by recursive subdivision.

namespace detail {

inline const GLRule& gl_rule_n(int n) {
    static std::map<int, GLRule> cache;
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, make_gl_rule(n)).first;
    return it->second;
}

struct Cell {
    double x0, y0, wx, wy;

    cplx center() const { return {x0 + 0.5 * wx, y0 + 0.5 * wy}; }
    double diam() const { return std::max(wx, wy); }
    bool contains(cplx z) const {
        return z.real() >= x0 && z.real() <= x0 + wx && z.imag() >= y0 &&
               z.imag() <= y0 + wy;
    }
};

/// Zeros-only count inside a rectangular cell: integrates f'/f plus deflation
/// terms for every pole near the cell, so the integrand is analytic inside.
inline std::optional<long long> cell_zero_count(
    const MeromorphicModel& model, const Cell& cell,
    const std::vector<std::pair<cplx, int>>& all_poles) {
    std::vector<std::pair<cplx, int>> defl;
    const cplx c = cell.center();
    for (const auto& [t, mult] : all_poles)
        if (std::abs(t - c) < 1.6 * cell.diam()) defl.emplace_back(t, mult);

    auto phi = [&](cplx z) {
        cplx v = model.df(z) / model.f(z);
        for (const auto& [t, mult] : defl) v += static_cast<double>(mult) / (z - t);
        return v;
    };

    const cplx corners[5] = {{cell.x0, cell.y0},
                             {cell.x0 + cell.wx, cell.y0},
                             {cell.x0 + cell.wx, cell.y0 + cell.wy},
                             {cell.x0, cell.y0 + cell.wy},
                             {cell.x0, cell.y0}};
    cplx prev{0.0, 0.0};
    for (int n = 8; n <= 128; n *= 2) {
        const GLRule& g = gl_rule_n(n);
        CompensatedSum acc;
        for (int edge = 0; edge < 4; ++edge) {
            const cplx za = corners[edge], zb = corners[edge + 1];
            const cplx d = zb - za;
            for (int i = 0; i < n; ++i) acc.add(g.w[i] * phi(za + g.x[i] * d) * d);
        }
        const cplx raw = acc.value() / cplx(0.0, 2.0 * std::numbers::pi);
        const auto k = static_cast<long long>(std::llround(raw.real()));
        const double margin = std::abs(raw - cplx(static_cast<double>(k), 0.0));
        if (margin < 0.2 && n > 8 && std::abs(raw - prev) < 0.1) {
            if (k < 0) return std::nullopt;  // lost a deflation term; treat as unresolved
            return k;
        }
        prev = raw;
    }
    return std::nullopt;
}

struct NewtonOutcome {
    cplx z;
    double step = 0.0;
    bool converged = false;
};

inline NewtonOutcome newton_refine(const MeromorphicModel& model, cplx z0, int mult,
                                   double box) {
    NewtonOutcome out{z0, 0.0, false};
    cplx z = z0;
    double last = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 80; ++it) {
        const cplx fv = model.f(z);
        const cplx dv = model.df(z);
        if (!(std::abs(dv) > 0.0) || !is_finite(dv) || !is_finite(fv)) return out;
        const cplx step = static_cast<double>(mult) * fv / dv;
        z -= step;
        if (!is_finite(z) || std::abs(z - z0) > 3.0 * box) return out;
        const double s = std::abs(step);
        if (s < 1e-13 * std::max(1.0, std::abs(z))) {
            out.z = z;
            out.step = s;
            out.converged = true;
            return out;
        }
        if (it > 40 && s > last) return out;  // stopped contracting
        last = s;
    }
    return out;
}

}  // namespace detail

/// Locates every zero of the model in |z| <= R by quadrisection with
/// per-cell argument-principle counts (poles deflated), then Newton
/// refinement. The exhaustive flag is set only when the located
/// multiplicities reproduce the full-disk count.
inline ZeroList find_zeros_in_disk(const MeromorphicModel& model, double R,
                                   const TruncationPolicy& policy = {}) {
    if (!(R > 0.0)) throw ValidationError("search radius must be positive");
    ZeroList out;
    const double Rp = R * (1.0 + 1.0 / 433.0);
    const auto poles = detail::merged_poles(model.poles_within(Rp * 1.6));

    detail::Cell root{-Rp, -Rp, 2.0 * Rp, 2.0 * Rp};
    auto root_count = detail::cell_zero_count(model, root, poles);
    if (!root_count) {
        out.unresolved_cells = 1;
        return out;
    }

    const double newton_width = std::max(2e-3 * Rp, 1e-12);
    const double cluster_floor = 1e-8 * Rp;

    std::vector<std::pair<detail::Cell, long long>> work;
    work.emplace_back(root, *root_count);

    while (!work.empty()) {
        auto [cell, count] = work.back();
        work.pop_back();
        if (count == 0) continue;

        if (count == 1 && cell.diam() <= newton_width) {
            auto nr = detail::newton_refine(model, cell.center(), 1, cell.diam());
            if (nr.converged && cell.contains(nr.z)) {
                const ValueWithError residual = model.f_certified(nr.z);
                const double fstart = std::abs(model.f(cell.center()));
                if (std::abs(residual.value) <=
                    std::max(1e-12 * fstart, 4.0 * residual.error_bound)) {
                    out.zeros.push_back({nr.z, 1, nr.step + 1e-13 * std::abs(nr.z)});
                    continue;
                }
            }
            if (cell.diam() <= cluster_floor) {
                ++out.unresolved_cells;
                continue;
            }
        }
        if (count >= 2 && cell.diam() <= cluster_floor) {
            auto nr = detail::newton_refine(model, cell.center(), static_cast<int>(count),
                                            cell.diam());
            out.zeros.push_back({nr.converged ? nr.z : cell.center(),
                                 static_cast<int>(count), cell.diam() + nr.step});
            continue;
        }

        // quadrisect with jittered split coordinates; children tile the cell
        bool done = false;
        for (int attempt = 0; attempt < 3 && !done; ++attempt) {
            const double eta = 0.0137 * (attempt + 1) * ((attempt % 2) ? -1.0 : 1.0);
            const double x1 = cell.x0, x3 = cell.x0 + cell.wx;
            const double y1 = cell.y0, y3 = cell.y0 + cell.wy;
            const double x2 = cell.x0 + cell.wx * (0.5 + eta);
            const double y2 = cell.y0 + cell.wy * (0.5 - eta);
            const detail::Cell kids[4] = {{x1, y1, x2 - x1, y2 - y1},
                                          {x2, y1, x3 - x2, y2 - y1},
                                          {x1, y2, x2 - x1, y3 - y2},
                                          {x2, y2, x3 - x2, y3 - y2}};
            long long total = 0;
            std::vector<std::pair<detail::Cell, long long>> staged;
            bool ok = true;
            for (const auto& child : kids) {
                auto cc = detail::cell_zero_count(model, child, poles);
                if (!cc) {
                    ok = false;
                    break;
                }
                total += *cc;
                if (*cc > 0) staged.emplace_back(child, *cc);
            }
            if (ok && total == count) {
                for (auto& s : staged) work.push_back(s);
                done = true;
            }
        }
        if (!done) ++out.unresolved_cells;
    }

    // deterministic order and defensive merge of refined duplicates
    std::sort(out.zeros.begin(), out.zeros.end(), [](const auto& a, const auto& b) {
        if (a.location.real() != b.location.real())
            return a.location.real() < b.location.real();
        return a.location.imag() < b.location.imag();
    });
    std::vector<LocatedZero> dedup;
    for (const auto& z : out.zeros) {
        if (!dedup.empty() &&
            std::abs(dedup.back().location - z.location) < 1e-9 * std::max(1.0, Rp)) {
            dedup.back().multiplicity += z.multiplicity;
            dedup.back().refinement_error =
                std::max(dedup.back().refinement_error, z.refinement_error);
        } else {
            dedup.push_back(z);
        }
    }
    out.zeros = std::move(dedup);

    // exhaustiveness: compare against the disk-level count
    if (out.unresolved_cells == 0) {
        try {
            ContourSpec circle{{0.0, 0.0}, R, 256};
            const CountResult zmp = count_zeros_minus_poles(model, circle);
            long long pole_order = 0;
            for (const auto& [t, mult] : poles)
                if (std::abs(t) < zmp.used.radius) pole_order += mult;
            long long kept = 0;
            std::vector<LocatedZero> inside;
            for (const auto& z : out.zeros) {
                if (std::abs(z.location) <= zmp.used.radius) {
                    inside.push_back(z);
                    kept += z.multiplicity;
                }
            }
            out.zeros = std::move(inside);
            if (kept == zmp.value + pole_order) out.exhaustive_in = zmp.used;
        } catch (const ConvergenceError&) {
            // no exhaustiveness certificate
        }
    }
    (void)policy;
    return out;
}

inline ZeroList find_zeros_in_disk(const KernelSpec& spec, double R,
                                   const TruncationPolicy& policy = {}) {
    return find_zeros_in_disk(make_model(spec, policy), R, policy);
}

// ---------------------------------------------------------------------------

struct DirectZeroSum {
    cplx value{0.0, 0.0};
    bool incomplete = true;
};

/// Sum over located zeros of s^-(N+1), multiplicity-weighted. Incomplete
/// unless the list carries an exhaustiveness certificate (tail bounds for
/// zeros beyond it are the caller's).
inline DirectZeroSum direct_zero_power_sum(const ZeroList& zl, int N) {
    if (N < 0) throw ValidationError("N must be nonnegative");
    CompensatedSum acc;
    for (const auto& z : zl.zeros) {
        if (std::abs(z.location) < 1e-300)
            throw ValidationError("zero at the origin has no inverse power");
        acc.add(static_cast<double>(z.multiplicity) *
                detail::inv_pow(z.location, N + 1));
    }
    return {acc.value(), !zl.exhaustive_in.has_value()};
}

/// E(z, p) = (1 - z) exp(z + z^2/2 + ... + z^p/p); E(z, 0) = 1 - z.
inline cplx weierstrass_factor(cplx z, int p) {
    if (p < 0) throw ValidationError("genus must be nonnegative");
    cplx expo{0.0, 0.0};
    cplx zp{1.0, 0.0};
    for (int j = 1; j <= p; ++j) {
        zp *= z;
        expo += zp / static_cast<double>(j);
    }
    return (1.0 - z) * std::exp(expo);
}

/// Partial-fraction form of F'/F from explicit zero/pole data:
///   P'(z) + z^p Sum 1/(s_k^p (z - s_k)) - z^p Sum 1/(t_k^p (z - t_k)).
inline cplx corollary1_logderiv(const ZeroList& zeros,
                                const std::vector<std::pair<cplx, int>>& poles,
                                const std::vector<cplx>& P_prime_coeffs, int p, cplx z) {
    if (p < 0) throw ValidationError("genus must be nonnegative");
    cplx acc{0.0, 0.0};
    cplx zn{1.0, 0.0};
    for (cplx c : P_prime_coeffs) {
        acc += c * zn;
        zn *= z;
    }
    const cplx zp = detail::pow_int(z, static_cast<std::size_t>(p));
    CompensatedSum zsum;
    for (const auto& s : zeros.zeros) {
        const cplx d = z - s.location;
        if (std::abs(d) < 1e-12 * std::max(1.0, std::abs(s.location)))
            throw ValidationError("evaluation point collides with a zero");
        zsum.add(static_cast<double>(s.multiplicity) /
                 (detail::pow_int(s.location, static_cast<std::size_t>(p)) * d));
    }
    CompensatedSum tsum;
    for (const auto& [t, mult] : poles) {
        const cplx d = z - t;
        if (std::abs(d) < 1e-12 * std::max(1.0, std::abs(t)))
            throw ValidationError("evaluation point collides with a pole");
        tsum.add(static_cast<double>(mult) /
                 (detail::pow_int(t, static_cast<std::size_t>(p)) * d));
    }
    return acc + zp * zsum.value() - zp * tsum.value();
}

}  // namespace merozero
