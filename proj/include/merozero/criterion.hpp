#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <numbers>
#include <optional>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "merozero/core.hpp"
#include "merozero/kernel.hpp"
#include "merozero/power_sums.hpp"
#include "merozero/series.hpp"

namespace merozero {

enum class ZeroFreeDecision {
    has_zeros_certified,
    candidate_zero_free,
    inconclusive,
};

struct ResidualEntry {
    ValueWithError value;
    bool below_hypothesis = false;
    bool order_dependent = false;
    bool available = true;
};

/// Residuals r_N = m T_{N+1} - (1/N!)(f'/f)^(N)(0) of the zero-free
/// criterion, with the certified decision drawn from them.
///
/// has_zeros_certified is rigorous (one nonzero residual beyond its bound
/// contradicts zero-freeness); candidate_zero_free only reports that every
/// computed residual is consistent with zero up to N_max.
struct ResidualReport {
    std::map<int, ResidualEntry> residuals;
    int n_min = 0;
    int n_max = 0;
    double rho_estimate = 0.0;
    ZeroFreeDecision decision = ZeroFreeDecision::inconclusive;
    std::optional<int> witness;
};

inline ResidualReport residuals(const KernelSpec& spec, int N_max, double rho_estimate,
                                const TruncationPolicy& policy = {}) {
    if (N_max < 0) throw ValidationError("N_max must be nonnegative");
    ResidualReport rep;
    rep.n_min = 0;
    rep.n_max = N_max;
    rep.rho_estimate = rho_estimate;
    const int m = spec.kernel_order();

    const auto b = logderiv_coeffs(
        taylor_coeffs(spec, static_cast<std::size_t>(N_max) + 1, policy),
        static_cast<std::size_t>(N_max));

    bool any_in_range_missing = false;
    bool any_in_range = false;
    for (int N = 0; N <= N_max; ++N) {
        ResidualEntry entry;
        entry.below_hypothesis = !satisfies_order_hypothesis(N, rho_estimate);
        try {
            const auto T = pole_power_sum_entry(spec, N + 1, policy);
            entry.value = cplx(static_cast<double>(m), 0.0) * T.value -
                          b.coeffs[static_cast<std::size_t>(N)];
            entry.order_dependent = T.order_dependent;
        } catch (const DivergentSumError&) {
            entry.available = false;
        }
        if (!entry.below_hypothesis) {
            any_in_range = true;
            if (!entry.available) any_in_range_missing = true;
            if (entry.available && !entry.value.consistent_with_zero() && !rep.witness)
                rep.witness = N;
        }
        rep.residuals[N] = entry;
    }

    if (rep.witness)
        rep.decision = ZeroFreeDecision::has_zeros_certified;
    else if (any_in_range && !any_in_range_missing)
        rep.decision = ZeroFreeDecision::candidate_zero_free;
    else
        rep.decision = ZeroFreeDecision::inconclusive;
    return rep;
}

// ---------------------------------------------------------------------------
// Finite moments oracle.

struct MomentCheckResult {
    bool all_zero = true;
    int witness = 0;  // smallest N with p_N inconsistent with zero, when set
};

namespace detail {

using Rational = boost::multiprecision::cpp_rational;

struct RationalComplex {
    Rational re, im;

    RationalComplex operator*(const RationalComplex& o) const {
        return {re * o.re - im * o.im, re * o.im + im * o.re};
    }
    RationalComplex& operator+=(const RationalComplex& o) {
        re += o.re;
        im += o.im;
        return *this;
    }
    bool is_zero() const { return re == 0 && im == 0; }
    double abs_upper() const {
        const double r = std::abs(re.convert_to<double>());
        const double i = std::abs(im.convert_to<double>());
        return std::hypot(r, i) * (1.0 + 8.0 * kMachineEps);
    }
};

/// Newton's identities: i e_i = Sum_{j=1..i} (-1)^(j-1) e_{i-j} p_j.
inline std::vector<RationalComplex> elementary_from_power_sums(
    const std::vector<RationalComplex>& p) {
    const std::size_t n = p.size();
    std::vector<RationalComplex> e(n + 1);
    e[0] = {Rational(1), Rational(0)};
    for (std::size_t i = 1; i <= n; ++i) {
        RationalComplex acc{Rational(0), Rational(0)};
        for (std::size_t j = 1; j <= i; ++j) {
            RationalComplex term = e[i - j] * p[j - 1];
            if (j % 2 == 0) {
                term.re = -term.re;
                term.im = -term.im;
            }
            acc += term;
        }
        acc.re /= static_cast<int>(i);
        acc.im /= static_cast<int>(i);
        e[i] = acc;
    }
    return e;
}

}  // namespace detail

/// Finite-instance realization of the moments lemma: either every power sum
/// p_1..p_n of the inputs is consistent with zero (then so is every input),
/// or the smallest inconsistent exponent is returned as witness.
///
/// Exact dyadic-rational arithmetic for n <= 64, floating point beyond.
inline MomentCheckResult newton_moment_check(const std::vector<cplx>& a,
                                             double tolerance) {
    const std::size_t n = a.size();
    if (n > 10'000) throw ValidationError("moment check input is capped at 10^4 values");
    if (n == 0) return {true, 0};

    auto threshold = [&](std::size_t N) {
        return static_cast<double>(n) * std::pow(tolerance, static_cast<double>(N));
    };

    if (n <= 64) {
        std::vector<detail::RationalComplex> vals(n), pw(n);
        for (std::size_t k = 0; k < n; ++k) {
            vals[k] = {detail::Rational(a[k].real()), detail::Rational(a[k].imag())};
            pw[k] = vals[k];
        }
        std::vector<detail::RationalComplex> p(n);
        for (std::size_t N = 1; N <= n; ++N) {
            detail::RationalComplex acc{detail::Rational(0), detail::Rational(0)};
            for (std::size_t k = 0; k < n; ++k) {
                if (N > 1) pw[k] = pw[k] * vals[k];
                acc += pw[k];
            }
            p[N - 1] = acc;
        }
        bool all_exact_zero = true;
        for (std::size_t N = 1; N <= n; ++N) {
            if (!p[N - 1].is_zero()) {
                all_exact_zero = false;
                break;
            }
        }
        if (all_exact_zero) {
            // cross-check: all elementary symmetric functions vanish too
            const auto e = detail::elementary_from_power_sums(p);
            for (std::size_t i = 1; i <= n; ++i)
                if (!e[i].is_zero())
                    throw Error("Newton identity cross-check failed");
            return {true, 0};
        }
        for (std::size_t N = 1; N <= n; ++N)
            if (p[N - 1].abs_upper() > threshold(N))
                return {false, static_cast<int>(N)};
        return {true, 0};
    }

    std::vector<cplx> pw(a);
    for (std::size_t N = 1; N <= n; ++N) {
        CompensatedSum acc;
        for (std::size_t k = 0; k < n; ++k) {
            if (N > 1) pw[k] *= a[k];
            acc.add(pw[k]);
        }
        if (std::abs(acc.value()) > threshold(N)) return {false, static_cast<int>(N)};
    }
    return {true, 0};
}

// ---------------------------------------------------------------------------
// Classification of zero-free unit-weight sums.

namespace detail {

inline bool has_unit_coefficients(const KernelSpec& spec) {
    for (const auto& seg : spec.segments()) {
        if (const auto* c = std::get_if<ConstantCoeffs>(&seg.coeffs.kind)) {
            if (c->kappa != cplx(1.0, 0.0)) return false;
        } else if (const auto* e = std::get_if<ExplicitCoeffs>(&seg.coeffs.kind)) {
            for (cplx v : e->values)
                if (v != cplx(1.0, 0.0)) return false;
        } else {
            return false;
        }
    }
    return true;
}

/// Max ODE residual over sample circles, or nullopt when a sample collides
/// with a zero of f. residual_fn maps (f, f', f'') at z to the residual.
template <typename ResidualFn>
inline std::optional<bool> ode_residual_passes(const KernelSpec& spec, double r0,
                                               const TruncationPolicy& policy,
                                               ResidualFn&& residual_fn) {
    constexpr int kSamples = 16;
    for (int attempt = 0; attempt < 3; ++attempt) {
        const double phase = 2.0 * std::numbers::pi * 0.137 * attempt;
        bool collided = false;
        bool all_small = true;
        for (int j = 0; j < kSamples && !collided; ++j) {
            const double th = phase + 2.0 * std::numbers::pi * j / kSamples;
            const cplx z = r0 * cplx(std::cos(th), std::sin(th));
            const ValueWithError f = evaluate(spec, z, policy);
            if (std::abs(f.value) <= f.error_bound) {
                collided = true;
                break;
            }
            const ValueWithError r = residual_fn(z, f);
            const double floor = 1e-11 * (1.0 + std::abs(f.value));
            if (std::abs(r.value) > std::max(r.error_bound, floor)) all_small = false;
        }
        if (!collided) return all_small;
    }
    return std::nullopt;
}

}  // namespace detail

enum class UnitClassification {
    matches_single_pole,
    not_zero_free,
    inconclusive,
};

struct UnitClassifyResult {
    UnitClassification verdict = UnitClassification::inconclusive;
    cplx fitted_pole{0.0, 0.0};
};

/// Classifies a unit-weight kernel-order-1 spec: a zero-free member must be a
/// single Cauchy kernel 1/(z - C), detected through the residual of
/// f + f'/f = 0 on a circle inside the pole-free disk.
inline UnitClassifyResult classify_unit_weight(const KernelSpec& spec,
                                               const TruncationPolicy& policy = {}) {
    if (spec.kernel_order() != 1)
        throw ValidationError("classify_unit_weight applies to kernel order 1");
    if (!detail::has_unit_coefficients(spec))
        throw ValidationError("classifier requires unit coefficients");
    const double idx = spec.sequence_convergence_index();
    if (!(idx < 1.0))
        throw HypothesisError("classification hypothesis needs convergence index < 1");

    const double r0 = spec.min_pole_modulus() / 2.0;
    auto passed = detail::ode_residual_passes(
        spec, r0, policy, [&](cplx z, const ValueWithError& f) {
            const ValueWithError fp = evaluate_derivative(spec, z, 1, policy);
            return f + div_with_error(fp, f);
        });
    if (!passed)
        throw SampleCollisionError("ODE sampling kept colliding with zeros of f");
    if (*passed) {
        const ValueWithError f0 = spec.value_at_origin();
        return {UnitClassification::matches_single_pole, -1.0 / f0.value};
    }
    const auto rep = residuals(spec, 8, idx, policy);
    if (rep.decision == ZeroFreeDecision::has_zeros_certified)
        return {UnitClassification::not_zero_free, {}};
    return {UnitClassification::inconclusive, {}};
}

enum class SquaredClassification {
    matches_sine_family,
    matches_single_pole,
    not_zero_free,
    inconclusive,
};

struct SquaredClassifyResult {
    SquaredClassification verdict = SquaredClassification::inconclusive;
    cplx fitted{0.0, 0.0};  // lattice shift b, or pole C
};

/// Classifies a unit-weight kernel-order-2 spec against the two zero-free
/// families pi^2/sin^2(pi(z+b)) and 1/(z-C)^2, via 2f - (f'/f)' = 0.
inline SquaredClassifyResult classify_squared(const KernelSpec& spec,
                                              const TruncationPolicy& policy = {}) {
    if (spec.kernel_order() != 2)
        throw ValidationError("classify_squared applies to kernel order 2");
    if (!detail::has_unit_coefficients(spec))
        throw ValidationError("classifier requires unit coefficients");
    const double idx = spec.sequence_convergence_index();
    if (!(idx < 2.0))
        throw HypothesisError("classification hypothesis needs convergence index < 2");

    const double r0 = spec.min_pole_modulus() / 2.0;
    auto passed = detail::ode_residual_passes(
        spec, r0, policy, [&](cplx z, const ValueWithError& f) {
            const ValueWithError fp = evaluate_derivative(spec, z, 1, policy);
            const ValueWithError fpp = evaluate_derivative(spec, z, 2, policy);
            // (f'/f)' = f''/f - (f'/f)^2
            const ValueWithError q = div_with_error(fp, f);
            return cplx(2.0, 0.0) * f - div_with_error(fpp, f) + q * q;
        });
    if (!passed)
        throw SampleCollisionError("ODE sampling kept colliding with zeros of f");
    if (*passed) {
        if (spec.is_finite() && spec.finite_size() == 1)
            return {SquaredClassification::matches_single_pole,
                    expand_poles(spec, 1)[0].first};
        const double lo = spec.min_pole_modulus();
        const auto near = spec.poles_within(lo * (1.0 + 1e-9));
        const cplx t_near = near.front().first;
        cplx b = -t_near;
        b -= std::floor(b.real());  // reduce mod 1 to Re(b) in [0,1)
        return {SquaredClassification::matches_sine_family, b};
    }
    const auto rep = residuals(spec, 8, idx, policy);
    if (rep.decision == ZeroFreeDecision::has_zeros_certified)
        return {SquaredClassification::not_zero_free, {}};
    return {SquaredClassification::inconclusive, {}};
}

// ---------------------------------------------------------------------------
// The four displayed M/T relations (LHS - RHS per relation).

inline std::array<ValueWithError, 4> mt_relation_residuals(
    const KernelSpec& spec, const TruncationPolicy& policy = {}) {
    if (spec.kernel_order() != 1)
        throw ValidationError("M/T relations apply to kernel order 1");
    std::array<ValueWithError, 4> out;
    ValueWithError M[6], T[5];
    for (int l = 1; l <= 5; ++l) M[l] = weighted_power_sum(spec, l, policy);
    for (int l = 1; l <= 4; ++l) T[l] = pole_power_sum(spec, l, policy);
    if (std::abs(M[1].value) <= M[1].error_bound)
        throw HypothesisError("M_1 is not separated from zero");

    const ValueWithError M1_2 = M[1] * M[1];
    const ValueWithError M1_3 = M1_2 * M[1];
    const ValueWithError M1_4 = M1_3 * M[1];
    out[0] = div_with_error(M[2], M[1]) - T[1];
    out[1] = div_with_error(cplx(2, 0) * (M[1] * M[3]) - M[2] * M[2], M1_2) - T[2];
    out[2] = div_with_error(cplx(3, 0) * (M1_2 * M[4]) - cplx(3, 0) * (M[1] * (M[2] * M[3])) +
                                (M[2] * M[2]) * M[2],
                            M1_3) -
             T[3];
    out[3] = div_with_error(cplx(4, 0) * (M1_3 * M[5]) - cplx(4, 0) * (M1_2 * (M[2] * M[4])) -
                                cplx(2, 0) * (M1_2 * (M[3] * M[3])) +
                                cplx(4, 0) * (M[1] * ((M[2] * M[2]) * M[3])) -
                                (M[2] * M[2]) * (M[2] * M[2]),
                            M1_4) -
             T[4];
    return out;
}

// ---------------------------------------------------------------------------
// Differential identity of zero-free families along a parameter.

/// delta-indexed samples of M_1..M_L (M_1 normalized to 1) and T_2..T_{L-1}.
struct FamilyVariationSamples {
    std::vector<double> delta;
    std::vector<std::vector<cplx>> M;  // M[l-1][i] for l = 1..L
    std::vector<std::vector<cplx>> T;  // T[j-2][i] for j = 2..L-1
};

/// Central-difference residuals of
///   dM_l = M_{l-1} dM_2 + (M_{l-2}/2) dT_2 + ... + (1/(l-1)) dT_{l-1}
/// per l = 3..L at interior sample points.
inline std::map<int, std::vector<cplx>> family_variation_residual(
    const FamilyVariationSamples& fs) {
    const std::size_t n = fs.delta.size();
    if (n < 5) throw InsufficientGridError("need at least 5 equally spaced delta samples");
    const std::size_t L = fs.M.size();
    if (L < 3 || L > 12) throw ValidationError("L must lie in [3, 12]");
    if (fs.T.size() != L - 2) throw ValidationError("T rows must cover j = 2..L-1");
    const double h = fs.delta[1] - fs.delta[0];
    for (std::size_t i = 1; i + 1 < n; ++i)
        if (std::abs((fs.delta[i + 1] - fs.delta[i]) - h) > 1e-9 * std::abs(h))
            throw ValidationError("delta samples must be equally spaced");
    for (const auto& row : fs.M)
        if (row.size() != n) throw ValidationError("sample row length mismatch");
    for (const auto& row : fs.T)
        if (row.size() != n) throw ValidationError("sample row length mismatch");
    for (std::size_t i = 0; i < n; ++i)
        if (std::abs(fs.M[0][i] - cplx(1.0, 0.0)) > 1e-12)
            throw ValidationError("M_1 must be normalized to 1");

    auto ddelta = [&](const std::vector<cplx>& row, std::size_t i) {
        return (row[i + 1] - row[i - 1]) / (2.0 * h);
    };

    std::map<int, std::vector<cplx>> out;
    for (std::size_t l = 3; l <= L; ++l) {
        std::vector<cplx> res;
        for (std::size_t i = 1; i + 1 < n; ++i) {
            cplx r = ddelta(fs.M[l - 1], i) - fs.M[l - 2][i] * ddelta(fs.M[1], i);
            for (std::size_t j = 2; j <= l - 1; ++j)
                r -= fs.M[l - j - 1][i] / static_cast<double>(j) * ddelta(fs.T[j - 2], i);
            res.push_back(r);
        }
        out[static_cast<int>(l)] = std::move(res);
    }
    return out;
}

}  // namespace merozero
