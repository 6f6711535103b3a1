#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <vector>

#include "merozero/core.hpp"
#include "merozero/kernel.hpp"
#include "merozero/series.hpp"

namespace merozero {

/// Hypothesis checks N > rho - 1 admit this much slack, since rho arrives as
/// a numerical estimate and boundary cases with certified conditional sums
/// (symmetric lattices) are meaningful.
inline constexpr double kRhoSlack = 0.1;

inline bool satisfies_order_hypothesis(int N, double rho_estimate) {
    return static_cast<double>(N) > rho_estimate - 1.0 - kRhoSlack;
}

struct PowerSumEntry {
    ValueWithError value;
    bool order_dependent = false;
    bool available = true;
};

enum class PowerSumFlavor { T, M };

/// Table of T_l = Sum t_k^-l or M_l = Sum c_k t_k^-l keyed by exponent.
struct PowerSumTable {
    std::map<int, PowerSumEntry> entries;
    PowerSumFlavor flavor = PowerSumFlavor::T;
};

namespace detail {

inline std::vector<Segment> unit_weight_segments(const KernelSpec& spec) {
    std::vector<Segment> segs = spec.segments();
    for (auto& s : segs) s.coeffs.kind = ConstantCoeffs{{1.0, 0.0}};
    return segs;
}

inline PowerSumEntry sum_entry(const std::vector<Segment>& segs, int l,
                               const TruncationPolicy& policy) {
    const auto w = inverse_power_sum(segs, l, {0.0, 0.0}, policy);
    return {to_value(w), w.order_dependent, true};
}

}  // namespace detail

/// T_l = Sum_k 1/t_k^l over the pole sequence (one term per sequence entry).
inline PowerSumEntry pole_power_sum_entry(const KernelSpec& spec, int l,
                                          const TruncationPolicy& policy = {}) {
    if (l < 1) throw ValidationError("power sum exponent must be >= 1");
    const double idx = spec.sequence_convergence_index();
    const bool lattice_boundary =
        l == 1 && idx == 1.0 &&
        std::all_of(spec.segments().begin(), spec.segments().end(), [](const Segment& s) {
            return s.poles.is_finite() ||
                   std::holds_alternative<ShiftedLattice>(s.poles.family);
        });
    if (!(static_cast<double>(l) > idx) && !lattice_boundary)
        throw DivergentSumError("exponent at or below the convergence index of the poles");
    return detail::sum_entry(detail::unit_weight_segments(spec), l, policy);
}

inline ValueWithError pole_power_sum(const KernelSpec& spec, int l,
                                     const TruncationPolicy& policy = {}) {
    return pole_power_sum_entry(spec, l, policy).value;
}

/// M_l = Sum_k c_k/t_k^l.
inline PowerSumEntry weighted_power_sum_entry(const KernelSpec& spec, int l,
                                              const TruncationPolicy& policy = {}) {
    if (l < 1) throw ValidationError("power sum exponent must be >= 1");
    return detail::sum_entry(spec.segments(), l, policy);
}

inline ValueWithError weighted_power_sum(const KernelSpec& spec, int l,
                                         const TruncationPolicy& policy = {}) {
    return weighted_power_sum_entry(spec, l, policy).value;
}

inline PowerSumTable build_power_sum_table(const KernelSpec& spec, int l_max,
                                           PowerSumFlavor flavor,
                                           const TruncationPolicy& policy = {}) {
    PowerSumTable table;
    table.flavor = flavor;
    for (int l = 1; l <= l_max; ++l) {
        try {
            table.entries[l] = (flavor == PowerSumFlavor::T)
                                   ? pole_power_sum_entry(spec, l, policy)
                                   : weighted_power_sum_entry(spec, l, policy);
        } catch (const DivergentSumError&) {
            table.entries[l] = {{}, false, false};
        }
    }
    return table;
}

/// Sum over all zeros of f of s^-(N+1), via T_{N+1} - (1/N!) (f'/f)^(N)(0).
inline ValueWithError zero_power_sum(const KernelSpec& spec, int N, double rho_estimate,
                                     const TruncationPolicy& policy = {}) {
    if (spec.kernel_order() != 1)
        throw ValidationError("zero_power_sum applies to kernel order 1");
    if (N < 0) throw ValidationError("N must be nonnegative");
    if (!satisfies_order_hypothesis(N, rho_estimate))
        throw HypothesisError("N must exceed rho - 1");
    const ValueWithError T = pole_power_sum(spec, N + 1, policy);
    const auto b = logderiv_coeffs(taylor_coeffs(spec, static_cast<std::size_t>(N) + 1, policy),
                                   static_cast<std::size_t>(N));
    return T - b.coeffs[static_cast<std::size_t>(N)];
}

/// Sum over all zeros of the squared-kernel sum g of u^-(N+1), via
/// 2 T_{N+1} - (1/N!) (g'/g)^(N)(0).
inline ValueWithError zero_power_sum_squared(const KernelSpec& spec, int N,
                                             double rho_estimate,
                                             const TruncationPolicy& policy = {}) {
    if (spec.kernel_order() != 2)
        throw ValidationError("zero_power_sum_squared applies to kernel order 2");
    if (N < 0) throw ValidationError("N must be nonnegative");
    if (!satisfies_order_hypothesis(N, rho_estimate))
        throw HypothesisError("N must exceed rho - 1");
    const ValueWithError T = pole_power_sum(spec, N + 1, policy);
    const auto b = logderiv_coeffs(taylor_coeffs(spec, static_cast<std::size_t>(N) + 1, policy),
                                   static_cast<std::size_t>(N));
    return cplx(2.0, 0.0) * T - b.coeffs[static_cast<std::size_t>(N)];
}

enum class Route { via_poles, via_zeros };

/// Sum over zeros of f' of u^-(N+1), by either route of the derivative
/// formula; the two agree within combined bounds and cross-check each other.
inline ValueWithError fprime_zero_power_sum(const KernelSpec& spec, int N,
                                            double rho_estimate,
                                            const TruncationPolicy& policy = {},
                                            Route route = Route::via_poles) {
    if (spec.kernel_order() != 1)
        throw ValidationError("fprime_zero_power_sum applies to kernel order 1");
    if (N < 0) throw ValidationError("N must be nonnegative");
    if (!satisfies_order_hypothesis(N, rho_estimate))
        throw HypothesisError("N must exceed rho - 1");
    if (route == Route::via_poles) {
        const ValueWithError T = pole_power_sum(spec, N + 1, policy);
        const auto b2 = second_logderiv_coeffs(spec, static_cast<std::size_t>(N), policy,
                                               LogDerivTag::f_second_over_f_prime);
        return cplx(2.0, 0.0) * T - b2.coeffs[static_cast<std::size_t>(N)];
    }
    const ValueWithError S = zero_power_sum(spec, N, rho_estimate, policy);
    const auto bc = second_logderiv_coeffs(spec, static_cast<std::size_t>(N), policy,
                                           LogDerivTag::combined_difference);
    return cplx(2.0, 0.0) * S - bc.coeffs[static_cast<std::size_t>(N)];
}

enum class ZeroSumTarget { zeros_of_f, zeros_of_f_prime };

/// Map N -> Sum s_k^-(N+1) (or u_k^-(N+1)) for all admissible N up to n_max.
struct ZeroPowerSums {
    std::map<int, ValueWithError> entries;
    ZeroSumTarget target = ZeroSumTarget::zeros_of_f;
    double rho_estimate = 0.0;
};

inline ZeroPowerSums zero_power_sums(const KernelSpec& spec, int n_max, double rho_estimate,
                                     const TruncationPolicy& policy = {},
                                     ZeroSumTarget target = ZeroSumTarget::zeros_of_f) {
    ZeroPowerSums out;
    out.target = target;
    out.rho_estimate = rho_estimate;
    for (int N = 0; N <= n_max; ++N) {
        if (!satisfies_order_hypothesis(N, rho_estimate)) continue;
        if (target == ZeroSumTarget::zeros_of_f) {
            out.entries[N] = (spec.kernel_order() == 1)
                                 ? zero_power_sum(spec, N, rho_estimate, policy)
                                 : zero_power_sum_squared(spec, N, rho_estimate, policy);
        } else {
            out.entries[N] = fprime_zero_power_sum(spec, N, rho_estimate, policy);
        }
    }
    return out;
}

}  // namespace merozero
