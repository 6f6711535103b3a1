#pragma once

#include <cstddef>
#include <vector>

#include "merozero/core.hpp"
#include "merozero/kernel.hpp"

namespace merozero {

/// Taylor coefficients a_n ~ f^(n)(0)/n!, base point fixed at 0.
struct TaylorCoeffs {
    std::vector<ValueWithError> coeffs;

    std::size_t order() const { return coeffs.empty() ? 0 : coeffs.size() - 1; }
};

enum class LogDerivTag {
    f_prime_over_f,
    f_second_over_f_prime,
    combined_difference,  // f''/f' - 2 f'/f
};

/// b_N ~ (1/N!) (g'/g)^(N)(0) for the tagged logarithmic derivative.
struct LogDerivCoeffs {
    std::vector<ValueWithError> coeffs;
    LogDerivTag which = LogDerivTag::f_prime_over_f;
};

/// Taylor coefficients of the spec at 0, computed from weighted pole power
/// sums: a_n = -M_{n+1} for m = 1 and a_n = (n+1) M_{n+2} for m = 2.
/// Tail targets tighten geometrically with n.
inline TaylorCoeffs taylor_coeffs(const KernelSpec& spec, std::size_t n_max,
                                  const TruncationPolicy& policy = {}) {
    if (n_max > 64) throw ValidationError("Taylor order is capped at 64");
    const int m = spec.kernel_order();
    TaylorCoeffs out;
    out.coeffs.reserve(n_max + 1);
    for (std::size_t n = 0; n <= n_max; ++n) {
        const double eps_n = policy.target_tail * std::pow(2.0, -static_cast<double>(n));
        const auto w = detail::inverse_power_sum(spec.segments(), static_cast<int>(n) + m,
                                                 {0.0, 0.0}, policy.with_target(eps_n));
        ValueWithError Ml = detail::to_value(w);  // M_{n+m}
        if (m == 1) {
            out.coeffs.push_back(cplx(-1.0, 0.0) * Ml);
        } else {
            out.coeffs.push_back(cplx(static_cast<double>(n) + 1.0, 0.0) * Ml);
        }
    }
    return out;
}

namespace detail {

/// Solves (n+1) a_{n+1} = Sum_{j<=n} b_j a_{n-j} for b, with first-order error
/// propagation and a global safety factor of 4 on the reported bounds.
inline std::vector<ValueWithError> logderiv_recurrence(
    const std::vector<ValueWithError>& a, std::size_t n_max) {
    if (a.size() < n_max + 2)
        throw ValidationError("log-derivative order exceeds available Taylor data");
    const double a0 = std::abs(a[0].value);
    if (a0 <= a[0].error_bound)
        throw ZeroConstantTermError("constant Taylor term is not separated from zero");

    std::vector<cplx> b(n_max + 1);
    std::vector<double> raw(n_max + 1);
    for (std::size_t n = 0; n <= n_max; ++n) {
        cplx num = (static_cast<double>(n) + 1.0) * a[n + 1].value;
        double err = (static_cast<double>(n) + 1.0) * a[n + 1].error_bound;
        for (std::size_t j = 0; j < n; ++j) {
            num -= b[j] * a[n - j].value;
            err += raw[j] * std::abs(a[n - j].value) + std::abs(b[j]) * a[n - j].error_bound;
        }
        b[n] = num / a[0].value;
        raw[n] = (err + std::abs(b[n]) * a[0].error_bound) / a0;
    }
    std::vector<ValueWithError> out(n_max + 1);
    for (std::size_t n = 0; n <= n_max; ++n) out[n] = {b[n], 4.0 * raw[n]};
    return out;
}

}  // namespace detail

/// Taylor coefficients of f'/f at 0, by convolution recurrence.
inline LogDerivCoeffs logderiv_coeffs(const TaylorCoeffs& a, std::size_t n_max) {
    return {detail::logderiv_recurrence(a.coeffs, n_max), LogDerivTag::f_prime_over_f};
}

/// Taylor coefficients of f''/f' (or of f''/f' - 2 f'/f) at 0. Requires
/// f'(0) separated from zero.
inline LogDerivCoeffs second_logderiv_coeffs(const KernelSpec& spec, std::size_t n_max,
                                             const TruncationPolicy& policy = {},
                                             LogDerivTag which = LogDerivTag::f_second_over_f_prime) {
    if (which == LogDerivTag::f_prime_over_f)
        throw ValidationError("use logderiv_coeffs for f'/f");
    const TaylorCoeffs a = taylor_coeffs(spec, n_max + 2, policy);
    std::vector<ValueWithError> ap(n_max + 2);  // Taylor coefficients of f'
    for (std::size_t n = 0; n + 1 < a.coeffs.size(); ++n)
        ap[n] = cplx(static_cast<double>(n) + 1.0, 0.0) * a.coeffs[n + 1];
    auto b2 = detail::logderiv_recurrence(ap, n_max);
    if (which == LogDerivTag::f_second_over_f_prime)
        return {std::move(b2), LogDerivTag::f_second_over_f_prime};
    auto b1 = detail::logderiv_recurrence(a.coeffs, n_max);
    for (std::size_t n = 0; n <= n_max; ++n) b2[n] = b2[n] - cplx(2.0, 0.0) * b1[n];
    return {std::move(b2), LogDerivTag::combined_difference};
}

}  // namespace merozero
