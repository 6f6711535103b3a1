#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>

namespace merozero {

using cplx = std::complex<double>;

inline constexpr double kMachineEps = std::numeric_limits<double>::epsilon();

inline bool is_finite(cplx v) {
    return std::isfinite(v.real()) && std::isfinite(v.imag());
}

/// Base class of all library errors.
class Error : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Bad input data or a violated precondition/invariant.
class ValidationError : public Error {
    using Error::Error;
};

/// A certified numeric target could not be reached.
class ConvergenceError : public Error {
    using Error::Error;
};

class PoleProximityError : public ValidationError {
    using ValidationError::ValidationError;
};

class IndexOverflowError : public ValidationError {
    using ValidationError::ValidationError;
};

class ZeroConstantTermError : public ValidationError {
    using ValidationError::ValidationError;
};

/// A formula was requested outside its hypothesis range.
class HypothesisError : public ValidationError {
    using ValidationError::ValidationError;
};

/// Requested exponent at or below the convergence index of the pole sequence.
class DivergentSumError : public ValidationError {
    using ValidationError::ValidationError;
};

class InsufficientGridError : public ValidationError {
    using ValidationError::ValidationError;
};

class TailNotConvergentError : public ConvergenceError {
    using ConvergenceError::ConvergenceError;
};

class QuadratureError : public ConvergenceError {
    using ConvergenceError::ConvergenceError;
};

class SampleCollisionError : public ConvergenceError {
    using ConvergenceError::ConvergenceError;
};

/// A complex value paired with a certified absolute error bound.
struct ValueWithError {
    cplx value{0.0, 0.0};
    double error_bound{0.0};

    bool consistent_with_zero() const { return std::abs(value) <= error_bound; }
};

inline ValueWithError operator+(const ValueWithError& a, const ValueWithError& b) {
    return {a.value + b.value, a.error_bound + b.error_bound};
}

inline ValueWithError operator-(const ValueWithError& a, const ValueWithError& b) {
    return {a.value - b.value, a.error_bound + b.error_bound};
}

inline ValueWithError operator*(cplx s, const ValueWithError& a) {
    return {s * a.value, std::abs(s) * a.error_bound};
}

inline ValueWithError operator*(const ValueWithError& a, const ValueWithError& b) {
    // first-order product bound plus the quadratic cross term
    double err = std::abs(a.value) * b.error_bound + std::abs(b.value) * a.error_bound +
                 a.error_bound * b.error_bound;
    return {a.value * b.value, err};
}

/// First-order quotient bound; requires |den| to exceed its own error bound.
inline ValueWithError div_with_error(const ValueWithError& num, const ValueWithError& den) {
    double dmag = std::abs(den.value);
    if (dmag <= den.error_bound)
        throw ZeroConstantTermError("division by a value not separated from zero");
    cplx q = num.value / den.value;
    double err = (num.error_bound + std::abs(q) * den.error_bound) / (dmag - den.error_bound);
    return {q, err};
}

/// How truncation tails are certified once a series is cut off.
enum class TailMethod {
    integral_bound,
    geometric_bound,
};

/// Budget and target for every truncated summation.
struct TruncationPolicy {
    std::size_t max_terms = 2'000'000;
    double target_tail = 1e-9;
    TailMethod method = TailMethod::integral_bound;

    TruncationPolicy with_target(double eps) const {
        TruncationPolicy p = *this;
        p.target_tail = eps;
        return p;
    }
};

/// Kahan-compensated accumulator for complex sums.
struct CompensatedSum {
    cplx sum{0.0, 0.0};
    cplx comp{0.0, 0.0};

    void add(cplx v) {
        const cplx y = v - comp;
        const cplx t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }

    cplx value() const { return sum; }
};

}  // namespace merozero
