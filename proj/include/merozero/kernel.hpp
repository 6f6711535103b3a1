#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "merozero/core.hpp"
#include "merozero/detail/sum_engine.hpp"
#include "merozero/families.hpp"

namespace merozero {

namespace detail {

/// Sum_seg Sum_k c_k (t_k - z)^-e across all segments of a spec.
inline SumResult inverse_power_sum(const std::vector<Segment>& segments, int e, cplx z,
                                   const TruncationPolicy& pol) {
    const double eps = pol.target_tail / static_cast<double>(segments.size());
    SumResult total;
    for (const auto& seg : segments)
        total = merge(total, segment_inverse_power_sum(seg, e, z, pol, eps));
    return total;
}

inline ValueWithError to_value(const SumResult& r) {
    return {r.value, r.tail_bound + 4.0 * kMachineEps * r.abs_sum};
}

}  // namespace detail

/// A sum of Cauchy kernels f(z) = Sum_k c_k / (z - t_k)^m, m in {1, 2},
/// assembled from one or more (pole family, coefficient family) segments.
///
/// Construction certifies the summability hypothesis Sum |c_k|/|t_k|^m < inf
/// and checks numerically that f(0) is separated from zero.
class KernelSpec {
public:
    KernelSpec(std::vector<Segment> segments, int kernel_order,
               const TruncationPolicy& policy = {})
        : segments_(std::move(segments)), kernel_order_(kernel_order) {
        validate(policy);
    }

    KernelSpec(PoleSequence poles, CoefficientSequence coeffs, int kernel_order,
               const TruncationPolicy& policy = {})
        : KernelSpec(std::vector<Segment>{Segment{std::move(poles), std::move(coeffs), {}}},
                     kernel_order, policy) {}

    int kernel_order() const { return kernel_order_; }
    const std::vector<Segment>& segments() const { return segments_; }

    bool is_finite() const {
        return std::all_of(segments_.begin(), segments_.end(),
                           [](const Segment& s) { return s.poles.is_finite(); });
    }

    std::size_t finite_size() const {
        std::size_t n = 0;
        for (const auto& s : segments_) n += s.poles.finite_size();
        return n;
    }

    /// inf{alpha : Sum |t_k|^-alpha < inf}, exact per family kind.
    double sequence_convergence_index() const {
        double idx = 0.0;
        for (const auto& s : segments_) idx = std::max(idx, s.poles.convergence_index());
        return idx;
    }

    /// f(0) as certified at construction.
    ValueWithError value_at_origin() const { return f0_; }

    /// Smallest pole modulus (exact for explicit lists, certified for families).
    double min_pole_modulus() const {
        double lo = std::numeric_limits<double>::infinity();
        for (const auto& s : segments_) {
            if (const auto* ex = std::get_if<ExplicitPoles>(&s.poles.family)) {
                for (cplx t : ex->values) lo = std::min(lo, std::abs(t));
            } else if (const auto* pf = std::get_if<PowerFamily>(&s.poles.family)) {
                const double A = std::abs(pf->a), B = std::abs(pf->b);
                const std::size_t kg = detail::guard_index(A, pf->p, B);
                for (std::size_t k = 1; k <= kg + 1; ++k)
                    lo = std::min(lo, std::abs(pole_at(s.poles, k)));
            } else {
                const auto& lat = std::get<ShiftedLattice>(s.poles.family);
                const double B = std::abs(lat.offset);
                const long long n1 = static_cast<long long>(std::ceil(B)) + 2;
                for (long long n = -n1; n <= n1; ++n)
                    lo = std::min(lo, std::abs(cplx(static_cast<double>(n), 0.0) + lat.offset));
            }
        }
        return lo;
    }

    /// All poles with |t| <= radius, each tagged with its order (= kernel_order,
    /// or a multiple for repeated explicit entries, which stay separate here).
    /// Sorted by modulus, ties by (re, im).
    std::vector<std::pair<cplx, int>> poles_within(double radius) const {
        std::vector<std::pair<cplx, int>> out;
        for (const auto& s : segments_) {
            if (const auto* ex = std::get_if<ExplicitPoles>(&s.poles.family)) {
                for (cplx t : ex->values)
                    if (std::abs(t) <= radius) out.emplace_back(t, kernel_order_);
            } else if (const auto* pf = std::get_if<PowerFamily>(&s.poles.family)) {
                const double A = std::abs(pf->a), B = std::abs(pf->b);
                const auto k_max = static_cast<std::size_t>(
                    std::ceil(std::pow((radius + B) / A, 1.0 / pf->p))) + 2;
                for (std::size_t k = 1; k <= k_max; ++k) {
                    cplx t = pole_at(s.poles, k);
                    if (std::abs(t) <= radius) out.emplace_back(t, kernel_order_);
                }
            } else {
                const auto& lat = std::get<ShiftedLattice>(s.poles.family);
                const auto n1 = static_cast<long long>(
                    std::ceil(radius + std::abs(lat.offset))) + 2;
                for (long long n = -n1; n <= n1; ++n) {
                    cplx t = cplx(static_cast<double>(n), 0.0) + lat.offset;
                    if (std::abs(t) <= radius) out.emplace_back(t, kernel_order_);
                }
            }
        }
        std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
            const double mx = std::abs(x.first), my = std::abs(y.first);
            if (mx != my) return mx < my;
            if (x.first.real() != y.first.real()) return x.first.real() < y.first.real();
            return x.first.imag() < y.first.imag();
        });
        return out;
    }

private:
    void validate(const TruncationPolicy& policy) {
        if (kernel_order_ != 1 && kernel_order_ != 2)
            throw ValidationError("kernel_order must be 1 or 2");
        if (segments_.empty()) throw ValidationError("spec has no pole segments");
        for (auto& seg : segments_) {
            if (const auto* ex = std::get_if<ExplicitPoles>(&seg.poles.family)) {
                if (ex->values.empty()) throw ValidationError("empty explicit pole list");
                for (cplx t : ex->values) {
                    if (!merozero::is_finite(t)) throw ValidationError("pole is not finite");
                    if (t == cplx(0.0, 0.0))
                        throw ValidationError("poles at the origin are not allowed");
                }
            }
            if (const auto* lat = std::get_if<ShiftedLattice>(&seg.poles.family)) {
                const double frac =
                    std::abs(lat->offset.real() - std::round(lat->offset.real()));
                if (frac < 1e-14 && std::abs(lat->offset.imag()) < 1e-14)
                    throw ValidationError("lattice offset places a pole at the origin");
            }
            if (const auto* ec = std::get_if<ExplicitCoeffs>(&seg.coeffs.kind)) {
                const auto* ex = std::get_if<ExplicitPoles>(&seg.poles.family);
                if (!ex)
                    throw ValidationError(
                        "explicit coefficient lists require explicit pole lists");
                if (ec->values.size() != ex->values.size())
                    throw ValidationError("pole and coefficient lists differ in length");
                // zero coefficients are dropped, keeping the original indices
                ExplicitPoles keep_p;
                ExplicitCoeffs keep_c;
                for (std::size_t i = 0; i < ec->values.size(); ++i) {
                    if (ec->values[i] == cplx(0.0, 0.0)) {
                        seg.dropped_indices.push_back(i + 1);
                    } else {
                        keep_p.values.push_back(ex->values[i]);
                        keep_c.values.push_back(ec->values[i]);
                    }
                }
                if (keep_p.values.empty())
                    throw ValidationError("all coefficients are zero");
                seg.poles.family = std::move(keep_p);
                seg.coeffs.kind = std::move(keep_c);
            }
            if (!detail::absolutely_summable(seg, kernel_order_))
                throw ValidationError(
                    "summability hypothesis fails: sum |c_k|/|t_k|^m diverges");
        }
        const auto w = detail::inverse_power_sum(segments_, kernel_order_, {0.0, 0.0}, policy);
        const double sign = (kernel_order_ % 2 == 0) ? 1.0 : -1.0;
        f0_ = {sign * w.value, w.tail_bound + 4.0 * kMachineEps * w.abs_sum};
        if (std::abs(f0_.value) <= f0_.error_bound)
            throw ValidationError("f(0) is not separated from zero");
    }

    std::vector<Segment> segments_;
    int kernel_order_;
    ValueWithError f0_;
};

/// First K (pole, coefficient) pairs in canonical order: explicit segments in
/// declaration order first, then infinite segments round-robin. Prefix-stable.
inline std::vector<std::pair<cplx, cplx>> expand_poles(const KernelSpec& spec,
                                                       std::size_t K) {
    std::vector<std::pair<cplx, cplx>> out;
    out.reserve(K);
    std::vector<const Segment*> infinite;
    for (const auto& seg : spec.segments()) {
        if (seg.poles.is_finite()) {
            for (std::size_t k = 1; k <= seg.poles.finite_size() && out.size() < K; ++k)
                out.emplace_back(pole_at(seg.poles, k), coeff_at(seg.coeffs, k));
        } else {
            infinite.push_back(&seg);
        }
    }
    if (out.size() < K && infinite.empty())
        throw IndexOverflowError("expansion length exceeds the explicit pole lists");
    std::vector<std::size_t> next(infinite.size(), 1);
    for (std::size_t i = 0; out.size() < K; i = (i + 1) % infinite.size()) {
        const Segment* seg = infinite[i];
        out.emplace_back(pole_at(seg->poles, next[i]), coeff_at(seg->coeffs, next[i]));
        ++next[i];
    }
    return out;
}

/// f(z) = Sum_k c_k / (z - t_k)^m with a certified error bound.
inline ValueWithError evaluate(const KernelSpec& spec, cplx z,
                               const TruncationPolicy& policy = {}) {
    if (!is_finite(z)) throw ValidationError("evaluation point is not finite");
    const int m = spec.kernel_order();
    const auto w = detail::inverse_power_sum(spec.segments(), m, z, policy);
    const double sign = (m % 2 == 0) ? 1.0 : -1.0;
    return {sign * w.value, w.tail_bound + 4.0 * kMachineEps * w.abs_sum};
}

/// f^(d)(z), computed term-wise from the closed-form derivative of each kernel.
inline ValueWithError evaluate_derivative(const KernelSpec& spec, cplx z, int d,
                                          const TruncationPolicy& policy = {}) {
    if (!is_finite(z)) throw ValidationError("evaluation point is not finite");
    if (d < 0) throw ValidationError("derivative order must be nonnegative");
    if (d > 12) throw ValidationError("derivative order is capped at 12");
    const int m = spec.kernel_order();
    double coef = 1.0;  // (m + d - 1)! / (m - 1)!
    for (int j = m; j < m + d; ++j) coef *= j;
    const auto w = detail::inverse_power_sum(spec.segments(), m + d, z, policy);
    const double sign = (m % 2 == 0) ? 1.0 : -1.0;
    return {sign * coef * w.value,
            coef * (w.tail_bound + 4.0 * kMachineEps * w.abs_sum)};
}

}  // namespace merozero
