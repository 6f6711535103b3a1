#pragma once

#include <cmath>
#include <cstddef>
#include <variant>
#include <vector>

#include "merozero/core.hpp"

namespace merozero {

/// t_k = a * k^p + b for k = 1, 2, ...
struct PowerFamily {
    cplx a{1.0, 0.0};
    double p = 1.0;
    cplx b{0.0, 0.0};
};

/// t_k enumerates {n + offset : n in Z} with n ordered 0, 1, -1, 2, -2, ...
struct ShiftedLattice {
    cplx offset{0.0, 0.0};
};

struct ExplicitPoles {
    std::vector<cplx> values;
};

struct PoleSequence {
    std::variant<ExplicitPoles, PowerFamily, ShiftedLattice> family;

    bool is_finite() const { return std::holds_alternative<ExplicitPoles>(family); }

    std::size_t finite_size() const {
        return std::get<ExplicitPoles>(family).values.size();
    }

    /// Largest alpha with sum |t_k|^-alpha divergent; 0 for finite lists.
    double convergence_index() const {
        if (std::holds_alternative<ExplicitPoles>(family)) return 0.0;
        if (std::holds_alternative<ShiftedLattice>(family)) return 1.0;
        return 1.0 / std::get<PowerFamily>(family).p;
    }
};

struct ConstantCoeffs {
    cplx kappa{1.0, 0.0};
};

/// c_k = kappa * (-1)^k
struct AlternatingCoeffs {
    cplx kappa{1.0, 0.0};
};

/// c_k = kappa * sigma^k * k^-q with |sigma| <= 1, q >= 0
struct DecayingCoeffs {
    cplx kappa{1.0, 0.0};
    cplx sigma{1.0, 0.0};
    double q = 0.0;
};

struct ExplicitCoeffs {
    std::vector<cplx> values;
};

struct CoefficientSequence {
    std::variant<ExplicitCoeffs, ConstantCoeffs, AlternatingCoeffs, DecayingCoeffs> kind;

    bool is_explicit() const { return std::holds_alternative<ExplicitCoeffs>(kind); }
};

/// One (pole family, coefficient family) pair; a KernelSpec is a list of these.
struct Segment {
    PoleSequence poles;
    CoefficientSequence coeffs;
    /// 1-based indices removed at construction because their coefficient was zero.
    std::vector<std::size_t> dropped_indices;
};

namespace detail {

inline double real_int_pow(double base, long long e) {
    double r = 1.0;
    for (long long i = 0; i < e; ++i) r *= base;
    return r;
}

/// k^p, exact for small integer p.
inline double index_pow(std::size_t k, double p) {
    double ip;
    if (std::modf(p, &ip) == 0.0 && p >= 0.0 && p <= 16.0)
        return real_int_pow(static_cast<double>(k), static_cast<long long>(ip));
    return std::pow(static_cast<double>(k), p);
}

inline long long lattice_index(std::size_t k) {
    // canonical Z order: 0, 1, -1, 2, -2, ...
    if (k % 2 == 0) return static_cast<long long>(k / 2);
    return -static_cast<long long>((k - 1) / 2);
}

/// z^e by binary exponentiation.
inline cplx pow_int(cplx z, std::size_t e) {
    cplx r{1.0, 0.0};
    while (e) {
        if (e & 1) r *= z;
        z *= z;
        e >>= 1;
    }
    return r;
}

}  // namespace detail

/// k-th pole of a family, 1-based.
inline cplx pole_at(const PoleSequence& seq, std::size_t k) {
    if (const auto* ex = std::get_if<ExplicitPoles>(&seq.family)) {
        if (k == 0 || k > ex->values.size())
            throw IndexOverflowError("pole index out of range of explicit list");
        return ex->values[k - 1];
    }
    if (const auto* pf = std::get_if<PowerFamily>(&seq.family))
        return pf->a * detail::index_pow(k, pf->p) + pf->b;
    const auto& lat = std::get<ShiftedLattice>(seq.family);
    return cplx(static_cast<double>(detail::lattice_index(k)), 0.0) + lat.offset;
}

/// k-th coefficient of a family, 1-based.
inline cplx coeff_at(const CoefficientSequence& seq, std::size_t k) {
    if (const auto* ex = std::get_if<ExplicitCoeffs>(&seq.kind)) {
        if (k == 0 || k > ex->values.size())
            throw IndexOverflowError("coefficient index out of range of explicit list");
        return ex->values[k - 1];
    }
    if (const auto* c = std::get_if<ConstantCoeffs>(&seq.kind)) return c->kappa;
    if (const auto* alt = std::get_if<AlternatingCoeffs>(&seq.kind))
        return (k % 2 == 1) ? -alt->kappa : alt->kappa;
    const auto& d = std::get<DecayingCoeffs>(seq.kind);
    return d.kappa * detail::pow_int(d.sigma, k) / detail::index_pow(k, d.q);
}

}  // namespace merozero
