#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "otpsi/common.hpp"

namespace otpsi {

/// Element of the prime field F_q, q = 2^61 - 1. Values are kept
/// canonical in [0, q) after every operation; the Mersenne shape of q
/// lets the 128-bit product fold with shifts instead of a division.
class Fe {
public:
    static constexpr uint64_t kModulus = (uint64_t(1) << 61) - 1;

    constexpr Fe() = default;
    constexpr explicit Fe(uint64_t v) : v_(v % kModulus) {}

    static constexpr Fe zero() { return Fe(); }
    static constexpr Fe one() { return Fe(1); }

    constexpr uint64_t value() const { return v_; }

    constexpr Fe& operator+=(Fe o) {
        uint64_t x = v_ + o.v_;
        if (x >= kModulus) x -= kModulus;
        v_ = x;
        return *this;
    }
    constexpr Fe& operator-=(Fe o) {
        v_ = v_ >= o.v_ ? v_ - o.v_ : v_ + kModulus - o.v_;
        return *this;
    }
    constexpr Fe& operator*=(Fe o) {
        unsigned __int128 p = (unsigned __int128)v_ * o.v_;
        // fold twice: 2^61 == 1 (mod q)
        uint64_t lo = uint64_t(p) & kModulus;
        uint64_t hi = uint64_t(p >> 61);
        uint64_t s = lo + hi;
        s = (s & kModulus) + (s >> 61);
        if (s >= kModulus) s -= kModulus;
        v_ = s;
        return *this;
    }

    friend constexpr Fe operator+(Fe a, Fe b) { return a += b; }
    friend constexpr Fe operator-(Fe a, Fe b) { return a -= b; }
    friend constexpr Fe operator*(Fe a, Fe b) { return a *= b; }
    friend constexpr bool operator==(Fe a, Fe b) { return a.v_ == b.v_; }
    friend constexpr bool operator!=(Fe a, Fe b) { return a.v_ != b.v_; }

    constexpr Fe negate() const { return v_ == 0 ? Fe() : from_raw(kModulus - v_); }

private:
    static constexpr Fe from_raw(uint64_t v) {
        Fe f;
        f.v_ = v;
        return f;
    }
    uint64_t v_ = 0;
};

constexpr Fe fe_pow(Fe base, uint64_t exp) {
    Fe acc = Fe::one();
    while (exp != 0) {
        if (exp & 1) acc *= base;
        base *= base;
        exp >>= 1;
    }
    return acc;
}

/// Fermat inverse a^(q-2); throws ZeroInverse on a = 0.
inline Fe fe_inv(Fe a) {
    if (a.value() == 0) throw ZeroInverse();
    return fe_pow(a, Fe::kModulus - 2);
}

// ---- serialization (8-byte little-endian, canonical) -------------------

inline void fe_store(uint8_t* p, Fe v) { put_u64_le(p, v.value()); }

inline Fe fe_load(const uint8_t* p) {
    uint64_t v = get_u64_le(p);
    if (v >= Fe::kModulus) throw Error("non-canonical field element");
    Fe f(0);
    f += Fe(v);
    return f;
}

// ---- Lagrange interpolation at x = 0 -----------------------------------

/// Basis coefficients lambda_i for recovering P(0) from evaluations at
/// the given points. Points are 1-based participant ids; computed once
/// per participant combination so each cell later costs |points|
/// multiplications.
struct LagrangeBasis {
    std::vector<uint32_t> points;
    std::vector<Fe> coefficients;
};

inline LagrangeBasis lagrange_basis_at_zero(std::span<const uint32_t> points) {
    for (size_t i = 0; i < points.size(); i++) {
        if (points[i] == 0) throw DuplicatePoint();
        for (size_t j = i + 1; j < points.size(); j++)
            if (points[i] == points[j]) throw DuplicatePoint();
    }
    LagrangeBasis basis;
    basis.points.assign(points.begin(), points.end());
    basis.coefficients.reserve(points.size());
    for (size_t i = 0; i < points.size(); i++) {
        Fe num = Fe::one();
        Fe den = Fe::one();
        Fe xi(points[i]);
        for (size_t j = 0; j < points.size(); j++) {
            if (j == i) continue;
            num *= Fe(points[j]).negate();
            den *= xi - Fe(points[j]);
        }
        basis.coefficients.push_back(num * fe_inv(den));
    }
    return basis;
}

inline Fe reconstruct_at_zero(const LagrangeBasis& basis, std::span<const Fe> shares) {
    if (shares.size() != basis.coefficients.size()) throw LengthMismatch();
    Fe acc;
    for (size_t i = 0; i < shares.size(); i++) acc += basis.coefficients[i] * shares[i];
    return acc;
}

/// Evaluates c_1 x + c_2 x^2 + ... + c_{t-1} x^{t-1} (constant term
/// pinned to zero) by Horner's rule.
inline Fe poly_eval_no_constant(std::span<const Fe> coeffs, uint64_t x) {
    Fe fx(x);
    Fe acc;
    for (size_t j = coeffs.size(); j-- > 0;) acc = acc * fx + coeffs[j];
    return acc * fx;
}

}  // namespace otpsi
