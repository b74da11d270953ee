#pragma once

#include <array>
#include <cstring>
#include <span>
#include <vector>

#include "otpsi/common.hpp"
#include "otpsi/field.hpp"

namespace otpsi::oprf {

inline constexpr size_t kPointBytes = crypto_core_ristretto255_BYTES;        // 32
inline constexpr size_t kScalarBytes = crypto_core_ristretto255_SCALARBYTES; // 32
inline constexpr size_t kPrfBytes = 32;

using PrfOutput = std::array<uint8_t, kPrfBytes>;

/// Scalar in Z_p for the prime group order p. Canonical little-endian
/// encoding as libsodium uses.
struct Scalar {
    std::array<uint8_t, kScalarBytes> b{};

    bool is_zero() const {
        uint8_t acc = 0;
        for (uint8_t x : b) acc |= x;
        return acc == 0;
    }

    static Scalar random_nonzero(Rng& rng) {
        ensure_sodium();
        Scalar s;
        uint8_t wide[64];
        do {
            rng.fill(wide);
            crypto_core_ristretto255_scalar_reduce(s.b.data(), wide);
        } while (s.is_zero());
        return s;
    }

    static Scalar from_u64(uint64_t v) {
        Scalar s;
        put_u64_le(s.b.data(), v);
        return s;
    }

    friend Scalar operator+(const Scalar& x, const Scalar& y) {
        Scalar r;
        crypto_core_ristretto255_scalar_add(r.b.data(), x.b.data(), y.b.data());
        return r;
    }
    friend Scalar operator-(const Scalar& x, const Scalar& y) {
        Scalar r;
        crypto_core_ristretto255_scalar_sub(r.b.data(), x.b.data(), y.b.data());
        return r;
    }
    friend Scalar operator*(const Scalar& x, const Scalar& y) {
        Scalar r;
        crypto_core_ristretto255_scalar_mul(r.b.data(), x.b.data(), y.b.data());
        return r;
    }
    Scalar inverted() const {
        Scalar r;
        if (crypto_core_ristretto255_scalar_invert(r.b.data(), b.data()) != 0)
            throw ZeroInverse();
        return r;
    }
    friend bool operator==(const Scalar& x, const Scalar& y) { return x.b == y.b; }
};

/// Prime-order group element with canonical 32-byte encoding. The
/// all-zero encoding is the identity.
struct GroupElement {
    std::array<uint8_t, kPointBytes> b{};

    bool is_identity() const {
        uint8_t acc = 0;
        for (uint8_t x : b) acc |= x;
        return acc == 0;
    }
    bool is_valid() const {
        return is_identity() || crypto_core_ristretto255_is_valid_point(b.data()) == 1;
    }
    friend bool operator==(const GroupElement& x, const GroupElement& y) { return x.b == y.b; }
};

/// Hash-to-group: SHA-512 of the input, mapped onto the group. The input
/// carries any domain-separation tags; no extra prefix is added here.
inline GroupElement hash_to_group(std::span<const uint8_t> input) {
    ensure_sodium();
    uint8_t wide[64];
    crypto_hash_sha512(wide, input.data(), input.size());
    GroupElement g;
    crypto_core_ristretto255_from_hash(g.b.data(), wide);
    return g;
}

/// g^k. Identity and zero-scalar cases are well defined (identity out);
/// anything that is not a canonical encoding is rejected.
inline GroupElement group_mul(const GroupElement& g, const Scalar& k) {
    if (!g.is_valid()) throw InvalidEncoding();
    if (g.is_identity() || k.is_zero()) return GroupElement{};
    GroupElement out;
    if (crypto_scalarmult_ristretto255(out.b.data(), k.b.data(), g.b.data()) != 0)
        throw InvalidEncoding();
    return out;
}

inline GroupElement group_add(const GroupElement& x, const GroupElement& y) {
    if (x.is_identity()) return y;
    if (y.is_identity()) return x;
    GroupElement out;
    if (crypto_core_ristretto255_add(out.b.data(), x.b.data(), y.b.data()) != 0)
        throw InvalidEncoding();
    return out;
}

/// Second hash of 2HashDH: the PRF output is bound to both the input and
/// the unblinded group element.
inline PrfOutput finalize_prf(std::span<const uint8_t> input, const GroupElement& point) {
    Bytes msg(input.size() + kPointBytes);
    std::memcpy(msg.data(), input.data(), input.size());
    std::memcpy(msg.data() + input.size(), point.b.data(), kPointBytes);
    PrfOutput out;
    crypto_hash_sha256(out.data(), msg.data(), msg.size());
    return out;
}

struct Blinded {
    Scalar blind;
    GroupElement point;  // H(x)^blind, safe to send to a key holder
};

/// Blinds an input for oblivious evaluation. The blinding scalar is
/// uniform nonzero and must stay with the requester.
inline Blinded blind(std::span<const uint8_t> input, Rng& rng) {
    Blinded out;
    out.blind = Scalar::random_nonzero(rng);
    out.point = group_mul(hash_to_group(input), out.blind);
    return out;
}

/// Key holder's step: a^K. Sees only group elements, never inputs.
inline GroupElement evaluate(const GroupElement& a, const Scalar& key) { return group_mul(a, key); }

/// Combines one evaluated point per key holder, strips the blind and
/// applies the output hash. Equals the single-key PRF under the sum of
/// the holder keys.
inline PrfOutput unblind_combine(std::span<const GroupElement> bs, const Scalar& blind,
                                 std::span<const uint8_t> input) {
    GroupElement combined;
    for (const auto& b : bs) combined = group_add(combined, b);
    GroupElement unblinded = group_mul(combined, blind.inverted());
    return finalize_prf(input, unblinded);
}

/// Direct (non-oblivious) evaluation H'(x, H(x)^K); the reference route
/// the blinded protocol must agree with.
inline PrfOutput prf_direct(std::span<const uint8_t> input, const Scalar& key) {
    return finalize_prf(input, group_mul(hash_to_group(input), key));
}

/// One key holder's scalar material: one hashing key (bin/order
/// derivation) plus threshold-1 coefficient keys, threshold scalars in
/// total.
struct OprfKeyShare {
    uint32_t holder_id = 0;
    Scalar hash_key;
    std::vector<Scalar> coef_keys;

    static OprfKeyShare random(uint32_t holder_id, uint16_t threshold, Rng& rng) {
        OprfKeyShare k;
        k.holder_id = holder_id;
        k.hash_key = Scalar::random_nonzero(rng);
        k.coef_keys.reserve(threshold > 0 ? threshold - 1 : 0);
        for (uint16_t m = 1; m < threshold; m++) k.coef_keys.push_back(Scalar::random_nonzero(rng));
        return k;
    }
};

}  // namespace otpsi::oprf
