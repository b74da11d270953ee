#pragma once

#include <array>
#include <cstring>
#include <span>
#include <string_view>
#include <vector>

#include "otpsi/common.hpp"
#include "otpsi/element.hpp"
#include "otpsi/field.hpp"

namespace otpsi {

/// Symmetric key shared by all participants of the non-interactive
/// deployment. Never leaves the participant side.
struct ParticipantKey {
    std::array<uint8_t, 32> bytes{};

    static ParticipantKey random() {
        ensure_sodium();
        ParticipantKey k;
        randombytes_buf(k.bytes.data(), k.bytes.size());
        return k;
    }

    static ParticipantKey from_hex(std::string_view hex) {
        Bytes b = otpsi::from_hex(hex);
        if (b.size() != 32) throw ConfigError("participant key must be 32 bytes");
        ParticipantKey k;
        std::memcpy(k.bytes.data(), b.data(), 32);
        return k;
    }
};

enum class Pass : uint8_t { First = 1, Second = 2 };

/// Sub-tables are 1-based. Consecutive sub-tables (1,2), (3,4), ... share
/// one ordering stream with flipped comparison direction.
constexpr uint16_t pair_index(uint16_t table) { return uint16_t((table + 1) / 2); }

/// Comparison direction for survivor selection: ascending means the
/// smallest ordering value wins. Odd sub-tables start ascending, even
/// ones descending, and the second insertion flips its sub-table's
/// first-pass direction.
constexpr bool ascending_order(uint16_t table, Pass pass) {
    bool asc = (table % 2) == 1;
    return pass == Pass::First ? asc : !asc;
}

/// Maps a 32-byte PRF output to a field element: first 8 bytes big-endian,
/// masked to 61 bits, reduced mod q. Only the single value 2^61 - 1
/// aliases onto 0.
inline Fe field_map(std::span<const uint8_t> prf_out) {
    uint64_t v = get_u64_be(prf_out.data()) & Fe::kModulus;  // mask = q = 2^61 - 1
    if (v == Fe::kModulus) v = 0;
    return Fe(v);
}

/// All keyed derivations of the non-interactive deployment: bin indices,
/// ordering values and iterated polynomial coefficients, domain-separated
/// over (purpose tag, sub-table, round). Message layout is pinned in
/// docs/wire.md: tag ASCII || table u16 BE || round u64 BE || element.
class KeyedHash {
public:
    explicit KeyedHash(const ParticipantKey& key) {
        ensure_sodium();
        crypto_auth_hmacsha256_init(&base_, key.bytes.data(), key.bytes.size());
    }

    std::array<uint8_t, 32> mac(std::span<const uint8_t> msg) const {
        crypto_auth_hmacsha256_state st = base_;  // key schedule precomputed once
        crypto_auth_hmacsha256_update(&st, msg.data(), msg.size());
        std::array<uint8_t, 32> out;
        crypto_auth_hmacsha256_final(&st, out.data());
        return out;
    }

    uint64_t derive_bin(uint16_t table, const Element& s, uint64_t round, Pass pass,
                        uint32_t bin_count) const {
        auto d = mac(tagged(pass == Pass::First ? "bin1" : "bin2", table, round, s));
        return get_u64_be(d.data()) % bin_count;
    }

    uint64_t derive_order(uint16_t table, const Element& s, uint64_t round) const {
        auto d = mac(tagged("ord", pair_index(table), round, s));
        return get_u64_be(d.data());
    }

    /// threshold-1 coefficients; the chain feeds each full digest back
    /// through the MAC. Empty for threshold 1.
    std::vector<Fe> derive_coeffs(uint16_t table, const Element& s, uint64_t round,
                                  uint16_t threshold) const {
        std::vector<Fe> coeffs;
        if (threshold <= 1) return coeffs;
        coeffs.reserve(threshold - 1);
        auto d = mac(tagged("coef", table, round, s));
        coeffs.push_back(field_map(d));
        for (uint16_t j = 2; j < threshold; j++) {
            uint8_t msg[4 + 32];
            std::memcpy(msg, "coef", 4);
            std::memcpy(msg + 4, d.data(), 32);
            d = mac(std::span<const uint8_t>(msg, sizeof(msg)));
            coeffs.push_back(field_map(d));
        }
        return coeffs;
    }

    static Bytes tagged(std::string_view tag, uint16_t table, uint64_t round, const Element& s) {
        Bytes msg(tag.size() + 2 + 8 + s.size());
        std::memcpy(msg.data(), tag.data(), tag.size());
        put_u16_be(msg.data() + tag.size(), table);
        put_u64_be(msg.data() + tag.size() + 2, round);
        std::memcpy(msg.data() + tag.size() + 10, s.bytes().data(), s.size());
        return msg;
    }

private:
    crypto_auth_hmacsha256_state base_;
};

}  // namespace otpsi
