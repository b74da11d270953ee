#pragma once

#include <cstring>
#include <span>
#include <vector>

#include "otpsi/element.hpp"
#include "otpsi/field.hpp"
#include "otpsi/keyed_hash.hpp"
#include "otpsi/oprf.hpp"
#include "otpsi/params.hpp"
#include "otpsi/table.hpp"

namespace otpsi::oprss {

// Collusion-safe derivations. Every value a participant needs for table
// building is obtained from the key holders through blinded group
// elements: one slot per (element, sub-table, coefficient index) for
// shares and one slot per (element, pair) for bin/ordering values. Key
// holders never see elements, participants never see keys.

/// Hash-to-group preimage for a coefficient slot; same tag layout as the
/// keyed-hash messages ("coef" || table || round || element). The
/// coefficient index is separated by the holder key, not the preimage.
inline Bytes coef_preimage(uint16_t table, uint64_t round, const Element& s) {
    return KeyedHash::tagged("coef", table, round, s);
}

/// Preimage for the combined bin/ordering slot of one pair.
inline Bytes hash_preimage(uint16_t pair, uint64_t round, const Element& s) {
    return KeyedHash::tagged("hash", pair, round, s);
}

inline size_t pair_count(uint16_t table_count) { return (size_t(table_count) + 1) / 2; }

inline size_t coef_slot_count(size_t n_elems, const SessionParams& p) {
    return n_elems * p.table_count * (p.threshold - 1);
}
inline size_t hash_slot_count(size_t n_elems, const SessionParams& p) {
    return n_elems * pair_count(p.table_count);
}

/// Blinded request state. Slot order is fixed so key holders can map
/// coefficient slots to their keys positionally: coefficient slots run
/// (element, sub-table, coefficient index) lexicographic, hash slots
/// (element, pair).
struct ClientBatch {
    std::vector<oprf::Scalar> coef_blinds, hash_blinds;
    std::vector<oprf::GroupElement> coef_points, hash_points;

    static ClientBatch create(std::span<const Element> set, const SessionParams& params,
                              Rng& rng) {
        ClientBatch b;
        size_t nc = coef_slot_count(set.size(), params);
        size_t nh = hash_slot_count(set.size(), params);
        b.coef_blinds.reserve(nc);
        b.coef_points.reserve(nc);
        b.hash_blinds.reserve(nh);
        b.hash_points.reserve(nh);
        for (const Element& s : set) {
            for (uint16_t a = 1; a <= params.table_count; a++) {
                auto base = oprf::hash_to_group(coef_preimage(a, params.round_id, s));
                for (uint16_t m = 1; m < params.threshold; m++) {
                    auto r = oprf::Scalar::random_nonzero(rng);
                    b.coef_blinds.push_back(r);
                    b.coef_points.push_back(oprf::group_mul(base, r));
                }
            }
            for (uint16_t z = 1; z <= pair_count(params.table_count); z++) {
                auto base = oprf::hash_to_group(hash_preimage(z, params.round_id, s));
                auto r = oprf::Scalar::random_nonzero(rng);
                b.hash_blinds.push_back(r);
                b.hash_points.push_back(oprf::group_mul(base, r));
            }
        }
        return b;
    }
};

/// Key-holder evaluation of a coefficient batch: slot i uses coefficient
/// key (i mod (threshold-1)) + 1 per the fixed slot order.
inline std::vector<oprf::GroupElement> evaluate_coef_batch(
    std::span<const oprf::GroupElement> points, const oprf::OprfKeyShare& ks) {
    size_t n_keys = ks.coef_keys.size();
    if (n_keys == 0) throw ProtocolError("key share holds no coefficient keys");
    if (points.size() % n_keys != 0) throw ProtocolError("coefficient batch size mismatch");
    std::vector<oprf::GroupElement> out(points.size());
    for (size_t i = 0; i < points.size(); i++)
        out[i] = oprf::evaluate(points[i], ks.coef_keys[i % n_keys]);
    return out;
}

inline std::vector<oprf::GroupElement> evaluate_hash_batch(
    std::span<const oprf::GroupElement> points, const oprf::OprfKeyShare& ks) {
    std::vector<oprf::GroupElement> out(points.size());
    for (size_t i = 0; i < points.size(); i++) out[i] = oprf::evaluate(points[i], ks.hash_key);
    return out;
}

/// Everything table building needs, fully unblinded: field coefficients
/// per (element, sub-table) and one PRF output per (element, pair).
struct DerivedValues {
    std::vector<Fe> coeffs;                 // [e][table][m] flattened
    std::vector<oprf::PrfOutput> hash_prf;  // [e][pair] flattened
    uint16_t table_count = 0;
    uint16_t threshold = 0;

    size_t coef_index(size_t e, uint16_t table, uint16_t m) const {
        size_t per_elem = size_t(table_count) * (threshold - 1);
        return e * per_elem + size_t(table - 1) * (threshold - 1) + (m - 1);
    }
    std::span<const Fe> elem_coeffs(size_t e, uint16_t table) const {
        return std::span<const Fe>(coeffs).subspan(coef_index(e, table, 1), threshold - 1);
    }
};

/// Combines the per-holder responses, strips blinds, and maps outputs to
/// field coefficients / hash PRF blocks. Response vectors must be slot
/// aligned with the request batch.
inline DerivedValues finalize(std::span<const Element> set, const SessionParams& params,
                              const ClientBatch& batch,
                              std::span<const std::vector<oprf::GroupElement>> coef_responses,
                              std::span<const std::vector<oprf::GroupElement>> hash_responses) {
    if (coef_responses.empty() || coef_responses.size() != hash_responses.size())
        throw ProtocolError("response sets do not match key holder count");
    for (const auto& r : coef_responses)
        if (r.size() != batch.coef_points.size()) throw ProtocolError("coefficient response size");
    for (const auto& r : hash_responses)
        if (r.size() != batch.hash_points.size()) throw ProtocolError("hash response size");

    DerivedValues out;
    out.table_count = params.table_count;
    out.threshold = params.threshold;
    out.coeffs.resize(batch.coef_points.size());
    out.hash_prf.resize(batch.hash_points.size());

    std::vector<oprf::GroupElement> slot(coef_responses.size());
    size_t ci = 0, hi = 0;
    for (size_t e = 0; e < set.size(); e++) {
        for (uint16_t a = 1; a <= params.table_count; a++) {
            Bytes pre = coef_preimage(a, params.round_id, set[e]);
            for (uint16_t m = 1; m < params.threshold; m++, ci++) {
                for (size_t j = 0; j < coef_responses.size(); j++) slot[j] = coef_responses[j][ci];
                out.coeffs[ci] = field_map(oprf::unblind_combine(slot, batch.coef_blinds[ci], pre));
            }
        }
        for (uint16_t z = 1; z <= pair_count(params.table_count); z++, hi++) {
            Bytes pre = hash_preimage(z, params.round_id, set[e]);
            for (size_t j = 0; j < hash_responses.size(); j++) slot[j] = hash_responses[j][hi];
            out.hash_prf[hi] = oprf::unblind_combine(slot, batch.hash_blinds[hi], pre);
        }
    }
    return out;
}

/// Expands one pair's PRF output into a bin index for (table, pass).
/// Ordering comes straight from bytes 8..16 of the PRF output and is
/// shared across the pair, mirroring the keyed-hash layout.
inline uint64_t expand_bin(const oprf::PrfOutput& prf, uint16_t table, Pass pass,
                           uint32_t bin_count) {
    uint8_t msg[oprf::kPrfBytes + 4 + 2];
    std::memcpy(msg, prf.data(), prf.size());
    std::memcpy(msg + prf.size(), pass == Pass::First ? "bin1" : "bin2", 4);
    put_u16_be(msg + prf.size() + 4, table);
    uint8_t digest[32];
    crypto_hash_sha256(digest, msg, sizeof(msg));
    return get_u64_be(digest) % bin_count;
}

inline uint64_t expand_order(const oprf::PrfOutput& prf) { return get_u64_be(prf.data() + 8); }

/// Table-building source backed by OPRF-derived values.
class OprssDerivations final : public TableDerivations {
public:
    OprssDerivations(const DerivedValues& values, const SessionParams& params,
                     uint32_t participant_id)
        : v_(values), params_(params), id_(participant_id) {}

    uint64_t bin(uint16_t table, Pass pass, uint32_t elem) override {
        return expand_bin(prf_of(table, elem), table, pass, params_.bin_count());
    }
    uint64_t order_value(uint16_t table, uint32_t elem) override {
        return expand_order(prf_of(table, elem));
    }
    Fe share(uint16_t table, uint32_t elem) override {
        return poly_eval_no_constant(v_.elem_coeffs(elem, table), id_);
    }

private:
    const oprf::PrfOutput& prf_of(uint16_t table, uint32_t elem) {
        return v_.hash_prf[size_t(elem) * pair_count(params_.table_count) + pair_index(table) - 1];
    }
    const DerivedValues& v_;
    const SessionParams& params_;
    uint32_t id_;
};

// ---- single-element convenience paths (in-process key holders) ----------

/// One OPR-SS share without the batch plumbing; used by tests and as the
/// reference for the batched path.
inline Fe oprss_share(const Element& s, uint32_t participant_id, uint16_t table, uint64_t round,
                      std::span<const oprf::OprfKeyShare> holders, uint16_t threshold, Rng& rng) {
    std::vector<Fe> coeffs;
    coeffs.reserve(threshold > 0 ? threshold - 1 : 0);
    Bytes pre = coef_preimage(table, round, s);
    auto base = oprf::hash_to_group(pre);
    for (uint16_t m = 1; m < threshold; m++) {
        auto r = oprf::Scalar::random_nonzero(rng);
        auto a = oprf::group_mul(base, r);
        std::vector<oprf::GroupElement> bs;
        bs.reserve(holders.size());
        for (const auto& kh : holders) bs.push_back(oprf::evaluate(a, kh.coef_keys.at(m - 1)));
        coeffs.push_back(field_map(oprf::unblind_combine(bs, r, pre)));
    }
    return poly_eval_no_constant(coeffs, participant_id);
}

/// Bin and ordering value for one (element, sub-table, pass) from a
/// single OPRF exchange per pair.
inline std::pair<uint64_t, uint64_t> oprf_derived_hashes(const Element& s, uint16_t table,
                                                         Pass pass, uint64_t round,
                                                         std::span<const oprf::OprfKeyShare> holders,
                                                         uint32_t bin_count, Rng& rng) {
    Bytes pre = hash_preimage(pair_index(table), round, s);
    auto r = oprf::Scalar::random_nonzero(rng);
    auto a = oprf::group_mul(oprf::hash_to_group(pre), r);
    std::vector<oprf::GroupElement> bs;
    bs.reserve(holders.size());
    for (const auto& kh : holders) bs.push_back(oprf::evaluate(a, kh.hash_key));
    auto prf = oprf::unblind_combine(bs, r, pre);
    return {expand_bin(prf, table, pass, bin_count), expand_order(prf)};
}

}  // namespace otpsi::oprss
