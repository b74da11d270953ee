#pragma once

#include <span>
#include <vector>

#include "otpsi/field.hpp"
#include "otpsi/keyed_hash.hpp"
#include "otpsi/params.hpp"
#include "otpsi/table.hpp"

namespace otpsi {

/// Non-interactive share: evaluates the zero-constant keyed polynomial
/// for (table, element, round) at the participant id. Any threshold of
/// these shares for the same tuple interpolates to 0 at x = 0.
inline Fe share_noninteractive(const KeyedHash& kh, uint16_t table, const Element& s,
                               uint64_t round, uint32_t participant_id, uint16_t threshold) {
    auto coeffs = kh.derive_coeffs(table, s, round, threshold);
    return poly_eval_no_constant(coeffs, participant_id);
}

/// Keyed derivation source for table building (non-interactive
/// deployment). Ordering values are precomputed per pair up front: both
/// passes and both sub-tables of a pair reuse them, and the table build
/// runs sub-tables in parallel.
class KeyedDerivations final : public TableDerivations {
public:
    KeyedDerivations(const KeyedHash& kh, std::span<const Element> set, const SessionParams& params,
                     uint32_t participant_id)
        : kh_(kh), set_(set), params_(params), id_(participant_id) {
        size_t pairs = (params.table_count + 1) / 2;
        ord_.resize(pairs * set.size());
        for (size_t z = 0; z < pairs; z++)
            for (uint32_t i = 0; i < set.size(); i++)
                ord_[z * set.size() + i] =
                    kh_.derive_order(uint16_t(2 * z + 1), set_[i], params_.round_id);
    }

    uint64_t bin(uint16_t table, Pass pass, uint32_t elem) override {
        return kh_.derive_bin(table, set_[elem], params_.round_id, pass, params_.bin_count());
    }

    uint64_t order_value(uint16_t table, uint32_t elem) override {
        return ord_[size_t(pair_index(table) - 1) * set_.size() + elem];
    }

    Fe share(uint16_t table, uint32_t elem) override {
        return share_noninteractive(kh_, table, set_[elem], params_.round_id, id_,
                                    params_.threshold);
    }

private:
    const KeyedHash& kh_;
    std::span<const Element> set_;
    const SessionParams& params_;
    uint32_t id_;
    std::vector<uint64_t> ord_;
};

}  // namespace otpsi
