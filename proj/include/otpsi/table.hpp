#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "otpsi/common.hpp"
#include "otpsi/element.hpp"
#include "otpsi/field.hpp"
#include "otpsi/keyed_hash.hpp"
#include "otpsi/params.hpp"

namespace otpsi {

struct Cell {
    uint16_t table;  // 1-based sub-table index
    uint32_t bin;    // 0-based bin index

    friend bool operator==(Cell a, Cell b) { return a.table == b.table && a.bin == b.bin; }
    friend auto operator<=>(Cell a, Cell b) {
        return a.table != b.table ? a.table <=> b.table : a.bin <=> b.bin;
    }
};

/// One participant's upload: table_count sub-tables of bin_count cells,
/// each holding a canonical field element. occupancy is build-time state
/// and is never serialized.
struct ShareTable {
    uint16_t n_tables = 0;
    uint32_t n_bins = 0;
    // An element holds at most one cell per insertion pass of a
    // sub-table, so at most two cells per sub-table, with the same share
    // value in both.
    std::vector<uint64_t> cells;      // n_tables * n_bins, sub-table major
    std::vector<uint8_t> occupancy;   // same shape; 1 = real share

    ShareTable() = default;
    ShareTable(uint16_t tables, uint32_t bins)
        : n_tables(tables), n_bins(bins), cells(size_t(tables) * bins, 0),
          occupancy(size_t(tables) * bins, 0) {}

    size_t index(uint16_t table, uint32_t bin) const { return size_t(table - 1) * n_bins + bin; }
    uint64_t cell(uint16_t table, uint32_t bin) const { return cells[index(table, bin)]; }

    /// Header (count u16, bins u32) then little-endian 8-byte cells.
    Bytes serialize() const {
        Bytes out(6 + cells.size() * 8);
        put_u16_le(out.data(), n_tables);
        put_u32_le(out.data() + 2, n_bins);
        for (size_t i = 0; i < cells.size(); i++) put_u64_le(out.data() + 6 + 8 * i, cells[i]);
        return out;
    }

    static ShareTable deserialize(std::span<const uint8_t> data) {
        if (data.size() < 6) throw Error("share table truncated");
        uint16_t tables = get_u16_le(data.data());
        uint32_t bins = get_u32_le(data.data() + 2);
        size_t n = size_t(tables) * bins;
        if (data.size() != 6 + n * 8) throw Error("share table length mismatch");
        ShareTable t;
        t.n_tables = tables;
        t.n_bins = bins;
        t.cells.resize(n);
        for (size_t i = 0; i < n; i++) {
            uint64_t v = get_u64_le(data.data() + 6 + 8 * i);
            if (v >= Fe::kModulus) throw Error("non-canonical cell value");
            t.cells[i] = v;
        }
        return t;
    }
};

/// Private map from each of the participant's elements to the cells its
/// shares occupy. Stays with the owner; the aggregator never sees it.
struct SlotIndexMap {
    std::vector<Element> elements;
    std::vector<std::vector<Cell>> cells;  // parallel to elements

    size_t total_cells() const {
        size_t n = 0;
        for (const auto& c : cells) n += c.size();
        return n;
    }
};

// ---- survivor selection core -------------------------------------------

/// One insertion pass: for every bin not blocked, keeps the extremal
/// candidate under (ordering value, element bytes) in the given
/// direction. Returns one entry per bin: candidate index or -1.
/// blocked_by, when set, removes bins already won in an earlier pass.
template <class BinFn, class OrdFn, class LessFn>
std::vector<int32_t> select_extremal_per_bin(uint32_t bin_count,
                                             std::span<const uint32_t> candidates, BinFn&& bin_of,
                                             OrdFn&& ord_of, LessFn&& elem_less, bool ascending,
                                             const std::vector<int32_t>* blocked_by = nullptr) {
    std::vector<int32_t> winner(bin_count, -1);
    std::vector<uint64_t> best(bin_count, 0);
    for (uint32_t c : candidates) {
        uint32_t b = uint32_t(bin_of(c));
        if (blocked_by && (*blocked_by)[b] >= 0) continue;
        uint64_t o = ord_of(c);
        int32_t w = winner[b];
        bool take;
        if (w < 0) {
            take = true;
        } else if (o != best[b]) {
            take = ascending ? o < best[b] : o > best[b];
        } else {
            // tie on the 64-bit ordering value: byte-wise element
            // comparison in the same direction keeps selection
            // deterministic across participants
            take = ascending ? elem_less(c, uint32_t(w)) : elem_less(uint32_t(w), c);
        }
        if (take) {
            winner[b] = int32_t(c);
            best[b] = o;
        }
    }
    return winner;
}

/// Keyed single-pass survivor selection. For Pass::Second, pass the bins
/// already occupied by the first pass; those are excluded before
/// grouping and their occupants keep priority.
inline std::map<uint32_t, Element> select_survivors(std::span<const Element> set, uint16_t table,
                                                    Pass pass, const KeyedHash& kh, uint64_t round,
                                                    uint32_t bin_count,
                                                    const std::vector<int32_t>* first_pass = nullptr) {
    std::vector<uint32_t> cands(set.size());
    for (uint32_t i = 0; i < set.size(); i++) cands[i] = i;
    auto winners = select_extremal_per_bin(
        bin_count, cands,
        [&](uint32_t i) { return kh.derive_bin(table, set[i], round, pass, bin_count); },
        [&](uint32_t i) { return kh.derive_order(table, set[i], round); },
        [&](uint32_t a, uint32_t b) { return set[a] < set[b]; }, ascending_order(table, pass),
        first_pass);
    std::map<uint32_t, Element> out;
    for (uint32_t b = 0; b < bin_count; b++)
        if (winners[b] >= 0) out.emplace(b, set[winners[b]]);
    return out;
}

// ---- table building ------------------------------------------------------

/// Per-deployment derivation source for table building. Implementations
/// exist for the keyed non-interactive path, for OPRF-derived values,
/// and for the fast synthetic provider of the analysis harness.
/// Elements are addressed by index into the set handed to
/// build_share_table.
class TableDerivations {
public:
    virtual ~TableDerivations() = default;
    virtual uint64_t bin(uint16_t table, Pass pass, uint32_t elem) = 0;  // in [0, bin_count)
    virtual uint64_t order_value(uint16_t table, uint32_t elem) = 0;     // raw 64-bit
    virtual Fe share(uint16_t table, uint32_t elem) = 0;
};

struct BuildOptions {
    bool pair_reversal = true;    // analysis harness switches these off;
    bool second_insertion = true; // the protocol always runs with both
    unsigned threads = 1;
};

/// Fills every still-unoccupied cell with an independent uniform field
/// element so the upload carries no occupancy signal. Occupied cells are
/// untouched.
inline void fill_dummies(ShareTable& table, Rng& rng) {
    for (size_t i = 0; i < table.cells.size(); i++) {
        if (table.occupancy[i]) continue;
        uint64_t v;
        do {
            v = rng.next_u64() & Fe::kModulus;
        } while (v >= Fe::kModulus);
        table.cells[i] = v;
        table.occupancy[i] = 1;
    }
}

namespace detail {

inline bool pass_ascending(uint16_t table, Pass pass, bool pair_reversal) {
    bool asc = pair_reversal ? (table % 2) == 1 : true;
    return pass == Pass::First ? asc : !asc;
}

struct SubTablePlacement {
    std::vector<int32_t> first;   // winner per bin or -1
    std::vector<int32_t> second;  // empty when second insertion is off
};

// Every element takes part in both insertions (so a sub-table holds up
// to 2M real shares); the second pass only competes for bins the first
// pass left empty, which is what gives first-insertion placements their
// priority.
template <class BinFn, class OrdFn, class LessFn>
SubTablePlacement place_sub_table(uint32_t bin_count, uint32_t n_elems, uint16_t table,
                                  BinFn&& bin_of, OrdFn&& ord_of, LessFn&& elem_less,
                                  const BuildOptions& opt) {
    SubTablePlacement out;
    std::vector<uint32_t> cands(n_elems);
    for (uint32_t i = 0; i < n_elems; i++) cands[i] = i;
    out.first = select_extremal_per_bin(
        bin_count, cands, [&](uint32_t i) { return bin_of(table, Pass::First, i); },
        [&](uint32_t i) { return ord_of(table, i); }, elem_less,
        pass_ascending(table, Pass::First, opt.pair_reversal));
    if (!opt.second_insertion) return out;

    out.second = select_extremal_per_bin(
        bin_count, cands, [&](uint32_t i) { return bin_of(table, Pass::Second, i); },
        [&](uint32_t i) { return ord_of(table, i); }, elem_less,
        pass_ascending(table, Pass::Second, opt.pair_reversal), &out.first);
    return out;
}

}  // namespace detail

/// Builds one participant's upload: two insertion passes per sub-table,
/// shares written into won cells, everything else padded with dummies.
/// The set must be deduplicated and within the session maximum.
inline std::pair<ShareTable, SlotIndexMap> build_share_table(std::span<const Element> set,
                                                             const SessionParams& params,
                                                             TableDerivations& derive, Rng& rng,
                                                             const BuildOptions& opt = {}) {
    if (set.size() > params.max_set_size) throw SetTooLarge();
    const uint32_t bins = params.bin_count();
    const uint16_t tables = params.table_count;
    ShareTable table(tables, bins);

    std::vector<detail::SubTablePlacement> placements(tables);
    parallel_for(tables, opt.threads, [&](unsigned, size_t begin, size_t end) {
        for (size_t a = begin; a < end; a++) {
            uint16_t alpha = uint16_t(a + 1);
            placements[a] = detail::place_sub_table(
                bins, uint32_t(set.size()), alpha,
                [&](uint16_t tb, Pass p, uint32_t i) { return derive.bin(tb, p, i); },
                [&](uint16_t tb, uint32_t i) { return derive.order_value(tb, i); },
                [&](uint32_t x, uint32_t y) { return set[x] < set[y]; }, opt);
            auto write = [&](const std::vector<int32_t>& winners) {
                for (uint32_t b = 0; b < bins; b++) {
                    int32_t w = winners.empty() ? -1 : winners[b];
                    if (w < 0) continue;
                    size_t idx = table.index(alpha, b);
                    table.cells[idx] = derive.share(alpha, uint32_t(w)).value();
                    table.occupancy[idx] = 1;
                }
            };
            write(placements[a].first);
            write(placements[a].second);
        }
    });

    SlotIndexMap slots;
    std::vector<std::vector<Cell>> by_elem(set.size());
    for (uint16_t a = 0; a < tables; a++) {
        auto collect = [&](const std::vector<int32_t>& winners) {
            for (uint32_t b = 0; b < bins && !winners.empty(); b++)
                if (winners[b] >= 0) by_elem[winners[b]].push_back({uint16_t(a + 1), b});
        };
        collect(placements[a].first);
        collect(placements[a].second);
    }
    for (size_t i = 0; i < set.size(); i++) {
        if (by_elem[i].empty()) continue;
        std::sort(by_elem[i].begin(), by_elem[i].end());
        slots.elements.push_back(set[i]);
        slots.cells.push_back(std::move(by_elem[i]));
    }

    fill_dummies(table, rng);
    return {std::move(table), std::move(slots)};
}

}  // namespace otpsi
