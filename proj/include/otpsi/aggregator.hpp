#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "otpsi/common.hpp"
#include "otpsi/field.hpp"
#include "otpsi/params.hpp"
#include "otpsi/table.hpp"

namespace otpsi {

/// One reconstructed cell: which sub-table/bin produced a valid secret
/// and, OR-ed over every hitting combination, which participants were in
/// those combinations.
struct HitRecord {
    uint16_t table = 0;
    uint32_t bin = 0;
    std::vector<uint8_t> participants;  // ceil(N/8) bytes, participant i at bit (i-1)

    bool has(uint32_t id) const { return (participants[(id - 1) / 8] >> ((id - 1) % 8)) & 1; }
    void set(uint32_t id) { participants[(id - 1) / 8] |= uint8_t(1u << ((id - 1) % 8)); }
    uint32_t popcount() const {
        uint32_t n = 0;
        for (uint8_t b : participants) n += uint32_t(__builtin_popcount(b));
        return n;
    }
};

struct HitReport {
    std::vector<HitRecord> records;                // sorted by (table, bin)
    std::vector<std::vector<Cell>> per_participant;  // index id-1

    /// Wire form: count-prefixed records of (table u16, bin u32, bitset).
    Bytes serialize() const {
        size_t rec_bytes = records.empty() ? 0 : records[0].participants.size();
        Bytes out(4 + records.size() * (6 + rec_bytes));
        put_u32_le(out.data(), uint32_t(records.size()));
        size_t off = 4;
        for (const auto& r : records) {
            put_u16_le(out.data() + off, r.table);
            put_u32_le(out.data() + off + 2, r.bin);
            std::copy(r.participants.begin(), r.participants.end(), out.begin() + off + 6);
            off += 6 + rec_bytes;
        }
        return out;
    }

    static HitReport deserialize(std::span<const uint8_t> data, uint32_t n_participants) {
        if (data.size() < 4) throw Error("hit report truncated");
        uint32_t count = get_u32_le(data.data());
        size_t rec_bytes = (n_participants + 7) / 8;
        if (data.size() != 4 + size_t(count) * (6 + rec_bytes))
            throw Error("hit report length mismatch");
        HitReport rep;
        rep.records.resize(count);
        size_t off = 4;
        for (auto& r : rep.records) {
            r.table = get_u16_le(data.data() + off);
            r.bin = get_u32_le(data.data() + off + 2);
            r.participants.assign(data.begin() + off + 6, data.begin() + off + 6 + rec_bytes);
            off += 6 + rec_bytes;
        }
        rep.per_participant = notify_lists(rep.records, n_participants);
        return rep;
    }

    static std::vector<std::vector<Cell>> notify_lists(const std::vector<HitRecord>& records,
                                                       uint32_t n_participants) {
        std::vector<std::vector<Cell>> out(n_participants);
        for (const auto& r : records)
            for (uint32_t id = 1; id <= n_participants; id++)
                if (r.has(id)) out[id - 1].push_back({r.table, r.bin});
        return out;
    }
};

struct ReconStats {
    uint64_t interpolations = 0;
};

namespace detail {

/// Lexicographic t-combinations of {1..n}.
inline std::vector<std::vector<uint32_t>> combinations(uint32_t n, uint32_t t) {
    std::vector<std::vector<uint32_t>> out;
    std::vector<uint32_t> c(t);
    for (uint32_t i = 0; i < t; i++) c[i] = i + 1;
    while (true) {
        out.push_back(c);
        // advance
        int i = int(t) - 1;
        while (i >= 0 && c[i] == n - (t - 1 - uint32_t(i))) i--;
        if (i < 0) break;
        c[i]++;
        for (uint32_t j = uint32_t(i) + 1; j < t; j++) c[j] = c[j - 1] + 1;
    }
    return out;
}

}  // namespace detail

/// Runs every t-combination of participants over every aligned cell and
/// reports the cells that reconstruct the zero secret. All combinations
/// are always evaluated; there is no data-dependent early exit. The
/// interpolation count is exactly C(N,t) * tables * bins.
inline HitReport reconstruct_hits(std::span<const ShareTable> tables, const SessionParams& params,
                                  unsigned threads = 1, ReconStats* stats = nullptr) {
    if (tables.size() != params.n_participants) throw GeometryMismatch();
    for (const auto& t : tables)
        if (t.n_tables != tables[0].n_tables || t.n_bins != tables[0].n_bins)
            throw GeometryMismatch();

    const uint32_t n = params.n_participants;
    const uint16_t t = params.threshold;
    const size_t n_cells = tables.empty() ? 0 : tables[0].cells.size();
    auto combos = detail::combinations(n, t);

    // per-combination hit lists, merged in rank order afterwards
    std::vector<std::vector<uint32_t>> hits(combos.size());
    std::atomic<uint64_t> interp_count{0};

    parallel_for(combos.size(), threads, [&](unsigned, size_t begin, size_t end) {
        uint64_t local_count = 0;
        std::vector<const uint64_t*> rows(t);
        for (size_t ci = begin; ci < end; ci++) {
            const auto& combo = combos[ci];
            auto basis = lagrange_basis_at_zero(combo);
            for (uint16_t i = 0; i < t; i++) rows[i] = tables[combo[i] - 1].cells.data();
            for (size_t cell = 0; cell < n_cells; cell++) {
                Fe acc;
                for (uint16_t i = 0; i < t; i++) acc += basis.coefficients[i] * Fe(rows[i][cell]);
                local_count++;
                if (acc == Fe::zero()) hits[ci].push_back(uint32_t(cell));
            }
        }
        interp_count.fetch_add(local_count, std::memory_order_relaxed);
    });

    if (stats) stats->interpolations = interp_count.load();

    const uint32_t bins = tables.empty() ? 0 : tables[0].n_bins;
    std::unordered_map<uint32_t, size_t> index_of;
    HitReport report;
    for (size_t ci = 0; ci < combos.size(); ci++) {
        for (uint32_t cell : hits[ci]) {
            auto [it, fresh] = index_of.try_emplace(cell, report.records.size());
            if (fresh) {
                HitRecord rec;
                rec.table = uint16_t(cell / bins + 1);
                rec.bin = cell % bins;
                rec.participants.assign((n + 7) / 8, 0);
                report.records.push_back(std::move(rec));
            }
            for (uint32_t id : combos[ci]) report.records[it->second].set(id);
        }
    }
    std::sort(report.records.begin(), report.records.end(),
              [](const HitRecord& a, const HitRecord& b) {
                  return a.table != b.table ? a.table < b.table : a.bin < b.bin;
              });
    report.per_participant = HitReport::notify_lists(report.records, n);
    return report;
}

/// Step-4 view: participant i gets exactly the cells whose hit record
/// includes i, nothing else.
inline std::vector<std::vector<Cell>> notify_participants(const HitReport& report, uint32_t n) {
    return HitReport::notify_lists(report.records, n);
}

/// Participant-side step 5: resolve reported cells back to owned
/// elements. Cells that hold dummies (possible only through chance zero
/// reconstructions) resolve to nothing and drop out here.
inline std::vector<Element> map_indexes_to_elements(std::span<const Cell> indexes,
                                                    const SlotIndexMap& slots) {
    std::unordered_map<uint64_t, size_t> cell_owner;
    for (size_t e = 0; e < slots.elements.size(); e++)
        for (Cell c : slots.cells[e])
            cell_owner.emplace(uint64_t(c.table) << 32 | c.bin, e);
    std::vector<uint8_t> seen(slots.elements.size(), 0);
    std::vector<Element> out;
    for (Cell c : indexes) {
        auto it = cell_owner.find(uint64_t(c.table) << 32 | c.bin);
        if (it == cell_owner.end() || seen[it->second]) continue;
        seen[it->second] = 1;
        out.push_back(slots.elements[it->second]);
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace otpsi
