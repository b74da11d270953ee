#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "otpsi/common.hpp"
#include "otpsi/table.hpp"

namespace otpsi {

// Monte-Carlo validation of the hashing scheme's miss-rate bounds: plant
// one element in `threshold` sets of size M, build the sub-tables, and
// count trials where no sub-table aligns the planted element across all
// sets. Placement runs through the same insertion-pass code as the
// protocol; the per-element hash values come from a fast counter-based
// mixer, which draws the same uniform (bin, ordering) model the bounds
// are stated over and keeps a hundred thousand trials cheap.

enum class HashingVariant : uint8_t {
    Plain = 0,            // independent ordering per table, first pass only
    Reversed = 1,         // consecutive-pair ordering reversal
    SecondInsertion = 2,  // leftover-bin second pass with flipped ordering
    Combined = 3,         // both optimizations
};

inline const char* variant_name(HashingVariant v) {
    switch (v) {
        case HashingVariant::Plain: return "plain";
        case HashingVariant::Reversed: return "reversed";
        case HashingVariant::SecondInsertion: return "second_insertion";
        case HashingVariant::Combined: return "combined";
    }
    return "?";
}

inline BuildOptions variant_options(HashingVariant v) {
    BuildOptions opt;
    opt.pair_reversal = v == HashingVariant::Reversed || v == HashingVariant::Combined;
    opt.second_insertion = v == HashingVariant::SecondInsertion || v == HashingVariant::Combined;
    return opt;
}

/// Analytic upper bound on the miss probability for the given table
/// count. Odd counts leave the last table unpaired, so the bound is
/// pair-bound^((c-1)/2) times the single-table bound.
inline double miss_bound(HashingVariant v, int tables) {
    const double single_plain = std::exp(-1.0);
    const double pair_reversed = 3.0 * std::exp(-1.0) - 1.0;
    const double single_second = 2.0 * std::exp(-2.0);
    const double pair_combined =
        2.0 * std::exp(-1.0) + 2.0 * std::exp(-2.0) + 3.0 * std::exp(-4.0) - 1.0;
    auto paired = [&](double pair, double single) {
        double b = std::pow(pair, tables / 2);
        if (tables % 2) b *= single;
        return b;
    };
    switch (v) {
        case HashingVariant::Plain: return std::pow(single_plain, tables);
        case HashingVariant::Reversed: return paired(pair_reversed, single_plain);
        case HashingVariant::SecondInsertion: return std::pow(single_second, tables);
        case HashingVariant::Combined: return paired(pair_combined, single_second);
    }
    return 1.0;
}

struct MissRatePoint {
    int tables = 0;
    uint64_t trials = 0;
    uint64_t misses = 0;
    double rate = 0.0;
    double bound = 1.0;
};

struct MissRateReport {
    HashingVariant variant;
    uint32_t set_size = 0;
    uint16_t threshold = 0;
    std::vector<MissRatePoint> points;  // one per table count, ascending
};

namespace detail {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t mc_hash(uint64_t seed, uint64_t trial, uint64_t tag, uint64_t stream,
                        uint64_t elem_id) {
    uint64_t h = splitmix64(seed ^ 0x6f747073ULL);
    h = splitmix64(h ^ trial);
    h = splitmix64(h ^ (tag << 48) ^ stream);
    return splitmix64(h ^ elem_id);
}

}  // namespace detail

/// Runs `trials` planted instances and reports observed miss fractions
/// against the analytic bounds for every requested table count (computed
/// cumulatively from one build per trial).
inline MissRateReport monte_carlo_miss_rate(uint32_t set_size, uint16_t threshold,
                                            std::vector<int> table_counts, uint64_t trials,
                                            HashingVariant variant, uint64_t seed = 1,
                                            unsigned threads = 0) {
    std::sort(table_counts.begin(), table_counts.end());
    const int max_tables = table_counts.empty() ? 0 : table_counts.back();
    const uint32_t bins = set_size * threshold;
    const BuildOptions opt = variant_options(variant);

    unsigned workers = resolve_threads(threads);
    // misses_at[w][a] = trials (in worker w) where tables 1..a+1 all missed
    std::vector<std::vector<uint64_t>> missed_through(workers,
                                                      std::vector<uint64_t>(max_tables, 0));

    parallel_for(trials, workers, [&](unsigned w, size_t begin, size_t end) {
        std::vector<std::vector<uint64_t>> ids(threshold, std::vector<uint64_t>(set_size));
        std::vector<uint64_t> planted_bin(threshold);

        for (size_t trial = begin; trial < end; trial++) {
            // element 0 is the planted common element, fillers are unique
            uint64_t planted = detail::mc_hash(seed, trial, 0xEE, 0, 0);
            for (uint16_t p = 0; p < threshold; p++) {
                ids[p][0] = planted;
                for (uint32_t j = 1; j < set_size; j++)
                    ids[p][j] = detail::mc_hash(seed, trial, 0xEE, 1, uint64_t(p) * set_size + j);
            }
            bool aligned_any = false;
            for (int a = 1; a <= max_tables && !aligned_any; a++) {
                uint16_t table = uint16_t(a);
                uint64_t ord_stream = opt.pair_reversal ? pair_index(table) : table;
                bool aligned = true;
                for (uint16_t p = 0; p < threshold && aligned; p++) {
                    const auto& elem_ids = ids[p];
                    auto bin_of = [&](uint16_t tb, Pass pass, uint32_t i) {
                        return detail::mc_hash(seed, trial, pass == Pass::First ? 0xB1 : 0xB2, tb,
                                               elem_ids[i]) %
                               bins;
                    };
                    auto ord_of = [&](uint16_t, uint32_t i) {
                        return detail::mc_hash(seed, trial, 0x0D, ord_stream, elem_ids[i]);
                    };
                    auto placement = detail::place_sub_table(
                        bins, set_size, table, bin_of, ord_of,
                        [&](uint32_t x, uint32_t y) { return elem_ids[x] < elem_ids[y]; }, opt);
                    uint64_t b1 = bin_of(table, Pass::First, 0);
                    if (placement.first[b1] == 0) {
                        planted_bin[p] = b1;
                    } else if (opt.second_insertion) {
                        uint64_t b2 = bin_of(table, Pass::Second, 0);
                        if (!placement.second.empty() && placement.second[b2] == 0)
                            planted_bin[p] = b2;
                        else
                            aligned = false;
                    } else {
                        aligned = false;
                    }
                    if (aligned && p > 0 && planted_bin[p] != planted_bin[0]) aligned = false;
                }
                if (aligned) aligned_any = true;
                if (!aligned_any) missed_through[w][a - 1]++;
            }
        }
    });

    MissRateReport report;
    report.variant = variant;
    report.set_size = set_size;
    report.threshold = threshold;
    for (int c : table_counts) {
        MissRatePoint pt;
        pt.tables = c;
        pt.trials = trials;
        for (unsigned w = 0; w < workers; w++) pt.misses += missed_through[w][c - 1];
        pt.rate = trials ? double(pt.misses) / double(trials) : 0.0;
        pt.bound = miss_bound(variant, c);
        report.points.push_back(pt);
    }
    return report;
}

inline std::string to_csv(const MissRateReport& r) {
    std::ostringstream out;
    out << "variant,set_size,threshold,tables,trials,misses,miss_rate,bound\n";
    for (const auto& p : r.points)
        out << variant_name(r.variant) << ',' << r.set_size << ',' << r.threshold << ','
            << p.tables << ',' << p.trials << ',' << p.misses << ',' << p.rate << ',' << p.bound
            << "\n";
    return out.str();
}

}  // namespace otpsi
