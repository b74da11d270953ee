#pragma once

#include <chrono>
#include <sstream>
#include <string>
#include <vector>

#include "otpsi/aggregator.hpp"
#include "otpsi/common.hpp"
#include "otpsi/params.hpp"
#include "otpsi/table.hpp"

namespace otpsi {

struct BenchPoint {
    uint32_t n_participants = 0;
    uint16_t threshold = 0;
    uint64_t set_size = 0;
    uint16_t table_count = 0;
    double seconds = 0.0;
    uint64_t interpolations = 0;
    size_t hits = 0;
};

/// Times reconstruction over synthetic uniform tables (all dummies; the
/// aggregator's work is data-independent, so hit content is irrelevant
/// to timing). Best of `repeats` runs.
inline BenchPoint bench_reconstruction_point(uint32_t n, uint16_t t, uint64_t m, uint16_t tables,
                                             uint64_t seed = 1, unsigned threads = 1,
                                             int repeats = 3) {
    SessionParams params;
    params.n_participants = n;
    params.threshold = t;
    params.max_set_size = m;
    params.table_count = tables;
    params.round_id = 1;
    params.validate();

    Rng rng = Rng::from_u64(seed);
    std::vector<ShareTable> uploads;
    uploads.reserve(n);
    for (uint32_t i = 0; i < n; i++) {
        ShareTable st(tables, params.bin_count());
        Rng r = rng.fork(i);
        fill_dummies(st, r);
        uploads.push_back(std::move(st));
    }

    BenchPoint pt;
    pt.n_participants = n;
    pt.threshold = t;
    pt.set_size = m;
    pt.table_count = tables;
    pt.seconds = 1e300;
    for (int rep = 0; rep < repeats; rep++) {
        ReconStats stats;
        auto t0 = std::chrono::steady_clock::now();
        HitReport report = reconstruct_hits(uploads, params, threads, &stats);
        auto t1 = std::chrono::steady_clock::now();
        double sec = std::chrono::duration<double>(t1 - t0).count();
        if (sec < pt.seconds) pt.seconds = sec;
        pt.interpolations = stats.interpolations;
        pt.hits = report.records.size();
    }
    return pt;
}

inline std::string bench_csv(std::span<const BenchPoint> points) {
    std::ostringstream out;
    out << "n,t,m,tables,seconds,interpolations\n";
    for (const auto& p : points)
        out << p.n_participants << ',' << p.threshold << ',' << p.set_size << ','
            << p.table_count << ',' << p.seconds << ',' << p.interpolations << "\n";
    return out.str();
}

/// Least-squares slope of log(seconds) against log(x); the scaling-shape
/// checks compare it with the theory exponent.
inline double loglog_slope(std::span<const double> xs, std::span<const double> ys) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    size_t n = xs.size();
    for (size_t i = 0; i < n; i++) {
        double lx = std::log(xs[i]), ly = std::log(ys[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (double(n) * sxy - sx * sy) / (double(n) * sxx - sx * sx);
}

}  // namespace otpsi
