#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

#include "rsgbm/errors.hpp"
#include "rsgbm/normal.hpp"
#include "rsgbm/series.hpp"

namespace rsgbm {

struct MCConfig {
    std::uint64_t n_paths = 100000;
    std::uint64_t master_seed = 20240901;
    int refinement = 1024;  // points per regime interval for pathwise minima
    double confidence_level = 0.99;
};

inline void validate_mc_config(const MCConfig& cfg) {
    if (cfg.n_paths < 100) throw DomainError("MCConfig: n_paths must be >= 100");
    if (cfg.refinement < 1 || (cfg.refinement & (cfg.refinement - 1)) != 0)
        throw DomainError("MCConfig: refinement must be a power of two >= 1");
    if (!(cfg.confidence_level > 0.0 && cfg.confidence_level < 1.0))
        throw DomainError("MCConfig: confidence_level must lie in (0,1)");
}

struct MCEstimate {
    double value = 0.0;
    double std_error = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::uint64_t n_paths = 0;
    std::uint64_t seed = 0;
    double bias_estimate = 0.0;  // 0 when the estimator is unbiased
};

namespace detail {

/// Worker cap: RSGBM_THREADS if set and positive, else hardware concurrency.
inline unsigned worker_cap() {
    if (const char* env = std::getenv("RSGBM_THREADS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end != env && v > 0) return unsigned(v);
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1u : hw;
}

constexpr std::uint64_t kChunkSize = 4096;

/// Deterministic parallel map over path-index chunks: results are collected
/// by chunk index, so any later in-order reduction is independent of both
/// the worker count and the scheduling, bit for bit.
template <class ChunkResult, class ChunkFn>
std::vector<ChunkResult> map_chunks(std::uint64_t n, ChunkFn&& fn) {
    const std::uint64_t n_chunks = (n + kChunkSize - 1) / kChunkSize;
    std::vector<ChunkResult> results(n_chunks);
    const unsigned n_workers =
        unsigned(std::min<std::uint64_t>(worker_cap(), std::max<std::uint64_t>(n_chunks, 1)));
    if (n_workers <= 1) {
        for (std::uint64_t c = 0; c < n_chunks; ++c)
            results[c] = fn(c, c * kChunkSize, std::min(n, (c + 1) * kChunkSize));
        return results;
    }
    std::atomic<std::uint64_t> next{0};
    auto work = [&]() {
        for (;;) {
            const std::uint64_t c = next.fetch_add(1);
            if (c >= n_chunks) return;
            results[c] = fn(c, c * kChunkSize, std::min(n, (c + 1) * kChunkSize));
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
    return results;
}

struct MeanChunk {
    double sum = 0.0;
    double sum_sq = 0.0;
};

/// Mean/SE estimate from per-chunk (sum, sum of squares) pairs, reduced in
/// chunk order with compensated summation.
inline MCEstimate reduce_mean(const std::vector<MeanChunk>& chunks, std::uint64_t n,
                              const MCConfig& cfg) {
    CompensatedSum s, s2;
    for (const MeanChunk& c : chunks) {
        s.add(c.sum);
        s2.add(c.sum_sq);
    }
    MCEstimate est;
    est.n_paths = n;
    est.seed = cfg.master_seed;
    est.value = s.value() / double(n);
    const double ss = s2.value() - s.value() * s.value() / double(n);
    est.std_error = n > 1 ? std::sqrt(std::fmax(ss, 0.0) / double(n - 1) / double(n)) : 0.0;
    const double z = inv_phi(0.5 * (1.0 + cfg.confidence_level));
    est.ci_low = est.value - z * est.std_error;
    est.ci_high = est.value + z * est.std_error;
    return est;
}

/// Swap in a Wilson interval when a probability estimate has fewer than 30
/// effective successes or failures; the normal interval is unusable there.
inline void probability_interval(MCEstimate& est, double confidence_level) {
    const double n = double(est.n_paths);
    const double p = std::fmin(std::fmax(est.value, 0.0), 1.0);
    const double z = inv_phi(0.5 * (1.0 + confidence_level));
    if (n * p < 30.0 || n * (1.0 - p) < 30.0) {
        const double denom = 1.0 + z * z / n;
        const double center = (p + z * z / (2.0 * n)) / denom;
        const double half =
            z * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom;
        est.ci_low = std::fmax(center - half, 0.0);
        est.ci_high = std::fmin(center + half, 1.0);
        est.ci_low = std::fmin(est.ci_low, est.value);
        est.ci_high = std::fmax(est.ci_high, est.value);
    } else {
        est.ci_low = std::fmax(est.value - z * est.std_error, 0.0);
        est.ci_high = std::fmin(est.value + z * est.std_error, 1.0);
    }
}

}  // namespace detail

}  // namespace rsgbm
