#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "rsgbm/ctmc.hpp"
#include "rsgbm/errors.hpp"
#include "rsgbm/firstpassage.hpp"
#include "rsgbm/mc.hpp"
#include "rsgbm/model.hpp"
#include "rsgbm/quadrature.hpp"
#include "rsgbm/rng.hpp"

namespace rsgbm {

/// One exact-in-distribution draw of Y_t = ln(X_t/X_0): given the chain path,
/// Y_t is Gaussian with mean sum_i Delta_i occ_i and variance sum_i sigma_i^2 occ_i.
inline double simulate_Yt(const RegimeModel& model, double t, PhiloxStream& stream) {
    if (!(t > 0.0)) throw DomainError("simulate_Yt: t must be > 0");
    RegimePath path = sample_path(model, t, stream);
    OccupationTimes occ = occupation_times(path, t);
    DerivedRates rates(model);
    double mean = 0.0, var = 0.0;
    for (int i = 0; i < model.n_states; ++i) {
        mean += rates.delta(i) * occ.per_state(i);
        var += model.sigma(i) * model.sigma(i) * occ.per_state(i);
    }
    return mean + std::sqrt(var) * stream.normal();
}

namespace detail {

/// Log-sum-exp accumulator state for one chunk of Rao-Blackwell weights
/// exp(e_j): M = max exponent, S1 = sum e^{e_j - M}, S2 = sum e^{2(e_j - M)}.
struct LseChunk {
    double M = -1e300;
    double S1 = 0.0;
    double S2 = 0.0;
};

}  // namespace detail

/// Rao-Blackwellized estimate of E[X_t^p]: the Brownian factor is integrated
/// out exactly, leaving the average of exp(sum_i lambda_i(p) occ_i(t)) over
/// chain paths. Accumulation is log-sum-exp so large exponents cannot
/// overflow before the final combine.
inline MCEstimate estimate_moment_Xp(const RegimeModel& model, double p, double t,
                                     const MCConfig& mc) {
    if (!(p >= 0.0)) throw DomainError("estimate_moment_Xp: p must be >= 0");
    if (!(t > 0.0)) throw DomainError("estimate_moment_Xp: t must be > 0");
    validate_model(model);
    validate_mc_config(mc);
    DerivedRates rates(model);
    const Eigen::VectorXd lam = rates.lambda_p(p);

    auto chunk_fn = [&](std::uint64_t, std::uint64_t begin,
                        std::uint64_t end) -> detail::LseChunk {
        detail::LseChunk acc;
        std::vector<double> expo;
        expo.reserve(detail::kChunkSize);
        for (std::uint64_t pi = begin; pi < end; ++pi) {
            PhiloxStream stream(mc.master_seed, pi);
            RegimePath path = sample_path(model, t, stream);
            OccupationTimes occ = occupation_times(path, t);
            double e = 0.0;
            for (int i = 0; i < model.n_states; ++i) e += lam(i) * occ.per_state(i);
            expo.push_back(e);
            acc.M = std::fmax(acc.M, e);
        }
        CompensatedSum s1, s2;
        for (double e : expo) {
            s1.add(std::exp(e - acc.M));
            s2.add(std::exp(2.0 * (e - acc.M)));
        }
        acc.S1 = s1.value();
        acc.S2 = s2.value();
        return acc;
    };

    auto chunks = detail::map_chunks<detail::LseChunk>(mc.n_paths, chunk_fn);
    double M = chunks.front().M, S1 = chunks.front().S1, S2 = chunks.front().S2;
    for (std::size_t c = 1; c < chunks.size(); ++c) {
        const detail::LseChunk& k = chunks[c];
        const double newM = std::fmax(M, k.M);
        S1 = S1 * std::exp(M - newM) + k.S1 * std::exp(k.M - newM);
        S2 = S2 * std::exp(2.0 * (M - newM)) + k.S2 * std::exp(2.0 * (k.M - newM));
        M = newM;
    }
    const double n = double(mc.n_paths);
    const double factor = std::exp(p * std::log(model.x0) + M);
    MCEstimate est;
    est.n_paths = mc.n_paths;
    est.seed = mc.master_seed;
    est.value = factor * (S1 / n);
    const double ss = S2 - S1 * S1 / n;
    est.std_error = factor * std::sqrt(std::fmax(ss, 0.0) / (n - 1.0) / n);
    const double z = inv_phi(0.5 * (1.0 + mc.confidence_level));
    est.ci_low = est.value - z * est.std_error;
    est.ci_high = est.value + z * est.std_error;
    return est;
}

/// Bridge-corrected MC for P(tau_a > T): within each constant-regime interval
/// Y is Brownian with that regime's drift and volatility, so conditioning on
/// the interval endpoints gives the exact crossing probability. Paths carry a
/// survival weight (a conditional-MC variance reduction with no
/// discretization bias) and die the moment an endpoint touches the barrier.
inline MCEstimate estimate_first_passage(const FirstPassageQuery& q, const MCConfig& mc) {
    validate_query(q);
    validate_mc_config(mc);
    const double l0 = q.model.lambda0, l1 = q.model.lambda1;
    const double d0 = q.model.delta0(), d1 = q.model.delta1();
    const double sg0 = q.model.base.sigma(0), sg1 = q.model.base.sigma(1);
    const double T = q.T;

    auto chunk_fn = [&](std::uint64_t, std::uint64_t begin,
                        std::uint64_t end) -> detail::MeanChunk {
        CompensatedSum sum, sum_sq;
        for (std::uint64_t pi = begin; pi < end; ++pi) {
            PhiloxStream stream(mc.master_seed, pi);
            double w = 1.0, z = q.a_tilde, t_cur = 0.0;
            int state = 0;
            while (t_cur < T && w > 0.0) {
                const double rate = state == 0 ? l0 : l1;
                const double sg = state == 0 ? sg0 : sg1;
                const double drift = state == 0 ? d0 : d1;
                const double hold = stream.exponential(rate);
                const double t_next = std::fmin(t_cur + hold, T);
                const double dur = t_next - t_cur;
                if (dur <= 0.0) break;
                const double z_next =
                    z + drift * dur + sg * std::sqrt(dur) * stream.normal();
                w *= bridge_no_cross(z, z_next, 0.0, sg, dur);
                z = z_next;
                t_cur = t_next;
                state ^= 1;
            }
            if (t_cur < T) w = 0.0;
            sum.add(w);
            sum_sq.add(w * w);
        }
        return detail::MeanChunk{sum.value(), sum_sq.value()};
    };

    auto chunks = detail::map_chunks<detail::MeanChunk>(mc.n_paths, chunk_fn);
    MCEstimate est = detail::reduce_mean(chunks, mc.n_paths, mc);
    detail::probability_interval(est, mc.confidence_level);
    return est;
}

struct OccupationHistogram {
    double t = 0.0;
    int bins = 0;
    std::vector<std::uint64_t> counts;  // alpha in [i*t/bins, (i+1)*t/bins), atom excluded
    std::uint64_t atom_count = 0;
    std::uint64_t n_paths = 0;
    MCEstimate atom_frequency;
    double ks_distance = 0.0;  // sup over bin edges vs the analytic sojourn CDF
};

/// Empirical law of alpha(t) against the analytic sojourn density: bins the
/// continuous part, counts the no-jump atom separately, and reports the
/// sup-distance between the empirical and analytic CDFs at the bin edges.
inline OccupationHistogram estimate_occupation_histogram(const TwoStateModel& two, double t,
                                                         int bins, const MCConfig& mc,
                                                         const SeriesConfig& series = {},
                                                         const QuadConfig& quad = {}) {
    if (!(t > 0.0)) throw DomainError("estimate_occupation_histogram: t must be > 0");
    if (bins < 10) throw DomainError("estimate_occupation_histogram: bins must be >= 10");
    validate_mc_config(mc);
    const double l0 = two.lambda0, l1 = two.lambda1;

    struct HistChunk {
        std::vector<std::uint64_t> counts;
        std::uint64_t atom = 0;
    };
    auto chunk_fn = [&](std::uint64_t, std::uint64_t begin, std::uint64_t end) -> HistChunk {
        HistChunk acc;
        acc.counts.assign(std::size_t(bins), 0);
        for (std::uint64_t pi = begin; pi < end; ++pi) {
            PhiloxStream stream(mc.master_seed, pi);
            double t_cur = 0.0, alpha = 0.0;
            int state = 0;
            bool jumped = false;
            while (t_cur < t) {
                const double rate = state == 0 ? l0 : l1;
                const double hold = stream.exponential(rate);
                const double seg = std::fmin(hold, t - t_cur);
                if (state == 0) alpha += seg;
                t_cur += seg;
                if (hold < t - (t_cur - seg)) {
                    jumped = true;
                    state ^= 1;
                } else {
                    break;  // the hold carries past t
                }
            }
            if (!jumped) {
                ++acc.atom;
            } else {
                int bin = int(alpha / t * bins);
                bin = std::min(std::max(bin, 0), bins - 1);
                ++acc.counts[std::size_t(bin)];
            }
        }
        return acc;
    };

    auto chunks = detail::map_chunks<HistChunk>(mc.n_paths, chunk_fn);
    OccupationHistogram hist;
    hist.t = t;
    hist.bins = bins;
    hist.n_paths = mc.n_paths;
    hist.counts.assign(std::size_t(bins), 0);
    for (const auto& c : chunks) {
        hist.atom_count += c.atom;
        for (int b = 0; b < bins; ++b) hist.counts[std::size_t(b)] += c.counts[std::size_t(b)];
    }

    const double n = double(mc.n_paths);
    const double pa = double(hist.atom_count) / n;
    hist.atom_frequency.value = pa;
    hist.atom_frequency.std_error = std::sqrt(std::fmax(pa * (1.0 - pa), 0.0) / n);
    hist.atom_frequency.n_paths = mc.n_paths;
    hist.atom_frequency.seed = mc.master_seed;
    detail::probability_interval(hist.atom_frequency, mc.confidence_level);

    // Analytic CDF at the bin edges by per-bin quadrature of the density.
    double ks = 0.0;
    double ana_cdf = 0.0;
    std::uint64_t cum = 0;
    for (int b = 0; b < bins; ++b) {
        const double lo = t * b / bins, hi = t * (b + 1) / bins;
        ana_cdf += adaptive_gl([&](double s) {
            return sojourn_density(two, t, s, series).density;
        }, lo, hi, quad).value;
        cum += hist.counts[std::size_t(b)];
        ks = std::fmax(ks, std::fabs(double(cum) / n - ana_cdf));
    }
    hist.ks_distance = ks;
    return hist;
}

}  // namespace rsgbm
