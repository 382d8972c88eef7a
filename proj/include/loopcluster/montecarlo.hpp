// Copyright 2026 The loopcluster Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Event-level Monte Carlo of the loop experiment: EOM pulse patterns, source
// brightness and multi-photon emission, PBS routing, loop loss, time-bin
// readout of the last photon, detector efficiency and dead time, cw
// background, coincidence counting and background subtraction.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "loopcluster/analysis.hpp"
#include "loopcluster/errors.hpp"
#include "loopcluster/parallel.hpp"
#include "loopcluster/protocol.hpp"
#include "loopcluster/scaling.hpp"

namespace loopcluster {

inline constexpr int kMaxMonteCarloPhotons = 11;
inline constexpr std::uint64_t kShotBlock = 65536;

/// Counter-based generator: SplitMix64 seeded from (seed, stream). Each shot
/// owns a stream, so results do not depend on how shots are scheduled.
class CounterRng {
   public:
    CounterRng(std::uint64_t seed, std::uint64_t stream) : state_(mix(seed ^ mix(stream + 0x632BE59BD9B4E019ULL))) {}

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t next() {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix(state_);
    }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    bool bernoulli(double p) { return uniform() < p; }

    /// Inverse-CDF Poisson sampling; adequate for the small means used here.
    int poisson(double mean) {
        if (!(mean > 0.0)) return 0;
        const double u = uniform();
        double p = std::exp(-mean);
        double c = p;
        int k = 0;
        while (u >= c && k < 10000) {
            ++k;
            p *= mean / k;
            c += p;
            if (p == 0.0) break;
        }
        return k;
    }

   private:
    std::uint64_t state_;
};

/// EOM gating pattern, one character per loop round trip.
struct PulseSequence {
    std::string pattern = "1100";
    double bin_ns = 74.0;
    int pulses_per_bin = 6;
    double laser_period_ns = 12.3;

    /// "1"*n + "00".
    static PulseSequence for_photons(int n) {
        if (n < 1) throw ArgumentError("pulse sequence needs at least one photon");
        PulseSequence s;
        s.pattern = std::string(static_cast<std::size_t>(n), '1') + "00";
        return s;
    }

    void validate() const {
        if (pattern.empty()) throw ConfigError("empty pulse pattern");
        for (char c : pattern) {
            if (c != '0' && c != '1') throw ConfigError("pulse pattern \"" + pattern + "\" may contain only 0 and 1");
        }
        if (pattern.size() < 2 || pattern.compare(pattern.size() - 2, 2, "00") != 0) {
            throw ConfigError("pulse pattern \"" + pattern + "\" must end with at least two empty bins");
        }
        if (!(bin_ns > 0.0) || !(laser_period_ns > 0.0) || pulses_per_bin < 1) throw ConfigError("bin timing must be positive");
        if (std::abs(pulses_per_bin * laser_period_ns - bin_ns) > 0.01 * bin_ns) {
            throw ConfigError("pulses_per_bin * laser_period does not match the bin duration within 1%");
        }
    }

    int open_bins() const { return static_cast<int>(std::count(pattern.begin(), pattern.end(), '1')); }
    bool open(int bin) const {
        return bin >= 0 && bin < static_cast<int>(pattern.size()) && pattern[static_cast<std::size_t>(bin)] == '1';
    }
};

struct DetectorModel {
    double efficiency = 1.0;
    double dead_time_ns = 60.0;
    int count = 2;

    void validate() const {
        if (!(efficiency > 0.0 && efficiency <= 1.0)) throw ArgumentError("detector efficiency must lie in (0, 1]");
        if (!(dead_time_ns >= 0.0)) throw ArgumentError("dead time must be non-negative");
        if (count != 2) throw ArgumentError("the readout uses exactly two detectors");
    }
};

/// cw_fraction is the share of accidental n-folds among all n-folds. The
/// per-window click probability that realizes it is calibrated on a
/// background-free pilot of the measured sequence (see calibrate_background).
struct BackgroundModel {
    double cw_fraction = 0.10;
    double eom_extinction = 0.01;
    double window_ns = 5.0;

    static BackgroundModel none() { return {0.0, 0.0, 5.0}; }

    void validate() const {
        if (!(cw_fraction >= 0.0 && cw_fraction < 1.0)) throw ArgumentError("cw background fraction must lie in [0, 1)");
        if (!(eom_extinction >= 0.0 && eom_extinction < 1.0)) throw ArgumentError("EOM extinction must lie in [0, 1)");
        if (!(window_ns > 0.0)) throw ArgumentError("coincidence window must be positive");
    }
};

/// n-fold counts per outcome pattern (index bit n-1-k is photon k).
struct CoincidenceTally {
    int n = 0;
    std::vector<std::uint64_t> counts;
    std::uint64_t shots = 0;
    std::uint64_t seed = 0;
    std::string pattern;

    std::uint64_t total() const {
        std::uint64_t t = 0;
        for (auto c : counts) t += c;
        return t;
    }
};

struct RunParams {
    PulseSequence seq;
    NoiseModel noise;
    EfficiencyBudget budget;
    DetectorModel det;
    BackgroundModel bg;
    double phi = 0.0;
    std::uint64_t shots = 1;
    std::uint64_t seed = 0;
    /// Target coincidence order; 0 means the number of open bins.
    int n_fold = 0;
    /// 0 uses every hardware thread.
    int threads = 0;
    /// Background click probability per detector and window; negative means
    /// calibrate from bg.cw_fraction.
    double bg_window_probability = -1.0;
};

namespace detail {

struct Click {
    double t;
    int detector;
};

/// Cumulative outcome distribution of the n-photon chain in the readout basis.
inline std::vector<double> outcome_cdf(int n, double phi, const NoiseModel& noise) {
    NoiseModel fusion = noise;
    fusion.g2 = 0.0;
    if (fusion.kind == NoiseKind::kIdeal) fusion = NoiseModel::ideal();
    const Eigen::VectorXd pops = x_basis_populations(build_chain(n, phi, fusion).state);
    std::vector<double> cdf(static_cast<std::size_t>(pops.size()));
    double acc = 0.0;
    for (Eigen::Index i = 0; i < pops.size(); ++i) {
        acc += pops(i);
        cdf[static_cast<std::size_t>(i)] = acc;
    }
    for (double& c : cdf) c /= acc;
    return cdf;
}

class ShotSimulator {
   public:
    ShotSimulator(const RunParams& p, int n, std::vector<double> cdf, double window_probability)
        : p_(p), n_(n), bins_(n + 2), cdf_(std::move(cdf)) {
        span_ns_ = bins_ * p.seq.bin_ns;
        bg_mean_ = window_probability / p.bg.window_ns * span_ns_;
    }

    /// Returns the outcome index of a valid n-fold, or -1. With `deficiency`
    /// set, background is skipped and the number of (bin, detector) slots in
    /// which a single extra click would complete an n-fold is added to it.
    long run(std::uint64_t shot, double* deficiency = nullptr) {
        CounterRng rng(p_.seed, shot);
        const auto& b = p_.budget;

        // Emission: surviving photons per bin.
        std::array<int, kMaxMonteCarloPhotons + 2> src{};
        for (int k = 0; k < bins_; ++k) {
            const double pe = b.eta_b * (p_.seq.open(k) ? 1.0 : p_.bg.eom_extinction);
            if (pe <= 0.0 || !rng.bernoulli(pe)) continue;
            // g2 = 2 P2 / P1^2 for a pulsed source, so a second photon
            // accompanies an emitted one with probability g2 * eta_b / 2.
            int photons = 1 + (p_.noise.g2 > 0.0 && rng.bernoulli(0.5 * p_.noise.g2 * b.eta_b) ? 1 : 0);
            for (int j = 0; j < photons; ++j) src[static_cast<std::size_t>(k)] += rng.bernoulli(b.eta_s) ? 1 : 0;
        }

        // Routing. exits_ holds (bin, detector); detector -1 means "from the
        // chain, fill in later".
        exits_.clear();
        bool clean = true;
        int loop = 0;
        int pending = 0;
        for (int k = 0; k < bins_; ++k) {
            int survivors = 0;
            for (int j = 0; j < loop; ++j) survivors += rng.bernoulli(b.eta_l) ? 1 : 0;
            const int s = src[static_cast<std::size_t>(k)];
            if (clean) {
                if (k == 0) {
                    clean = s == 1;
                } else if (k < n_) {
                    clean = s == 1 && survivors == 1;
                } else {
                    clean = src[static_cast<std::size_t>(n_)] == 0 && src[static_cast<std::size_t>(n_ + 1)] == 0 && survivors == 1;
                    if (clean) {
                        // Last photon: readout by arrival time, no extra loss.
                        const std::size_t outcome = sample_outcome(rng);
                        const int last = static_cast<int>(outcome & 1U);
                        for (auto& e : exits_) {
                            if (e.second < 0) e.second = static_cast<int>((outcome >> (n_ - e.first)) & 1U);
                        }
                        exits_.emplace_back(n_ + last, rng.bernoulli(0.5) ? 1 : 0);
                        loop = 0;
                        break;
                    }
                }
                if (clean) {
                    const double u = rng.uniform();
                    if (k == 0) {
                        if (u < 0.5) {
                            loop = 1;
                            continue;
                        }
                        clean = false;
                        exits_.emplace_back(0, rng.bernoulli(0.5) ? 1 : 0);
                        loop = 0;
                        continue;
                    }
                    if (u < 0.5) {
                        exits_.emplace_back(k, -1);
                        ++pending;
                        loop = 1;
                        continue;
                    }
                    clean = false;
                    const int out = u < 0.75 ? 2 : 0;
                    for (int j = 0; j < out; ++j) exits_.emplace_back(k, rng.bernoulli(0.5) ? 1 : 0);
                    loop = 2 - out;
                    continue;
                }
            }
            if (pending > 0) {
                for (auto& e : exits_) {
                    if (e.second < 0) e.second = rng.bernoulli(0.5) ? 1 : 0;
                }
                pending = 0;
            }
            const int arriving = s + survivors;
            loop = 0;
            for (int j = 0; j < arriving; ++j) {
                if (rng.bernoulli(0.5)) exits_.emplace_back(k, rng.bernoulli(0.5) ? 1 : 0);
                else ++loop;
            }
        }

        // Detection, background and dead time.
        clicks_.clear();
        for (const auto& [bin, d] : exits_) {
            if (rng.bernoulli(p_.det.efficiency)) clicks_.push_back({bin * p_.seq.bin_ns, d});
        }
        for (int d = 0; d < 2 && deficiency == nullptr; ++d) {
            const int m = rng.poisson(bg_mean_);
            for (int j = 0; j < m; ++j) clicks_.push_back({rng.uniform() * span_ns_ - 0.5 * p_.seq.bin_ns, d});
        }
        std::sort(clicks_.begin(), clicks_.end(), [](const Click& a, const Click& c) {
            return a.t < c.t || (a.t == c.t && a.detector < c.detector);
        });
        std::array<int, kMaxMonteCarloPhotons + 2> per_bin{};
        std::array<int, kMaxMonteCarloPhotons + 2> det_of{};
        // Non-paralyzable dead time; detectors do not resolve photon number,
        // so simultaneous arrivals make one click even without dead time.
        std::array<double, 2> last{-1e300, -1e300};
        for (const Click& c : clicks_) {
            const double prev = last[static_cast<std::size_t>(c.detector)];
            if (c.t == prev || c.t < prev + p_.det.dead_time_ns) continue;
            last[static_cast<std::size_t>(c.detector)] = c.t;
            const long k = std::lround(c.t / p_.seq.bin_ns);
            if (k < 0 || k >= bins_) continue;
            if (std::abs(c.t - static_cast<double>(k) * p_.seq.bin_ns) > 0.5 * p_.bg.window_ns) continue;
            per_bin[static_cast<std::size_t>(k)] += 1;
            det_of[static_cast<std::size_t>(k)] = c.detector;
        }

        if (deficiency != nullptr) *deficiency += missing_slots(per_bin);

        // Valid n-fold: one click in each of bins 1..n-1, one in bins n, n+1.
        long index = 0;
        for (int k = 1; k < n_; ++k) {
            if (per_bin[static_cast<std::size_t>(k)] != 1) return -1;
            index = (index << 1) | det_of[static_cast<std::size_t>(k)];
        }
        const int a = per_bin[static_cast<std::size_t>(n_)];
        const int c = per_bin[static_cast<std::size_t>(n_ + 1)];
        if (a + c != 1) return -1;
        return (index << 1) | (c == 1 ? 1 : 0);
    }

   private:
    double missing_slots(const std::array<int, kMaxMonteCarloPhotons + 2>& per_bin) const {
        int empty = -1;
        for (int k = 1; k < n_; ++k) {
            const int c = per_bin[static_cast<std::size_t>(k)];
            if (c == 1) continue;
            if (c != 0 || empty >= 0) return 0.0;
            empty = k;
        }
        const int tail = per_bin[static_cast<std::size_t>(n_)] + per_bin[static_cast<std::size_t>(n_ + 1)];
        if (empty >= 0) return tail == 1 ? 2.0 : 0.0;
        return tail == 0 ? 4.0 : 0.0;
    }

    std::size_t sample_outcome(CounterRng& rng) const {
        const double u = rng.uniform();
        auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        if (it == cdf_.end()) --it;
        return static_cast<std::size_t>(it - cdf_.begin());
    }

    const RunParams& p_;
    int n_;
    int bins_;
    std::vector<double> cdf_;
    double span_ns_ = 0.0;
    double bg_mean_ = 0.0;
    std::vector<std::pair<int, int>> exits_;
    std::vector<Click> clicks_;
};

}  // namespace detail

/// Shots in the background calibration pilot.
inline constexpr std::uint64_t kPilotShots = std::uint64_t{1} << 20;

/// Per-detector, per-window background probability for which accidental
/// n-folds make up bg.cw_fraction of all n-folds, to first order. The pilot
/// runs kPilotShots background-free shots on a stream derived from the seed.
/// Falls back to cw_fraction * eta_b * eta_s * eta_d / 2 when the pilot sees
/// no n-fold.
inline double calibrate_background(const RunParams& p);

inline CoincidenceTally run_sequence(const RunParams& p) {
    p.seq.validate();
    p.noise.validate();
    p.budget.validate();
    p.det.validate();
    p.bg.validate();
    if (p.shots < 1) throw ArgumentError("shots must be at least 1");
    const int n = p.n_fold > 0 ? p.n_fold : p.seq.open_bins();
    if (n < 2) throw ConfigError("coincidence order must be at least 2");
    if (n > kMaxMonteCarloPhotons) throw CapacityError("Monte Carlo supports at most " + std::to_string(kMaxMonteCarloPhotons) + " photons");
    if (static_cast<int>(p.seq.pattern.size()) < n + 2) throw ConfigError("pulse pattern is shorter than n + 2 bins");
    for (std::size_t k = static_cast<std::size_t>(n); k < p.seq.pattern.size(); ++k) {
        if (p.seq.pattern[k] == '1') throw ConfigError("pulse pattern opens a bin after photon " + std::to_string(n));
    }

    const std::vector<double> cdf = detail::outcome_cdf(n, p.phi, p.noise);
    const double pw = p.bg_window_probability >= 0.0 ? p.bg_window_probability : calibrate_background(p);
    if (!(pw < 1.0)) throw ArgumentError("background window probability must be below 1");
    const std::uint64_t blocks = (p.shots + kShotBlock - 1) / kShotBlock;
    const std::size_t outcomes = std::size_t{1} << n;
    std::vector<std::vector<std::uint64_t>> partial(blocks, std::vector<std::uint64_t>(outcomes, 0));
    parallel_for(static_cast<std::size_t>(blocks), p.threads, [&](std::size_t blk) {
        detail::ShotSimulator sim(p, n, cdf, pw);
        const std::uint64_t lo = blk * kShotBlock;
        const std::uint64_t hi = std::min(p.shots, lo + kShotBlock);
        auto& local = partial[blk];
        for (std::uint64_t shot = lo; shot < hi; ++shot) {
            const long idx = sim.run(shot);
            if (idx >= 0) local[static_cast<std::size_t>(idx)] += 1;
        }
    });
    CoincidenceTally t{n, std::vector<std::uint64_t>(outcomes, 0), p.shots, p.seed, p.seq.pattern};
    for (const auto& local : partial) {
        for (std::size_t i = 0; i < outcomes; ++i) t.counts[i] += local[i];
    }
    return t;
}

inline CoincidenceTally run_sequence(const PulseSequence& seq, const NoiseModel& noise, const EfficiencyBudget& budget,
                                     const DetectorModel& det, const BackgroundModel& bg, double phi,
                                     std::uint64_t shots, std::uint64_t seed, int threads = 0) {
    return run_sequence(RunParams{seq, noise, budget, det, bg, phi, shots, seed, 0, threads});
}

inline double calibrate_background(const RunParams& p) {
    p.bg.validate();
    if (p.bg.cw_fraction == 0.0) return 0.0;
    const int n = p.n_fold > 0 ? p.n_fold : p.seq.open_bins();
    const std::vector<double> cdf = detail::outcome_cdf(n, p.phi, p.noise);
    RunParams pilot = p;
    pilot.seed = CounterRng::mix(p.seed ^ 0x5D588B656C078965ULL);
    const std::uint64_t blocks = kPilotShots / kShotBlock;
    std::vector<std::pair<double, double>> partial(blocks, {0.0, 0.0});
    parallel_for(static_cast<std::size_t>(blocks), p.threads, [&](std::size_t blk) {
        detail::ShotSimulator sim(pilot, n, cdf, 0.0);
        auto& [valid, missing] = partial[blk];
        for (std::uint64_t shot = blk * kShotBlock; shot < (blk + 1) * kShotBlock; ++shot) {
            if (sim.run(shot, &missing) >= 0) valid += 1.0;
        }
    });
    double valid = 0.0, missing = 0.0;
    for (const auto& [v, m] : partial) {
        valid += v;
        missing += m;
    }
    if (valid == 0.0 || missing == 0.0) return p.bg.cw_fraction * p.budget.eta_b * p.budget.eta_s * p.det.efficiency / 2.0;
    return std::min(0.5, p.bg.cw_fraction / (1.0 - p.bg.cw_fraction) * valid / missing);
}

/// Seed of the k-th background run.
inline std::uint64_t background_seed(std::uint64_t seed, int k) {
    return CounterRng::mix(seed + 0xD1B54A32D192ED03ULL * static_cast<std::uint64_t>(k + 1));
}

/// One run per variant with the k-th open bin closed (k = 1..n), counted as
/// n-folds.
inline std::vector<CoincidenceTally> background_runs(const RunParams& p) {
    p.seq.validate();
    const int n = p.n_fold > 0 ? p.n_fold : p.seq.open_bins();
    RunParams base = p;
    if (base.bg_window_probability < 0.0) base.bg_window_probability = calibrate_background(p);
    std::vector<CoincidenceTally> out;
    int seen = 0;
    for (std::size_t i = 0; i < p.seq.pattern.size(); ++i) {
        if (p.seq.pattern[i] != '1') continue;
        ++seen;
        RunParams q = base;
        q.seq.pattern[i] = '0';
        q.n_fold = n;
        q.seed = background_seed(p.seed, seen);
        out.push_back(run_sequence(q));
    }
    return out;
}

struct CorrectedCounts {
    int n = 0;
    std::vector<double> counts;
    std::vector<double> variances;
    bool has_negative = false;
};

/// N_i = N_i^meas - sum_k N_{i,k}^bg, negative values kept and flagged.
inline CorrectedCounts subtract_background(const CoincidenceTally& meas, const std::vector<CoincidenceTally>& bgs) {
    CorrectedCounts c{meas.n, {}, {}, false};
    c.counts.assign(meas.counts.begin(), meas.counts.end());
    c.variances = c.counts;
    for (const auto& b : bgs) {
        if (b.counts.size() != meas.counts.size()) throw ArgumentError("background tally has a different outcome count");
        for (std::size_t i = 0; i < c.counts.size(); ++i) {
            c.counts[i] -= static_cast<double>(b.counts[i]);
            c.variances[i] += static_cast<double>(b.counts[i]);
        }
    }
    c.has_negative = std::any_of(c.counts.begin(), c.counts.end(), [](double v) { return v < 0.0; });
    return c;
}

struct VisibilityEstimate {
    double value = 0.0;
    double sigma = 0.0;
};

/// Signed combination of counts over the total, with sigma = sqrt(sum Var_i) / |N_tot|.
inline VisibilityEstimate visibility_with_errors(const CorrectedCounts& c, const PauliString& observable) {
    if (observable.size() != c.n) throw ArgumentError("observable length does not match the coincidence order");
    double num = 0.0, den = 0.0, var = 0.0;
    for (std::size_t i = 0; i < c.counts.size(); ++i) {
        num += population_sign(i, observable) * c.counts[i];
        den += c.counts[i];
        var += c.variances[i];
    }
    if (den == 0.0) throw EmptyDataError("no coincidences to evaluate");
    return {num / den, std::sqrt(var) / std::abs(den)};
}

inline VisibilityEstimate visibility_with_errors(const CoincidenceTally& t, const PauliString& observable) {
    return visibility_with_errors(subtract_background(t, {}), observable);
}

/// Metadata block, then "pattern,count" rows in outcome order.
inline void write_tally(std::ostream& os, const CoincidenceTally& t,
                        const std::vector<std::pair<std::string, std::string>>& params = {}) {
    os << "# seed=" << t.seed << "\n# shots=" << t.shots << "\n# n=" << t.n << "\n# sequence=" << t.pattern << "\n";
    for (const auto& [k, v] : params) os << "# " << k << "=" << v << "\n";
    os << "pattern,count\n";
    for (std::size_t i = 0; i < t.counts.size(); ++i) os << pattern_label(i, t.n) << "," << t.counts[i] << "\n";
}

}  // namespace loopcluster
