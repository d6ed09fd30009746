// SPDX-License-Identifier: Apache-2.0
#include "deint/classic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace deint {

DtoaHistogram sdif_histogram(const std::vector<double>& toas, int level, double bin_width,
                             double tau_max) {
    if (level < 1) throw std::invalid_argument("sdif_histogram: level must be >= 1");
    if (static_cast<long>(toas.size()) < level + 1)
        throw std::invalid_argument("sdif_histogram: too few pulses for level " +
                                    std::to_string(level));
    if (!(bin_width > 0.0) || !(tau_max > 0.0))
        throw std::invalid_argument("sdif_histogram: bin width and tau range must be positive");

    DtoaHistogram hist;
    hist.level = level;
    hist.bin_width = bin_width;
    hist.tau_max = tau_max;
    hist.pulse_count = static_cast<long>(toas.size());
    hist.counts.assign(static_cast<size_t>(std::ceil(tau_max / bin_width)), 0);

    for (size_t n = 0; n + level < toas.size(); ++n) {
        const double tau = toas[n + level] - toas[n];
        if (tau < 0.0 || tau >= tau_max) continue;
        ++hist.counts[static_cast<size_t>(tau / bin_width)];
    }
    return hist;
}

std::vector<double> sdif_threshold(const DtoaHistogram& hist, double x, double k) {
    struct Candidate {
        double tau;
        double exceedance;
    };
    std::vector<Candidate> cands;
    const double n = static_cast<double>(hist.pulse_count);
    for (size_t b = 0; b < hist.counts.size(); ++b) {
        if (hist.counts[b] == 0) continue;
        const double tau = hist.bin_center(b);
        const double gate =
            x * (n - hist.level) * std::exp(-tau / (k * n * hist.bin_width));
        if (static_cast<double>(hist.counts[b]) > gate)
            cands.push_back({tau, static_cast<double>(hist.counts[b]) / gate});
    }
    std::stable_sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
        if (a.exceedance != b.exceedance) return a.exceedance > b.exceedance;
        return a.tau < b.tau;
    });
    std::vector<double> out;
    out.reserve(cands.size());
    for (const auto& c : cands) out.push_back(c.tau);
    return out;
}

std::vector<std::vector<int>> sequence_search(const std::vector<double>& toas,
                                              const std::vector<char>& claimed, double pri,
                                              const SequenceSearchConfig& config) {
    if (!(pri > 0.0)) throw std::invalid_argument("sequence_search: pri must be positive");
    if (!(config.tolerance > 0.0))
        throw std::invalid_argument("sequence_search: tolerance must be positive");

    const int n = static_cast<int>(toas.size());
    std::vector<char> used(claimed.begin(), claimed.end());
    used.resize(n, 0);
    std::vector<std::vector<int>> chains;

    for (int start = 0; start < n; ++start) {
        if (used[start]) continue;
        std::vector<int> chain{start};
        int cur = start;
        while (true) {
            int found = -1;
            for (int skip = 1; skip <= config.max_skips + 1 && found < 0; ++skip) {
                const double expected = toas[cur] + skip * pri;
                const double lo = expected - config.tolerance;
                const double hi = expected + config.tolerance;
                auto it = std::lower_bound(toas.begin(), toas.end(), lo);
                double best_err = config.tolerance + 1.0;
                for (; it != toas.end() && *it <= hi; ++it) {
                    const int idx = static_cast<int>(it - toas.begin());
                    if (used[idx] || idx == cur) continue;
                    const double err = std::abs(*it - expected);
                    if (err < best_err) {
                        best_err = err;
                        found = idx;
                    }
                }
            }
            if (found < 0) break;
            chain.push_back(found);
            cur = found;
        }
        if (static_cast<int>(chain.size()) >= config.min_chain) {
            for (int idx : chain) used[idx] = 1;
            chains.push_back(std::move(chain));
        }
    }
    return chains;
}

std::vector<int> sdif_deinterleave(const std::vector<double>& toas, const SdifConfig& config) {
    const int n = static_cast<int>(toas.size());
    std::vector<int> clusters(n, 0);
    if (n == 0) return clusters;

    std::vector<char> claimed(n, 0);
    int next_cluster = 1;
    long residual = n;
    int level = 1;

    while (residual >= config.search.min_chain && level <= config.max_level) {
        std::vector<double> sub;
        std::vector<int> back;
        sub.reserve(residual);
        back.reserve(residual);
        for (int i = 0; i < n; ++i)
            if (!claimed[i]) {
                sub.push_back(toas[i]);
                back.push_back(i);
            }
        if (static_cast<long>(sub.size()) < level + 1) break;

        const auto hist = sdif_histogram(sub, level, config.bin_width, config.tau_max);
        const auto candidates = sdif_threshold(hist, config.threshold_x, config.threshold_k);

        bool extracted = false;
        for (double pri : candidates) {
            const std::vector<char> none(sub.size(), 0);
            auto chains = sequence_search(sub, none, pri, config.search);
            if (chains.empty()) continue;
            // all chains found at one PRI in one pass form one cluster
            // (staggered phases and same-valued dwell groups belong together)
            const int id = next_cluster++;
            for (const auto& chain : chains)
                for (int idx : chain) {
                    clusters[back[idx]] = id;
                    claimed[back[idx]] = 1;
                    --residual;
                }
            extracted = true;
            break;
        }
        if (extracted)
            level = 1;
        else
            ++level;
    }
    return clusters;
}

int PriSpectrum::bin_of(double tau) const {
    if (tau < tau_min || tau > tau_max) return -1;
    int b = static_cast<int>((tau - tau_min) / bin_width());
    if (b == bins) --b;  // tau == tau_max closes the last bin
    return b;
}

PriSpectrum pri_transform(const std::vector<double>& toas, double tau_min, double tau_max,
                          int bins) {
    if (toas.size() < 2) throw std::invalid_argument("pri_transform: need at least 2 pulses");
    if (!(tau_max > tau_min) || !(tau_min >= 0.0) || bins < 1)
        throw std::invalid_argument("pri_transform: degenerate tau range");

    PriSpectrum spec;
    spec.tau_min = tau_min;
    spec.tau_max = tau_max;
    spec.bins = bins;
    spec.accumulator.assign(bins, {0.0, 0.0});

    constexpr double kTwoPi = 6.283185307179586476925286766559;
    for (size_t n = 0; n + 1 < toas.size(); ++n) {
        for (size_t m = n + 1; m < toas.size(); ++m) {
            const double tau = toas[m] - toas[n];
            if (tau > tau_max) break;  // TOAs sorted
            if (tau < tau_min || tau <= 0.0) continue;
            const int b = spec.bin_of(tau);
            if (b < 0) continue;
            const double phase = kTwoPi * toas[n] / tau;
            spec.accumulator[b] += std::complex<double>(std::cos(phase), std::sin(phase));
        }
    }
    spec.magnitude.resize(bins);
    for (int b = 0; b < bins; ++b) spec.magnitude[b] = std::abs(spec.accumulator[b]);
    return spec;
}

std::vector<int> pritran_deinterleave(const std::vector<double>& toas,
                                      const PriTranConfig& config) {
    const int n = static_cast<int>(toas.size());
    std::vector<int> clusters(n, 0);
    if (n < 2) return clusters;

    const auto spec = pri_transform(toas, config.tau_min, config.tau_max, config.bins);
    const double span = toas.back() - toas.front();

    struct Peak {
        double tau;
        double strength;  // magnitude over ideal height
    };
    std::vector<Peak> peaks;
    for (int b = 0; b < spec.bins; ++b) {
        const double mag = spec.magnitude[b];
        if (b > 0 && spec.magnitude[b - 1] > mag) continue;
        if (b + 1 < spec.bins && spec.magnitude[b + 1] > mag) continue;
        const double tau = spec.bin_center(b);
        const double ideal = std::max(1.0, span / tau);
        if (mag <= config.peak_fraction * ideal) continue;

        // centroid refinement over the peak and its neighbours
        double wsum = mag, tsum = mag * tau;
        if (b > 0) {
            wsum += spec.magnitude[b - 1];
            tsum += spec.magnitude[b - 1] * spec.bin_center(b - 1);
        }
        if (b + 1 < spec.bins) {
            wsum += spec.magnitude[b + 1];
            tsum += spec.magnitude[b + 1] * spec.bin_center(b + 1);
        }
        peaks.push_back({tsum / wsum, mag / ideal});
    }
    std::stable_sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) {
        if (a.strength != b.strength) return a.strength > b.strength;
        return a.tau < b.tau;
    });

    std::vector<char> claimed(n, 0);
    int next_cluster = 1;
    for (const Peak& peak : peaks) {
        auto chains = sequence_search(toas, claimed, peak.tau, config.search);
        if (chains.empty()) continue;
        const int id = next_cluster++;
        for (const auto& chain : chains)
            for (int idx : chain) {
                clusters[idx] = id;
                claimed[idx] = 1;
            }
    }
    return clusters;
}

ClusterAssignment assign_cluster_labels(const std::vector<int>& cluster_ids,
                                        const std::vector<int>& truth_labels, int num_classes) {
    if (cluster_ids.size() != truth_labels.size())
        throw std::invalid_argument("assign_cluster_labels: length mismatch");
    if (num_classes < 1 || num_classes > 24)
        throw std::invalid_argument("assign_cluster_labels: unsupported class count");

    int max_cluster = 0;
    for (int c : cluster_ids) {
        if (c < 0) throw std::invalid_argument("assign_cluster_labels: negative cluster id");
        max_cluster = std::max(max_cluster, c);
    }
    const int n_clusters = max_cluster + 1;  // id 0 = residual cluster
    const int noise_class = num_classes;
    const int n_targets = num_classes - 1;

    // contingency[cluster][class-1]
    std::vector<std::vector<long>> cont(n_clusters, std::vector<long>(num_classes, 0));
    for (size_t i = 0; i < cluster_ids.size(); ++i) {
        const int truth = truth_labels[i];
        if (truth < 1 || truth > num_classes)
            throw std::invalid_argument("assign_cluster_labels: truth label out of range");
        ++cont[cluster_ids[i]][truth - 1];
    }

    // dp over clusters with a bitmask of used target classes; unassigned
    // clusters fall back to the noise class
    const int masks = 1 << n_targets;
    constexpr long kNeg = -1;
    std::vector<std::vector<long>> dp(n_clusters + 1, std::vector<long>(masks, kNeg));
    std::vector<std::vector<int>> choice(n_clusters, std::vector<int>(masks, -1));
    dp[0][0] = 0;
    for (int cl = 0; cl < n_clusters; ++cl) {
        for (int mask = 0; mask < masks; ++mask) {
            if (dp[cl][mask] < 0) continue;
            // noise fallback
            if (dp[cl][mask] + cont[cl][noise_class - 1] > dp[cl + 1][mask]) {
                dp[cl + 1][mask] = dp[cl][mask] + cont[cl][noise_class - 1];
                choice[cl][mask] = noise_class;
            }
            for (int t = 0; t < n_targets; ++t) {
                if (mask & (1 << t)) continue;
                const int next = mask | (1 << t);
                if (dp[cl][mask] + cont[cl][t] > dp[cl + 1][next]) {
                    dp[cl + 1][next] = dp[cl][mask] + cont[cl][t];
                    choice[cl][next] = t + 1;
                }
            }
        }
    }

    int best_mask = 0;
    for (int mask = 1; mask < masks; ++mask)
        if (dp[n_clusters][mask] > dp[n_clusters][best_mask]) best_mask = mask;

    ClusterAssignment out;
    out.cluster_to_class.assign(n_clusters, noise_class);
    out.matched = dp[n_clusters][best_mask];
    for (int cl = n_clusters - 1, mask = best_mask; cl >= 0; --cl) {
        const int picked = choice[cl][mask];
        out.cluster_to_class[cl] = picked;
        if (picked != noise_class) mask &= ~(1 << (picked - 1));
    }

    out.labels.resize(cluster_ids.size());
    for (size_t i = 0; i < cluster_ids.size(); ++i)
        out.labels[i] = out.cluster_to_class[cluster_ids[i]];
    return out;
}

}  // namespace deint
