// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <vector>

namespace deint {

/// Level-c TOA difference histogram over [0, tau_max), fixed-width bins.
struct DtoaHistogram {
    int level = 1;
    double bin_width = 1.0;
    double tau_max = 0.0;
    std::vector<long> counts;
    long pulse_count = 0;  // pulses the differences were taken from

    double bin_center(size_t b) const { return (static_cast<double>(b) + 0.5) * bin_width; }
};

/// Histogram of toa[n + level] - toa[n]. Throws when fewer than level+1
/// pulses are given.
DtoaHistogram sdif_histogram(const std::vector<double>& toas, int level, double bin_width,
                             double tau_max);

/// Bins whose count exceeds E(tau) = x * (N - c) * exp(-tau / (k * N * b)).
/// Returned as candidate PRIs (bin centers), strongest exceedance first.
std::vector<double> sdif_threshold(const DtoaHistogram& hist, double x, double k);

struct SequenceSearchConfig {
    double tolerance = 0.5;  // 5 sigma of the TOA measurement noise
    int max_skips = 3;       // missed pulses bridged per hop
    int min_chain = 5;       // shorter chains are released
};

/// Greedy chain extraction at a fixed PRI. `claimed[i] != 0` marks pulses that
/// are unavailable. Returns the accepted chains as index lists; the caller
/// claims them.
std::vector<std::vector<int>> sequence_search(const std::vector<double>& toas,
                                              const std::vector<char>& claimed, double pri,
                                              const SequenceSearchConfig& config);

struct SdifConfig {
    double bin_width = 1.0;
    double tau_max = 1500.0;
    double threshold_x = 0.18;  // grid-searched default, see tools/tune notes
    double threshold_k = 1.0;
    int max_level = 5;
    SequenceSearchConfig search;
};

/// Full SDIF loop: histogram levels c = 1, 2, ... with restart after every
/// successful extraction. Returns one cluster id per pulse; 0 is the residual
/// (noise) cluster.
std::vector<int> sdif_deinterleave(const std::vector<double>& toas, const SdifConfig& config = {});

/// Complex PRI spectrum: every pulse pair (n, m) with tau = toa[m] - toa[n]
/// inside the bin range accumulates exp(2*pi*i*toa[n]/tau) into tau's bin.
/// Subharmonics of true PRIs cancel by phase.
struct PriSpectrum {
    double tau_min = 0.0, tau_max = 0.0;
    int bins = 0;
    std::vector<std::complex<double>> accumulator;
    std::vector<double> magnitude;

    double bin_width() const { return (tau_max - tau_min) / bins; }
    double bin_center(int b) const { return tau_min + (b + 0.5) * bin_width(); }
    int bin_of(double tau) const;
};

PriSpectrum pri_transform(const std::vector<double>& toas, double tau_min, double tau_max,
                          int bins);

struct PriTranConfig {
    double tau_min = 2.0;
    double tau_max = 1500.0;
    int bins = 1498;
    /// Peak gate as a fraction of the ideal coherent height (TOA span / tau).
    double peak_fraction = 0.4;
    SequenceSearchConfig search;
};

/// Spectrum peaks in descending (normalized) strength, one sequence-search
/// pass each. Returns cluster ids, 0 = residual.
std::vector<int> pritran_deinterleave(const std::vector<double>& toas,
                                      const PriTranConfig& config = {});

struct ClusterAssignment {
    std::vector<int> labels;            // per pulse, 1-based class ids
    std::vector<int> cluster_to_class;  // [cluster id] -> class; index 0 is the residual cluster
    long matched = 0;                   // pulses where assigned class == truth
};

/// Optimal one-to-one assignment of clusters to target classes (exhaustive
/// over class subsets); clusters left unmatched fall back to the noise class
/// (class `num_classes`).
ClusterAssignment assign_cluster_labels(const std::vector<int>& cluster_ids,
                                        const std::vector<int>& truth_labels, int num_classes);

}  // namespace deint
