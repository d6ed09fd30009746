// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "deint/pulse_sim.hpp"

namespace deint {

/// Network input for one stream: row 0 is DTOA (leading 0), row 1 the second
/// channel. Single-channel mode (Channel::None) has only the DTOA row.
struct FeatureSequence {
    Eigen::MatrixXd channels;  // C_in x N
    std::vector<int> labels;   // N entries, 1-based class ids
    std::string scenario_id;
    std::uint64_t seed = 0;

    long length() const { return channels.cols(); }
    long num_channels() const { return channels.rows(); }
};

/// output[0] = 0, output[n] = toa_n - toa_{n-1}. Throws on decreasing input.
std::vector<double> compute_dtoa(const std::vector<double>& toas);

/// Throws if the stream's modeled channel is known and differs from the
/// requested one. Channel::None builds the 1xN DTOA-only input.
FeatureSequence build_features(const PulseStream& stream, Channel channel);

/// Per-channel z-score statistics estimated on a training split.
struct Normalizer {
    Eigen::VectorXd mean;
    Eigen::VectorXd stddev;
};

Normalizer fit_normalizer(const std::vector<FeatureSequence>& train_set);
void normalize_in_place(FeatureSequence& seq, const Normalizer& norm);
void denormalize_in_place(FeatureSequence& seq, const Normalizer& norm);

/// PDW dataset text format: one `toa,dtoa,pw,rf,pa,label` header line, then
/// one comma-separated row per pulse, a blank line between streams, values at
/// 6 significant digits.
std::string format_pdw(const std::vector<PulseStream>& streams);
std::vector<PulseStream> parse_pdw(const std::string& text);
void write_pdw_file(const std::string& path, const std::vector<PulseStream>& streams);
std::vector<PulseStream> read_pdw_file(const std::string& path);

}  // namespace deint
