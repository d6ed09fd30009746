// SPDX-License-Identifier: Apache-2.0
#include "deint/features.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace deint {

std::vector<double> compute_dtoa(const std::vector<double>& toas) {
    if (toas.empty()) throw std::invalid_argument("compute_dtoa: empty TOA list");
    std::vector<double> dtoa(toas.size());
    dtoa[0] = 0.0;
    for (size_t n = 1; n < toas.size(); ++n) {
        if (toas[n] < toas[n - 1])
            throw std::invalid_argument("compute_dtoa: decreasing TOA at index " +
                                        std::to_string(n));
        dtoa[n] = toas[n] - toas[n - 1];
    }
    return dtoa;
}

FeatureSequence build_features(const PulseStream& stream, Channel channel) {
    if (stream.second_channel != Channel::None && channel != Channel::None &&
        channel != stream.second_channel)
        throw std::runtime_error("build_features: requested channel " + to_string(channel) +
                                 " but the stream models " + to_string(stream.second_channel));

    const long n = static_cast<long>(stream.size());
    if (n == 0) throw std::invalid_argument("build_features: empty stream");

    std::vector<double> toas(n);
    for (long i = 0; i < n; ++i) toas[i] = stream.pulses[i].toa;
    const auto dtoa = compute_dtoa(toas);

    FeatureSequence seq;
    const long rows = channel == Channel::None ? 1 : 2;
    seq.channels.resize(rows, n);
    seq.labels.resize(n);
    for (long i = 0; i < n; ++i) {
        seq.channels(0, i) = dtoa[i];
        seq.labels[i] = stream.pulses[i].label;
        if (rows == 2) {
            const Pulse& p = stream.pulses[i];
            switch (channel) {
                case Channel::Pw: seq.channels(1, i) = p.pw; break;
                case Channel::Rf: seq.channels(1, i) = p.rf; break;
                case Channel::Pa: seq.channels(1, i) = p.pa; break;
                case Channel::None: break;
            }
        }
    }
    return seq;
}

Normalizer fit_normalizer(const std::vector<FeatureSequence>& train_set) {
    if (train_set.empty()) throw std::invalid_argument("fit_normalizer: empty training set");
    const long rows = train_set.front().num_channels();

    Eigen::VectorXd sum = Eigen::VectorXd::Zero(rows);
    Eigen::VectorXd sum_sq = Eigen::VectorXd::Zero(rows);
    long count = 0;
    for (const auto& seq : train_set) {
        if (seq.num_channels() != rows)
            throw std::invalid_argument("fit_normalizer: inconsistent channel counts");
        sum += seq.channels.rowwise().sum();
        sum_sq += seq.channels.array().square().matrix().rowwise().sum();
        count += seq.length();
    }

    Normalizer norm;
    norm.mean = sum / static_cast<double>(count);
    norm.stddev.resize(rows);
    for (long r = 0; r < rows; ++r) {
        const double var = sum_sq(r) / static_cast<double>(count) - norm.mean(r) * norm.mean(r);
        if (!(var > 0.0))
            throw std::runtime_error("fit_normalizer: channel " + std::to_string(r) +
                                     " has zero variance");
        norm.stddev(r) = std::sqrt(var);
    }
    return norm;
}

void normalize_in_place(FeatureSequence& seq, const Normalizer& norm) {
    if (seq.num_channels() != norm.mean.size())
        throw std::invalid_argument("normalize: channel count mismatch");
    for (long r = 0; r < seq.num_channels(); ++r)
        seq.channels.row(r) =
            (seq.channels.row(r).array() - norm.mean(r)) / norm.stddev(r);
}

void denormalize_in_place(FeatureSequence& seq, const Normalizer& norm) {
    if (seq.num_channels() != norm.mean.size())
        throw std::invalid_argument("denormalize: channel count mismatch");
    for (long r = 0; r < seq.num_channels(); ++r)
        seq.channels.row(r) = seq.channels.row(r).array() * norm.stddev(r) + norm.mean(r);
}

namespace {

constexpr const char* kPdwHeader = "toa,dtoa,pw,rf,pa,label";

void append_value(std::string& out, double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    out += buf;
}

double parse_field(const std::string& tok, int line) {
    size_t pos = 0;
    double v = 0;
    try {
        v = std::stod(tok, &pos);
    } catch (const std::exception&) {
        throw std::runtime_error("pdw line " + std::to_string(line) + ": bad number '" + tok + "'");
    }
    if (pos != tok.size())
        throw std::runtime_error("pdw line " + std::to_string(line) + ": bad number '" + tok + "'");
    return v;
}

}  // namespace

std::string format_pdw(const std::vector<PulseStream>& streams) {
    std::string out = kPdwHeader;
    out += '\n';
    for (size_t s = 0; s < streams.size(); ++s) {
        if (s > 0) out += '\n';
        const auto& pulses = streams[s].pulses;
        double prev_toa = 0.0;
        for (size_t i = 0; i < pulses.size(); ++i) {
            const Pulse& p = pulses[i];
            const double dtoa = i == 0 ? 0.0 : p.toa - prev_toa;
            prev_toa = p.toa;
            append_value(out, p.toa); out += ',';
            append_value(out, dtoa);  out += ',';
            append_value(out, p.pw);  out += ',';
            append_value(out, p.rf);  out += ',';
            append_value(out, p.pa);  out += ',';
            out += std::to_string(p.label);
            out += '\n';
        }
    }
    return out;
}

std::vector<PulseStream> parse_pdw(const std::string& text) {
    std::istringstream iss(text);
    std::string line;
    int line_no = 0;

    if (!std::getline(iss, line) || line != kPdwHeader)
        throw std::runtime_error("pdw line 1: expected header '" + std::string(kPdwHeader) + "'");
    line_no = 1;

    std::vector<PulseStream> streams;
    PulseStream current;
    auto flush = [&]() {
        if (!current.pulses.empty()) {
            streams.push_back(std::move(current));
            current = PulseStream{};
        }
    };

    while (std::getline(iss, line)) {
        ++line_no;
        if (line.empty()) {
            flush();
            continue;
        }
        std::vector<std::string> fields;
        size_t start = 0;
        while (true) {
            const size_t comma = line.find(',', start);
            fields.push_back(line.substr(start, comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (fields.size() != 6)
            throw std::runtime_error("pdw line " + std::to_string(line_no) + ": expected 6 fields, got " +
                                     std::to_string(fields.size()));
        Pulse p;
        p.toa = parse_field(fields[0], line_no);
        (void)parse_field(fields[1], line_no);  // dtoa is derived; validated via toa order
        p.pw = parse_field(fields[2], line_no);
        p.rf = parse_field(fields[3], line_no);
        p.pa = parse_field(fields[4], line_no);
        const double label = parse_field(fields[5], line_no);
        p.label = static_cast<int>(label);
        if (p.label < 1 || static_cast<double>(p.label) != label)
            throw std::runtime_error("pdw line " + std::to_string(line_no) +
                                     ": label must be a positive integer");
        if (!current.pulses.empty() && p.toa < current.pulses.back().toa)
            throw std::runtime_error("pdw line " + std::to_string(line_no) +
                                     ": TOA not non-decreasing");
        current.pulses.push_back(p);
    }
    flush();
    return streams;
}

void write_pdw_file(const std::string& path, const std::vector<PulseStream>& streams) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    const std::string text = format_pdw(streams);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<PulseStream> read_pdw_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_pdw(buf.str());
}

}  // namespace deint
