// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "deint/rng.hpp"

namespace deint {

/// Closed interval [lo, hi]. A collapsed interval (lo == hi) is legal and
/// samples to exactly lo.
struct Range {
    double lo = 0.0;
    double hi = 0.0;

    bool degenerate() const { return lo == hi; }
    double mid() const { return 0.5 * (lo + hi); }
    double width() const { return hi - lo; }
};

struct IntRange {
    long lo = 0;
    long hi = 0;
};

enum class PriMode { Constant, DwellSwitch, Staggered };
enum class RfMode { Constant, AgilePulses, AgileGroups };
enum class PwMode { Constant, DwellSwitch };
enum class PaMode { NonScanning, MechanicalScan, PhaseScan };

/// Which pulse parameter rides alongside DTOA as the second input channel.
/// `None` feeds the network DTOA alone (single-channel mode).
enum class Channel { Pw, Rf, Pa, None };

std::string to_string(Channel c);
std::string to_string(PriMode m);
std::string to_string(RfMode m);
std::string to_string(PaMode m);

struct PriModulation {
    PriMode mode = PriMode::Constant;
    Range value_range;      // time units
    IntRange j{1, 1};       // pulses per group (dwell & switch)
    IntRange k{1, 1};       // groups per period (dwell & switch)
    IntRange l{1, 1};       // values per period (staggered)
};

struct RfModulation {
    RfMode mode = RfMode::Constant;
    Range value_range;          // frequency units
    IntRange m{1, 1};           // values per period (agile among pulses)
    std::optional<long> o;      // pulses per group; unset means "inherit PRI J"
    IntRange p{1, 1};           // groups per period (agile among groups)
};

struct PwModulation {
    PwMode mode = PwMode::Constant;
    Range dc{0.0, 0.0};  // duty cycle; PW = PRI * DC elementwise
};

struct PaModulation {
    PaMode mode = PaMode::NonScanning;
    Range base_amplitude{1000.0, 2000.0};  // linear, arbitrary units
    double beamwidth_a = 11.5;             // sinc main-lobe coefficient
    double scan_period = 1e7;              // time units per rotation
    long s = 1;                            // beam positions per period
    long t = 1;                            // PRI groups per beam position
};

struct EmitterSpec {
    int label = 1;  // class index, 1-based
    PriModulation pri;
    std::optional<RfModulation> rf;
    std::optional<PwModulation> pw;
    std::optional<PaModulation> pa;
    std::optional<Range> start_offset_range;  // default: U(0, mean PRI)
};

/// How a channel of a random noise pulse is drawn.
struct NoiseRule {
    enum class Kind {
        Uniform,       // value ~ U(range)
        Product,       // value = c * d, c ~ U(range), d ~ U(range2), per pulse
        SpanOfTargets  // value ~ U(min, max) over target values in the stream
    };
    Kind kind = Kind::Uniform;
    Range range{0.0, 1.0};
    Range range2{0.0, 1.0};
};

struct NoiseModel {
    NoiseRule pw{NoiseRule::Kind::Product, {500.0, 1000.0}, {0.01, 0.05}};
    NoiseRule rf{NoiseRule::Kind::Uniform, {1000.0, 2000.0}, {}};
    NoiseRule pa{NoiseRule::Kind::SpanOfTargets, {}, {}};
};

struct ScenarioSpec {
    std::vector<EmitterSpec> emitters;
    double rho_l = 0.0;        // target pulse-loss probability
    double rho_n = 0.0;        // noise-to-target ratio
    long stream_length = 1000; // N
    Channel second_channel = Channel::Pw;
    NoiseModel noise;
    std::uint64_t seed = 0;

    int num_emitters() const { return static_cast<int>(emitters.size()); }
    int noise_class() const { return num_emitters() + 1; }
    int num_classes() const { return num_emitters() + 1; }
};

/// Every range of an EmitterSpec collapsed to concrete values for one
/// simulated transmission.
struct EmitterInstance {
    int label = 1;

    PriMode pri_mode = PriMode::Constant;
    std::vector<double> pri_values;  // K entries (D&S), L (staggered), 1 (constant)
    long pri_group_j = 1;            // pulses per group (D&S); 1 otherwise

    RfMode rf_mode = RfMode::Constant;
    std::vector<double> rf_values;
    long rf_group_o = 1;

    double duty_cycle = 0.03;

    PaMode pa_mode = PaMode::NonScanning;
    double pa_base = 1500.0;         // linear boresight / level amplitude
    std::vector<double> pa_levels;   // per beam position (phase scan), linear
    double beamwidth_a = 11.5;
    double scan_period = 1e7;
    long pa_pulses_per_position = 1; // R = T * J

    double start_offset = 0.0;
};

struct ParseError : std::runtime_error {
    ParseError(int line, int column, const std::string& what_arg);
    int line;
    int column;
};

struct SemanticError : std::runtime_error {
    explicit SemanticError(const std::string& field, const std::string& what_arg);
    std::string field;
};

/// Parses the line-oriented scenario description (see docs/ or the shipped
/// presets for the grammar). Throws ParseError on malformed text and
/// SemanticError on violated invariants.
ScenarioSpec parse_scenario(const std::string& text);

ScenarioSpec load_scenario_file(const std::string& path);

/// Inverse of parse_scenario up to formatting: parse(serialize(s)) == s.
std::string serialize_scenario(const ScenarioSpec& spec);

/// Collapses every range in `spec` to concrete values. The rng is consumed
/// in a fixed field order, so equal rng states give bit-identical instances.
EmitterInstance sample_emitter_instance(const EmitterSpec& spec, const ScenarioSpec& scenario, Rng& rng);

/// Normalization constant for the PA voltage pipeline: the largest base
/// amplitude any emitter of the scenario can draw.
double scenario_max_amplitude(const ScenarioSpec& spec);

bool operator==(const Range& a, const Range& b);
bool operator==(const IntRange& a, const IntRange& b);
bool operator==(const PriModulation& a, const PriModulation& b);
bool operator==(const RfModulation& a, const RfModulation& b);
bool operator==(const PwModulation& a, const PwModulation& b);
bool operator==(const PaModulation& a, const PaModulation& b);
bool operator==(const EmitterSpec& a, const EmitterSpec& b);
bool operator==(const NoiseRule& a, const NoiseRule& b);
bool operator==(const NoiseModel& a, const NoiseModel& b);
bool operator==(const ScenarioSpec& a, const ScenarioSpec& b);

}  // namespace deint
