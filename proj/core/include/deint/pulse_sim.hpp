// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <vector>

#include "deint/rng.hpp"
#include "deint/scenario.hpp"

namespace deint {

/// One pulse descriptor record. `pa` holds a normalized linear voltage while
/// a stream is being assembled and decibels once measurement noise has been
/// applied (the final, user-visible form).
struct Pulse {
    double toa = 0.0;
    double pw = 0.0;
    double rf = 0.0;
    double pa = 0.0;
    int label = 0;
};

struct PulseStream {
    std::vector<Pulse> pulses;
    /// Which second channel the generating scenario modeled; None when the
    /// stream came from a file and the provenance is unknown.
    Channel second_channel = Channel::None;

    size_t size() const { return pulses.size(); }
    bool empty() const { return pulses.empty(); }
};

/// PRI value of the interval following pulse n (Constant / dwell-switch /
/// staggered table lookup).
double pri_at(const EmitterInstance& inst, long n);
double rf_at(const EmitterInstance& inst, long n);

std::vector<double> gen_pri_sequence(const EmitterInstance& inst, long count);
std::vector<double> gen_rf_sequence(const EmitterInstance& inst, long count);

/// PW = PRI * DC elementwise; groups coincide with PRI groups by construction.
std::vector<double> gen_pw_sequence(const std::vector<double>& pri_seq, const EmitterInstance& inst);

/// Linear normalized voltages (not dB; the dB conversion happens inside
/// apply_measurement_noise). `amp_norm` is scenario_max_amplitude().
std::vector<double> gen_pa_sequence(const std::vector<double>& toas, const EmitterInstance& inst,
                                    double amp_norm);

/// Single noiseless emitter train over [0, window_end]. Throws if the window
/// yields fewer than two pulses.
PulseStream synthesize_train(const EmitterInstance& inst, double window_end, double amp_norm);

/// Drops each target pulse independently with probability rho_l. Pulses
/// labeled noise_class are never dropped.
void apply_pulse_loss(PulseStream& stream, double rho_l, int noise_class, Rng& rng);

/// Draws round(rho_n * mean per-emitter count) noise pulses, TOA uniform over
/// the window, channels per the scenario's noise rules.
std::vector<Pulse> inject_noise_pulses(const std::vector<PulseStream>& target_streams, double rho_n,
                                       const NoiseModel& model, int noise_class, double window_end,
                                       Rng& rng);

/// Perturbs TOA/PW/RF with N(0, 0.1*scale) and the PA voltage with
/// N(0, 0.003*scale), then converts PA to dB (10*log10, floor 1e-6).
/// scale = 0 adds nothing but still performs the dB conversion.
void apply_measurement_noise(PulseStream& stream, Rng& rng, double scale = 1.0);

struct AssembleOptions {
    std::optional<double> rho_l;      // override the scenario's value
    std::optional<double> rho_n;
    double measurement_noise = 1.0;   // scale factor; 0 = noiseless test mode
};

struct AssembleResult {
    PulseStream stream;                     // exactly N pulses, TOA-sorted, PA in dB
    std::vector<EmitterInstance> instances; // what each emitter actually transmitted
    double window_end = 0.0;
};

/// Full pipeline: sample instances, synthesize trains, lose pulses, inject
/// noise, merge, measure, truncate to N. Deterministic in (scenario, seed).
AssembleResult assemble_stream(const ScenarioSpec& scenario, std::uint64_t seed,
                               const AssembleOptions& options = {});

inline constexpr double kMeasurementSigmaTime = 0.1;   // TOA / PW / RF
inline constexpr double kMeasurementSigmaPa = 0.003;   // normalized PA voltage
inline constexpr double kPaVoltageFloor = 1e-6;

}  // namespace deint
