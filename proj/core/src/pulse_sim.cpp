// SPDX-License-Identifier: Apache-2.0
#include "deint/pulse_sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace deint {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// wraps an angle (radians) into (-pi, pi]
double wrap_angle(double angle) {
    double r = std::fmod(angle, kTwoPi);
    if (r < 0.0) r += kTwoPi;
    if (r > kTwoPi / 2.0) r -= kTwoPi;
    return r;
}

double sinc_envelope(double x) {
    if (x == 0.0) return 1.0;
    return std::abs(std::sin(x) / x);
}

}  // namespace

double pri_at(const EmitterInstance& inst, long n) {
    const long table = static_cast<long>(inst.pri_values.size());
    switch (inst.pri_mode) {
        case PriMode::Constant:
            return inst.pri_values[0];
        case PriMode::DwellSwitch:
            return inst.pri_values[(n / inst.pri_group_j) % table];
        case PriMode::Staggered:
            return inst.pri_values[n % table];
    }
    return inst.pri_values[0];
}

double rf_at(const EmitterInstance& inst, long n) {
    const long table = static_cast<long>(inst.rf_values.size());
    switch (inst.rf_mode) {
        case RfMode::Constant:
            return inst.rf_values[0];
        case RfMode::AgilePulses:
            return inst.rf_values[n % table];
        case RfMode::AgileGroups:
            return inst.rf_values[(n / inst.rf_group_o) % table];
    }
    return inst.rf_values[0];
}

std::vector<double> gen_pri_sequence(const EmitterInstance& inst, long count) {
    if (count < 1) throw std::invalid_argument("gen_pri_sequence: count must be >= 1");
    std::vector<double> seq(count);
    for (long n = 0; n < count; ++n) seq[n] = pri_at(inst, n);
    return seq;
}

std::vector<double> gen_rf_sequence(const EmitterInstance& inst, long count) {
    if (count < 1) throw std::invalid_argument("gen_rf_sequence: count must be >= 1");
    std::vector<double> seq(count);
    for (long n = 0; n < count; ++n) seq[n] = rf_at(inst, n);
    return seq;
}

std::vector<double> gen_pw_sequence(const std::vector<double>& pri_seq,
                                    const EmitterInstance& inst) {
    if (pri_seq.empty()) throw std::invalid_argument("gen_pw_sequence: empty PRI sequence");
    std::vector<double> seq(pri_seq.size());
    for (size_t n = 0; n < pri_seq.size(); ++n) seq[n] = pri_seq[n] * inst.duty_cycle;
    return seq;
}

std::vector<double> gen_pa_sequence(const std::vector<double>& toas, const EmitterInstance& inst,
                                    double amp_norm) {
    std::vector<double> seq(toas.size());
    switch (inst.pa_mode) {
        case PaMode::NonScanning: {
            const double v = inst.pa_base / amp_norm;
            std::fill(seq.begin(), seq.end(), v);
            break;
        }
        case PaMode::MechanicalScan: {
            const double base = inst.pa_base / amp_norm;
            for (size_t n = 0; n < toas.size(); ++n) {
                const double theta = wrap_angle(kTwoPi * toas[n] / inst.scan_period);
                seq[n] = base * sinc_envelope(inst.beamwidth_a * theta);
            }
            break;
        }
        case PaMode::PhaseScan: {
            const long s = static_cast<long>(inst.pa_levels.size());
            const long r = inst.pa_pulses_per_position;
            for (size_t n = 0; n < toas.size(); ++n)
                seq[n] = inst.pa_levels[(static_cast<long>(n) / r) % s] / amp_norm;
            break;
        }
    }
    return seq;
}

PulseStream synthesize_train(const EmitterInstance& inst, double window_end, double amp_norm) {
    std::vector<double> toas;
    double toa = inst.start_offset;
    long n = 0;
    while (toa <= window_end) {
        toas.push_back(toa);
        toa += pri_at(inst, n);
        ++n;
    }
    if (toas.size() < 2)
        throw std::runtime_error("synthesize_train: window too small to emit at least 2 pulses");

    const auto pa = gen_pa_sequence(toas, inst, amp_norm);
    PulseStream stream;
    stream.pulses.resize(toas.size());
    for (size_t i = 0; i < toas.size(); ++i) {
        Pulse& p = stream.pulses[i];
        p.toa = toas[i];
        p.pw = pri_at(inst, static_cast<long>(i)) * inst.duty_cycle;
        p.rf = rf_at(inst, static_cast<long>(i));
        p.pa = pa[i];
        p.label = inst.label;
    }
    return stream;
}

void apply_pulse_loss(PulseStream& stream, double rho_l, int noise_class, Rng& rng) {
    if (rho_l < 0.0 || rho_l >= 1.0)
        throw std::invalid_argument("apply_pulse_loss: rho_l out of [0,1)");
    if (rho_l == 0.0) return;
    std::vector<Pulse> kept;
    kept.reserve(stream.pulses.size());
    for (const Pulse& p : stream.pulses) {
        if (p.label != noise_class && rng.bernoulli(rho_l)) continue;
        kept.push_back(p);
    }
    stream.pulses = std::move(kept);
}

namespace {

double draw_noise_value(const NoiseRule& rule, double span_lo, double span_hi, Rng& rng) {
    switch (rule.kind) {
        case NoiseRule::Kind::Uniform:
            return rng.uniform(rule.range.lo, rule.range.hi);
        case NoiseRule::Kind::Product:
            return rng.uniform(rule.range.lo, rule.range.hi) *
                   rng.uniform(rule.range2.lo, rule.range2.hi);
        case NoiseRule::Kind::SpanOfTargets:
            return rng.uniform(span_lo, span_hi);
    }
    return 0.0;
}

}  // namespace

std::vector<Pulse> inject_noise_pulses(const std::vector<PulseStream>& target_streams,
                                       double rho_n, const NoiseModel& model, int noise_class,
                                       double window_end, Rng& rng) {
    if (rho_n < 0.0) throw std::invalid_argument("inject_noise_pulses: rho_n must be >= 0");
    if (target_streams.empty() || rho_n == 0.0) return {};

    size_t total = 0;
    for (const auto& s : target_streams) total += s.size();
    const double mean_per_emitter = static_cast<double>(total) / target_streams.size();
    const long count = std::lround(rho_n * mean_per_emitter);
    if (count <= 0) return {};

    // spans of the realized target values, for the span-of-targets rules
    double pw_lo = 1e300, pw_hi = -1e300;
    double rf_lo = 1e300, rf_hi = -1e300;
    double pa_lo = 1e300, pa_hi = -1e300;
    for (const auto& s : target_streams)
        for (const Pulse& p : s.pulses) {
            pw_lo = std::min(pw_lo, p.pw); pw_hi = std::max(pw_hi, p.pw);
            rf_lo = std::min(rf_lo, p.rf); rf_hi = std::max(rf_hi, p.rf);
            pa_lo = std::min(pa_lo, p.pa); pa_hi = std::max(pa_hi, p.pa);
        }
    if (total == 0) {
        pw_lo = pw_hi = 1.0;
        rf_lo = rf_hi = 1500.0;
        pa_lo = kPaVoltageFloor;
        pa_hi = 1.0;
    }

    std::vector<Pulse> noise(count);
    for (Pulse& p : noise) {
        p.toa = rng.uniform(0.0, window_end);
        p.pw = draw_noise_value(model.pw, pw_lo, pw_hi, rng);
        p.rf = draw_noise_value(model.rf, rf_lo, rf_hi, rng);
        p.pa = draw_noise_value(model.pa, pa_lo, pa_hi, rng);
        p.label = noise_class;
    }
    return noise;
}

void apply_measurement_noise(PulseStream& stream, Rng& rng, double scale) {
    for (Pulse& p : stream.pulses) {
        if (scale != 0.0) {
            p.toa = std::max(0.0, p.toa + rng.gaussian(0.0, kMeasurementSigmaTime * scale));
            p.pw += rng.gaussian(0.0, kMeasurementSigmaTime * scale);
            p.rf += rng.gaussian(0.0, kMeasurementSigmaTime * scale);
            p.pa += rng.gaussian(0.0, kMeasurementSigmaPa * scale);
        }
        p.pa = 10.0 * std::log10(std::max(p.pa, kPaVoltageFloor));
    }
}

namespace {

void sort_by_toa(std::vector<Pulse>& pulses) {
    std::stable_sort(pulses.begin(), pulses.end(), [](const Pulse& a, const Pulse& b) {
        if (a.toa != b.toa) return a.toa < b.toa;
        return a.label < b.label;
    });
}

}  // namespace

AssembleResult assemble_stream(const ScenarioSpec& scenario, std::uint64_t seed,
                               const AssembleOptions& options) {
    const double rho_l = options.rho_l.value_or(scenario.rho_l);
    const double rho_n = options.rho_n.value_or(scenario.rho_n);
    if (rho_l < 0.0 || rho_l >= 1.0) throw std::invalid_argument("assemble_stream: rho_l out of [0,1)");
    if (rho_n < 0.0) throw std::invalid_argument("assemble_stream: rho_n must be >= 0");

    const Rng root(seed);
    const double amp_norm = scenario_max_amplitude(scenario);
    const int d = scenario.num_emitters();
    const long n_target = scenario.stream_length;

    AssembleResult result;
    result.instances.reserve(d);
    for (int i = 0; i < d; ++i) {
        Rng r = root.substream(1, static_cast<std::uint64_t>(i));
        result.instances.push_back(sample_emitter_instance(scenario.emitters[i], scenario, r));
    }

    // first-guess window so the merged, impaired stream holds ~N pulses
    double rate = 0.0;
    double max_mean_pri = 0.0;
    for (const auto& inst : result.instances) {
        double mean_pri = 0.0;
        for (double v : inst.pri_values) mean_pri += v;
        mean_pri /= static_cast<double>(inst.pri_values.size());
        rate += (1.0 - rho_l) / mean_pri;
        max_mean_pri = std::max(max_mean_pri, mean_pri);
    }
    const double total_rate = rate * (1.0 + rho_n / d);
    double window = 1.12 * static_cast<double>(n_target) / total_rate + 2.0 * max_mean_pri;

    constexpr int kMaxAttempts = 12;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt, window *= 1.5) {
        std::vector<PulseStream> trains(d);
        for (int i = 0; i < d; ++i) {
            trains[i] = synthesize_train(result.instances[i], window, amp_norm);
            Rng loss_rng = root.substream(3, static_cast<std::uint64_t>(i));
            apply_pulse_loss(trains[i], rho_l, scenario.noise_class(), loss_rng);
        }
        Rng noise_rng = root.substream(4);
        std::vector<Pulse> noise = inject_noise_pulses(trains, rho_n, scenario.noise,
                                                       scenario.noise_class(), window, noise_rng);

        std::vector<Pulse> merged;
        merged.reserve(noise.size() + 4096);
        for (auto& t : trains)
            merged.insert(merged.end(), t.pulses.begin(), t.pulses.end());
        merged.insert(merged.end(), noise.begin(), noise.end());
        if (static_cast<long>(merged.size()) < n_target) continue;

        sort_by_toa(merged);
        PulseStream stream;
        stream.pulses = std::move(merged);
        stream.second_channel = scenario.second_channel;
        Rng meas_rng = root.substream(5);
        apply_measurement_noise(stream, meas_rng, options.measurement_noise);
        sort_by_toa(stream.pulses);
        stream.pulses.resize(n_target);
        result.stream = std::move(stream);
        result.window_end = window;
        return result;
    }
    throw std::runtime_error(
        "assemble_stream: cannot reach the requested stream length (PRIs too long?)");
}

}  // namespace deint
