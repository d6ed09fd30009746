// SPDX-License-Identifier: Apache-2.0
#include "deint/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace deint {

namespace {

std::string trim(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt_range(const Range& r) {
    if (r.degenerate()) return fmt_double(r.lo);
    return fmt_double(r.lo) + ".." + fmt_double(r.hi);
}

std::string fmt_int_range(const IntRange& r) {
    if (r.lo == r.hi) return std::to_string(r.lo);
    return std::to_string(r.lo) + ".." + std::to_string(r.hi);
}

struct Cursor {
    int line = 0;
};

[[noreturn]] void fail(const Cursor& at, int column, const std::string& msg) {
    throw ParseError(at.line, column, msg);
}

double parse_double(const Cursor& at, const std::string& tok) {
    size_t pos = 0;
    double v = 0;
    try {
        v = std::stod(tok, &pos);
    } catch (const std::exception&) {
        fail(at, 1, "expected a number, got '" + tok + "'");
    }
    if (pos != tok.size()) fail(at, 1, "trailing characters after number '" + tok + "'");
    return v;
}

long parse_long(const Cursor& at, const std::string& tok) {
    size_t pos = 0;
    long v = 0;
    try {
        v = std::stol(tok, &pos);
    } catch (const std::exception&) {
        fail(at, 1, "expected an integer, got '" + tok + "'");
    }
    if (pos != tok.size()) fail(at, 1, "trailing characters after integer '" + tok + "'");
    return v;
}

Range parse_range(const Cursor& at, const std::string& tok) {
    const auto sep = tok.find("..");
    if (sep == std::string::npos) {
        const double v = parse_double(at, tok);
        return Range{v, v};
    }
    Range r;
    r.lo = parse_double(at, trim(tok.substr(0, sep)));
    r.hi = parse_double(at, trim(tok.substr(sep + 2)));
    if (r.lo > r.hi) fail(at, 1, "range lower bound exceeds upper bound in '" + tok + "'");
    return r;
}

IntRange parse_int_range(const Cursor& at, const std::string& tok) {
    const auto sep = tok.find("..");
    if (sep == std::string::npos) {
        const long v = parse_long(at, tok);
        return IntRange{v, v};
    }
    IntRange r;
    r.lo = parse_long(at, trim(tok.substr(0, sep)));
    r.hi = parse_long(at, trim(tok.substr(sep + 2)));
    if (r.lo > r.hi) fail(at, 1, "range lower bound exceeds upper bound in '" + tok + "'");
    return r;
}

NoiseRule parse_noise_rule(const Cursor& at, const std::string& value) {
    std::istringstream iss(value);
    std::string kind;
    iss >> kind;
    NoiseRule rule;
    if (kind == "uniform") {
        std::string r;
        if (!(iss >> r)) fail(at, 1, "uniform noise rule needs a range");
        rule.kind = NoiseRule::Kind::Uniform;
        rule.range = parse_range(at, r);
    } else if (kind == "product") {
        std::string r1, r2;
        if (!(iss >> r1 >> r2)) fail(at, 1, "product noise rule needs two ranges");
        rule.kind = NoiseRule::Kind::Product;
        rule.range = parse_range(at, r1);
        rule.range2 = parse_range(at, r2);
    } else if (kind == "span") {
        rule.kind = NoiseRule::Kind::SpanOfTargets;
    } else {
        fail(at, 1, "unknown noise rule '" + kind + "' (expected uniform|product|span)");
    }
    std::string extra;
    if (iss >> extra) fail(at, 1, "trailing token '" + extra + "' in noise rule");
    return rule;
}

[[noreturn]] void semantic(const std::string& field, const std::string& msg) {
    throw SemanticError(field, msg);
}

void validate_value_range(const std::string& field, const Range& r) {
    if (!(r.lo > 0.0)) semantic(field, field + ": value range must be positive");
    if (r.lo > r.hi) semantic(field, field + ": range lower bound exceeds upper bound");
}

void validate_count(const std::string& field, const IntRange& r) {
    if (r.lo < 1) semantic(field, field + " must be >= 1");
}

void validate_emitter(const EmitterSpec& e, const ScenarioSpec& s, int index) {
    const std::string who = "emitter " + std::to_string(index + 1);
    validate_value_range(who + " pri.range", e.pri.value_range);
    switch (e.pri.mode) {
        case PriMode::Constant:
            break;
        case PriMode::DwellSwitch:
            validate_count(who + " pri.j", e.pri.j);
            validate_count(who + " pri.k", e.pri.k);
            break;
        case PriMode::Staggered:
            validate_count(who + " pri.l", e.pri.l);
            break;
    }

    const int populated = (e.rf ? 1 : 0) + (e.pw ? 1 : 0) + (e.pa ? 1 : 0);
    if (populated != 1)
        semantic(who, who + ": exactly one of rf/pw/pa must be populated");
    const Channel modeled = e.rf ? Channel::Rf : (e.pw ? Channel::Pw : Channel::Pa);
    if (modeled != s.second_channel)
        semantic(who, who + ": modeled channel " + to_string(modeled) +
                          " does not match scenario channel " + to_string(s.second_channel));

    if (e.pw) {
        if (!(e.pw->dc.lo > 0.0) || !(e.pw->dc.hi < 1.0))
            semantic(who + " pw.dc", who + ": duty cycle out of (0,1)");
        if (e.pw->mode == PwMode::DwellSwitch && e.pri.mode != PriMode::DwellSwitch)
            semantic(who + " pw.mode", who + ": dwell-switch PW requires dwell-switch PRI");
    }
    if (e.rf) {
        validate_value_range(who + " rf.range", e.rf->value_range);
        switch (e.rf->mode) {
            case RfMode::Constant:
                break;
            case RfMode::AgilePulses:
                validate_count(who + " rf.m", e.rf->m);
                break;
            case RfMode::AgileGroups:
                validate_count(who + " rf.p", e.rf->p);
                if (e.pri.mode == PriMode::DwellSwitch) {
                    // group size is locked to the PRI's J
                    if (e.rf->o)
                        semantic(who + " rf.o",
                                 who + ": rf.o must be omitted with a dwell-switch PRI (O = J)");
                } else if (!e.rf->o) {
                    semantic(who + " rf.o", who + ": rf.o required when PRI is not dwell-switch");
                } else if (*e.rf->o < 1) {
                    semantic(who + " rf.o", who + ": rf.o must be >= 1");
                }
                break;
        }
    }
    if (e.pa) {
        switch (e.pa->mode) {
            case PaMode::NonScanning:
                validate_value_range(who + " pa.range", e.pa->base_amplitude);
                break;
            case PaMode::MechanicalScan:
                validate_value_range(who + " pa.range", e.pa->base_amplitude);
                if (!(e.pa->beamwidth_a > 0.0)) semantic(who + " pa.a", who + ": pa.a must be > 0");
                if (!(e.pa->scan_period > 0.0))
                    semantic(who + " pa.scan_period", who + ": pa.scan_period must be > 0");
                break;
            case PaMode::PhaseScan:
                validate_value_range(who + " pa.range", e.pa->base_amplitude);
                if (e.pa->s < 1) semantic(who + " pa.s", who + ": pa.s must be >= 1");
                if (e.pa->t < 1) semantic(who + " pa.t", who + ": pa.t must be >= 1");
                break;
        }
    }
    if (e.start_offset_range) {
        if (e.start_offset_range->lo < 0.0 || e.start_offset_range->lo > e.start_offset_range->hi)
            semantic(who + " start", who + ": start offset range must be within [0, inf)");
    }
}

void validate(const ScenarioSpec& s) {
    if (s.emitters.empty()) semantic("emitters", "at least one emitter is required");
    if (s.stream_length < 2) semantic("n", "stream length must be >= 2");
    if (s.rho_l < 0.0 || s.rho_l >= 1.0) semantic("rho_l", "rho_l out of [0,1)");
    if (s.rho_n < 0.0) semantic("rho_n", "rho_n must be >= 0");
    for (size_t i = 0; i < s.emitters.size(); ++i) {
        validate_emitter(s.emitters[i], s, static_cast<int>(i));
        if (s.emitters[i].label != static_cast<int>(i) + 1)
            semantic("label", "emitter labels must be 1..D in file order");
    }
}

}  // namespace

ParseError::ParseError(int line_, int column_, const std::string& what_arg)
    : std::runtime_error("line " + std::to_string(line_) + ":" + std::to_string(column_) + ": " +
                         what_arg),
      line(line_),
      column(column_) {}

SemanticError::SemanticError(const std::string& field_, const std::string& what_arg)
    : std::runtime_error(what_arg), field(field_) {}

std::string to_string(Channel c) {
    switch (c) {
        case Channel::Pw: return "pw";
        case Channel::Rf: return "rf";
        case Channel::Pa: return "pa";
        case Channel::None: return "none";
    }
    return "?";
}

std::string to_string(PriMode m) {
    switch (m) {
        case PriMode::Constant: return "constant";
        case PriMode::DwellSwitch: return "dwell_switch";
        case PriMode::Staggered: return "staggered";
    }
    return "?";
}

std::string to_string(RfMode m) {
    switch (m) {
        case RfMode::Constant: return "constant";
        case RfMode::AgilePulses: return "agile_pulses";
        case RfMode::AgileGroups: return "agile_groups";
    }
    return "?";
}

std::string to_string(PaMode m) {
    switch (m) {
        case PaMode::NonScanning: return "non_scanning";
        case PaMode::MechanicalScan: return "mechanical";
        case PaMode::PhaseScan: return "phase";
    }
    return "?";
}

ScenarioSpec parse_scenario(const std::string& text) {
    ScenarioSpec spec;
    spec.rho_l = 0.0;
    spec.rho_n = 0.0;

    enum class Section { None, Scenario, Emitter, Noise };
    Section section = Section::None;
    EmitterSpec* emitter = nullptr;
    bool have_scenario = false;
    bool have_channel = false;

    std::istringstream iss(text);
    std::string raw;
    Cursor at;
    while (std::getline(iss, raw)) {
        ++at.line;
        std::string line = raw;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') fail(at, static_cast<int>(line.size()), "unterminated section header");
            const std::string name = trim(line.substr(1, line.size() - 2));
            if (name == "scenario") {
                if (have_scenario) fail(at, 1, "duplicate [scenario] section");
                have_scenario = true;
                section = Section::Scenario;
            } else if (name == "emitter") {
                spec.emitters.emplace_back();
                emitter = &spec.emitters.back();
                emitter->label = static_cast<int>(spec.emitters.size());
                section = Section::Emitter;
            } else if (name == "noise") {
                section = Section::Noise;
            } else {
                fail(at, 1, "unknown section [" + name + "]");
            }
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string::npos) fail(at, 1, "expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) fail(at, 1, "empty key");
        if (value.empty()) fail(at, static_cast<int>(eq) + 2, "empty value for '" + key + "'");

        switch (section) {
            case Section::None:
                fail(at, 1, "key '" + key + "' outside any section");
            case Section::Scenario: {
                if (key == "n") {
                    spec.stream_length = parse_long(at, value);
                } else if (key == "rho_l") {
                    spec.rho_l = parse_double(at, value);
                } else if (key == "rho_n") {
                    spec.rho_n = parse_double(at, value);
                } else if (key == "seed") {
                    spec.seed = static_cast<std::uint64_t>(parse_long(at, value));
                } else if (key == "channel") {
                    if (value == "pw") spec.second_channel = Channel::Pw;
                    else if (value == "rf") spec.second_channel = Channel::Rf;
                    else if (value == "pa") spec.second_channel = Channel::Pa;
                    else fail(at, 1, "channel must be pw|rf|pa");
                    have_channel = true;
                } else {
                    fail(at, 1, "unknown [scenario] key '" + key + "'");
                }
                break;
            }
            case Section::Emitter: {
                EmitterSpec& e = *emitter;
                if (key == "pri.mode") {
                    if (value == "constant") e.pri.mode = PriMode::Constant;
                    else if (value == "dwell_switch") e.pri.mode = PriMode::DwellSwitch;
                    else if (value == "staggered") e.pri.mode = PriMode::Staggered;
                    else fail(at, 1, "pri.mode must be constant|dwell_switch|staggered");
                } else if (key == "pri.range") {
                    e.pri.value_range = parse_range(at, value);
                } else if (key == "pri.j") {
                    e.pri.j = parse_int_range(at, value);
                } else if (key == "pri.k") {
                    e.pri.k = parse_int_range(at, value);
                } else if (key == "pri.l") {
                    e.pri.l = parse_int_range(at, value);
                } else if (key == "rf.mode") {
                    if (!e.rf) e.rf.emplace();
                    if (value == "constant") e.rf->mode = RfMode::Constant;
                    else if (value == "agile_pulses") e.rf->mode = RfMode::AgilePulses;
                    else if (value == "agile_groups") e.rf->mode = RfMode::AgileGroups;
                    else fail(at, 1, "rf.mode must be constant|agile_pulses|agile_groups");
                } else if (key == "rf.range") {
                    if (!e.rf) e.rf.emplace();
                    e.rf->value_range = parse_range(at, value);
                } else if (key == "rf.m") {
                    if (!e.rf) e.rf.emplace();
                    e.rf->m = parse_int_range(at, value);
                } else if (key == "rf.o") {
                    if (!e.rf) e.rf.emplace();
                    e.rf->o = parse_long(at, value);
                } else if (key == "rf.p") {
                    if (!e.rf) e.rf.emplace();
                    e.rf->p = parse_int_range(at, value);
                } else if (key == "pw.mode") {
                    if (!e.pw) e.pw.emplace();
                    if (value == "constant") e.pw->mode = PwMode::Constant;
                    else if (value == "dwell_switch") e.pw->mode = PwMode::DwellSwitch;
                    else fail(at, 1, "pw.mode must be constant|dwell_switch");
                } else if (key == "pw.dc") {
                    if (!e.pw) {
                        e.pw.emplace();
                        e.pw->mode = PwMode::Constant;  // refined after parse
                    }
                    e.pw->dc = parse_range(at, value);
                } else if (key == "pa.mode") {
                    if (!e.pa) e.pa.emplace();
                    if (value == "non_scanning") e.pa->mode = PaMode::NonScanning;
                    else if (value == "mechanical") e.pa->mode = PaMode::MechanicalScan;
                    else if (value == "phase") e.pa->mode = PaMode::PhaseScan;
                    else fail(at, 1, "pa.mode must be non_scanning|mechanical|phase");
                } else if (key == "pa.range") {
                    if (!e.pa) e.pa.emplace();
                    e.pa->base_amplitude = parse_range(at, value);
                } else if (key == "pa.a") {
                    if (!e.pa) e.pa.emplace();
                    e.pa->beamwidth_a = parse_double(at, value);
                } else if (key == "pa.scan_period") {
                    if (!e.pa) e.pa.emplace();
                    e.pa->scan_period = parse_double(at, value);
                } else if (key == "pa.s") {
                    if (!e.pa) e.pa.emplace();
                    e.pa->s = parse_long(at, value);
                } else if (key == "pa.t") {
                    if (!e.pa) e.pa.emplace();
                    e.pa->t = parse_long(at, value);
                } else if (key == "start") {
                    e.start_offset_range = parse_range(at, value);
                } else {
                    fail(at, 1, "unknown [emitter] key '" + key + "'");
                }
                break;
            }
            case Section::Noise: {
                if (key == "pw") spec.noise.pw = parse_noise_rule(at, value);
                else if (key == "rf") spec.noise.rf = parse_noise_rule(at, value);
                else if (key == "pa") spec.noise.pa = parse_noise_rule(at, value);
                else fail(at, 1, "unknown [noise] key '" + key + "'");
                break;
            }
        }
    }

    if (!have_scenario) semantic("scenario", "missing [scenario] section");
    if (!have_channel) semantic("channel", "missing required 'channel' key");

    // PW mode defaults to the shape the PRI imposes on it.
    for (auto& e : spec.emitters) {
        if (e.pw && e.pw->mode == PwMode::Constant && e.pri.mode == PriMode::DwellSwitch)
            e.pw->mode = PwMode::DwellSwitch;
    }

    validate(spec);
    return spec;
}

ScenarioSpec load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scenario file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

std::string serialize_scenario(const ScenarioSpec& spec) {
    std::ostringstream out;
    out << "[scenario]\n";
    out << "n = " << spec.stream_length << "\n";
    out << "rho_l = " << fmt_double(spec.rho_l) << "\n";
    out << "rho_n = " << fmt_double(spec.rho_n) << "\n";
    out << "channel = " << to_string(spec.second_channel) << "\n";
    out << "seed = " << spec.seed << "\n";

    for (const auto& e : spec.emitters) {
        out << "\n[emitter]\n";
        out << "pri.mode = " << to_string(e.pri.mode) << "\n";
        out << "pri.range = " << fmt_range(e.pri.value_range) << "\n";
        if (e.pri.mode == PriMode::DwellSwitch) {
            out << "pri.j = " << fmt_int_range(e.pri.j) << "\n";
            out << "pri.k = " << fmt_int_range(e.pri.k) << "\n";
        }
        if (e.pri.mode == PriMode::Staggered) out << "pri.l = " << fmt_int_range(e.pri.l) << "\n";
        if (e.rf) {
            out << "rf.mode = " << to_string(e.rf->mode) << "\n";
            out << "rf.range = " << fmt_range(e.rf->value_range) << "\n";
            if (e.rf->mode == RfMode::AgilePulses) out << "rf.m = " << fmt_int_range(e.rf->m) << "\n";
            if (e.rf->mode == RfMode::AgileGroups) {
                if (e.rf->o) out << "rf.o = " << *e.rf->o << "\n";
                out << "rf.p = " << fmt_int_range(e.rf->p) << "\n";
            }
        }
        if (e.pw) {
            out << "pw.mode = " << (e.pw->mode == PwMode::Constant ? "constant" : "dwell_switch")
                << "\n";
            out << "pw.dc = " << fmt_range(e.pw->dc) << "\n";
        }
        if (e.pa) {
            out << "pa.mode = " << to_string(e.pa->mode) << "\n";
            out << "pa.range = " << fmt_range(e.pa->base_amplitude) << "\n";
            if (e.pa->mode == PaMode::MechanicalScan) {
                out << "pa.a = " << fmt_double(e.pa->beamwidth_a) << "\n";
                out << "pa.scan_period = " << fmt_double(e.pa->scan_period) << "\n";
            }
            if (e.pa->mode == PaMode::PhaseScan) {
                out << "pa.s = " << e.pa->s << "\n";
                out << "pa.t = " << e.pa->t << "\n";
            }
        }
        if (e.start_offset_range) out << "start = " << fmt_range(*e.start_offset_range) << "\n";
    }

    const NoiseModel defaults;
    if (!(spec.noise == defaults)) {
        out << "\n[noise]\n";
        auto rule = [](const NoiseRule& r) {
            switch (r.kind) {
                case NoiseRule::Kind::Uniform: return "uniform " + fmt_range(r.range);
                case NoiseRule::Kind::Product:
                    return "product " + fmt_range(r.range) + " " + fmt_range(r.range2);
                case NoiseRule::Kind::SpanOfTargets: return std::string("span");
            }
            return std::string();
        };
        if (!(spec.noise.pw == defaults.pw)) out << "pw = " << rule(spec.noise.pw) << "\n";
        if (!(spec.noise.rf == defaults.rf)) out << "rf = " << rule(spec.noise.rf) << "\n";
        if (!(spec.noise.pa == defaults.pa)) out << "pa = " << rule(spec.noise.pa) << "\n";
    }
    return out.str();
}

namespace {

double draw_range(Rng& rng, const Range& r) {
    if (r.degenerate()) return r.lo;
    return rng.uniform(r.lo, r.hi);
}

long draw_int_range(Rng& rng, const IntRange& r) {
    if (r.lo == r.hi) return r.lo;
    return rng.uniform_int(r.lo, r.hi);
}

std::vector<double> draw_staggered_values(Rng& rng, const Range& range, long count) {
    // uniform i.i.d. draws, rejected until every pair is at least 1% of the
    // range width apart (avoids near-duplicate stagger positions)
    const double min_sep = 0.01 * range.width();
    for (int attempt = 0; attempt < 10000; ++attempt) {
        std::vector<double> vals(count);
        for (auto& v : vals) v = draw_range(rng, range);
        bool ok = true;
        for (size_t i = 0; i < vals.size() && ok; ++i)
            for (size_t j = i + 1; j < vals.size(); ++j)
                if (std::abs(vals[i] - vals[j]) < min_sep) {
                    ok = false;
                    break;
                }
        if (ok) return vals;
    }
    throw std::runtime_error("staggered PRI sampling: cannot satisfy minimum separation");
}

}  // namespace

EmitterInstance sample_emitter_instance(const EmitterSpec& spec, const ScenarioSpec& scenario,
                                        Rng& rng) {
    EmitterInstance inst;
    inst.label = spec.label;

    // PRI
    inst.pri_mode = spec.pri.mode;
    switch (spec.pri.mode) {
        case PriMode::Constant:
            inst.pri_values = {draw_range(rng, spec.pri.value_range)};
            inst.pri_group_j = 1;
            break;
        case PriMode::DwellSwitch: {
            inst.pri_group_j = draw_int_range(rng, spec.pri.j);
            const long k = draw_int_range(rng, spec.pri.k);
            inst.pri_values.resize(k);
            for (auto& v : inst.pri_values) v = draw_range(rng, spec.pri.value_range);
            break;
        }
        case PriMode::Staggered: {
            const long l = draw_int_range(rng, spec.pri.l);
            inst.pri_values = draw_staggered_values(rng, spec.pri.value_range, l);
            inst.pri_group_j = 1;
            break;
        }
    }

    // RF
    if (spec.rf) {
        inst.rf_mode = spec.rf->mode;
        switch (spec.rf->mode) {
            case RfMode::Constant:
                inst.rf_values = {draw_range(rng, spec.rf->value_range)};
                inst.rf_group_o = 1;
                break;
            case RfMode::AgilePulses: {
                const long m = draw_int_range(rng, spec.rf->m);
                inst.rf_values.resize(m);
                for (auto& v : inst.rf_values) v = draw_range(rng, spec.rf->value_range);
                inst.rf_group_o = 1;
                break;
            }
            case RfMode::AgileGroups: {
                inst.rf_group_o = spec.rf->o ? *spec.rf->o : inst.pri_group_j;
                const long p = draw_int_range(rng, spec.rf->p);
                inst.rf_values.resize(p);
                for (auto& v : inst.rf_values) v = draw_range(rng, spec.rf->value_range);
                break;
            }
        }
    } else {
        inst.rf_mode = RfMode::Constant;
        inst.rf_values = {1500.0};  // filler band center for the unmodeled column
        inst.rf_group_o = 1;
    }

    // PW (held fixed for the whole transmission once drawn)
    inst.duty_cycle = spec.pw ? draw_range(rng, spec.pw->dc) : 0.03;

    // PA
    if (spec.pa) {
        inst.pa_mode = spec.pa->mode;
        inst.beamwidth_a = spec.pa->beamwidth_a;
        inst.scan_period = spec.pa->scan_period;
        switch (spec.pa->mode) {
            case PaMode::NonScanning:
                inst.pa_base = draw_range(rng, spec.pa->base_amplitude);
                break;
            case PaMode::MechanicalScan:
                inst.pa_base = draw_range(rng, spec.pa->base_amplitude);
                break;
            case PaMode::PhaseScan: {
                inst.pa_base = spec.pa->base_amplitude.hi;
                inst.pa_levels.resize(spec.pa->s);
                for (auto& v : inst.pa_levels) v = draw_range(rng, spec.pa->base_amplitude);
                inst.pa_pulses_per_position = spec.pa->t * inst.pri_group_j;
                break;
            }
        }
    } else {
        inst.pa_mode = PaMode::NonScanning;
        inst.pa_base = 1500.0;
    }

    // start offset
    if (spec.start_offset_range) {
        inst.start_offset = draw_range(rng, *spec.start_offset_range);
    } else {
        double mean_pri = 0.0;
        for (double v : inst.pri_values) mean_pri += v;
        mean_pri /= static_cast<double>(inst.pri_values.size());
        inst.start_offset = rng.uniform(0.0, mean_pri);
    }

    (void)scenario;
    return inst;
}

double scenario_max_amplitude(const ScenarioSpec& spec) {
    double amp = 0.0;
    for (const auto& e : spec.emitters)
        amp = std::max(amp, e.pa ? e.pa->base_amplitude.hi : 1500.0);
    return amp > 0.0 ? amp : 1.0;
}

bool operator==(const Range& a, const Range& b) { return a.lo == b.lo && a.hi == b.hi; }
bool operator==(const IntRange& a, const IntRange& b) { return a.lo == b.lo && a.hi == b.hi; }

bool operator==(const PriModulation& a, const PriModulation& b) {
    if (a.mode != b.mode || !(a.value_range == b.value_range)) return false;
    switch (a.mode) {
        case PriMode::Constant: return true;
        case PriMode::DwellSwitch: return a.j == b.j && a.k == b.k;
        case PriMode::Staggered: return a.l == b.l;
    }
    return false;
}

bool operator==(const RfModulation& a, const RfModulation& b) {
    if (a.mode != b.mode || !(a.value_range == b.value_range)) return false;
    switch (a.mode) {
        case RfMode::Constant: return true;
        case RfMode::AgilePulses: return a.m == b.m;
        case RfMode::AgileGroups: return a.o == b.o && a.p == b.p;
    }
    return false;
}

bool operator==(const PwModulation& a, const PwModulation& b) {
    return a.mode == b.mode && a.dc == b.dc;
}

bool operator==(const PaModulation& a, const PaModulation& b) {
    if (a.mode != b.mode || !(a.base_amplitude == b.base_amplitude)) return false;
    switch (a.mode) {
        case PaMode::NonScanning: return true;
        case PaMode::MechanicalScan:
            return a.beamwidth_a == b.beamwidth_a && a.scan_period == b.scan_period;
        case PaMode::PhaseScan: return a.s == b.s && a.t == b.t;
    }
    return false;
}

bool operator==(const EmitterSpec& a, const EmitterSpec& b) {
    return a.label == b.label && a.pri == b.pri && a.rf == b.rf && a.pw == b.pw && a.pa == b.pa &&
           a.start_offset_range == b.start_offset_range;
}

bool operator==(const NoiseRule& a, const NoiseRule& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
        case NoiseRule::Kind::Uniform: return a.range == b.range;
        case NoiseRule::Kind::Product: return a.range == b.range && a.range2 == b.range2;
        case NoiseRule::Kind::SpanOfTargets: return true;
    }
    return false;
}

bool operator==(const NoiseModel& a, const NoiseModel& b) {
    return a.pw == b.pw && a.rf == b.rf && a.pa == b.pa;
}

bool operator==(const ScenarioSpec& a, const ScenarioSpec& b) {
    return a.emitters == b.emitters && a.rho_l == b.rho_l && a.rho_n == b.rho_n &&
           a.stream_length == b.stream_length && a.second_channel == b.second_channel &&
           a.noise == b.noise && a.seed == b.seed;
}

}  // namespace deint
