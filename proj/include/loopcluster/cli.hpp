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

// Command-line front end. parse_and_dispatch is the whole program; main()
// only forwards argv and the standard streams.

#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "loopcluster/analysis.hpp"
#include "loopcluster/entlen.hpp"
#include "loopcluster/errors.hpp"
#include "loopcluster/montecarlo.hpp"
#include "loopcluster/scaling.hpp"
#include "loopcluster/table.hpp"

namespace loopcluster {

namespace cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

struct CommonOptions {
    std::string format = "csv";
    std::string output = "-";
    std::uint64_t seed = 1;
    int threads = 0;
};

struct NoiseOptions {
    std::string kind = "auto";
    double M = 1.0;
    double g2 = 0.0;
    double delta = 0.0;

    NoiseModel resolve() const {
        std::string k = kind;
        if (k == "auto") k = delta > 0.0 ? "depolarizing" : (M < 1.0 || g2 > 0.0 ? "distinguishing" : "ideal");
        NoiseModel n{parse_noise_kind(k), M, delta, g2};
        n.validate();
        return n;
    }
};

struct PhaseScanOptions {
    int photons = 2;
    std::string observable = "xn";
    int points = 41;
    double phi_min = 0.0;
    double phi_max = kPi;
};

struct EntlenOptions {
    std::vector<double> v2{0.93, 0.76};
    std::string noise = "distinguishing";
    double v2_min = 0.0;
    double v2_max = 0.0;
    int v2_points = 0;
    int n_max = 64;
    double tolerance = kConcurrenceTol;
    bool per_n = false;
    bool skip_branch_check = false;
};

struct ScalingOptions {
    std::string preset = "reference";
    double rate = -1.0;
    double eta_d = -1.0, eta_s = -1.0, eta_l = -1.0, eta_b = -1.0, eta_g = -1.0;
    int max_photons = 6;
    bool ratio_curves = false;
    double v2_min = 0.05;
    double v2_max = 0.95;
    int v2_points = 91;
    double point_v2 = 0.76;
};

struct MonteCarloOptions {
    int photons = 2;
    std::string pattern;
    double phi = 0.0;
    std::uint64_t shots = 1000000;
    double eta_b = 1.0, eta_s = 1.0, eta_l = 1.0, eta_d = 1.0;
    double dead_time = 60.0;
    double bin_ns = 74.0;
    int pulses_per_bin = 6;
    double laser_period = 12.3;
    double cw_fraction = 0.0;
    double extinction = 0.0;
    double window = 5.0;
    bool subtract = false;
    std::string observable = "xn";
    std::string tally;
};

struct StabilizerOptions {
    int photons = 4;
    double phi = 0.0;
};

inline void add_common(CLI::App* sub, CommonOptions& c) {
    sub->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--output,-o", c.output, "Output file, '-' for standard output; relative paths go under $LOOPCLUSTER_OUTPUT_DIR");
    sub->add_option("--seed", c.seed, "Random seed");
    sub->add_option("--threads", c.threads, "Worker threads, 0 for all hardware threads")->check(CLI::Range(0, 1024));
}

inline void add_noise(CLI::App* sub, NoiseOptions& n) {
    sub->add_option("--noise", n.kind, "Fusion noise; auto picks depolarizing if --delta > 0, distinguishing if --M < 1 or --g2 > 0")
        ->check(CLI::IsMember({"auto", "ideal", "distinguishing", "depolarizing"}));
    sub->add_option("--M", n.M, "Mean wave-packet overlap")->check(CLI::Range(0.0, 1.0));
    sub->add_option("--g2", n.g2, "Second-order correlation g2(0) of the source")->check(CLI::Range(0.0, 0.999999));
    sub->add_option("--delta", n.delta, "Depolarizing strength")->check(CLI::Range(0.0, 1.0));
}

inline void write_output(const Table& t, const CommonOptions& c, std::ostream& out) {
    const Format f = parse_format(c.format);
    if (c.output == "-") write_table(out, t, f);
    else emit_table(t, f, c.output);
}

inline void add_noise_meta(Table& t, const NoiseModel& n) {
    t.meta.emplace_back("noise", std::string(to_string(n.kind)));
    t.meta.emplace_back("M", n.M);
    t.meta.emplace_back("g2", n.g2);
    t.meta.emplace_back("delta", n.delta);
}

inline Table run_phase_scan(const PhaseScanOptions& o, const NoiseOptions& no, const CommonOptions& c) {
    PhaseScan cfg{linspace(o.phi_min, o.phi_max, o.points), o.photons, no.resolve(), parse_observable(o.observable)};
    const auto rows = phase_scan(cfg, c.threads);
    Table t{{"phi", "simulated", "predicted"}, {}, {}};
    t.meta.emplace_back("command", std::string("phase-scan"));
    t.meta.emplace_back("photons", std::int64_t{o.photons});
    t.meta.emplace_back("observable", o.observable);
    add_noise_meta(t, cfg.noise);
    for (const auto& r : rows) t.add_row({r.phi, r.simulated, r.predicted});
    return t;
}

inline Table run_entlen(const EntlenOptions& o, const CommonOptions& c, std::ostream& err) {
    const NoiseKind kind = parse_noise_kind(o.noise);
    if (kind == NoiseKind::kIdeal) throw ArgumentError("entlen needs distinguishing or depolarizing noise");
    std::vector<double> v2s = o.v2;
    if (o.v2_points > 0) v2s = linspace(o.v2_min, o.v2_max, o.v2_points);
    if (v2s.empty()) throw ArgumentError("no v2 values given");

    std::vector<EntanglementLengthResult> results(v2s.size());
    parallel_for(v2s.size(), c.threads, [&](std::size_t i) {
        results[i] = entanglement_length(ChainSweep{v2s[i], kind, o.n_max, o.tolerance}, !o.skip_branch_check);
    });

    Table t;
    t.meta.emplace_back("command", std::string("entlen"));
    t.meta.emplace_back("noise", o.noise);
    t.meta.emplace_back("n_max", std::int64_t{o.n_max});
    t.meta.emplace_back("tolerance", o.tolerance);
    t.meta.emplace_back("y_branch", std::string(o.skip_branch_check ? "+1 (unchecked)" : "+1 (outcome independence verified to n=6)"));
    if (o.per_n) {
        t.columns = {"v2", "n", "concurrence"};
        for (std::size_t i = 0; i < v2s.size(); ++i) {
            for (const auto& [n, conc] : results[i].concurrences) t.add_row({v2s[i], std::int64_t{n}, conc});
        }
    } else {
        t.columns = {"v2", "L", "concurrence_at_L", "cap_limited"};
        for (std::size_t i = 0; i < v2s.size(); ++i) {
            double at_l = 0.0;
            for (const auto& [n, conc] : results[i].concurrences) {
                if (n == results[i].L) at_l = conc;
            }
            t.add_row({v2s[i], std::int64_t{results[i].L}, at_l, results[i].cap_limited});
        }
    }
    for (std::size_t i = 0; i < v2s.size(); ++i) {
        err << "entlen: v2=" << format_double(v2s[i]) << " " << o.noise << " L=" << results[i].L
            << (results[i].cap_limited ? " (cap-limited)" : "") << "\n";
    }
    return t;
}

inline EfficiencyBudget resolve_budget(const ScalingOptions& o) {
    EfficiencyBudget b = EfficiencyBudget::preset(o.preset);
    if (o.rate > 0) b.R = o.rate;
    double* fields[] = {&b.eta_d, &b.eta_s, &b.eta_l, &b.eta_b, &b.eta_g};
    const double overrides[] = {o.eta_d, o.eta_s, o.eta_l, o.eta_b, o.eta_g};
    bool changed = o.rate > 0;
    for (int i = 0; i < 5; ++i) {
        if (overrides[i] >= 0) {
            *fields[i] = overrides[i];
            changed = true;
        }
    }
    if (changed) b.name = o.preset + "+overrides";
    b.validate();
    return b;
}

inline Table run_scaling(const ScalingOptions& o) {
    const EfficiencyBudget b = resolve_budget(o);
    Table t;
    t.meta.emplace_back("command", std::string("scaling"));
    t.meta.emplace_back("budget", b.name);
    t.meta.emplace_back("R", b.R);
    t.meta.emplace_back("eta_d", b.eta_d);
    t.meta.emplace_back("eta_s", b.eta_s);
    t.meta.emplace_back("eta_l", b.eta_l);
    t.meta.emplace_back("eta_b", b.eta_b);
    t.meta.emplace_back("eta_g", b.eta_g);
    t.meta.emplace_back("r", scaling_ratio(b));
    if (o.ratio_curves) {
        t.columns = {"series", "v2", "r"};
        for (const auto& row : ratio_curves(linspace(o.v2_min, o.v2_max, o.v2_points))) {
            t.add_row({std::string("pdc_with_gate"), row.v2, row.r_pdc_with_gate});
        }
        for (const auto& row : ratio_curves(linspace(o.v2_min, o.v2_max, o.v2_points))) {
            t.add_row({std::string("gate_floor"), row.v2, row.r_gate_floor});
        }
        EfficiencyBudget upgraded = b;
        upgraded.eta_d = 0.9;
        upgraded.name = b.name + "@eta_d=0.9";
        for (const auto& p : {budget_point(b, o.point_v2), budget_point(upgraded, o.point_v2)}) {
            t.add_row({std::string("point:") + p.name, p.v2, p.r});
        }
        return t;
    }
    t.columns = {"n", "rate_hz", "ratio_to_next"};
    for (int n = 1; n <= o.max_photons; ++n) {
        t.add_row({std::int64_t{n}, detection_rate(b, n), detection_rate(b, n) / detection_rate(b, n + 1)});
    }
    return t;
}

inline Table run_montecarlo(const MonteCarloOptions& o, const NoiseOptions& no, const CommonOptions& c) {
    RunParams p;
    p.seq = PulseSequence::for_photons(o.photons);
    if (!o.pattern.empty()) p.seq.pattern = o.pattern;
    p.seq.bin_ns = o.bin_ns;
    p.seq.pulses_per_bin = o.pulses_per_bin;
    p.seq.laser_period_ns = o.laser_period;
    p.noise = no.resolve();
    p.budget = EfficiencyBudget{"montecarlo", 81e6, o.eta_d, o.eta_s, o.eta_l, o.eta_b, 0.5};
    p.det = DetectorModel{o.eta_d, o.dead_time, 2};
    p.bg = BackgroundModel{o.cw_fraction, o.extinction, o.window};
    p.phi = o.phi;
    p.shots = o.shots;
    p.seed = c.seed;
    p.threads = c.threads;
    p.seq.validate();
    p.n_fold = p.seq.open_bins();
    if (p.n_fold != o.photons && o.pattern.empty()) throw ArgumentError("pattern and photon count disagree");

    p.bg.validate();
    p.bg_window_probability = calibrate_background(p);
    const CoincidenceTally meas = run_sequence(p);
    std::vector<CoincidenceTally> bgs;
    if (o.subtract) bgs = background_runs(p);
    const CorrectedCounts corr = subtract_background(meas, bgs);
    const PauliString obs = observable_string(parse_observable(o.observable), meas.n);

    Table t;
    t.meta.emplace_back("command", std::string("montecarlo"));
    t.meta.emplace_back("seed", std::to_string(c.seed));
    t.meta.emplace_back("shots", std::to_string(o.shots));
    t.meta.emplace_back("sequence", p.seq.pattern);
    t.meta.emplace_back("phi", o.phi);
    add_noise_meta(t, p.noise);
    t.meta.emplace_back("observable", o.observable);
    t.meta.emplace_back("bg_window_probability", p.bg_window_probability);
    if (corr.counts.empty() || std::all_of(corr.counts.begin(), corr.counts.end(), [](double v) { return v == 0.0; })) {
        t.meta.emplace_back("visibility", std::string("n/a"));
    } else {
        try {
            const VisibilityEstimate v = visibility_with_errors(corr, obs);
            t.meta.emplace_back("visibility", v.value);
            t.meta.emplace_back("sigma", v.sigma);
        } catch (const EmptyDataError&) {
            t.meta.emplace_back("visibility", std::string("n/a"));
        }
    }
    t.meta.emplace_back("negative_corrected", corr.has_negative);
    if (o.subtract) {
        t.columns = {"pattern", "measured", "background", "corrected"};
        for (std::size_t i = 0; i < meas.counts.size(); ++i) {
            std::int64_t bg = 0;
            for (const auto& b : bgs) bg += static_cast<std::int64_t>(b.counts[i]);
            t.add_row({pattern_label(i, meas.n), static_cast<std::int64_t>(meas.counts[i]), bg, corr.counts[i]});
        }
    } else {
        t.columns = {"pattern", "count"};
        for (std::size_t i = 0; i < meas.counts.size(); ++i) {
            t.add_row({pattern_label(i, meas.n), static_cast<std::int64_t>(meas.counts[i])});
        }
    }
    if (!o.tally.empty()) {
        const auto path = resolve_output_path(o.tally);
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        if (!f) throw IoError("cannot open " + path.string() + " for writing");
        write_tally(f, meas, {{"phi", format_double(o.phi)}, {"noise", to_string(p.noise.kind)}, {"M", format_double(p.noise.M)},
                              {"g2", format_double(p.noise.g2)}, {"delta", format_double(p.noise.delta)},
                              {"eta_b", format_double(o.eta_b)}, {"eta_s", format_double(o.eta_s)},
                              {"eta_l", format_double(o.eta_l)}, {"eta_d", format_double(o.eta_d)},
                              {"dead_time_ns", format_double(o.dead_time)}, {"bin_ns", format_double(o.bin_ns)},
                              {"cw_fraction", format_double(o.cw_fraction)}, {"eom_extinction", format_double(o.extinction)},
                              {"window_ns", format_double(o.window)}});
        if (!f) throw IoError("failed writing " + path.string());
    }
    return t;
}

/// Returns the table and whether every check passed.
inline std::pair<Table, bool> run_stabilizer_check(const StabilizerOptions& o) {
    const ProtocolState ps = build_chain(o.photons, o.phi, NoiseModel::ideal());
    const auto gens = stabilizer_generators(o.photons);
    Table t{{"name", "pauli", "expectation", "ok"}, {}, {}};
    t.meta.emplace_back("command", std::string("stabilizer-check"));
    t.meta.emplace_back("photons", std::int64_t{o.photons});
    t.meta.emplace_back("phi", o.phi);
    bool all_ok = true;
    for (std::size_t i = 0; i < gens.size(); ++i) {
        const double e = expectation(ps.state, gens[i]);
        const bool ok = o.phi != 0.0 || std::abs(e - 1.0) <= kAccumulatedTol;
        all_ok = all_ok && ok;
        t.add_row({"g" + std::to_string(i + 1), gens[i].to_string(), e, ok});
    }
    if (o.photons % 2 == 0) {
        PauliString prod = PauliString::identity(o.photons);
        for (std::size_t i = 0; i + 1 < gens.size(); i += 2) prod = prod * gens[i];
        const PauliString closed = svn_prime(o.photons);
        const bool same = prod == closed;
        all_ok = all_ok && same;
        t.add_row({std::string("svnp"), closed.to_string(), expectation(ps.state, closed), same});
        t.add_row({std::string("g1*g3*...*g(n-1)"), prod.to_string(), expectation(ps.state, prod), same});
    }
    return {std::move(t), all_ok};
}

/// Expands "--config FILE" into flags placed right after the subcommand, so
/// that explicit flags (parsed later, last value wins) override the file.
inline std::vector<std::string> expand_config(std::vector<std::string> args) {
    std::string path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config") {
            if (i + 1 >= args.size()) throw CLI::ArgumentMismatch("--config needs a file name");
            path = args[i + 1];
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i + 2));
            break;
        }
        if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
            break;
        }
    }
    if (path.empty()) return args;
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read config file " + path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(f);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config file " + path + " must hold a flat JSON object");

    static const std::vector<std::string> kCommands{"phase-scan", "entlen", "scaling", "montecarlo", "stabilizer-check"};
    auto cmd = std::find_if(args.begin(), args.end(), [](const std::string& a) {
        return std::find(kCommands.begin(), kCommands.end(), a) != kCommands.end();
    });
    std::vector<std::string> injected;
    for (const auto& [key, value] : doc.items()) {
        if (key == "command") {
            if (cmd == args.end()) {
                if (!value.is_string()) throw ConfigError("config key 'command' must be a string");
                args.insert(args.begin(), value.get<std::string>());
                cmd = args.begin();
            }
            continue;
        }
        const std::string flag = "--" + key;
        if (value.is_boolean()) {
            if (value.get<bool>()) injected.push_back(flag);
        } else if (value.is_string()) {
            injected.push_back(flag);
            injected.push_back(value.get<std::string>());
        } else if (value.is_number_integer() || value.is_number_unsigned()) {
            injected.push_back(flag);
            injected.push_back(value.dump());
        } else if (value.is_number_float()) {
            injected.push_back(flag);
            injected.push_back(format_double(value.get<double>()));
        } else if (value.is_array()) {
            injected.push_back(flag);
            for (const auto& v : value) {
                if (!v.is_number()) throw ConfigError("config key '" + key + "' may only list numbers");
                injected.push_back(v.is_number_float() ? format_double(v.get<double>()) : v.dump());
            }
        } else {
            throw ConfigError("config key '" + key + "' must be a scalar or a list of numbers");
        }
    }
    if (cmd == args.end()) throw ConfigError("config file given but no subcommand selected");
    args.insert(cmd + 1, injected.begin(), injected.end());
    return args;
}

}  // namespace cli

/// Runs the command line `argv` (argv[0] is the program name). Tables go to
/// `out` unless --output names a file; diagnostics go to `err`.
inline int parse_and_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    using namespace cli;
    CLI::App app{"Loop-based linear photonic cluster state simulator", "loopcluster"};
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    std::string config_placeholder;
    app.add_option("--config", config_placeholder, "Flat JSON file of flag values; command-line flags take precedence");

    CommonOptions common;
    NoiseOptions noise;
    PhaseScanOptions ps;
    EntlenOptions el;
    ScalingOptions sc;
    MonteCarloOptions mc;
    StabilizerOptions st;

    auto* sub_ps = app.add_subcommand("phase-scan", "Visibility versus loop phase, simulated and closed form");
    sub_ps->add_option("--photons,-n", ps.photons, "Photons in the chain")->check(CLI::Range(2, kMaxMixedQubits));
    sub_ps->add_option("--observable", ps.observable, "xn: X on every photon; svnp: S_Vn' (even n)")->check(CLI::IsMember({"xn", "svnp"}));
    sub_ps->add_option("--points", ps.points, "Grid points")->check(CLI::Range(1, 100000));
    sub_ps->add_option("--phi-min", ps.phi_min, "First phase (rad)");
    sub_ps->add_option("--phi-max", ps.phi_max, "Last phase (rad)");
    add_noise(sub_ps, noise);
    add_common(sub_ps, common);

    auto* sub_el = app.add_subcommand("entlen", "Entanglement length from the end-pair concurrence");
    sub_el->add_option("--v2", el.v2, "Two-photon visibilities")->check(CLI::Range(1e-9, 1.0));
    sub_el->add_option("--noise", el.noise, "Noise kind")->check(CLI::IsMember({"distinguishing", "depolarizing"}));
    sub_el->add_option("--v2-min", el.v2_min, "Grid start (with --v2-points)")->check(CLI::Range(1e-9, 1.0));
    sub_el->add_option("--v2-max", el.v2_max, "Grid end (with --v2-points)")->check(CLI::Range(1e-9, 1.0));
    sub_el->add_option("--v2-points", el.v2_points, "Grid points; replaces --v2 when positive")->check(CLI::Range(0, 100000));
    sub_el->add_option("--n-max", el.n_max, "Longest chain tried")->check(CLI::Range(2, 100000));
    sub_el->add_option("--tolerance", el.tolerance, "Concurrence positivity threshold")->check(CLI::Range(0.0, 1.0));
    sub_el->add_flag("--per-n", el.per_n, "Emit the concurrence for every chain length");
    sub_el->add_flag("--skip-branch-check", el.skip_branch_check, "Do not verify y-outcome independence");
    add_common(sub_el, common);

    auto* sub_sc = app.add_subcommand("scaling", "Detection rates and scaling ratios");
    sub_sc->add_option("--preset", sc.preset, "Efficiency budget preset")->check(CLI::IsMember({"reference", "reference-eta_d-0.9", "gate-floor"}));
    sub_sc->add_option("--rate", sc.rate, "Repetition rate override (Hz), negative keeps the preset");
    sub_sc->add_option("--eta-d", sc.eta_d, "Detector efficiency override, negative keeps the preset")->check(CLI::Range(-1.0, 1.0));
    sub_sc->add_option("--eta-s", sc.eta_s, "Setup efficiency override")->check(CLI::Range(-1.0, 1.0));
    sub_sc->add_option("--eta-l", sc.eta_l, "Loop efficiency override")->check(CLI::Range(-1.0, 1.0));
    sub_sc->add_option("--eta-b", sc.eta_b, "Source brightness override")->check(CLI::Range(-1.0, 1.0));
    sub_sc->add_option("--eta-g", sc.eta_g, "Gate efficiency override")->check(CLI::Range(-1.0, 1.0));
    sub_sc->add_option("--max-photons", sc.max_photons, "Largest n in the rate table")->check(CLI::Range(1, 1000));
    sub_sc->add_flag("--ratio-curves", sc.ratio_curves, "Emit scaling-ratio curves and budget points instead of rates");
    sub_sc->add_option("--v2-min", sc.v2_min, "Curve start")->check(CLI::Range(1e-9, 0.999999));
    sub_sc->add_option("--v2-max", sc.v2_max, "Curve end")->check(CLI::Range(1e-9, 0.999999));
    sub_sc->add_option("--v2-points", sc.v2_points, "Curve points")->check(CLI::Range(1, 100000));
    sub_sc->add_option("--point-v2", sc.point_v2, "Visibility at which budget points are placed")->check(CLI::Range(0.0, 1.0));
    add_common(sub_sc, common);

    auto* sub_mc = app.add_subcommand("montecarlo", "Event-level coincidence simulation");
    sub_mc->add_option("--photons,-n", mc.photons, "Photons; the pattern defaults to n ones and two zeros")->check(CLI::Range(2, kMaxMonteCarloPhotons));
    sub_mc->add_option("--pattern", mc.pattern, "EOM pattern, e.g. 11100");
    sub_mc->add_option("--phi", mc.phi, "Loop phase (rad)");
    sub_mc->add_option("--shots", mc.shots, "Pattern repetitions")->check(CLI::Range(std::uint64_t{1}, std::uint64_t{1} << 40));
    sub_mc->add_option("--eta-b", mc.eta_b, "Source brightness")->check(CLI::Range(1e-9, 1.0));
    sub_mc->add_option("--eta-s", mc.eta_s, "Setup efficiency")->check(CLI::Range(1e-9, 1.0));
    sub_mc->add_option("--eta-l", mc.eta_l, "Loop efficiency per round trip")->check(CLI::Range(1e-9, 1.0));
    sub_mc->add_option("--eta-d", mc.eta_d, "Detector efficiency")->check(CLI::Range(1e-9, 1.0));
    sub_mc->add_option("--dead-time", mc.dead_time, "Detector dead time (ns)")->check(CLI::Range(0.0, 1e6));
    sub_mc->add_option("--bin-ns", mc.bin_ns, "Loop round trip (ns)")->check(CLI::Range(1e-3, 1e6));
    sub_mc->add_option("--pulses-per-bin", mc.pulses_per_bin, "Laser pulses per round trip")->check(CLI::Range(1, 100000));
    sub_mc->add_option("--laser-period", mc.laser_period, "Laser period (ns)")->check(CLI::Range(1e-3, 1e6));
    sub_mc->add_option("--cw-fraction", mc.cw_fraction, "Share of accidental coincidences among all n-folds")->check(CLI::Range(0.0, 0.999999));
    sub_mc->add_option("--extinction", mc.extinction, "EOM leakage of closed bins")->check(CLI::Range(0.0, 0.999999));
    sub_mc->add_option("--window", mc.window, "Coincidence window (ns)")->check(CLI::Range(1e-6, 1e6));
    sub_mc->add_flag("--subtract-background", mc.subtract, "Run the closed-bin variants and subtract them");
    sub_mc->add_option("--observable", mc.observable, "Observable for the visibility estimate")->check(CLI::IsMember({"xn", "svnp"}));
    sub_mc->add_option("--tally", mc.tally, "Also write the raw tally dump to this file");
    add_noise(sub_mc, noise);
    add_common(sub_mc, common);

    auto* sub_st = app.add_subcommand("stabilizer-check", "Stabilizer expectations on the ideal chain");
    sub_st->add_option("--photons,-n", st.photons, "Photons in the chain")->check(CLI::Range(2, kMaxPureQubits));
    sub_st->add_option("--phi", st.phi, "Loop phase (rad)");
    add_common(sub_st, common);

    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    try {
        args = expand_config(std::move(args));
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::CallForHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "loopcluster: error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        err << "loopcluster: error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (sub_ps->parsed()) {
            write_output(run_phase_scan(ps, noise, common), common, out);
        } else if (sub_el->parsed()) {
            write_output(run_entlen(el, common, err), common, out);
        } else if (sub_sc->parsed()) {
            write_output(run_scaling(sc), common, out);
        } else if (sub_mc->parsed()) {
            write_output(run_montecarlo(mc, noise, common), common, out);
        } else if (sub_st->parsed()) {
            auto [table, ok] = run_stabilizer_check(st);
            write_output(table, common, out);
            if (!ok) {
                err << "loopcluster: error: stabilizer check failed\n";
                return kExitFailure;
            }
        }
    } catch (const ArgumentError& e) {
        err << "loopcluster: error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ConfigError& e) {
        err << "loopcluster: error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "loopcluster: error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitOk;
}

}  // namespace loopcluster
