// Copyright 2026 The timebin Authors
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

#include "timebin/commands.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "timebin/oracles.hpp"

namespace timebin::cli {

namespace {

constexpr std::uint64_t kCalibrationSalt = 0x63616c6962726174ULL;
constexpr std::uint64_t kDefaultSelftestSeed = 1;

/// Detection bins that survive the edge switches, inclusive.
std::pair<int, int> kept_bins(const RunConfig &cfg) {
    const int dim = cfg.experiment.train.dimension();
    if (const auto *tw = std::get_if<TwoWayConfig>(&cfg.experiment.analyzer); tw && tw->discard_edges) {
        return {2, dim};
    }
    return {1, std::numeric_limits<int>::max()};
}

std::int64_t kept_triggers(const PhaseStats &st, std::pair<int, int> bins) {
    std::int64_t n = 0;
    for (std::size_t k = 1; k < st.ge_triggers_by_bin.size(); ++k) {
        const int bin = static_cast<int>(k);
        if (bin >= bins.first && bin <= bins.second) {
            n += st.ge_triggers_by_bin[k];
        }
    }
    return n;
}

bool has_noise(const DetectorModel &det) {
    return det.dark_rate_ge > 0.0 && det.noise_prob_ingaas > 0.0;
}

std::string fmt(double v) {
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    return format_double(v);
}

void write_manifest(const std::filesystem::path &csv, const std::string &command, const RunConfig &cfg) {
    RunManifest m;
    m.command = command;
    m.config_hash = config_hash(cfg.resolved);
    m.seed = cfg.experiment.rng_seed;
    m.outputs = {csv.string(), manifest_path(csv).string()};
    m.resolved = cfg.resolved;
    std::ofstream out(manifest_path(csv), std::ios::binary);
    out << manifest_text(m);
    if (!out) {
        throw ConfigError(manifest_path(csv).string() + ": cannot write manifest");
    }
}

void write_file(const std::filesystem::path &path, const std::string &text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) {
        throw ConfigError(path.string() + ": cannot write output");
    }
}

/// Runs `body`, mapping exceptions to exit codes.
template <typename F>
int guarded(std::ostream &err, F &&body) {
    try {
        return body();
    } catch (const ConfigError &e) {
        err << "error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const FitError &e) {
        err << "error: fit failed: " << e.what() << "\n";
        return kExitAnalysisFailure;
    } catch (const InvalidArgument &e) {
        err << "error: " << e.what() << "\n";
        return kExitConfigError;
    }
}

} // namespace

std::string manifest_text(const RunManifest &manifest) {
    std::ostringstream out;
    out << "# timebin run manifest; usable as a config file\n";
    out << "manifest.command = " << manifest.command << "\n";
    out << "manifest.config_hash = " << manifest.config_hash << "\n";
    out << "manifest.seed = " << manifest.seed << "\n";
    out << "manifest.tool_version = " << manifest.tool_version << "\n";
    out << "manifest.outputs = ";
    for (std::size_t i = 0; i < manifest.outputs.size(); ++i) {
        out << (i ? "," : "") << manifest.outputs[i];
    }
    out << "\n" << canonical_text(manifest.resolved);
    return out.str();
}

std::filesystem::path manifest_path(const std::filesystem::path &csv) {
    return std::filesystem::path(csv.string() + ".manifest");
}

ExperimentRun simulate(const RunConfig &cfg) {
    return apply_edge_switches(run_experiment(cfg.experiment, cfg.phases), cfg);
}

ExperimentRun apply_edge_switches(ExperimentRun run, const RunConfig &cfg) {
    const auto bins = kept_bins(cfg);
    if (bins.first == 1) {
        return run;
    }
    std::erase_if(run.records, [&](const CoincidenceRecord &r) {
        return r.detection_bin < bins.first || r.detection_bin > bins.second;
    });
    for (auto &st : run.stats) {
        st.coincidences = 0;
    }
    for (const auto &r : run.records) {
        ++run.stats[static_cast<std::size_t>(r.phase_index)].coincidences;
    }
    return run;
}

FringeReport analyze_fringe(const RunConfig &cfg, const ExperimentRun &run) {
    FringeReport rep;
    rep.deltas = cfg.phases;
    rep.counts = window_counts_by_phase(run, cfg.window_center_ns, cfg.window_width_ns);

    const ExperimentConfig &exp = cfg.experiment;
    if (const auto *tw = std::get_if<TwoWayConfig>(&exp.analyzer)) {
        for (const auto &s : predicted_fringe(exp.train, tw->discard_edges, cfg.phases)) {
            rep.predicted.push_back(s.probability);
        }
    } else {
        for (double ph : cfg.phases) {
            rep.predicted.push_back(sample_outcome_distribution(exp.train, with_phase(exp.analyzer, ph)).tau0_total());
        }
    }

    std::vector<FringePoint> points;
    for (std::size_t i = 0; i < rep.counts.size(); ++i) {
        const auto c = static_cast<double>(rep.counts[i]);
        points.push_back({rep.deltas[i], c, std::sqrt(std::max(c, 1.0))});
        rep.window_total += rep.counts[i];
    }
    rep.raw = fit_fringe(points);

    if (!cfg.calibration || !has_noise(exp.detectors)) {
        return rep;
    }
    // Pair-free calibration: accidentals per kept Ge trigger, scaled by the
    // mean number of kept triggers in a signal phase setting.
    ExperimentConfig cal = exp;
    cal.mean_pairs_per_train = 0.0;
    cal.rng_seed = exp.rng_seed ^ kCalibrationSalt;
    cal.n_trains = exp.n_trains * static_cast<std::int64_t>(cfg.phases.size());
    const std::vector<double> one{0.0};
    const ExperimentRun cal_run = apply_edge_switches(run_experiment(cal, one), cfg);
    const auto bins = kept_bins(cfg);
    const auto cal_counts = static_cast<double>(select_window(cal_run.records, cfg.window_center_ns,
                                                              cfg.window_width_ns));
    const auto cal_triggers = static_cast<double>(kept_triggers(cal_run.stats.front(), bins));
    double signal_triggers = 0.0;
    for (const auto &st : run.stats) {
        signal_triggers += static_cast<double>(kept_triggers(st, bins));
    }
    signal_triggers /= static_cast<double>(run.stats.size());
    if (cal_triggers > 0.0) {
        rep.accidentals_per_point = cal_counts / cal_triggers * signal_triggers;
        const double acc_err = std::sqrt(cal_counts) / cal_triggers * signal_triggers;
        rep.net = net_visibility(rep.raw, rep.accidentals_per_point, acc_err);
    } else {
        rep.net = rep.raw;
    }
    return rep;
}

int cmd_fringe(const std::filesystem::path &config, const std::filesystem::path &out, const EnvLookup &env,
               std::ostream &log, std::ostream &err) {
    return guarded(err, [&] {
        const RunConfig cfg = load_config(config, env, err);
        if (!std::holds_alternative<TwoWayConfig>(cfg.experiment.analyzer)) {
            throw ConfigError(config.string() + ": field 'analyzer.type': fringe needs two_way");
        }
        const ExperimentRun run = simulate(cfg);
        FringeReport rep;
        try {
            rep = analyze_fringe(cfg, run);
        } catch (const InvalidArgument &e) {
            err << "error: " << e.what() << "\n";
            return static_cast<int>(kExitAnalysisFailure);
        }
        const FitResult &best = rep.net ? *rep.net : rep.raw;

        std::ostringstream csv;
        csv << "# timebin fringe\n";
        csv << "# visibility," << fmt(rep.raw.visibility) << "\n";
        csv << "# visibility_err," << fmt(rep.raw.visibility_err) << "\n";
        csv << "# phase_offset_rad," << fmt(rep.raw.phase_offset) << "\n";
        csv << "# baseline," << fmt(rep.raw.baseline) << "\n";
        csv << "# chi2," << fmt(rep.raw.chi2) << "\n";
        if (rep.net) {
            csv << "# accidentals_per_point," << fmt(rep.accidentals_per_point) << "\n";
            csv << "# net_visibility," << fmt(rep.net->visibility) << "\n";
            csv << "# net_visibility_err," << fmt(rep.net->visibility_err) << "\n";
        }
        if (best.visibility >= 1.0) {
            csv << "# dimension_bound,inf\n# claimed_dimension,unbounded\n";
        } else {
            const DimensionBound db = dimension_bound(std::max(best.visibility, 0.0), best.visibility_err);
            csv << "# dimension_bound," << fmt(db.bound) << "\n";
            csv << "# claimed_dimension," << db.claimed_dimension << "\n";
            csv << "# dimension_lower," << fmt(db.lower) << "\n";
            csv << "# dimension_upper," << (db.upper ? fmt(*db.upper) : "unbounded") << "\n";
        }
        csv << "# window_count," << rep.window_total << "\n";
        csv << "delta_rad,counts,counts_err,predicted_probability\n";
        for (std::size_t i = 0; i < rep.deltas.size(); ++i) {
            const auto c = static_cast<double>(rep.counts[i]);
            csv << fmt(rep.deltas[i]) << "," << rep.counts[i] << "," << fmt(std::sqrt(std::max(c, 1.0))) << ","
                << fmt(rep.predicted[i]) << "\n";
        }
        write_file(out, csv.str());
        write_manifest(out, "fringe", cfg);
        log << "fringe: V = " << rep.raw.visibility << " +- " << rep.raw.visibility_err;
        if (rep.net) {
            log << ", net V = " << rep.net->visibility << " +- " << rep.net->visibility_err;
        }
        log << "\nwrote " << out.string() << "\n";
        return static_cast<int>(kExitOk);
    });
}

int cmd_histogram(const std::filesystem::path &config, const std::filesystem::path &out, const EnvLookup &env,
                  std::ostream &log, std::ostream &err) {
    return guarded(err, [&] {
        const RunConfig cfg = load_config(config, env, err);
        const ExperimentRun run = simulate(cfg);
        const Histogram h = tac_histogram(run.records, cfg.histogram_bin_width_ns, cfg.histogram_span_ns);
        const std::int64_t window = select_window(run.records, cfg.window_center_ns, cfg.window_width_ns);

        std::ostringstream csv;
        csv << "# timebin histogram\n";
        csv << "# bin_spacing_ns," << fmt(cfg.experiment.train.bin_spacing_ns()) << "\n";
        csv << "# window_center_ns," << fmt(cfg.window_center_ns) << "\n";
        csv << "# window_width_ns," << fmt(cfg.window_width_ns) << "\n";
        csv << "# window_count," << window << "\n";
        csv << "# out_of_range," << h.out_of_range << "\n";
        csv << "tau_ns,counts\n";
        for (std::size_t i = 0; i < h.counts.size(); ++i) {
            csv << fmt(h.centers_ns[i]) << "," << h.counts[i] << "\n";
        }
        write_file(out, csv.str());
        write_manifest(out, "histogram", cfg);
        log << "histogram: " << run.records.size() << " coincidences, window count " << window << "\nwrote "
            << out.string() << "\n";
        return static_cast<int>(kExitOk);
    });
}

int cmd_fp_curve(const FpCurveOptions &opts, const std::filesystem::path &out, const EnvLookup &env,
                 std::ostream &log, std::ostream &err) {
    return guarded(err, [&] {
        RunConfig cfg = opts.config ? load_config(*opts.config, env, err) : parse_config("", "<defaults>", env, err);
        if (opts.t2 && opts.scan_t2) {
            throw ConfigError("--t2 and --scan-t2 are mutually exclusive");
        }
        if (opts.t2) {
            cfg.fp.t2_values = {*opts.t2};
            cfg.resolved["fp.t2"] = format_double(*opts.t2);
            cfg.resolved["fp.scan_t2"] = "none";
        }
        if (opts.scan_t2) {
            cfg.fp.t2_values = parse_range(*opts.scan_t2);
            cfg.resolved["fp.scan_t2"] = *opts.scan_t2;
        }
        if (opts.phi_points) {
            cfg.fp.phi_points = *opts.phi_points;
            cfg.resolved["fp.phi_points"] = std::to_string(*opts.phi_points);
        }
        if (cfg.fp.phi_points < 8) {
            throw ConfigError("field 'fp.phi_points': must be >= 8");
        }
        for (double t2 : cfg.fp.t2_values) {
            if (!(t2 >= 0.0 && t2 <= 1.0)) {
                throw ConfigError("field 'fp.t2': " + fmt(t2) + " is outside [0, 1]");
            }
        }

        const std::vector<double> phis = phase_grid(cfg.fp.phi_points, 0.0, 2.0 * std::numbers::pi);
        std::vector<double> vis;
        for (double t2 : cfg.fp.t2_values) {
            vis.push_back(fp_visibility(t2, cfg.fp.phi_points));
        }
        const auto best = static_cast<std::size_t>(std::max_element(vis.begin(), vis.end()) - vis.begin());

        std::ostringstream csv;
        csv << "# timebin fp-curve\n";
        for (std::size_t i = 0; i < vis.size(); ++i) {
            csv << "# visibility," << fmt(cfg.fp.t2_values[i]) << "," << fmt(vis[i]) << "\n";
        }
        csv << "# best_t2," << fmt(cfg.fp.t2_values[best]) << "," << fmt(vis[best]) << "\n";
        csv << "t2,phi_sum_rad,p_coinc\n";
        for (double t2 : cfg.fp.t2_values) {
            for (double phi : phis) {
                LoopConfig loop;
                loop.t2 = t2;
                loop.phase_a = phi;
                loop.phase_b = 0.0;
                csv << fmt(t2) << "," << fmt(phi) << "," << fmt(fp_coincidence_closed(loop)) << "\n";
            }
        }
        write_file(out, csv.str());
        write_manifest(out, "fp-curve", cfg);
        log << "fp-curve: best t2 = " << cfg.fp.t2_values[best] << " with V = " << vis[best] << "\nwrote "
            << out.string() << "\n";
        return static_cast<int>(kExitOk);
    });
}

int cmd_selftest(const EnvLookup &env, std::ostream &log, std::ostream &err) {
    return guarded(err, [&]() -> int {
        // Surfaces corrupt TIMEBIN_* overrides before anything runs.
        (void)parse_config("", "<environment>", env, err);

        std::uint64_t seed = kDefaultSelftestSeed;
        if (auto s = env("TIMEBIN_SELFTEST_SEED")) {
            const char *end = s->data() + s->size();
            auto [p, ec] = std::from_chars(s->data(), end, seed);
            if (ec != std::errc{} || p != end) {
                throw ConfigError("environment: TIMEBIN_SELFTEST_SEED: not an unsigned integer: '" + *s + "'");
            }
        }

        std::vector<oracle::PropertyResult> results =
            oracle::run_property_suite(seed, oracle::library_two_way_transfer());

        // Thread-count independence of the Monte-Carlo kernel.
        ExperimentConfig mc;
        mc.train = make_pulse_train(5);
        mc.detectors = DetectorModel::ideal();
        mc.mean_pairs_per_train = 0.1;
        mc.n_trains = kBlockWindows + 1000;
        mc.rng_seed = seed;
        const std::vector<double> phases{0.0, 1.0};
        const ExperimentRun a = run_experiment(mc, phases);
        const ExperimentRun b = run_experiment_serial(mc, phases);
        bool same = a.records.size() == b.records.size();
        for (std::size_t i = 0; same && i < a.records.size(); ++i) {
            same = a.records[i].tau_ns == b.records[i].tau_ns &&
                   a.records[i].detection_bin == b.records[i].detection_bin &&
                   a.records[i].phase_index == b.records[i].phase_index;
        }
        results.push_back({"parallel Monte-Carlo kernel matches serial run", same, seed,
                           same ? "" : "parallel and serial record streams differ"});

        bool ok = true;
        for (const auto &r : results) {
            if (r.passed) {
                log << "PASS " << r.name << "\n";
            } else {
                ok = false;
                log << "FAIL " << r.name << " (seed " << r.seed << "): " << r.detail << "\n";
            }
        }
        if (!ok) {
            err << "selftest failed; rerun with TIMEBIN_SELFTEST_SEED=" << seed << "\n";
        }
        return ok ? kExitOk : kExitSelftestFailure;
    });
}

} // namespace timebin::cli
