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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "timebin/analysis.hpp"
#include "timebin/analyzers.hpp"
#include "timebin/commands.hpp"
#include "timebin/mc_lab.hpp"
#include "timebin/oracles.hpp"

using namespace timebin;
namespace fs = std::filesystem;
using std::numbers::pi;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string num(double v) {
    std::ostringstream s;
    s.precision(10);
    s << v;
    return s.str();
}

cli::EnvLookup no_env() {
    return [](const std::string &) -> std::optional<std::string> { return std::nullopt; };
}

std::string slurp(const fs::path &p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string summary(const std::string &csv, const std::string &key) {
    std::istringstream in(csv);
    std::string line;
    const std::string prefix = "# " + key + ",";
    while (std::getline(in, line)) {
        if (line.rfind(prefix, 0) == 0) {
            return line.substr(prefix.size());
        }
    }
    return "";
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Outcome visibility_bound() {
    const double mv = max_visibility(11);
    const PulseTrain t = make_pulse_train(11);
    std::vector<double> curve;
    for (int k = 0; k <= 2048; ++k) {
        curve.push_back(coincidence_probability_two_way(t, pi * k / 2048, false));
    }
    const double c = fringe_contrast(curve);
    const bool ok = std::abs(mv - 10.0 / 11.0) <= 1e-15 && std::abs(c - 10.0 / 11.0) <= 1e-12;
    return {ok, "max_visibility(11)=" + num(mv) + " sweep contrast=" + num(c)};
}

Outcome dimension_inference() {
    const DimensionBound b = dimension_bound(0.91);
    const DimensionBound e = dimension_bound(0.91, 0.06);
    const DimensionBound open = dimension_bound(0.95, 0.06);
    const bool ok = std::abs(b.bound - 1.0 / 0.09) <= 1e-12 && b.claimed_dimension == 11 && e.lower <= 6.7 &&
                    e.lower >= 6.6 && e.upper.has_value() && *e.upper > b.bound && !open.upper.has_value();
    return {ok, "bound=" + num(b.bound) + " claimed=" + std::to_string(b.claimed_dimension) + " interval(0.06)=[" +
                    num(e.lower) + ", " + (e.upper ? num(*e.upper) : "unbounded") +
                    "] upper(0.95+-0.06)=" + (open.upper ? num(*open.upper) : "unbounded")};
}

Outcome edge_discarding() {
    double worst = 0.0;
    for (int d : {2, 5, 11}) {
        const PulseTrain t = make_pulse_train(d);
        std::vector<double> curve;
        for (int k = 0; k <= 2048; ++k) {
            curve.push_back(coincidence_probability_two_way(t, pi * k / 2048, true));
        }
        worst = std::max(worst, std::abs(fringe_contrast(curve) - 1.0));
    }
    return {worst <= 1e-12, "max |contrast - 1| over D in {2,5,11} = " + num(worst)};
}

Outcome fabry_perot_optimum() {
    LoopConfig c;
    c.t2 = 1.0 / 3.0;
    const double v = fp_visibility(1.0 / 3.0, 64);
    c.phase_a = pi;
    const double dark = fp_coincidence_closed(c);
    double worst = 0.0;
    for (int k = 0; k <= 9; ++k) {
        LoopConfig z;
        z.t2 = 0.1 * k;
        worst = std::max(worst, std::abs(fp_coincidence_closed(z) - 1.0));
    }
    const bool ok = std::abs(v - 1.0) <= 1e-9 && std::abs(dark) <= 1e-12 && worst <= 1e-12;
    return {ok, "V(1/3)=" + num(v) + " P(1/3, pi)=" + num(dark) + " max|P(t2, 0) - 1|=" + num(worst)};
}

Outcome series_closed_form() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(2001);
    std::uniform_real_distribution<double> ut(0.0, 0.95);
    std::uniform_real_distribution<double> up(0.0, 2 * pi);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        LoopConfig c;
        c.t2 = ut(rng);
        c.phase_a = up(rng);
        c.max_loops = loops_for_tolerance(c.t2, 1e-12);
        worst = std::max(worst, std::abs(fp_coincidence_series(c) - fp_coincidence_closed(c)));
    }
    const double secs = seconds_since(t0);
    return {worst <= 1e-10 && secs < 1.0, "max |series - closed| = " + num(worst) + " in " + num(secs) + " s"};
}

Outcome loop_unitarity() {
    double worst = 0.0;
    for (double t2 : {0.01, 1.0 / 3.0, 0.9}) {
        LoopConfig c;
        c.t2 = t2;
        double sum = 0.0;
        for (int n = 0; n <= 500; ++n) {
            sum += std::norm(loop_exit_amplitude(n, c, Arm::A));
        }
        worst = std::max(worst, std::abs(sum - 1.0));
    }
    return {worst <= 1e-10, "max |sum - 1| = " + num(worst)};
}

Outcome brute_force_equivalence() {
    const auto transfer = oracle::library_two_way_transfer();
    double worst = 0.0;
    int trains = 0;
    auto check = [&](const PulseTrain &t) {
        ++trains;
        for (int k = 0; k < 16; ++k) {
            const double delta = 2 * pi * k / 16 + 0.05;
            worst = std::max(worst, oracle::max_amplitude_difference(transfer(t, delta),
                                                                     oracle::two_way_by_enumeration(t, delta)));
        }
    };
    for (int d = 1; d <= 6; ++d) {
        check(make_pulse_train(d));
    }
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 20; ++i) {
        const int d = 1 + i % 6;
        std::vector<double> a(d), p(d);
        for (int j = 0; j < d; ++j) {
            a[j] = 0.05 + u(rng);
            p[j] = 2 * pi * u(rng);
        }
        check(make_pulse_train(d, a, p));
    }
    return {worst <= 1e-12, std::to_string(trains) + " trains, max amplitude difference = " + num(worst)};
}

Outcome monte_carlo_convergence() {
    ExperimentConfig cfg;
    cfg.train = make_pulse_train(11);
    cfg.detectors = DetectorModel::ideal();
    cfg.mean_pairs_per_train = 0.05;
    cfg.n_trains = 1'000'000;
    cfg.rng_seed = 8;
    const auto phases = phase_grid(12, 0.0, pi);
    const auto t0 = std::chrono::steady_clock::now();
    const ExperimentRun run = run_experiment_serial(cfg, phases);
    const double secs = seconds_since(t0);
    const auto counts = window_counts_by_phase(run, 0.0, 1.0);
    std::vector<FringePoint> pts;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        const auto c = static_cast<double>(counts[i]);
        pts.push_back({phases[i], c, std::sqrt(std::max(c, 1.0))});
    }
    const FitResult f = fit_fringe(pts);
    const double z = std::abs(f.visibility - 10.0 / 11.0) / f.visibility_err;
    return {z <= 3.0 && secs < 60.0, "V = " + num(f.visibility) + " +- " + num(f.visibility_err) + " (" + num(z) +
                                         " sigma from 10/11), serial run " + num(secs) + " s"};
}

Outcome noise_pipeline() {
    // Accidental rate from a pair-free run against the closed-form prediction.
    ExperimentConfig cal;
    cal.mean_pairs_per_train = 0.0;
    cal.n_trains = 2'000'000'000;
    cal.rng_seed = 91;
    const std::vector<double> one{0.0};
    const ExperimentRun cal_run = run_experiment(cal, one);
    const auto measured = static_cast<double>(cal_run.records.size());
    const double predicted = predicted_accidentals(cal);
    const double z_acc = std::abs(measured - predicted) / std::sqrt(predicted);

    std::ostringstream warn;
    const cli::RunConfig cfg = cli::parse_config(R"(
[detectors]
preset = lab
[experiment]
mean_pairs = 0.1
n_trains = 200000000
seed = 92
)",
                                                 "<acceptance>", no_env(), warn);
    const cli::FringeReport rep = cli::analyze_fringe(cfg, cli::simulate(cfg));
    if (!rep.net) {
        return {false, "no background correction was produced"};
    }
    const double z_net = std::abs(rep.net->visibility - 10.0 / 11.0) / rep.net->visibility_err;
    const bool ok = z_acc <= 3.0 && z_net <= 3.0 && rep.raw.visibility < rep.net->visibility;
    return {ok, "accidentals " + num(measured) + " vs predicted " + num(predicted) + " (" + num(z_acc) +
                    " sigma); raw V = " + num(rep.raw.visibility) + ", net V = " + num(rep.net->visibility) + " +- " +
                    num(rep.net->visibility_err) + " (" + num(z_net) + " sigma from 10/11)"};
}

Outcome histogram_structure(const fs::path &dir) {
    const std::string text = R"(
[detectors]
preset = lab
gate_width_ns = 60
[experiment]
mean_pairs = 0.1
n_trains = 50000000
seed = 93
)";
    const fs::path cfg = dir / "hist.cfg";
    std::ofstream(cfg) << text;
    std::ostringstream log, err;
    const int rh = cli::cmd_histogram(cfg, dir / "hist.csv", no_env(), log, err);
    const int rf = cli::cmd_fringe(cfg, dir / "fringe.csv", no_env(), log, err);
    if (rh != 0 || rf != 0) {
        return {false, "command failed: " + err.str()};
    }
    std::ostringstream warn;
    const cli::RunConfig rc = cli::load_config(cfg, no_env(), warn);
    const ExperimentRun run = cli::simulate(rc);
    const Histogram h = tac_histogram(run.records, 1.0, 80.0);
    std::vector<std::int64_t> sorted = h.counts;
    std::sort(sorted.begin(), sorted.end());
    const auto background = static_cast<double>(sorted[sorted.size() / 2]);
    const double threshold = background + 5.0 * std::sqrt(std::max(background, 1.0));
    std::vector<double> peaks;
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
        if (static_cast<double>(h.counts[i]) > threshold) {
            peaks.push_back(h.centers_ns[i]);
        }
    }
    bool on_grid = !peaks.empty();
    std::string list;
    for (double p : peaks) {
        on_grid = on_grid && std::fmod(std::abs(p), 13.0) == 0.0;
        list += (list.empty() ? "" : " ") + num(p);
    }
    const bool has_three = std::count(peaks.begin(), peaks.end(), 0.0) == 1 &&
                           std::count(peaks.begin(), peaks.end(), 13.0) == 1 &&
                           std::count(peaks.begin(), peaks.end(), -13.0) == 1;
    const std::string hw = summary(slurp(dir / "hist.csv"), "window_count");
    const std::string fw = summary(slurp(dir / "fringe.csv"), "window_count");
    const bool ok = on_grid && has_three && !hw.empty() && hw == fw;
    return {ok, "peaks at {" + list + "} ns over background " + num(background) + "/bin; window count histogram=" +
                    hw + " fringe=" + fw};
}

Outcome determinism(const fs::path &dir) {
    const fs::path cfg = dir / "det.cfg";
    std::ofstream(cfg) << "[detectors]\neta_ge = 0.5\neta_ingaas = 0.5\nchannel_loss_db = 0\ndark_rate_ge = 1e5\n"
                          "noise_prob_ingaas = 1e-3\ngate_width_ns = 60\n"
                          "[experiment]\nmean_pairs = 0.1\nn_trains = 2000000\nseed = 94\n";
    std::ostringstream log, err;
    std::string detail;
    bool ok = true;
    const std::vector<std::pair<std::string, std::function<int(const fs::path &)>>> commands{
        {"fringe", [&](const fs::path &o) { return cli::cmd_fringe(cfg, o, no_env(), log, err); }},
        {"histogram", [&](const fs::path &o) { return cli::cmd_histogram(cfg, o, no_env(), log, err); }},
        {"fp-curve",
         [&](const fs::path &o) {
             cli::FpCurveOptions opts;
             opts.scan_t2 = "0.05:0.95:19";
             return cli::cmd_fp_curve(opts, o, no_env(), log, err);
         }},
    };
    for (const auto &[name, run] : commands) {
        const fs::path out = dir / (name + ".csv");
        if (run(out) != 0) {
            return {false, name + " failed: " + err.str()};
        }
        const std::string csv1 = slurp(out);
        const std::string man1 = slurp(cli::manifest_path(out));
        if (run(out) != 0) {
            return {false, name + " failed: " + err.str()};
        }
        const bool same = csv1 == slurp(out) && man1 == slurp(cli::manifest_path(out)) && !csv1.empty();
        ok = ok && same;
        detail += name + (same ? " identical; " : " DIFFERS; ");
    }
    return {ok, detail};
}

} // namespace

int main() {
    const fs::path dir = fs::temp_directory_path() / "timebin_acceptance";
    fs::remove_all(dir);
    fs::create_directories(dir);

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"visibility bound", visibility_bound},
        {"dimension inference", dimension_inference},
        {"edge discarding", edge_discarding},
        {"fiber-loop optimum", fabry_perot_optimum},
        {"series vs closed form", series_closed_form},
        {"loop unitarity", loop_unitarity},
        {"brute-force equivalence", brute_force_equivalence},
        {"Monte-Carlo convergence", monte_carlo_convergence},
        {"noise pipeline", noise_pipeline},
        {"histogram structure", [&] { return histogram_structure(dir); }},
        {"determinism", [&] { return determinism(dir); }},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception &e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += o.pass ? 0 : 1;
        std::printf("criterion %2zu %s  %s: %s\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                    o.detail.c_str());
        std::fflush(stdout);
    }
    fs::remove_all(dir);
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
