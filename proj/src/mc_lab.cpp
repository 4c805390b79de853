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

#include "timebin/mc_lab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mc_detail.hpp"

namespace timebin {

DetectorModel DetectorModel::ideal() {
    DetectorModel d;
    d.eta_ge = 1.0;
    d.eta_ingaas = 1.0;
    d.dark_rate_ge = 0.0;
    d.noise_prob_ingaas = 0.0;
    d.channel_loss_db = 0.0;
    return d;
}

double DetectorModel::channel_transmission() const { return std::pow(10.0, -channel_loss_db / 10.0); }

void DetectorModel::validate() const {
    auto unit = [](double x) { return x >= 0.0 && x <= 1.0; };
    if (!unit(eta_ge) || !unit(eta_ingaas)) {
        throw InvalidArgument("detector efficiencies must lie in [0, 1]");
    }
    if (!(dark_rate_ge >= 0.0) || !(noise_prob_ingaas >= 0.0) || !(channel_loss_db >= 0.0) ||
        !std::isfinite(dark_rate_ge) || !std::isfinite(noise_prob_ingaas) ||
        !std::isfinite(channel_loss_db)) {
        throw InvalidArgument("detector rates and losses must be finite and >= 0");
    }
    if (!(gate_width_ns > 0.0) || !(coincidence_window_ns > 0.0)) {
        throw InvalidArgument("gate and coincidence windows must be > 0");
    }
}

void ExperimentConfig::validate() const {
    detectors.validate();
    std::visit([](const auto &a) { a.validate(); }, analyzer);
    if (!(mean_pairs_per_train >= 0.0 && mean_pairs_per_train < 1.0)) {
        throw InvalidArgument("mean pairs per train must lie in [0, 1)");
    }
    if (n_trains < 1) {
        throw InvalidArgument("n_trains must be >= 1");
    }
}

// ---------------------------------------------------------------------------
// Outcome table

double OutcomeTable::probability(BinPair outcome) const {
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        if (outcomes[i] == outcome) {
            return probabilities[i];
        }
    }
    return 0.0;
}

double OutcomeTable::total() const {
    double s = 0.0;
    for (double p : probabilities) {
        s += p;
    }
    return s;
}

double OutcomeTable::monitored_total() const {
    double s = 0.0;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        if (outcomes[i].a != kNotMonitored && outcomes[i].b != kNotMonitored) {
            s += probabilities[i];
        }
    }
    return s;
}

double OutcomeTable::conditional_probability(BinPair outcome) const {
    const double m = monitored_total();
    return m > 0.0 ? probability(outcome) / m : 0.0;
}

double OutcomeTable::a_monitored_total() const {
    double s = 0.0;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        if (outcomes[i].a != kNotMonitored) {
            s += probabilities[i];
        }
    }
    return s;
}

double OutcomeTable::tau0_total() const {
    double s = 0.0;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        if (outcomes[i].a != kNotMonitored && outcomes[i].a == outcomes[i].b) {
            s += probabilities[i];
        }
    }
    return s;
}

namespace {

// Per-photon monitored-port kernel: amplitude for moving n bins later.
struct Kernel {
    std::vector<Amplitude> a;
    std::vector<Amplitude> b;
};

Kernel make_kernel(const AnalyzerConfig &analyzer) {
    Kernel k;
    if (const auto *tw = std::get_if<TwoWayConfig>(&analyzer)) {
        const double p = tw->per_path_amplitude;
        k.a = {p, p * std::polar(1.0, tw->delta)};
        k.b = k.a;
    } else {
        const auto &loop = std::get<LoopConfig>(analyzer);
        for (int n = 0; n <= loop.max_loops; ++n) {
            k.a.push_back(unitary_loop_exit_amplitude(n, loop, Arm::A));
            k.b.push_back(unitary_loop_exit_amplitude(n, loop, Arm::B));
        }
    }
    return k;
}

} // namespace

OutcomeTable sample_outcome_distribution(const PulseTrain &train, const AnalyzerConfig &analyzer) {
    std::visit([](const auto &a) { a.validate(); }, analyzer);
    if (const auto *tw = std::get_if<TwoWayConfig>(&analyzer);
        tw && tw->per_path_amplitude > 0.5) {
        throw InvalidArgument("a Michelson monitored port has per-path amplitude <= 1/2");
    }

    const Kernel kernel = make_kernel(analyzer);
    const int d = train.dimension();
    const int reach = static_cast<int>(kernel.a.size()) - 1;
    const int slots = d + reach;
    const auto stride = static_cast<std::size_t>(slots + 1);

    // joint[a * stride + b], bins 1..slots
    std::vector<double> joint(stride * stride, 0.0);
    if (std::holds_alternative<TwoWayConfig>(analyzer)) {
        const auto out = apply_two_way(pdc_state(train), std::get<TwoWayConfig>(analyzer));
        for (const auto &[pair, amp] : out) {
            joint[static_cast<std::size_t>(pair.a) * stride + static_cast<std::size_t>(pair.b)] =
                std::norm(amp);
        }
    } else {
        std::vector<Amplitude> amp(stride * stride);
        for (int j = 1; j <= d; ++j) {
            const auto idx = static_cast<std::size_t>(j - 1);
            const Amplitude c = std::polar(train.amplitudes()[idx], train.phases()[idx]);
            for (int na = 0; na <= reach; ++na) {
                const Amplitude ca = c * kernel.a[static_cast<std::size_t>(na)];
                const auto row = static_cast<std::size_t>(j + na) * stride;
                for (int nb = 0; nb <= reach; ++nb) {
                    amp[row + static_cast<std::size_t>(j + nb)] +=
                        ca * kernel.b[static_cast<std::size_t>(nb)];
                }
            }
        }
        for (std::size_t i = 0; i < amp.size(); ++i) {
            joint[i] = std::norm(amp[i]);
        }
    }

    // Single-photon marginals at the monitored port. The reduced state of
    // either photon is diagonal in the creation bin.
    std::vector<double> marginal_a(stride, 0.0);
    std::vector<double> marginal_b(stride, 0.0);
    for (int j = 1; j <= d; ++j) {
        const double c2 = std::pow(train.amplitudes()[static_cast<std::size_t>(j - 1)], 2);
        for (int n = 0; n <= reach; ++n) {
            marginal_a[static_cast<std::size_t>(j + n)] += c2 * std::norm(kernel.a[static_cast<std::size_t>(n)]);
            marginal_b[static_cast<std::size_t>(j + n)] += c2 * std::norm(kernel.b[static_cast<std::size_t>(n)]);
        }
    }

    const auto at = [&](int a, int b) {
        return joint[static_cast<std::size_t>(a) * stride + static_cast<std::size_t>(b)];
    };
    // Mass where only the other photon reaches a monitored port.
    std::vector<double> a_only(stride, 0.0);
    std::vector<double> b_only(stride, 0.0);
    double monitored = 0.0;
    for (int x = 1; x <= slots; ++x) {
        double row = 0.0;
        double col = 0.0;
        for (int y = 1; y <= slots; ++y) {
            row += at(x, y);
            col += at(y, x);
        }
        monitored += row;
        a_only[static_cast<std::size_t>(x)] = std::max(0.0, marginal_a[static_cast<std::size_t>(x)] - row);
        b_only[static_cast<std::size_t>(x)] = std::max(0.0, marginal_b[static_cast<std::size_t>(x)] - col);
    }
    double partial = monitored;
    for (std::size_t x = 1; x < stride; ++x) {
        partial += a_only[x] + b_only[x];
    }

    OutcomeTable table;
    table.detection_slots = slots;
    auto push = [&](int a, int b, double p) {
        if (p > 1e-16) {  // rounding residue of the marginal differences
            table.outcomes.push_back({a, b});
            table.probabilities.push_back(p);
        }
    };
    push(kNotMonitored, kNotMonitored, std::max(0.0, 1.0 - partial));
    for (int b = 1; b <= slots; ++b) {
        push(kNotMonitored, b, b_only[static_cast<std::size_t>(b)]);
    }
    for (int a = 1; a <= slots; ++a) {
        push(a, kNotMonitored, a_only[static_cast<std::size_t>(a)]);
        for (int b = 1; b <= slots; ++b) {
            push(a, b, at(a, b));
        }
    }
    return table;
}

AnalyzerConfig with_phase(const AnalyzerConfig &analyzer, double phase) {
    AnalyzerConfig out = analyzer;
    if (auto *tw = std::get_if<TwoWayConfig>(&out)) {
        tw->delta = phase;
    } else {
        std::get<LoopConfig>(out).phase_a = phase;
    }
    return out;
}

namespace {

int detection_slots(const ExperimentConfig &cfg) {
    int reach = 1;
    if (const auto *loop = std::get_if<LoopConfig>(&cfg.analyzer)) {
        reach = loop->max_loops;
    }
    return cfg.train.dimension() + reach;
}

} // namespace

double window_duration_ns(const ExperimentConfig &cfg) {
    return detection_slots(cfg) * cfg.train.bin_spacing_ns();
}

double predicted_accidentals(const ExperimentConfig &cfg) {
    const auto &det = cfg.detectors;
    const double darks = det.dark_rate_ge * window_duration_ns(cfg) * 1e-9;
    return darks * static_cast<double>(cfg.n_trains) *
           std::min(1.0, det.noise_prob_ingaas * det.gate_width_ns);
}

// ---------------------------------------------------------------------------
// Shared kernel pieces

namespace detail {

std::uint64_t stream_seed(std::uint64_t base, std::uint64_t phase_index, std::uint64_t block) {
    // splitmix64 finalizer applied to a mixed key
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    return mix(mix(mix(base) ^ phase_index) ^ (block * 0xd1b54a32d192ed03ULL));
}

PhasePlan make_phase_plan(const ExperimentConfig &cfg, double phase) {
    PhasePlan plan;
    plan.phase = phase;
    plan.table = sample_outcome_distribution(cfg.train, with_phase(cfg.analyzer, phase));
    const auto &probs = plan.table.probabilities;
    plan.all_outcomes = std::discrete_distribution<int>::param_type(probs.begin(), probs.end());

    std::vector<double> a_weights;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (plan.table.outcomes[i].a != kNotMonitored) {
            plan.a_monitored_index.push_back(static_cast<int>(i));
            a_weights.push_back(probs[i]);
            plan.p_a_monitored += probs[i];
        }
    }
    if (!a_weights.empty()) {
        plan.a_monitored =
            std::discrete_distribution<int>::param_type(a_weights.begin(), a_weights.end());
    }
    plan.p_a_monitored = std::min(1.0, plan.p_a_monitored / plan.table.total());
    return plan;
}

WindowParams make_window_params(const ExperimentConfig &cfg) {
    const auto &det = cfg.detectors;
    WindowParams wp;
    wp.mu = cfg.mean_pairs_per_train;
    wp.q_ge = det.channel_transmission() * det.eta_ge;
    wp.q_in = det.channel_transmission() * det.eta_ingaas;
    wp.window_ns = window_duration_ns(cfg);
    wp.lambda = det.dark_rate_ge * wp.window_ns * 1e-9;
    wp.dt = cfg.train.bin_spacing_ns();
    wp.gate_ns = det.gate_width_ns;
    wp.p_noise = std::min(1.0, det.noise_prob_ingaas * det.gate_width_ns);
    wp.slots = detection_slots(cfg);
    return wp;
}

void resolve_window(const PairDraw &pair, std::vector<double> &dark_times, const WindowParams &wp,
                    double phase, int phase_index, Rng &rng, BlockResult &out) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    struct GeClick {
        double t;
        bool photon;
    };
    std::vector<GeClick> clicks;
    clicks.reserve(dark_times.size() + 1);
    for (double t : dark_times) {
        clicks.push_back({t, false});
    }
    if (pair.a_click) {
        clicks.push_back({(pair.outcome.a - 1) * wp.dt, true});
    }
    std::stable_sort(clicks.begin(), clicks.end(),
                     [](const GeClick &x, const GeClick &y) { return x.t < y.t; });

    bool b_pending = pair.b_alive;
    const double t_b = (pair.outcome.b - 1) * wp.dt;
    const double half = 0.5 * wp.gate_ns;
    if (out.triggers_by_bin.empty()) {
        out.triggers_by_bin.assign(static_cast<std::size_t>(wp.slots) + 1, 0);
    }
    for (const GeClick &g : clicks) {
        const int bin = std::clamp(static_cast<int>(std::floor(g.t / wp.dt)) + 1, 1, wp.slots);
        ++out.ge_triggers;
        ++out.triggers_by_bin[static_cast<std::size_t>(bin)];
        const double lo = g.t - half;
        const double hi = g.t + half;
        const bool photon_in = b_pending && t_b >= lo && t_b <= hi;
        const bool noise = wp.p_noise > 0.0 && unit(rng) < wp.p_noise;
        const double t_noise = noise ? lo + wp.gate_ns * unit(rng)
                                     : std::numeric_limits<double>::infinity();
        if (!photon_in && !noise) {
            continue;
        }
        CoincidenceRecord rec;
        rec.detection_bin = bin;
        rec.phase_setting = phase;
        rec.phase_index = phase_index;
        if (photon_in && t_b <= t_noise) {
            rec.tau_ns = t_b - g.t;
            rec.true_coincidence = g.photon;
            b_pending = false;
        } else {
            rec.tau_ns = t_noise - g.t;
        }
        out.records.push_back(rec);
    }
}

} // namespace detail

// ---------------------------------------------------------------------------
// Block kernel

namespace {

using detail::BlockResult;
using detail::PairDraw;
using detail::PhasePlan;
using detail::Rng;
using detail::WindowParams;

int zero_truncated_poisson(double lambda, Rng &rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double u = unit(rng);
    // P(K = k | K >= 1) = e^{-l} l^k / k! / (1 - e^{-l})
    double pk = lambda * std::exp(-lambda) / -std::expm1(-lambda);
    double cum = pk;
    int k = 1;
    while (u > cum && k < 100000) {
        ++k;
        pk *= lambda / k;
        cum += pk;
        if (pk == 0.0) {
            break;
        }
    }
    return k;
}

void fill_dark_times(int count, double window_ns, Rng &rng, std::vector<double> &times) {
    std::uniform_real_distribution<double> when(0.0, window_ns);
    times.clear();
    for (int i = 0; i < count; ++i) {
        times.push_back(when(rng));
    }
}

/**
 * Simulates `n_windows` train windows but only touches those with at least
 * one Ge click; every other window produces no gate and therefore no record.
 * The gap to the next triggered window is geometric with
 * p = 1 - (1 - p_A) e^{-lambda}, where p_A is the photon-a click probability.
 */
BlockResult simulate_block(const PhasePlan &plan, const WindowParams &wp, int phase_index,
                           std::int64_t n_windows, std::uint64_t seed) {
    BlockResult out;
    Rng rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::discrete_distribution<int> any_outcome(plan.all_outcomes);
    std::discrete_distribution<int> a_outcome(plan.a_monitored);

    const double p_a = wp.mu * plan.p_a_monitored * wp.q_ge;
    const double p_no_dark = std::exp(-wp.lambda);
    const double p_trigger = 1.0 - (1.0 - p_a) * p_no_dark;
    if (!(p_trigger > 0.0)) {
        return out;
    }
    // pair present given that photon a did not click
    const double p_pair_silent = p_a < 1.0 ? wp.mu * (1.0 - plan.p_a_monitored * wp.q_ge) / (1.0 - p_a) : 0.0;

    std::geometric_distribution<std::int64_t> gap(std::min(1.0, p_trigger));
    std::poisson_distribution<int> darks(wp.lambda > 0.0 ? wp.lambda : 1.0);
    std::vector<double> dark_times;

    std::int64_t pos = -1;
    while (true) {
        pos += gap(rng) + 1;
        if (pos >= n_windows) {
            break;
        }
        PairDraw pair;
        int n_dark = 0;
        if (unit(rng) * p_trigger < p_a) {
            pair.present = true;
            pair.outcome = plan.table.outcomes[static_cast<std::size_t>(
                plan.a_monitored_index[static_cast<std::size_t>(a_outcome(rng))])];
            pair.a_click = true;
            n_dark = wp.lambda > 0.0 ? darks(rng) : 0;
        } else {
            n_dark = zero_truncated_poisson(wp.lambda, rng);
            if (unit(rng) < p_pair_silent) {
                pair.present = true;
                do {
                    pair.outcome = plan.table.outcomes[static_cast<std::size_t>(any_outcome(rng))];
                    pair.a_click = pair.outcome.a != kNotMonitored && unit(rng) < wp.q_ge;
                } while (pair.a_click);
            }
        }
        if (pair.present) {
            pair.b_alive = pair.outcome.b != kNotMonitored && unit(rng) < wp.q_in;
        }
        fill_dark_times(n_dark, wp.window_ns, rng, dark_times);
        detail::resolve_window(pair, dark_times, wp, plan.phase, phase_index, rng, out);
    }
    return out;
}

struct Task {
    int phase_index;
    std::int64_t block;
    std::int64_t windows;
};

std::vector<Task> make_tasks(std::size_t n_phases, std::int64_t n_trains) {
    std::vector<Task> tasks;
    const std::int64_t n_blocks = (n_trains + kBlockWindows - 1) / kBlockWindows;
    for (std::size_t p = 0; p < n_phases; ++p) {
        for (std::int64_t b = 0; b < n_blocks; ++b) {
            tasks.push_back({static_cast<int>(p), b, std::min(kBlockWindows, n_trains - b * kBlockWindows)});
        }
    }
    return tasks;
}

ExperimentRun merge(const ExperimentConfig &cfg, std::span<const double> phases,
                    const std::vector<Task> &tasks, std::vector<BlockResult> &blocks) {
    ExperimentRun run;
    run.window_ns = window_duration_ns(cfg);
    const auto slots = static_cast<std::size_t>(detail::make_window_params(cfg).slots);
    for (double ph : phases) {
        run.stats.push_back({ph, cfg.n_trains, 0, 0, std::vector<std::int64_t>(slots + 1, 0)});
    }
    std::size_t total = 0;
    for (const auto &b : blocks) {
        total += b.records.size();
    }
    run.records.reserve(total);
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        auto &st = run.stats[static_cast<std::size_t>(tasks[i].phase_index)];
        st.ge_triggers += blocks[i].ge_triggers;
        for (std::size_t k = 0; k < blocks[i].triggers_by_bin.size(); ++k) {
            st.ge_triggers_by_bin[k] += blocks[i].triggers_by_bin[k];
        }
        st.coincidences += static_cast<std::int64_t>(blocks[i].records.size());
        run.records.insert(run.records.end(), blocks[i].records.begin(), blocks[i].records.end());
    }
    return run;
}

std::vector<PhasePlan> make_plans(const ExperimentConfig &cfg, std::span<const double> phases) {
    std::vector<PhasePlan> plans;
    plans.reserve(phases.size());
    for (double ph : phases) {
        plans.push_back(detail::make_phase_plan(cfg, ph));
    }
    return plans;
}

} // namespace

ExperimentRun run_experiment(const ExperimentConfig &cfg, std::span<const double> phase_settings) {
    cfg.validate();
    const auto plans = make_plans(cfg, phase_settings);
    const WindowParams wp = detail::make_window_params(cfg);
    const auto tasks = make_tasks(phase_settings.size(), cfg.n_trains);
    std::vector<BlockResult> blocks(tasks.size());

    const auto n_tasks = static_cast<std::int64_t>(tasks.size());
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < n_tasks; ++i) {
        const Task &t = tasks[static_cast<std::size_t>(i)];
        blocks[static_cast<std::size_t>(i)] = simulate_block(
            plans[static_cast<std::size_t>(t.phase_index)], wp, t.phase_index, t.windows,
            detail::stream_seed(cfg.rng_seed, static_cast<std::uint64_t>(t.phase_index),
                                static_cast<std::uint64_t>(t.block)));
    }
    return merge(cfg, phase_settings, tasks, blocks);
}

ExperimentRun run_experiment_serial(const ExperimentConfig &cfg,
                                    std::span<const double> phase_settings) {
    cfg.validate();
    const auto plans = make_plans(cfg, phase_settings);
    const WindowParams wp = detail::make_window_params(cfg);
    const auto tasks = make_tasks(phase_settings.size(), cfg.n_trains);
    std::vector<BlockResult> blocks;
    blocks.reserve(tasks.size());
    for (const Task &t : tasks) {
        blocks.push_back(simulate_block(
            plans[static_cast<std::size_t>(t.phase_index)], wp, t.phase_index, t.windows,
            detail::stream_seed(cfg.rng_seed, static_cast<std::uint64_t>(t.phase_index),
                                static_cast<std::uint64_t>(t.block))));
    }
    return merge(cfg, phase_settings, tasks, blocks);
}

// ---------------------------------------------------------------------------
// Histogramming

Histogram tac_histogram(std::span<const CoincidenceRecord> records, double bin_width_ns,
                        double span_ns) {
    if (!(bin_width_ns > 0.0) || !(span_ns >= 0.0)) {
        throw InvalidArgument("histogram bin width must be > 0 and span >= 0");
    }
    const auto half_bins = static_cast<std::int64_t>(std::floor(0.5 * span_ns / bin_width_ns + 1e-9));
    Histogram h;
    h.bin_width_ns = bin_width_ns;
    for (std::int64_t k = -half_bins; k <= half_bins; ++k) {
        h.centers_ns.push_back(static_cast<double>(k) * bin_width_ns);
    }
    h.counts.assign(h.centers_ns.size(), 0);
    for (const auto &r : records) {
        const auto k = static_cast<std::int64_t>(std::floor(r.tau_ns / bin_width_ns + 0.5));
        if (k < -half_bins || k > half_bins) {
            ++h.out_of_range;
        } else {
            ++h.counts[static_cast<std::size_t>(k + half_bins)];
        }
    }
    return h;
}

std::int64_t select_window(std::span<const CoincidenceRecord> records, double center_ns,
                           double width_ns) {
    if (!(width_ns > 0.0)) {
        throw InvalidArgument("window width must be > 0");
    }
    return std::count_if(records.begin(), records.end(), [&](const CoincidenceRecord &r) {
        return std::abs(r.tau_ns - center_ns) <= 0.5 * width_ns;
    });
}

std::int64_t select_window(const Histogram &hist, double center_ns, double width_ns) {
    if (!(width_ns > 0.0)) {
        throw InvalidArgument("window width must be > 0");
    }
    std::int64_t n = 0;
    for (std::size_t i = 0; i < hist.counts.size(); ++i) {
        if (std::abs(hist.centers_ns[i] - center_ns) <= 0.5 * width_ns) {
            n += hist.counts[i];
        }
    }
    return n;
}

std::vector<std::int64_t> window_counts_by_phase(const ExperimentRun &run, double center_ns,
                                                 double width_ns) {
    std::vector<std::int64_t> counts(run.stats.size(), 0);
    for (const auto &r : run.records) {
        if (std::abs(r.tau_ns - center_ns) <= 0.5 * width_ns) {
            ++counts[static_cast<std::size_t>(r.phase_index)];
        }
    }
    return counts;
}

} // namespace timebin
