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

/**
 * @file
 * Monte-Carlo model of the coincidence experiment.
 *
 * Each train window may emit one photon pair (Bernoulli, mean pairs per
 * window mu). The joint detection bins are drawn from the exact Born-rule
 * table of the analyzed state, so coherence between creation bins is never
 * broken by sampling. Photon a goes to a free-running Ge detector, photon b
 * to a gated InGaAs detector whose gate is opened by every Ge click.
 *
 * Timing: bin d is detected at (d - 1) * bin_spacing. Dark and noise clicks
 * happen at continuous times. Every Ge click opens a gate of `gate_width_ns`
 * centred on the delay-compensated tau = 0 position; the first InGaAs click
 * inside the gate (photon b or a noise avalanche) closes it and yields a
 * coincidence record with tau = t_InGaAs - t_Ge.
 *
 * Windows are simulated in fixed-size blocks, each with its own RNG stream
 * derived from (seed, phase index, block index). Results do not depend on
 * the number of OpenMP threads.
 */

#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "timebin/analyzers.hpp"
#include "timebin/core.hpp"

namespace timebin {

struct DetectorModel {
    double eta_ge = 0.10;             ///< 1310 nm arm efficiency
    double dark_rate_ge = 30'000.0;   ///< Ge dark counts per second
    double eta_ingaas = 0.20;         ///< 1550 nm arm efficiency
    double noise_prob_ingaas = 5e-5;  ///< InGaAs noise probability per ns of gate
    double gate_width_ns = 1.0;
    double coincidence_window_ns = 1.0;
    double channel_loss_db = 12.0;    ///< per photon

    /// Unit efficiencies, no noise, no loss. The gate is left at its default.
    static DetectorModel ideal();

    double channel_transmission() const;
    void validate() const;
};

using AnalyzerConfig = std::variant<TwoWayConfig, LoopConfig>;

struct ExperimentConfig {
    PulseTrain train = make_pulse_train(11);
    AnalyzerConfig analyzer = TwoWayConfig{};
    DetectorModel detectors;
    double mean_pairs_per_train = 0.05;
    std::int64_t n_trains = 1;  ///< windows per phase setting
    std::uint64_t rng_seed = 0;

    /// mu in [0, 1) and n_trains >= 1, plus nested validation.
    void validate() const;
};

/// Detection bin value meaning the photon did not reach a monitored detector
/// port (Michelson return port, or beyond the loop truncation).
inline constexpr int kNotMonitored = 0;

/**
 * Exact joint outcome distribution of one emitted pair.
 *
 * Entries with both bins >= 1 are the monitored-port joint probabilities
 * |amplitude|^2. Entries with a kNotMonitored bin carry the mass where one
 * or both photons leave through an unmonitored port, so the table sums to 1.
 */
struct OutcomeTable {
    std::vector<BinPair> outcomes;
    std::vector<double> probabilities;
    int detection_slots = 0;  ///< bins 1..detection_slots can be populated

    double probability(BinPair outcome) const;
    double total() const;
    /// Mass with both photons at monitored ports.
    double monitored_total() const;
    /// probability(outcome) / monitored_total() for monitored outcomes.
    double conditional_probability(BinPair outcome) const;
    /// Mass with photon a at a monitored port.
    double a_monitored_total() const;
    /// Sum over bins of probability({j, j}).
    double tau0_total() const;
};

/**
 * Born-rule table for the down-converted state of `train` behind `analyzer`.
 *
 * Two-way: the monitored joint map is apply_two_way(pdc_state(train)).
 * Loop: amplitudes sum_j c_j e^{i phi_j} U_a(d_a - j) U_b(d_b - j) with the
 * unitary coupler convention and n <= max_loops round trips per photon.
 * Throws InvalidArgument for a two-way per_path_amplitude above 1/2.
 */
OutcomeTable sample_outcome_distribution(const PulseTrain &train, const AnalyzerConfig &analyzer);

/// Returns a copy of `analyzer` with its scanned phase set: delta for the
/// two-way interferometer, phase_a for the loop.
AnalyzerConfig with_phase(const AnalyzerConfig &analyzer, double phase);

struct CoincidenceRecord {
    double tau_ns = 0.0;
    int detection_bin = 0;          ///< bin of the Ge click
    bool true_coincidence = false;  ///< both clicks came from the pair
    double phase_setting = 0.0;
    int phase_index = 0;
};

struct PhaseStats {
    double phase = 0.0;
    std::int64_t windows = 0;
    std::int64_t ge_triggers = 0;
    std::int64_t coincidences = 0;
    /// Ge triggers by detection bin; index 0 unused.
    std::vector<std::int64_t> ge_triggers_by_bin;
};

struct ExperimentRun {
    std::vector<CoincidenceRecord> records;  ///< phase-major, then time order
    std::vector<PhaseStats> stats;
    double window_ns = 0.0;  ///< duration of one train window
};

/// Windows per RNG block. Part of the reproducibility contract.
inline constexpr std::int64_t kBlockWindows = std::int64_t{1} << 20;

/// OpenMP-parallel over (phase, block) tasks.
ExperimentRun run_experiment(const ExperimentConfig &cfg, std::span<const double> phase_settings);

/// Same kernel and RNG streams, executed in order on one thread.
ExperimentRun run_experiment_serial(const ExperimentConfig &cfg,
                                    std::span<const double> phase_settings);

/// Direct per-window simulation: samples every window's pair, survival and
/// dark counts without skipping. Statistically equivalent to run_experiment,
/// not bit-identical; kept as the slow reference.
ExperimentRun run_experiment_reference(const ExperimentConfig &cfg,
                                       std::span<const double> phase_settings);

/// Duration of one train window: detection slots times the bin spacing.
double window_duration_ns(const ExperimentConfig &cfg);

/// Expected accidental coincidences per phase setting with no pairs:
/// dark_rate_ge * window duration * n_trains * noise_prob_ingaas * gate_width.
double predicted_accidentals(const ExperimentConfig &cfg);

struct Histogram {
    double bin_width_ns = 1.0;
    std::vector<double> centers_ns;  ///< bin k is centred at k * bin_width
    std::vector<std::int64_t> counts;
    std::int64_t out_of_range = 0;
};

/// Counts records by tau into bins of `bin_width` covering [-span/2, span/2].
Histogram tac_histogram(std::span<const CoincidenceRecord> records, double bin_width_ns,
                        double span_ns);

/// Records with |tau - center| <= width / 2.
std::int64_t select_window(std::span<const CoincidenceRecord> records, double center_ns,
                           double width_ns);

/// Sum of histogram bins whose centre satisfies |c - center| <= width / 2.
std::int64_t select_window(const Histogram &hist, double center_ns, double width_ns);

/// select_window applied per phase index; result has one entry per phase.
std::vector<std::int64_t> window_counts_by_phase(const ExperimentRun &run, double center_ns,
                                                 double width_ns);

} // namespace timebin
