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

// Internal pieces shared by the block kernel and the per-window reference.

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "timebin/mc_lab.hpp"

namespace timebin::detail {

using Rng = std::mt19937_64;

/// Per-phase precomputation: the Born table and its samplers.
struct PhasePlan {
    double phase = 0.0;
    OutcomeTable table;
    std::discrete_distribution<int>::param_type all_outcomes;
    /// Outcomes with photon a monitored, indexed into table.outcomes.
    std::vector<int> a_monitored_index;
    std::discrete_distribution<int>::param_type a_monitored;
    double p_a_monitored = 0.0;
};

PhasePlan make_phase_plan(const ExperimentConfig &cfg, double phase);

struct WindowParams {
    double mu = 0.0;
    double q_ge = 0.0;       ///< channel transmission * eta_ge
    double q_in = 0.0;       ///< channel transmission * eta_ingaas
    double lambda = 0.0;     ///< mean Ge dark counts per window
    double window_ns = 0.0;
    double dt = 0.0;
    double gate_ns = 0.0;
    double p_noise = 0.0;    ///< noise click probability per gate
    int slots = 0;           ///< detection bins per window
};

WindowParams make_window_params(const ExperimentConfig &cfg);

/// What the pair did in one window.
struct PairDraw {
    bool present = false;
    BinPair outcome{};
    bool a_click = false;
    bool b_alive = false;
};

struct BlockResult {
    std::vector<CoincidenceRecord> records;
    std::int64_t ge_triggers = 0;
    std::vector<std::int64_t> triggers_by_bin;  ///< sized slots + 1
};

/// Opens a gate for every Ge click (photon a and the given dark times) and
/// appends the resulting coincidences. `dark_times` is reordered.
void resolve_window(const PairDraw &pair, std::vector<double> &dark_times, const WindowParams &wp,
                    double phase, int phase_index, Rng &rng, BlockResult &out);

/// Splits the base seed into an independent stream per (phase, block).
std::uint64_t stream_seed(std::uint64_t base, std::uint64_t phase_index, std::uint64_t block);

} // namespace timebin::detail
