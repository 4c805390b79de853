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

// Slow per-window simulation. Every window draws its own pair, survivals
// and dark counts; nothing is skipped or conditioned.

#include <random>

#include "mc_detail.hpp"
#include "timebin/mc_lab.hpp"

namespace timebin {

ExperimentRun run_experiment_reference(const ExperimentConfig &cfg,
                                       std::span<const double> phase_settings) {
    cfg.validate();
    const detail::WindowParams wp = detail::make_window_params(cfg);

    ExperimentRun run;
    run.window_ns = wp.window_ns;
    for (std::size_t p = 0; p < phase_settings.size(); ++p) {
        const double phase = phase_settings[p];
        const detail::PhasePlan plan = detail::make_phase_plan(cfg, phase);
        detail::Rng rng(detail::stream_seed(cfg.rng_seed ^ 0x7265666572656e63ULL, p, 0));
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::uniform_real_distribution<double> when(0.0, wp.window_ns);
        std::discrete_distribution<int> outcome(plan.all_outcomes);
        std::poisson_distribution<int> darks(wp.lambda > 0.0 ? wp.lambda : 1.0);

        detail::BlockResult out;
        std::vector<double> dark_times;
        for (std::int64_t w = 0; w < cfg.n_trains; ++w) {
            detail::PairDraw pair;
            if (unit(rng) < wp.mu) {
                pair.present = true;
                pair.outcome = plan.table.outcomes[static_cast<std::size_t>(outcome(rng))];
                pair.a_click = pair.outcome.a != kNotMonitored && unit(rng) < wp.q_ge;
                pair.b_alive = pair.outcome.b != kNotMonitored && unit(rng) < wp.q_in;
            }
            const int n_dark = wp.lambda > 0.0 ? darks(rng) : 0;
            dark_times.clear();
            for (int k = 0; k < n_dark; ++k) {
                dark_times.push_back(when(rng));
            }
            if (!pair.a_click && dark_times.empty()) {
                continue;
            }
            detail::resolve_window(pair, dark_times, wp, phase, static_cast<int>(p), rng, out);
        }
        out.triggers_by_bin.resize(static_cast<std::size_t>(wp.slots) + 1, 0);
        run.stats.push_back({phase, cfg.n_trains, out.ge_triggers,
                             static_cast<std::int64_t>(out.records.size()), out.triggers_by_bin});
        run.records.insert(run.records.end(), out.records.begin(), out.records.end());
    }
    return run;
}

} // namespace timebin
