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

#include "timebin/analyzers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace timebin {

void TwoWayConfig::validate() const {
    if (!(per_path_amplitude > 0.0 && per_path_amplitude <= 1.0)) {
        throw InvalidArgument("per_path_amplitude must lie in (0, 1]");
    }
    if (!std::isfinite(delta)) {
        throw InvalidArgument("interferometer phase must be finite");
    }
}

void LoopConfig::validate() const {
    if (!(t2 >= 0.0 && t2 <= 1.0)) {
        throw InvalidArgument("loop transmission t2 must lie in [0, 1]");
    }
    if (!std::isfinite(phase_a) || !std::isfinite(phase_b)) {
        throw InvalidArgument("loop phases must be finite");
    }
    if (max_loops < 1) {
        throw InvalidArgument("max_loops must be >= 1");
    }
}

TwoPhotonState apply_two_way(const TwoPhotonState &state, const TwoWayConfig &cfg) {
    cfg.validate();
    const double p2 = cfg.per_path_amplitude * cfg.per_path_amplitude;
    const Amplitude one_long = std::polar(1.0, cfg.delta);
    const Amplitude both_long = std::polar(1.0, 2.0 * cfg.delta);

    TwoPhotonState::Map out;
    for (const auto &[pair, amp] : state) {
        const Amplitude a = p2 * amp;
        const auto [j, k] = pair;
        out[{j, k}] += a;
        out[{j + 1, k}] += a * one_long;
        out[{j, k + 1}] += a * one_long;
        out[{j + 1, k + 1}] += a * both_long;
    }
    return TwoPhotonState(std::move(out), state.prune_threshold());
}

std::map<int, Amplitude> postselect_tau0(const TwoPhotonState &state) {
    std::map<int, Amplitude> diag;
    for (const auto &[pair, amp] : state) {
        if (pair.a == pair.b) {
            diag.emplace(pair.a, amp);
        }
    }
    return diag;
}

double coincidence_probability_two_way(const PulseTrain &train, double delta,
                                       bool discard_edges) {
    const int d = train.dimension();
    if (discard_edges && d < 2) {
        throw InvalidArgument("discarding edge bins needs D >= 2");
    }
    TwoWayConfig cfg;
    cfg.delta = delta;
    const auto diag = postselect_tau0(apply_two_way(pdc_state(train), cfg));

    const int first = discard_edges ? 2 : 1;
    const int last = discard_edges ? d : d + 1;
    double p = 0.0;
    for (const auto &[bin, amp] : diag) {
        if (bin >= first && bin <= last) {
            p += std::norm(amp);
        }
    }
    return p;
}

std::vector<OutcomeDescriptor> enumerate_outcomes(int dimension) {
    if (dimension < 1) {
        throw InvalidArgument("dimension must be >= 1");
    }
    std::vector<OutcomeDescriptor> out;
    out.reserve(2 * static_cast<std::size_t>(dimension + 1));
    for (int bin = 1; bin <= dimension + 1; ++bin) {
        std::vector<int> sources;
        // short arm keeps the bin, long arm comes from the previous one
        if (bin - 1 >= 1) {
            sources.push_back(bin - 1);
        }
        if (bin <= dimension) {
            sources.push_back(bin);
        }
        out.push_back({bin, Port::Monitored, sources});
        out.push_back({bin, Port::Unmonitored, std::move(sources)});
    }
    return out;
}

Amplitude loop_exit_amplitude(int n, const LoopConfig &cfg, Arm arm) {
    if (n < 0) {
        throw InvalidArgument("loop count must be >= 0");
    }
    const double t = std::sqrt(cfg.t2);
    if (n == 0) {
        return {t, 0.0};
    }
    const double mag = cfg.r2() * std::pow(t, n - 1);
    return std::polar(mag, n * cfg.phase(arm));
}

Amplitude unitary_loop_exit_amplitude(int n, const LoopConfig &cfg, Arm arm) {
    const Amplitude a = loop_exit_amplitude(n, cfg, arm);
    return n == 0 ? a : -a;  // i * i on the way in and out
}

Amplitude fp_amplitude_closed(const LoopConfig &cfg) {
    cfg.validate();
    if (cfg.t2 == 1.0) {
        return {1.0, 0.0};
    }
    const Amplitude e = std::polar(1.0, cfg.phase_sum());
    const double r2 = cfg.r2();
    return cfg.t2 + r2 * r2 * e / (1.0 - cfg.t2 * e);
}

Amplitude fp_amplitude_series(const LoopConfig &cfg) {
    cfg.validate();
    const double r2 = cfg.r2();
    const double phi = cfg.phase_sum();
    Amplitude sum{};
    double weight = 1.0;  // t^{2n}
    for (int n = 0; n < cfg.max_loops; ++n) {
        sum += weight * std::polar(1.0, (n + 1) * phi);
        weight *= cfg.t2;
        if (weight == 0.0) {
            break;
        }
    }
    return cfg.t2 + r2 * r2 * sum;
}

double fp_coincidence_closed(const LoopConfig &cfg) { return std::norm(fp_amplitude_closed(cfg)); }

double fp_coincidence_series(const LoopConfig &cfg) { return std::norm(fp_amplitude_series(cfg)); }

double fp_series_tail_bound(double t2, int max_loops) {
    if (t2 >= 1.0) {
        return std::numeric_limits<double>::infinity();
    }
    const double r2 = 1.0 - t2;
    return r2 * r2 * std::pow(t2, max_loops) / r2;
}

int loops_for_tolerance(double t2, double tolerance) {
    if (!(t2 >= 0.0 && t2 < 1.0) || !(tolerance > 0.0)) {
        throw InvalidArgument("loops_for_tolerance needs t2 in [0, 1) and tolerance > 0");
    }
    if (t2 == 0.0) {
        return 1;
    }
    // r^2 t^{2L} <= tol  =>  L >= log(tol / r^2) / log(t^2)
    const double r2 = 1.0 - t2;
    const double est = std::log(tolerance / r2) / std::log(t2);
    int loops = std::max(1, static_cast<int>(std::ceil(est)));
    while (fp_series_tail_bound(t2, loops) > tolerance) {
        ++loops;
    }
    return loops;
}

double fringe_contrast(const std::vector<double> &values) {
    if (values.empty()) {
        return 0.0;
    }
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    const double denom = *hi + *lo;
    return denom == 0.0 ? 0.0 : (*hi - *lo) / denom;
}

double fp_visibility(double t2, int grid_points) {
    if (grid_points < 8) {
        throw InvalidArgument("fp_visibility needs at least 8 grid points");
    }
    LoopConfig cfg;
    cfg.t2 = t2;
    cfg.validate();
    std::vector<double> curve(static_cast<std::size_t>(grid_points));
    for (int k = 0; k < grid_points; ++k) {
        cfg.phase_a = 2.0 * std::numbers::pi * k / grid_points;
        curve[static_cast<std::size_t>(k)] = fp_coincidence_closed(cfg);
    }
    return fringe_contrast(curve);
}

} // namespace timebin
