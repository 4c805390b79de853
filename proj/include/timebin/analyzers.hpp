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
 * Analyzer transfer functions.
 *
 * Two analyzers are modeled, each acting independently on both photons:
 *
 *  - the two-way interferometer whose long arm delays by exactly one bin and
 *    adds phase delta; at the monitored output a photon in bin j goes to
 *    s|j> + l e^{i delta}|j+1> with s = l = per_path_amplitude;
 *  - the fiber loop (two-photon Fabry-Perot): a coupler with transmission
 *    probability t^2, one output fed back into one input, loop delay one bin.
 */

#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <vector>

#include "timebin/core.hpp"

namespace timebin {

struct TwoWayConfig {
    double delta = 0.0;               ///< long-arm phase, radians
    double per_path_amplitude = 0.5;  ///< 50/50 Michelson, monitored port
    bool discard_edges = false;

    /// Throws InvalidArgument unless per_path_amplitude in (0, 1] and delta finite.
    void validate() const;
};

enum class Arm { A, B };

struct LoopConfig {
    double t2 = 1.0 / 3.0;  ///< coupler transmission probability; r^2 = 1 - t2
    double phase_a = 0.0;
    double phase_b = 0.0;
    int max_loops = 200;    ///< series truncation

    double r2() const { return 1.0 - t2; }
    double phase_sum() const { return phase_a + phase_b; }
    double phase(Arm arm) const { return arm == Arm::A ? phase_a : phase_b; }

    void validate() const;
};

// ---------------------------------------------------------------------------
// Two-way interferometer

/// Coherent per-photon transfer through the monitored port of the two-way
/// interferometer. Output norm <= input norm whenever per_path_amplitude <= 1/2.
TwoPhotonState apply_two_way(const TwoPhotonState &state, const TwoWayConfig &cfg);

/// Diagonal (tau = 0) amplitudes keyed by bin.
std::map<int, Amplitude> postselect_tau0(const TwoPhotonState &state);

/**
 * Probability of a tau = 0 coincidence at the monitored outputs for the
 * down-converted state of `train`, with the 1/2-per-path convention.
 *
 * With discard_edges only bins 2..D count (the first and last bins are
 * distinguishable and switched out); otherwise bins 1..D+1.
 * Throws InvalidArgument when discarding edges with D < 2.
 */
double coincidence_probability_two_way(const PulseTrain &train, double delta,
                                       bool discard_edges);

enum class Port { Monitored, Unmonitored };

struct OutcomeDescriptor {
    int bin = 0;
    Port port = Port::Monitored;
    std::vector<int> source_bins;  ///< creation bins that can reach this outcome
};

/// The 2(D+1) single-photon outcomes of the two-way analyzer on a D-bin state:
/// bins 1..D+1 at either output port. Bin-major, monitored port first.
std::vector<OutcomeDescriptor> enumerate_outcomes(int dimension);

// ---------------------------------------------------------------------------
// Fiber loop

/**
 * Amplitude for leaving the loop after n round trips: t for n = 0, otherwise
 * r^2 t^{n-1} e^{i n phi}. Real coupler coefficients, no reflection phase.
 */
Amplitude loop_exit_amplitude(int n, const LoopConfig &cfg, Arm arm);

/// Same as loop_exit_amplitude with a factor i on each coupler reflection,
/// which makes the single-photon loop an isometry on time bins. The product
/// of the two photons' amplitudes for equal n agrees with the real convention.
Amplitude unitary_loop_exit_amplitude(int n, const LoopConfig &cfg, Arm arm);

/// tau = 0 coincidence amplitude t^2 + r^4 e^{i Phi} / (1 - t^2 e^{i Phi}).
/// Returns 1 at t^2 = 1 (the removable singularity at Phi = 0 included).
Amplitude fp_amplitude_closed(const LoopConfig &cfg);

/// Truncated series t^2 + r^4 sum_{n < max_loops} t^{2n} e^{i(n+1) Phi}.
Amplitude fp_amplitude_series(const LoopConfig &cfg);

double fp_coincidence_closed(const LoopConfig &cfg);
double fp_coincidence_series(const LoopConfig &cfg);

/// Geometric tail r^4 t^{2L} / (1 - t^2) bounding |series - closed| at the
/// amplitude level. Zero at t^2 = 0, infinite at t^2 = 1.
double fp_series_tail_bound(double t2, int max_loops);

/// Smallest loop count whose tail bound is <= tolerance.
int loops_for_tolerance(double t2, double tolerance);

/**
 * Fringe contrast (max - min) / (max + min) of fp_coincidence_closed over
 * Phi = 2 pi k / grid_points, k = 0..grid_points-1.
 * Requires grid_points >= 8 and t2 in [0, 1].
 */
double fp_visibility(double t2, int grid_points);

/// (max - min) / (max + min) of a sampled curve; 0 for an all-zero curve.
double fringe_contrast(const std::vector<double> &values);

} // namespace timebin
