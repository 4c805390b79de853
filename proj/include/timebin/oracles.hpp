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
 * Brute-force reference computations.
 *
 * Nothing here calls into the analyzer or analysis code paths; these are
 * the independent routes the tests and the `selftest` command compare
 * against.
 */

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "timebin/core.hpp"

namespace timebin::oracle {

/// One of the 4 joint routes (short/long for each photon) from creation bin j.
struct TwoWayPath {
    int creation_bin = 0;
    bool a_long = false;
    bool b_long = false;
};

/// All 4D joint paths through two unbalanced interferometers.
std::vector<TwoWayPath> enumerate_two_way_paths(int dimension);

/// Output amplitude map obtained by summing every path's amplitude
/// c_j e^{i phi_j} * s^2 * e^{i delta (#long arms)} at its landing bins.
std::map<BinPair, Amplitude> two_way_by_enumeration(const PulseTrain &train, double delta,
                                                    double per_path_amplitude = 0.5);

/// Largest |difference| between two amplitude maps (missing keys are zero).
double max_amplitude_difference(const std::map<BinPair, Amplitude> &lhs,
                                const std::map<BinPair, Amplitude> &rhs);

/// tau = 0 probability from the enumerated map over bins [first, last].
double enumerated_tau0_probability(const PulseTrain &train, double delta, int first, int last);

/// Contrast of a fringe by brute force: sweep `points` phases over [0, pi]
/// with the enumerated tau = 0 probability.
double enumerated_two_way_contrast(const PulseTrain &train, bool discard_edges, int points);

/// Sum over n = 0..n_max of |single-photon loop exit amplitude|^2, written
/// out term by term from the round-trip description.
double loop_exit_probability_sum(double t2, int n_max);

/// Dense-grid min/max contrast of the closed-form two-photon loop curve,
/// evaluated directly from the geometric-series limit.
double dense_grid_fp_visibility(double t2, int grid_points);

/// Result of one named property check.
struct PropertyResult {
    std::string name;
    bool passed = false;
    std::uint64_t seed = 0;
    std::string detail;
};

/**
 * Runs the brute-force property suites used by `selftest`.
 *
 * `transfer` is the implementation under test; it maps (train, delta) to the
 * two-way output amplitude map. Passing a deliberately broken transfer is
 * how oracle sensitivity is checked.
 */
using TwoWayTransfer =
    std::function<std::map<BinPair, Amplitude>(const PulseTrain &, double delta)>;

std::vector<PropertyResult> run_property_suite(std::uint64_t seed, const TwoWayTransfer &transfer);

/// The production transfer: apply_two_way on pdc_state.
TwoWayTransfer library_two_way_transfer();

} // namespace timebin::oracle
