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
 * Fringe predictions, sinusoidal fits and the visibility dimension bound.
 */

#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "timebin/core.hpp"

namespace timebin {

/// A fit that cannot produce a result (degenerate input, no signal).
class FitError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Largest two-way fringe visibility for a uniform D-bin train when the
/// distinguishable first and last bins are kept: (D - 1) / D.
double max_visibility(int dimension);

struct DimensionBound {
    double bound = 1.0;           ///< 1 / (1 - V)
    int claimed_dimension = 1;    ///< floor(bound)
    double lower = 1.0;           ///< 1 / (1 - V + err)
    std::optional<double> upper;  ///< 1 / (1 - V - err); empty when V + err >= 1
};

/// Entanglement dimension certified by visibility V. Throws InvalidArgument
/// unless 0 <= V < 1 and V_err >= 0.
DimensionBound dimension_bound(double visibility, double visibility_err = 0.0);

struct FringePoint {
    double delta = 0.0;
    double counts = 0.0;
    double counts_err = 1.0;
};

struct FitResult {
    double visibility = 0.0;
    double visibility_err = 0.0;
    double phase_offset = 0.0;
    double baseline = 0.0;
    double baseline_err = 0.0;
    double residual_rms = 0.0;
    double chi2 = 0.0;
    double frequency = 2.0;  ///< fixed at 2 unless fitted freely
    bool converged = true;
    int iterations = 0;
};

/**
 * Weighted least-squares fit of baseline * (1 + V cos(2 delta + offset)).
 *
 * Solved in the linear form a0 + a1 cos 2delta + a2 sin 2delta, which has the
 * same optimum; errors come from the unscaled covariance. Needs >= 4 points
 * spanning at least pi/2 in delta, nonnegative counts and positive errors.
 * Throws FitError otherwise, or when all counts are zero ("no signal").
 */
FitResult fit_fringe(std::span<const FringePoint> points);

/**
 * Diagnostic fit with a free fringe frequency, searched in
 * [min_frequency, max_frequency]. `converged` is false if the search did not
 * reach 1e-10 in frequency within `max_iterations` golden-section steps.
 */
FitResult fit_fringe_free_frequency(std::span<const FringePoint> points, double min_frequency = 1.0,
                                    double max_frequency = 3.0, int max_iterations = 200);

/**
 * Removes a flat accidental background from a fitted fringe:
 * V_net = V_raw * b / (b - acc), with first-order error propagation. The
 * result is not clipped to 1. Throws InvalidArgument if acc < 0 or
 * acc >= baseline.
 */
FitResult net_visibility(const FitResult &raw, double accidental_rate,
                         double accidental_rate_err = 0.0);

struct FringeSample {
    double delta = 0.0;
    double probability = 0.0;
};

/// coincidence_probability_two_way on each grid phase.
std::vector<FringeSample> predicted_fringe(const PulseTrain &train, bool discard_edges,
                                           std::span<const double> delta_grid);

/// n phases evenly spaced over [lo, hi) (endpoint excluded).
std::vector<double> phase_grid(int n, double lo, double hi);

} // namespace timebin
