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
 * Pump pulse trains and two-photon time-bin states.
 *
 * Time-bins are 1-based: the first pump pulse is bin 1 at t = 0. A pair
 * created in bin j is the joint basis state |j, j>. Analyzers may move
 * photons to later bins, so states produced downstream can extend past the
 * last pump bin.
 */

#pragma once

#include <compare>
#include <complex>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace timebin {

using Amplitude = std::complex<double>;

/// Thrown when a domain value violates its construction contract.
class InvalidArgument : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

inline constexpr double kDefaultBinSpacingNs = 13.0;
inline constexpr double kDefaultPruneThreshold = 1e-15;

/**
 * Description of a coherent pump pulse train.
 *
 * Amplitudes are nonnegative and normalized to unit sum of squares.
 * Construct through make_pulse_train(), which enforces the invariants.
 */
class PulseTrain {
  public:
    int dimension() const { return static_cast<int>(amplitudes_.size()); }
    const std::vector<double> &amplitudes() const { return amplitudes_; }
    const std::vector<double> &phases() const { return phases_; }
    double bin_spacing_ns() const { return bin_spacing_ns_; }

    /// True when make_pulse_train moved some amplitude by more than 1e-9
    /// while normalizing.
    bool renormalized() const { return renormalized_; }

    /// Uniform amplitudes and constant (zero) phases.
    bool is_uniform() const;

  private:
    friend PulseTrain make_pulse_train(int, std::optional<std::vector<double>>,
                                       std::optional<std::vector<double>>,
                                       double);
    PulseTrain() = default;

    std::vector<double> amplitudes_;
    std::vector<double> phases_;
    double bin_spacing_ns_ = kDefaultBinSpacingNs;
    bool renormalized_ = false;
};

/**
 * Builds a validated pulse train.
 *
 * A missing amplitude list means uniform amplitudes 1/sqrt(D); a missing
 * phase list means all phases zero. Explicit amplitudes are rescaled to unit
 * norm. Throws InvalidArgument on D < 1, length mismatch, negative or
 * non-finite entries, an all-zero amplitude vector, or a non-positive
 * spacing.
 */
PulseTrain make_pulse_train(int dimension,
                            std::optional<std::vector<double>> amplitudes = std::nullopt,
                            std::optional<std::vector<double>> phases = std::nullopt,
                            double bin_spacing_ns = kDefaultBinSpacingNs);

/// Rescales to unit sum of squares. Vectors already normalized to within
/// rounding are returned unchanged, which makes the operation idempotent.
std::vector<double> normalize_amplitudes(std::span<const double> amplitudes);

/// Joint detection bins of the two photons (a: 1310 nm arm, b: 1550 nm arm).
struct BinPair {
    int a = 0;
    int b = 0;

    auto operator<=>(const BinPair &) const = default;
};

/**
 * Sparse two-photon amplitude map over joint time-bin pairs.
 *
 * Entries with magnitude below the prune threshold are dropped on
 * construction, so an absent key and a zero amplitude are the same thing.
 * Iteration order is lexicographic in (a, b).
 */
class TwoPhotonState {
  public:
    using Map = std::map<BinPair, Amplitude>;

    TwoPhotonState() = default;
    explicit TwoPhotonState(Map amplitudes,
                            double prune_threshold = kDefaultPruneThreshold);

    const Map &amplitudes() const { return amps_; }
    Amplitude amplitude(BinPair pair) const;
    std::size_t size() const { return amps_.size(); }
    bool empty() const { return amps_.empty(); }
    double prune_threshold() const { return prune_threshold_; }

    Map::const_iterator begin() const { return amps_.begin(); }
    Map::const_iterator end() const { return amps_.end(); }

    /// Amplitude-level superposition.
    friend TwoPhotonState operator+(const TwoPhotonState &lhs,
                                    const TwoPhotonState &rhs);
    friend TwoPhotonState operator*(Amplitude scale, const TwoPhotonState &state);

  private:
    Map amps_;
    double prune_threshold_ = kDefaultPruneThreshold;
};

/// State after down-conversion: sum_j c_j exp(i phi_j) |j, j>.
TwoPhotonState pdc_state(const PulseTrain &train);

/// Sum of |amplitude|^2.
double total_probability(const TwoPhotonState &state);

} // namespace timebin
