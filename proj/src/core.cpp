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

#include "timebin/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace timebin {

namespace {

double sum_of_squares(std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0,
                           [](double acc, double x) { return acc + x * x; });
}

} // namespace

std::vector<double> normalize_amplitudes(std::span<const double> amplitudes) {
    std::vector<double> out(amplitudes.begin(), amplitudes.end());
    const double norm2 = sum_of_squares(out);
    if (!(norm2 > 0.0) || !std::isfinite(norm2)) {
        throw InvalidArgument("pulse amplitudes must have a finite nonzero norm");
    }
    // Rounding slack of one normalization pass: leaves normalized input alone.
    const double slack =
        16.0 * static_cast<double>(out.size() + 2) * std::numeric_limits<double>::epsilon();
    if (std::abs(norm2 - 1.0) <= slack) {
        return out;
    }
    const double norm = std::sqrt(norm2);
    for (double &c : out) {
        c /= norm;
    }
    return out;
}

PulseTrain make_pulse_train(int dimension, std::optional<std::vector<double>> amplitudes,
                            std::optional<std::vector<double>> phases,
                            double bin_spacing_ns) {
    if (dimension < 1) {
        throw InvalidArgument("pulse train dimension must be >= 1, got " +
                              std::to_string(dimension));
    }
    if (!(bin_spacing_ns > 0.0) || !std::isfinite(bin_spacing_ns)) {
        throw InvalidArgument("bin spacing must be positive");
    }
    const auto d = static_cast<std::size_t>(dimension);

    PulseTrain train;
    train.bin_spacing_ns_ = bin_spacing_ns;

    if (amplitudes) {
        if (amplitudes->size() != d) {
            throw InvalidArgument("amplitude list has " + std::to_string(amplitudes->size()) +
                                  " entries, expected " + std::to_string(d));
        }
        for (double c : *amplitudes) {
            if (!(c >= 0.0) || !std::isfinite(c)) {
                throw InvalidArgument("pulse amplitudes must be finite and nonnegative");
            }
        }
        train.amplitudes_ = normalize_amplitudes(*amplitudes);
        for (std::size_t j = 0; j < d; ++j) {
            if (std::abs(train.amplitudes_[j] - (*amplitudes)[j]) > 1e-9) {
                train.renormalized_ = true;
                break;
            }
        }
    } else {
        train.amplitudes_.assign(d, 1.0 / std::sqrt(static_cast<double>(d)));
    }

    if (phases) {
        if (phases->size() != d) {
            throw InvalidArgument("phase list has " + std::to_string(phases->size()) +
                                  " entries, expected " + std::to_string(d));
        }
        if (!std::all_of(phases->begin(), phases->end(),
                         [](double p) { return std::isfinite(p); })) {
            throw InvalidArgument("pulse phases must be finite");
        }
        train.phases_ = std::move(*phases);
    } else {
        train.phases_.assign(d, 0.0);
    }
    return train;
}

bool PulseTrain::is_uniform() const {
    const double c0 = amplitudes_.front();
    return std::all_of(amplitudes_.begin(), amplitudes_.end(),
                       [c0](double c) { return c == c0; }) &&
           std::all_of(phases_.begin(), phases_.end(), [](double p) { return p == 0.0; });
}

TwoPhotonState::TwoPhotonState(Map amplitudes, double prune_threshold)
    : amps_(std::move(amplitudes)), prune_threshold_(prune_threshold) {
    std::erase_if(amps_, [this](const auto &kv) { return std::abs(kv.second) < prune_threshold_; });
}

Amplitude TwoPhotonState::amplitude(BinPair pair) const {
    auto it = amps_.find(pair);
    return it == amps_.end() ? Amplitude{} : it->second;
}

TwoPhotonState operator+(const TwoPhotonState &lhs, const TwoPhotonState &rhs) {
    TwoPhotonState::Map sum = lhs.amps_;
    for (const auto &[pair, amp] : rhs.amps_) {
        sum[pair] += amp;
    }
    return TwoPhotonState(std::move(sum), std::min(lhs.prune_threshold_, rhs.prune_threshold_));
}

TwoPhotonState operator*(Amplitude scale, const TwoPhotonState &state) {
    TwoPhotonState::Map out = state.amps_;
    for (auto &[pair, amp] : out) {
        amp *= scale;
    }
    return TwoPhotonState(std::move(out), state.prune_threshold_);
}

TwoPhotonState pdc_state(const PulseTrain &train) {
    TwoPhotonState::Map amps;
    for (int j = 1; j <= train.dimension(); ++j) {
        const auto idx = static_cast<std::size_t>(j - 1);
        amps[{j, j}] = std::polar(train.amplitudes()[idx], train.phases()[idx]);
    }
    return TwoPhotonState(std::move(amps));
}

double total_probability(const TwoPhotonState &state) {
    double total = 0.0;
    for (const auto &[pair, amp] : state) {
        total += std::norm(amp);
    }
    return total;
}

} // namespace timebin
