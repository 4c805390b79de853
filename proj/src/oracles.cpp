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

#include "timebin/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "timebin/analyzers.hpp"

namespace timebin::oracle {

std::vector<TwoWayPath> enumerate_two_way_paths(int dimension) {
    std::vector<TwoWayPath> paths;
    for (int j = 1; j <= dimension; ++j) {
        for (bool a_long : {false, true}) {
            for (bool b_long : {false, true}) {
                paths.push_back({j, a_long, b_long});
            }
        }
    }
    return paths;
}

std::map<BinPair, Amplitude> two_way_by_enumeration(const PulseTrain &train, double delta,
                                                    double per_path_amplitude) {
    std::map<BinPair, Amplitude> out;
    for (const TwoWayPath &path : enumerate_two_way_paths(train.dimension())) {
        const auto idx = static_cast<std::size_t>(path.creation_bin - 1);
        const double c = train.amplitudes()[idx];
        const double phi = train.phases()[idx];
        const int n_long = int(path.a_long) + int(path.b_long);
        const double mag = c * per_path_amplitude * per_path_amplitude;
        const Amplitude amp{mag * std::cos(phi + n_long * delta),
                            mag * std::sin(phi + n_long * delta)};
        const BinPair landing{path.creation_bin + int(path.a_long),
                              path.creation_bin + int(path.b_long)};
        out[landing] += amp;
    }
    return out;
}

double max_amplitude_difference(const std::map<BinPair, Amplitude> &lhs,
                                const std::map<BinPair, Amplitude> &rhs) {
    double worst = 0.0;
    for (const auto &[pair, amp] : lhs) {
        auto it = rhs.find(pair);
        const Amplitude other = it == rhs.end() ? Amplitude{} : it->second;
        worst = std::max(worst, std::abs(amp - other));
    }
    for (const auto &[pair, amp] : rhs) {
        if (!lhs.contains(pair)) {
            worst = std::max(worst, std::abs(amp));
        }
    }
    return worst;
}

double enumerated_tau0_probability(const PulseTrain &train, double delta, int first, int last) {
    double p = 0.0;
    for (const auto &[pair, amp] : two_way_by_enumeration(train, delta)) {
        if (pair.a == pair.b && pair.a >= first && pair.a <= last) {
            p += std::norm(amp);
        }
    }
    return p;
}

double enumerated_two_way_contrast(const PulseTrain &train, bool discard_edges, int points) {
    const int d = train.dimension();
    const int first = discard_edges ? 2 : 1;
    const int last = discard_edges ? d : d + 1;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (int k = 0; k < points; ++k) {
        const double delta = std::numbers::pi * k / (points - 1);
        const double p = enumerated_tau0_probability(train, delta, first, last);
        lo = std::min(lo, p);
        hi = std::max(hi, p);
    }
    return (hi - lo) / (hi + lo);
}

double loop_exit_probability_sum(double t2, int n_max) {
    // n = 0: transmitted straight through. n >= 1: reflected in, n - 1
    // transmissions around the loop, reflected out.
    const double r2 = 1.0 - t2;
    double total = t2;
    for (int n = 1; n <= n_max; ++n) {
        total += r2 * r2 * std::pow(t2, n - 1);
    }
    return total;
}

double dense_grid_fp_visibility(double t2, int grid_points) {
    const double r2 = 1.0 - t2;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (int k = 0; k < grid_points; ++k) {
        const double phi = 2.0 * std::numbers::pi * k / grid_points;
        // |t^2 + r^4 e / (1 - t^2 e)|^2 written over a common denominator:
        // (t^2 - t^4 e + r^4 e) / (1 - t^2 e) with e = e^{i phi}
        const double c = std::cos(phi);
        const double s = std::sin(phi);
        const double k1 = r2 * r2 - t2 * t2;
        const double num_re = t2 + k1 * c;
        const double num_im = k1 * s;
        const double den_re = 1.0 - t2 * c;
        const double den_im = -t2 * s;
        const double p = (num_re * num_re + num_im * num_im) / (den_re * den_re + den_im * den_im);
        lo = std::min(lo, p);
        hi = std::max(hi, p);
    }
    return (hi + lo) == 0.0 ? 0.0 : (hi - lo) / (hi + lo);
}

TwoWayTransfer library_two_way_transfer() {
    return [](const PulseTrain &train, double delta) {
        TwoWayConfig cfg;
        cfg.delta = delta;
        return apply_two_way(pdc_state(train), cfg).amplitudes();
    };
}

namespace {

PropertyResult check_enumeration(std::uint64_t seed, const TwoWayTransfer &transfer) {
    PropertyResult res{"two-way transfer matches 4D path enumeration (D <= 6)", true, seed, {}};
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
    std::uniform_int_distribution<int> dim(1, 6);

    auto compare = [&](const PulseTrain &train, double delta) {
        const double diff =
            max_amplitude_difference(transfer(train, delta), two_way_by_enumeration(train, delta));
        if (diff > 1e-12 && res.passed) {
            res.passed = false;
            std::ostringstream os;
            os << "D=" << train.dimension() << " delta=" << delta << " max |diff|=" << diff;
            res.detail = os.str();
        }
    };

    for (int d = 1; d <= 6; ++d) {
        for (int k = 0; k < 8; ++k) {
            compare(make_pulse_train(d), std::numbers::pi * k / 7.0);
        }
    }
    for (int trial = 0; trial < 20; ++trial) {
        const int d = dim(rng);
        std::vector<double> c(static_cast<std::size_t>(d));
        std::vector<double> phi(static_cast<std::size_t>(d));
        for (int j = 0; j < d; ++j) {
            c[static_cast<std::size_t>(j)] = 0.05 + unit(rng);
            phi[static_cast<std::size_t>(j)] = angle(rng);
        }
        compare(make_pulse_train(d, c, phi), angle(rng));
    }
    return res;
}

PropertyResult check_series(std::uint64_t seed) {
    PropertyResult res{"fiber-loop series matches closed form within tail bound", true, seed, {}};
    std::mt19937_64 rng(seed ^ 0x5e41e5ULL);
    std::uniform_real_distribution<double> t2_dist(0.0, 0.95);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    for (int trial = 0; trial < 1000 && res.passed; ++trial) {
        LoopConfig cfg;
        cfg.t2 = t2_dist(rng);
        cfg.phase_a = angle(rng);
        cfg.phase_b = angle(rng);
        cfg.max_loops = loops_for_tolerance(cfg.t2, 1e-12);
        const double diff = std::abs(fp_coincidence_series(cfg) - fp_coincidence_closed(cfg));
        if (diff > 1e-10) {
            res.passed = false;
            std::ostringstream os;
            os << "t2=" << cfg.t2 << " Phi=" << cfg.phase_sum() << " |diff|=" << diff;
            res.detail = os.str();
        }
    }
    return res;
}

PropertyResult check_unitarity(std::uint64_t seed) {
    PropertyResult res{"single-photon loop exit probabilities sum to 1", true, seed, {}};
    for (double t2 : {0.0, 0.01, 1.0 / 3.0, 0.5, 0.9}) {
        LoopConfig cfg;
        cfg.t2 = t2;
        double total = 0.0;
        for (int n = 0; n <= 500; ++n) {
            total += std::norm(loop_exit_amplitude(n, cfg, Arm::A));
        }
        const double expected = loop_exit_probability_sum(t2, 500);
        if (std::abs(total - 1.0) > 1e-10 || std::abs(total - expected) > 1e-12) {
            res.passed = false;
            std::ostringstream os;
            os << "t2=" << t2 << " sum=" << total;
            res.detail = os.str();
        }
    }
    return res;
}

PropertyResult check_fp_visibility(std::uint64_t seed) {
    PropertyResult res{"fiber-loop visibility matches dense-grid oracle", true, seed, {}};
    for (double t2 : {0.0, 0.1, 1.0 / 3.0, 0.5, 0.7, 0.9}) {
        const double v = fp_visibility(t2, 64);
        const double oracle = dense_grid_fp_visibility(t2, 20000);
        if (std::abs(v - oracle) > 1e-9) {
            res.passed = false;
            std::ostringstream os;
            os << "t2=" << t2 << " visibility=" << v << " oracle=" << oracle;
            res.detail = os.str();
        }
    }
    return res;
}

PropertyResult check_two_way_contrast(std::uint64_t seed) {
    PropertyResult res{"two-way fringe contrast equals (D-1)/D, or 1 with edges discarded", true,
                       seed, {}};
    for (int d = 2; d <= 12; ++d) {
        const PulseTrain train = make_pulse_train(d);
        const double kept = enumerated_two_way_contrast(train, false, 65);
        const double discarded = enumerated_two_way_contrast(train, true, 65);
        std::vector<double> curve;
        std::vector<double> curve_disc;
        for (int k = 0; k < 65; ++k) {
            const double delta = std::numbers::pi * k / 64.0;
            curve.push_back(coincidence_probability_two_way(train, delta, false));
            curve_disc.push_back(coincidence_probability_two_way(train, delta, true));
        }
        const double expected = double(d - 1) / d;
        if (std::abs(fringe_contrast(curve) - expected) > 1e-12 ||
            std::abs(kept - expected) > 1e-12 || std::abs(fringe_contrast(curve_disc) - 1.0) > 1e-12 ||
            std::abs(discarded - 1.0) > 1e-12) {
            res.passed = false;
            res.detail = "D=" + std::to_string(d);
        }
    }
    return res;
}

} // namespace

std::vector<PropertyResult> run_property_suite(std::uint64_t seed, const TwoWayTransfer &transfer) {
    return {check_enumeration(seed, transfer), check_series(seed), check_unitarity(seed),
            check_fp_visibility(seed), check_two_way_contrast(seed)};
}

} // namespace timebin::oracle
