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

#include "timebin/analysis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "timebin/analyzers.hpp"

namespace timebin {

double max_visibility(int dimension) {
    if (dimension < 1) {
        throw InvalidArgument("dimension must be >= 1");
    }
    return static_cast<double>(dimension - 1) / static_cast<double>(dimension);
}

DimensionBound dimension_bound(double visibility, double visibility_err) {
    if (!(visibility >= 0.0 && visibility < 1.0)) {
        throw InvalidArgument("dimension bound needs 0 <= V < 1");
    }
    if (!(visibility_err >= 0.0)) {
        throw InvalidArgument("visibility error must be >= 0");
    }
    DimensionBound out;
    out.bound = 1.0 / (1.0 - visibility);
    // (D-1)/D does not round-trip exactly: rounding V by eps/2 moves the
    // bound by about eps * D^2, so snap anything within that of an integer.
    const double nearest = std::round(out.bound);
    const double eps = std::numeric_limits<double>::epsilon();
    if (std::abs(out.bound - nearest) <= 2.0 * eps * nearest * nearest + 16.0 * eps * nearest) {
        out.bound = nearest;
    }
    out.claimed_dimension = static_cast<int>(std::floor(out.bound));
    out.lower = 1.0 / (1.0 - visibility + visibility_err);
    if (visibility + visibility_err < 1.0) {
        out.upper = 1.0 / (1.0 - visibility - visibility_err);
    }
    return out;
}

namespace {

using Mat3 = std::array<std::array<double, 3>, 3>;
using Vec3 = std::array<double, 3>;

bool invert(const Mat3 &m, Mat3 &inv) {
    const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                       m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                       m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    double scale = 0.0;
    for (const auto &row : m) {
        for (double x : row) {
            scale = std::max(scale, std::abs(x));
        }
    }
    if (!(std::abs(det) > 1e-12 * scale * scale * scale)) {
        return false;
    }
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            const int r0 = (j + 1) % 3, r1 = (j + 2) % 3;
            const int c0 = (i + 1) % 3, c1 = (i + 2) % 3;
            inv[i][j] = (m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]) / det;
        }
    }
    return true;
}

struct LinearFit {
    Vec3 coef{};
    Mat3 cov{};
    double chi2 = 0.0;
    bool ok = false;
};

LinearFit solve_linear(std::span<const FringePoint> points, double frequency) {
    Mat3 normal{};
    Vec3 rhs{};
    for (const auto &p : points) {
        const Vec3 basis{1.0, std::cos(frequency * p.delta), std::sin(frequency * p.delta)};
        const double w = 1.0 / (p.counts_err * p.counts_err);
        for (int i = 0; i < 3; ++i) {
            rhs[i] += w * basis[i] * p.counts;
            for (int j = 0; j < 3; ++j) {
                normal[i][j] += w * basis[i] * basis[j];
            }
        }
    }
    LinearFit fit;
    if (!invert(normal, fit.cov)) {
        return fit;
    }
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            fit.coef[i] += fit.cov[i][j] * rhs[j];
        }
    }
    for (const auto &p : points) {
        const double model = fit.coef[0] + fit.coef[1] * std::cos(frequency * p.delta) +
                             fit.coef[2] * std::sin(frequency * p.delta);
        const double r = (p.counts - model) / p.counts_err;
        fit.chi2 += r * r;
    }
    fit.ok = true;
    return fit;
}

void check_points(std::span<const FringePoint> points) {
    if (points.size() < 4) {
        throw FitError("fringe fit needs at least 4 points");
    }
    double lo = points.front().delta;
    double hi = lo;
    bool any_signal = false;
    for (const auto &p : points) {
        if (!std::isfinite(p.delta) || !std::isfinite(p.counts) || !(p.counts >= 0.0)) {
            throw FitError("fringe counts must be finite and nonnegative");
        }
        if (!(p.counts_err > 0.0) || !std::isfinite(p.counts_err)) {
            throw FitError("fringe count errors must be positive");
        }
        lo = std::min(lo, p.delta);
        hi = std::max(hi, p.delta);
        any_signal = any_signal || p.counts > 0.0;
    }
    if (hi == lo) {
        throw FitError("degenerate fringe: all phases are equal");
    }
    if (hi - lo < 0.5 * std::numbers::pi - 1e-12) {
        throw FitError("fringe phases span less than half a period");
    }
    if (!any_signal) {
        throw FitError("no signal: all counts are zero");
    }
}

FitResult to_result(std::span<const FringePoint> points, const LinearFit &fit, double frequency) {
    const double a0 = fit.coef[0];
    const double a1 = fit.coef[1];
    const double a2 = fit.coef[2];
    if (!(a0 > 0.0)) {
        throw FitError("no signal: fitted baseline is not positive");
    }
    const double amp = std::hypot(a1, a2);

    FitResult r;
    r.frequency = frequency;
    r.baseline = a0;
    r.baseline_err = std::sqrt(fit.cov[0][0]);
    r.visibility = amp / a0;
    r.phase_offset = amp > 0.0 ? std::atan2(-a2, a1) : 0.0;
    r.chi2 = fit.chi2;

    if (amp > 0.0) {
        // gradient of V = |(a1, a2)| / a0
        const Vec3 g{-r.visibility / a0, a1 / (a0 * amp), a2 / (a0 * amp)};
        double var = 0.0;
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                var += g[i] * fit.cov[i][j] * g[j];
            }
        }
        r.visibility_err = std::sqrt(std::max(0.0, var));
    } else {
        r.visibility_err = std::sqrt(std::max(fit.cov[1][1], fit.cov[2][2])) / a0;
    }

    double ss = 0.0;
    for (const auto &p : points) {
        const double model =
            a0 + a1 * std::cos(frequency * p.delta) + a2 * std::sin(frequency * p.delta);
        ss += (p.counts - model) * (p.counts - model);
    }
    r.residual_rms = std::sqrt(ss / static_cast<double>(points.size()));
    return r;
}

} // namespace

FitResult fit_fringe(std::span<const FringePoint> points) {
    check_points(points);
    const LinearFit fit = solve_linear(points, 2.0);
    if (!fit.ok) {
        throw FitError("degenerate fringe: singular normal equations");
    }
    return to_result(points, fit, 2.0);
}

FitResult fit_fringe_free_frequency(std::span<const FringePoint> points, double min_frequency,
                                    double max_frequency, int max_iterations) {
    check_points(points);
    if (!(min_frequency > 0.0 && max_frequency > min_frequency)) {
        throw InvalidArgument("frequency search range must satisfy 0 < min < max");
    }
    auto chi2 = [&](double w) {
        const LinearFit f = solve_linear(points, w);
        return f.ok ? f.chi2 : std::numeric_limits<double>::infinity();
    };

    // coarse scan to pick the basin, then golden-section inside it
    constexpr int kScan = 200;
    const double step = (max_frequency - min_frequency) / kScan;
    int best = 0;
    double best_chi2 = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= kScan; ++k) {
        const double c = chi2(min_frequency + k * step);
        if (c < best_chi2) {
            best_chi2 = c;
            best = k;
        }
    }
    double lo = min_frequency + std::max(0, best - 1) * step;
    double hi = min_frequency + std::min(kScan, best + 1) * step;

    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - inv_phi * (hi - lo);
    double x2 = lo + inv_phi * (hi - lo);
    double f1 = chi2(x1);
    double f2 = chi2(x2);
    int it = 0;
    for (; it < max_iterations && hi - lo > 1e-10; ++it) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = chi2(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = chi2(x2);
        }
    }
    const double w = 0.5 * (lo + hi);
    const LinearFit fit = solve_linear(points, w);
    if (!fit.ok) {
        throw FitError("degenerate fringe: singular normal equations");
    }
    FitResult r = to_result(points, fit, w);
    r.converged = hi - lo <= 1e-10;
    r.iterations = it;
    return r;
}

FitResult net_visibility(const FitResult &raw, double accidental_rate, double accidental_rate_err) {
    if (!(accidental_rate >= 0.0) || !(accidental_rate_err >= 0.0)) {
        throw InvalidArgument("accidental rate and its error must be >= 0");
    }
    if (accidental_rate >= raw.baseline) {
        throw InvalidArgument("no signal: accidental rate reaches the fitted baseline");
    }
    if (accidental_rate == 0.0 && accidental_rate_err == 0.0) {
        return raw;
    }
    const double b = raw.baseline;
    const double net_b = b - accidental_rate;
    const double scale = b / net_b;

    FitResult out = raw;
    out.visibility = raw.visibility * scale;
    out.baseline = net_b;
    out.baseline_err = std::hypot(raw.baseline_err, accidental_rate_err);
    const double d_v = scale;
    const double d_b = -raw.visibility * accidental_rate / (net_b * net_b);
    const double d_acc = raw.visibility * b / (net_b * net_b);
    out.visibility_err = std::sqrt(std::pow(d_v * raw.visibility_err, 2) +
                                   std::pow(d_b * raw.baseline_err, 2) +
                                   std::pow(d_acc * accidental_rate_err, 2));
    return out;
}

std::vector<FringeSample> predicted_fringe(const PulseTrain &train, bool discard_edges,
                                           std::span<const double> delta_grid) {
    std::vector<FringeSample> out;
    out.reserve(delta_grid.size());
    for (double delta : delta_grid) {
        out.push_back({delta, coincidence_probability_two_way(train, delta, discard_edges)});
    }
    return out;
}

std::vector<double> phase_grid(int n, double lo, double hi) {
    if (n < 1) {
        throw InvalidArgument("phase grid needs at least one point");
    }
    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        grid.push_back(lo + (hi - lo) * k / n);
    }
    return grid;
}

} // namespace timebin
