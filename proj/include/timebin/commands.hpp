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
 * The `timebin` subcommands.
 *
 * Each command writes its CSV plus a `<csv>.manifest` sidecar and returns a
 * process exit code. Diagnostics go to `err`, progress to `log`.
 */

#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "timebin/analysis.hpp"
#include "timebin/config.hpp"
#include "timebin/mc_lab.hpp"

namespace timebin::cli {

inline constexpr const char *kToolVersion = "1.0.0";

enum ExitCode : int {
    kExitOk = 0,
    kExitSelftestFailure = 1,
    kExitConfigError = 2,
    kExitAnalysisFailure = 3,
};

struct RunManifest {
    std::string command;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string tool_version = kToolVersion;
    std::vector<std::string> outputs;
    std::map<std::string, std::string> resolved;
};

/// Manifest text: manifest.* keys followed by the resolved config, so the
/// file can be passed back as a config.
std::string manifest_text(const RunManifest &manifest);

std::filesystem::path manifest_path(const std::filesystem::path &csv);

/// Shared simulation behind `fringe` and `histogram`: runs the configured
/// experiment over the phase scan and applies the edge-bin switches.
ExperimentRun simulate(const RunConfig &cfg);

/// Drops coincidences whose Ge click is in the first or last bin when the
/// two-way analyzer discards edges; otherwise returns the run unchanged.
ExperimentRun apply_edge_switches(ExperimentRun run, const RunConfig &cfg);

struct FringeReport {
    std::vector<double> deltas;
    std::vector<std::int64_t> counts;
    std::vector<double> predicted;
    FitResult raw;
    std::optional<FitResult> net;
    double accidentals_per_point = 0.0;
    std::int64_t window_total = 0;
};

/// Counts, fits and (with noisy detectors) background-corrects the fringe.
/// Throws FitError or InvalidArgument when there is no usable signal.
FringeReport analyze_fringe(const RunConfig &cfg, const ExperimentRun &run);

int cmd_fringe(const std::filesystem::path &config, const std::filesystem::path &out,
               const EnvLookup &env, std::ostream &log, std::ostream &err);

int cmd_histogram(const std::filesystem::path &config, const std::filesystem::path &out,
                  const EnvLookup &env, std::ostream &log, std::ostream &err);

struct FpCurveOptions {
    std::optional<std::filesystem::path> config;
    std::optional<double> t2;
    std::optional<std::string> scan_t2;
    std::optional<int> phi_points;
};

int cmd_fp_curve(const FpCurveOptions &opts, const std::filesystem::path &out, const EnvLookup &env,
                 std::ostream &log, std::ostream &err);

int cmd_selftest(const EnvLookup &env, std::ostream &log, std::ostream &err);

} // namespace timebin::cli
