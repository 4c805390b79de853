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
 * Experiment configuration files.
 *
 * Format: one `key = value` per line, `#` or `;` starts a comment. Keys are
 * dotted (`train.dimension`); a `[section]` line prefixes the keys that
 * follow it. Unknown keys, duplicates and malformed values are errors that
 * name the file, line and field.
 *
 * Numeric keys can also be supplied through the environment as
 * TIMEBIN_<KEY>, with the key upper-cased and '.' replaced by '_'
 * (e.g. TIMEBIN_EXPERIMENT_N_TRAINS). A value in the file wins over the
 * environment; the ignored variable is reported as a warning.
 *
 * Keys starting with `manifest.` are skipped, so a run manifest can be fed
 * back as a config to reproduce the run.
 */

#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "timebin/mc_lab.hpp"

namespace timebin::cli {

class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Looks up an environment variable; std::getenv in production.
using EnvLookup = std::function<std::optional<std::string>(const std::string &)>;

EnvLookup process_environment();

inline constexpr const char *kEnvPrefix = "TIMEBIN_";

/// Environment variable name for a config key.
std::string env_name(const std::string &key);

struct FpCurveSettings {
    std::vector<double> t2_values{1.0 / 3.0};
    int phi_points = 64;
};

struct RunConfig {
    ExperimentConfig experiment;
    std::vector<double> phases;  ///< scanned analyzer phases
    double window_center_ns = 0.0;
    double window_width_ns = 1.0;
    double histogram_bin_width_ns = 1.0;
    double histogram_span_ns = 80.0;
    bool calibration = true;
    FpCurveSettings fp;

    /// Every key with its resolved value in canonical text, sorted by key.
    std::map<std::string, std::string> resolved;
};

/// Parses `text` (named `source` in diagnostics). Warnings go to `warn`.
RunConfig parse_config(const std::string &text, const std::string &source, const EnvLookup &env,
                       std::ostream &warn);

RunConfig load_config(const std::filesystem::path &path, const EnvLookup &env, std::ostream &warn);

/// "key = value" lines of the resolved config, sorted by key.
std::string canonical_text(const std::map<std::string, std::string> &resolved);

/// Hex SHA-256 of canonical_text(resolved).
std::string config_hash(const std::map<std::string, std::string> &resolved);

/// Parses "a:b:n" into n evenly spaced values from a to b inclusive.
std::vector<double> parse_range(const std::string &spec);

/// Shortest text with 17 significant digits, '.' decimal, no locale.
std::string format_double(double value);

} // namespace timebin::cli
