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

#include "timebin/config.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "timebin/analysis.hpp"

namespace timebin::cli {

namespace {

enum class Kind { Int, Real, Bool, Word, RealList };

struct KeySpec {
    const char *key;
    Kind kind;
    const char *fallback;  ///< default; empty means "derived"
};

// clang-format off
constexpr std::array kSchema{
    KeySpec{"train.dimension",               Kind::Int,      "11"},
    KeySpec{"train.amplitudes",              Kind::RealList, "uniform"},
    KeySpec{"train.phases",                  Kind::RealList, "constant"},
    KeySpec{"train.bin_spacing_ns",          Kind::Real,     "13"},
    KeySpec{"analyzer.type",                 Kind::Word,     "two_way"},
    KeySpec{"analyzer.per_path_amplitude",   Kind::Real,     "0.5"},
    KeySpec{"analyzer.discard_edges",        Kind::Bool,     "false"},
    KeySpec{"analyzer.t2",                   Kind::Real,     "0.33333333333333331"},
    KeySpec{"analyzer.phase_b",              Kind::Real,     "0"},
    KeySpec{"analyzer.max_loops",            Kind::Int,      "200"},
    KeySpec{"detectors.preset",              Kind::Word,     "lab"},
    KeySpec{"detectors.eta_ge",              Kind::Real,     ""},
    KeySpec{"detectors.dark_rate_ge",        Kind::Real,     ""},
    KeySpec{"detectors.eta_ingaas",          Kind::Real,     ""},
    KeySpec{"detectors.noise_prob_ingaas",   Kind::Real,     ""},
    KeySpec{"detectors.gate_width_ns",       Kind::Real,     ""},
    KeySpec{"detectors.coincidence_window_ns", Kind::Real,   ""},
    KeySpec{"detectors.channel_loss_db",     Kind::Real,     ""},
    KeySpec{"experiment.mean_pairs",         Kind::Real,     "0.05"},
    KeySpec{"experiment.n_trains",           Kind::Int,      "1000000"},
    KeySpec{"experiment.seed",               Kind::Int,      "1"},
    KeySpec{"scan.points",                   Kind::Int,      "12"},
    KeySpec{"scan.min_rad",                  Kind::Real,     "0"},
    KeySpec{"scan.max_rad",                  Kind::Real,     "pi"},
    KeySpec{"window.center_ns",              Kind::Real,     "0"},
    KeySpec{"window.width_ns",               Kind::Real,     ""},
    KeySpec{"histogram.bin_width_ns",        Kind::Real,     "1"},
    KeySpec{"histogram.span_ns",             Kind::Real,     "80"},
    KeySpec{"calibration.enabled",           Kind::Bool,     "true"},
    KeySpec{"fp.t2",                         Kind::Real,     "0.33333333333333331"},
    KeySpec{"fp.scan_t2",                    Kind::Word,     "none"},
    KeySpec{"fp.phi_points",                 Kind::Int,      "64"},
};
// clang-format on

const KeySpec *find_spec(const std::string &key) {
    for (const auto &s : kSchema) {
        if (key == s.key) {
            return &s;
        }
    }
    return nullptr;
}

bool numeric_kind(Kind k) { return k == Kind::Int || k == Kind::Real; }

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

struct RawValue {
    std::string text;
    std::string origin;  ///< "file:line" or "environment NAME"
};

[[noreturn]] void fail(const RawValue &v, const std::string &key, const std::string &msg) {
    throw ConfigError(v.origin + ": field '" + key + "': " + msg);
}

std::optional<double> to_real(const std::string &text) {
    if (text == "pi") {
        return std::numbers::pi;
    }
    double v = 0.0;
    const char *end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
        return std::nullopt;
    }
    return v;
}

std::optional<std::int64_t> to_int(const std::string &text) {
    std::int64_t v = 0;
    const char *end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end) {
        // allow 1e6-style integers
        auto r = to_real(text);
        if (r && std::floor(*r) == *r && std::abs(*r) < 9.0e18) {
            return static_cast<std::int64_t>(*r);
        }
        return std::nullopt;
    }
    return v;
}

class Resolver {
  public:
    explicit Resolver(std::map<std::string, RawValue> raw) : raw_(std::move(raw)) {}

    const RawValue *raw(const std::string &key) const {
        auto it = raw_.find(key);
        return it == raw_.end() ? nullptr : &it->second;
    }

    double real(const std::string &key, double derived = 0.0) {
        const RawValue v = value_or_default(key, format_double(derived));
        auto r = to_real(v.text);
        if (!r) {
            fail(v, key, "expected a real number, got '" + v.text + "'");
        }
        resolved[key] = format_double(*r);
        return *r;
    }

    std::int64_t integer(const std::string &key) {
        const RawValue v = value_or_default(key, "");
        auto r = to_int(v.text);
        if (!r) {
            fail(v, key, "expected an integer, got '" + v.text + "'");
        }
        resolved[key] = std::to_string(*r);
        return *r;
    }

    bool boolean(const std::string &key) {
        const RawValue v = value_or_default(key, "");
        if (v.text == "true" || v.text == "1" || v.text == "yes") {
            resolved[key] = "true";
            return true;
        }
        if (v.text == "false" || v.text == "0" || v.text == "no") {
            resolved[key] = "false";
            return false;
        }
        fail(v, key, "expected true or false, got '" + v.text + "'");
    }

    std::string word(const std::string &key, std::initializer_list<const char *> allowed) {
        const RawValue v = value_or_default(key, "");
        for (const char *a : allowed) {
            if (v.text == a) {
                resolved[key] = v.text;
                return v.text;
            }
        }
        std::string msg = "expected one of";
        for (const char *a : allowed) {
            msg += std::string(" ") + a;
        }
        fail(v, key, msg + ", got '" + v.text + "'");
    }

    std::string text(const std::string &key) {
        const RawValue v = value_or_default(key, "");
        resolved[key] = v.text;
        return v.text;
    }

    /// Returns nullopt for the keyword, otherwise the parsed list.
    std::optional<std::vector<double>> real_list(const std::string &key, const char *keyword) {
        const RawValue v = value_or_default(key, "");
        if (v.text == keyword) {
            resolved[key] = keyword;
            return std::nullopt;
        }
        std::vector<double> out;
        std::stringstream ss(v.text);
        std::string item;
        std::string canon;
        while (std::getline(ss, item, ',')) {
            auto r = to_real(trim(item));
            if (!r) {
                fail(v, key, std::string("expected '") + keyword +
                                 "' or a comma-separated list of reals, got '" + v.text + "'");
            }
            out.push_back(*r);
            canon += (canon.empty() ? "" : ",") + format_double(*r);
        }
        if (out.empty()) {
            fail(v, key, "empty list");
        }
        resolved[key] = canon;
        return out;
    }

    /// Origin of the value, for validation diagnostics.
    std::string origin(const std::string &key) const {
        const RawValue *v = raw(key);
        return v ? v->origin : std::string("default");
    }

    std::map<std::string, std::string> resolved;

  private:
    RawValue value_or_default(const std::string &key, const std::string &derived) const {
        if (const RawValue *v = raw(key)) {
            return *v;
        }
        const KeySpec *spec = find_spec(key);
        std::string fallback = spec && *spec->fallback ? spec->fallback : derived;
        return {fallback, "default"};
    }

    std::map<std::string, RawValue> raw_;
};

template <class F>
auto validated(const std::string &what, F &&f) {
    try {
        return f();
    } catch (const InvalidArgument &e) {
        throw ConfigError(what + ": " + e.what());
    }
}

} // namespace

EnvLookup process_environment() {
    return [](const std::string &name) -> std::optional<std::string> {
        if (const char *v = std::getenv(name.c_str())) {
            return std::string(v);
        }
        return std::nullopt;
    };
}

std::string env_name(const std::string &key) {
    std::string out = kEnvPrefix;
    for (char c : key) {
        out += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
    return out;
}

std::string format_double(double value) {
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value,
                                   std::chars_format::general, 17);
    if (ec != std::errc()) {
        throw std::runtime_error("format_double: conversion failed");
    }
    return std::string(buf.data(), ptr);
}

std::vector<double> parse_range(const std::string &spec) {
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ':')) {
        parts.push_back(trim(item));
    }
    if (parts.size() != 3) {
        throw ConfigError("range '" + spec + "' must look like a:b:n");
    }
    auto a = to_real(parts[0]);
    auto b = to_real(parts[1]);
    auto n = to_int(parts[2]);
    if (!a || !b || !n || *n < 1) {
        throw ConfigError("range '" + spec + "' must look like a:b:n with n >= 1");
    }
    std::vector<double> out;
    for (std::int64_t k = 0; k < *n; ++k) {
        out.push_back(*n == 1 ? *a : *a + (*b - *a) * static_cast<double>(k) / static_cast<double>(*n - 1));
    }
    return out;
}

RunConfig parse_config(const std::string &text, const std::string &source, const EnvLookup &env,
                       std::ostream &warn) {
    std::map<std::string, RawValue> raw;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string where = source + ":" + std::to_string(line_no);
        const auto hash = line.find_first_of("#;");
        const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
        if (body.empty()) {
            continue;
        }
        if (body.front() == '[') {
            if (body.back() != ']' || body.size() < 3) {
                throw ConfigError(where + ": malformed section header '" + body + "'");
            }
            section = trim(std::string_view(body).substr(1, body.size() - 2));
            continue;
        }
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(where + ": expected 'key = value', got '" + body + "'");
        }
        std::string key = trim(std::string_view(body).substr(0, eq));
        const std::string value = trim(std::string_view(body).substr(eq + 1));
        if (!section.empty()) {
            key = section + "." + key;
        }
        if (key.rfind("manifest.", 0) == 0) {
            continue;
        }
        if (!find_spec(key)) {
            throw ConfigError(where + ": unknown field '" + key + "'");
        }
        if (value.empty()) {
            throw ConfigError(where + ": field '" + key + "': empty value");
        }
        if (raw.contains(key)) {
            throw ConfigError(where + ": field '" + key + "' set twice (first at " +
                              raw[key].origin + ")");
        }
        raw[key] = {value, where};
    }

    for (const auto &spec : kSchema) {
        if (!numeric_kind(spec.kind)) {
            continue;
        }
        const std::string name = env_name(spec.key);
        const auto value = env(name);
        if (!value) {
            continue;
        }
        if (raw.contains(spec.key)) {
            warn << "warning: " << name << " ignored; " << raw[spec.key].origin << " sets "
                 << spec.key << "\n";
            continue;
        }
        const bool ok = spec.kind == Kind::Int ? to_int(trim(*value)).has_value()
                                               : to_real(trim(*value)).has_value();
        if (!ok) {
            throw ConfigError("environment " + name + ": field '" + spec.key +
                              "': expected a number, got '" + *value + "'");
        }
        raw[spec.key] = {trim(*value), "environment " + name};
    }

    Resolver r(std::move(raw));
    RunConfig cfg;

    // train
    const auto dim = r.integer("train.dimension");
    if (dim < 1 || dim > 100000) {
        throw ConfigError(r.origin("train.dimension") + ": field 'train.dimension': must be in [1, 100000]");
    }
    auto amps = r.real_list("train.amplitudes", "uniform");
    auto phases = r.real_list("train.phases", "constant");
    const double spacing = r.real("train.bin_spacing_ns");
    ExperimentConfig &exp = cfg.experiment;
    exp.train = validated("train", [&] {
        return make_pulse_train(static_cast<int>(dim), amps, phases, spacing);
    });

    // analyzer
    const std::string type = r.word("analyzer.type", {"two_way", "loop"});
    if (type == "two_way") {
        TwoWayConfig tw;
        tw.per_path_amplitude = r.real("analyzer.per_path_amplitude");
        tw.discard_edges = r.boolean("analyzer.discard_edges");
        validated("analyzer", [&] { tw.validate(); return 0; });
        if (tw.discard_edges && dim < 2) {
            throw ConfigError(r.origin("analyzer.discard_edges") +
                              ": field 'analyzer.discard_edges': needs train.dimension >= 2");
        }
        exp.analyzer = tw;
    } else {
        LoopConfig loop;
        loop.t2 = r.real("analyzer.t2");
        loop.phase_b = r.real("analyzer.phase_b");
        loop.max_loops = static_cast<int>(r.integer("analyzer.max_loops"));
        validated("analyzer", [&] { loop.validate(); return 0; });
        exp.analyzer = loop;
    }

    // detectors: preset, then per-field overrides
    const std::string preset = r.word("detectors.preset", {"lab", "ideal"});
    DetectorModel det = preset == "ideal" ? DetectorModel::ideal() : DetectorModel{};
    det.eta_ge = r.real("detectors.eta_ge", det.eta_ge);
    det.dark_rate_ge = r.real("detectors.dark_rate_ge", det.dark_rate_ge);
    det.eta_ingaas = r.real("detectors.eta_ingaas", det.eta_ingaas);
    det.noise_prob_ingaas = r.real("detectors.noise_prob_ingaas", det.noise_prob_ingaas);
    det.gate_width_ns = r.real("detectors.gate_width_ns", det.gate_width_ns);
    det.coincidence_window_ns = r.real("detectors.coincidence_window_ns", det.coincidence_window_ns);
    det.channel_loss_db = r.real("detectors.channel_loss_db", det.channel_loss_db);
    exp.detectors = det;

    exp.mean_pairs_per_train = r.real("experiment.mean_pairs");
    exp.n_trains = r.integer("experiment.n_trains");
    const auto seed = r.integer("experiment.seed");
    if (seed < 0) {
        throw ConfigError(r.origin("experiment.seed") + ": field 'experiment.seed': must be >= 0");
    }
    exp.rng_seed = static_cast<std::uint64_t>(seed);
    validated("experiment", [&] { exp.validate(); return 0; });

    const auto points = r.integer("scan.points");
    if (points < 1 || points > 100000) {
        throw ConfigError(r.origin("scan.points") + ": field 'scan.points': must be in [1, 100000]");
    }
    const double lo = r.real("scan.min_rad");
    const double hi = r.real("scan.max_rad");
    cfg.phases = phase_grid(static_cast<int>(points), lo, hi);

    cfg.window_center_ns = r.real("window.center_ns");
    cfg.window_width_ns = r.real("window.width_ns", det.coincidence_window_ns);
    if (!(cfg.window_width_ns > 0.0)) {
        throw ConfigError(r.origin("window.width_ns") + ": field 'window.width_ns': must be > 0");
    }
    cfg.histogram_bin_width_ns = r.real("histogram.bin_width_ns");
    cfg.histogram_span_ns = r.real("histogram.span_ns");
    if (!(cfg.histogram_bin_width_ns > 0.0) || !(cfg.histogram_span_ns > 0.0)) {
        throw ConfigError(r.origin("histogram.bin_width_ns") +
                          ": histogram bin width and span must be > 0");
    }
    cfg.calibration = r.boolean("calibration.enabled");

    const double fp_t2 = r.real("fp.t2");
    const std::string scan = r.text("fp.scan_t2");
    try {
        cfg.fp.t2_values = scan == "none" ? std::vector<double>{fp_t2} : parse_range(scan);
    } catch (const ConfigError &e) {
        throw ConfigError(r.origin("fp.scan_t2") + ": field 'fp.scan_t2': " + e.what());
    }
    cfg.fp.phi_points = static_cast<int>(r.integer("fp.phi_points"));

    cfg.resolved = std::move(r.resolved);
    return cfg;
}

RunConfig load_config(const std::filesystem::path &path, const EnvLookup &env, std::ostream &warn) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError(path.string() + ": cannot open config file");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.string(), env, warn);
}

std::string canonical_text(const std::map<std::string, std::string> &resolved) {
    std::string out;
    for (const auto &[k, v] : resolved) {
        out += k + " = " + v + "\n";
    }
    return out;
}

std::string config_hash(const std::map<std::string, std::string> &resolved) {
    const std::string text = canonical_text(resolved);
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (EVP_Digest(text.data(), text.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("config_hash: SHA-256 failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string hex;
    for (unsigned int i = 0; i < len; ++i) {
        hex += kHex[digest[i] >> 4];
        hex += kHex[digest[i] & 0xf];
    }
    return hex;
}

} // namespace timebin::cli
