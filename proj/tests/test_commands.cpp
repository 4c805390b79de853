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

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <gtest/gtest.h>

#include "timebin/commands.hpp"

using namespace timebin;
using namespace timebin::cli;
namespace fs = std::filesystem;

namespace {

EnvLookup no_env() {
    return [](const std::string &) -> std::optional<std::string> { return std::nullopt; };
}

class Commands : public ::testing::Test {
  protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("timebin_test_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path write(const std::string &name, const std::string &text) {
        const fs::path p = dir_ / name;
        std::ofstream(p) << text;
        return p;
    }

    fs::path path(const std::string &name) const { return dir_ / name; }

    fs::path dir_;
    std::ostringstream log_;
    std::ostringstream err_;
};

std::string slurp(const fs::path &p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Value of a "# key,value" summary line.
std::string summary(const std::string &csv, const std::string &key) {
    std::istringstream in(csv);
    std::string line;
    const std::string prefix = "# " + key + ",";
    while (std::getline(in, line)) {
        if (line.rfind(prefix, 0) == 0) {
            return line.substr(prefix.size());
        }
    }
    return "";
}

std::vector<std::vector<std::string>> rows(const std::string &csv) {
    std::vector<std::vector<std::string>> out;
    std::istringstream in(csv);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') {
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) {
            cells.push_back(cell);
        }
        out.push_back(cells);
    }
    return out;
}

const char *kIdealFringe = R"([detectors]
preset = ideal
[experiment]
mean_pairs = 0.1
n_trains = 400000
seed = 3
)";

} // namespace

TEST_F(Commands, FringeIdealVisibility) {
    const fs::path cfg = write("f.cfg", kIdealFringe);
    ASSERT_EQ(cmd_fringe(cfg, path("f.csv"), no_env(), log_, err_), kExitOk) << err_.str();
    const std::string csv = slurp(path("f.csv"));
    const double v = std::stod(summary(csv, "visibility"));
    const double e = std::stod(summary(csv, "visibility_err"));
    EXPECT_NEAR(v, 10.0 / 11.0, 4.0 * e);
    EXPECT_EQ(summary(csv, "net_visibility"), "");
    const auto r = rows(csv);
    ASSERT_EQ(r.size(), 13u);
    EXPECT_EQ(r[0], (std::vector<std::string>{"delta_rad", "counts", "counts_err", "predicted_probability"}));
    EXPECT_DOUBLE_EQ(std::stod(r[1][3]), 42.0 / 176.0);

    const std::string manifest = slurp(manifest_path(path("f.csv")));
    EXPECT_NE(manifest.find("manifest.outputs = " + path("f.csv").string() + "," +
                            manifest_path(path("f.csv")).string()),
              std::string::npos);
    EXPECT_NE(manifest.find("manifest.seed = 3"), std::string::npos);
    EXPECT_NE(manifest.find("manifest.tool_version = 1.0.0"), std::string::npos);
}

TEST_F(Commands, FringeWithoutPairsFailsWithNoSignal) {
    const fs::path cfg = write("f.cfg", "detectors.preset = ideal\nexperiment.mean_pairs = 0\nexperiment.n_trains = 1000\n");
    EXPECT_EQ(cmd_fringe(cfg, path("f.csv"), no_env(), log_, err_), kExitAnalysisFailure);
    EXPECT_NE(err_.str().find("no signal"), std::string::npos);
}

TEST_F(Commands, FringeDiscardEdgesReachesFullVisibility) {
    const fs::path cfg = write("f.cfg", std::string(kIdealFringe) + "[analyzer]\ndiscard_edges = true\n");
    ASSERT_EQ(cmd_fringe(cfg, path("f.csv"), no_env(), log_, err_), kExitOk) << err_.str();
    const std::string csv = slurp(path("f.csv"));
    const double v = std::stod(summary(csv, "visibility"));
    const double e = std::stod(summary(csv, "visibility_err"));
    EXPECT_NEAR(v, 1.0, 3.0 * e);
    EXPECT_EQ(summary(csv, "dimension_bound"), v >= 1.0 ? "inf" : summary(csv, "dimension_bound"));
}

TEST_F(Commands, FringeWithNoiseReportsNetVisibility) {
    const fs::path cfg = write("f.cfg", R"([detectors]
dark_rate_ge = 3e6
noise_prob_ingaas = 2e-3
eta_ge = 0.5
eta_ingaas = 0.5
channel_loss_db = 0
[experiment]
mean_pairs = 0.1
n_trains = 2000000
)");
    ASSERT_EQ(cmd_fringe(cfg, path("f.csv"), no_env(), log_, err_), kExitOk) << err_.str();
    const std::string csv = slurp(path("f.csv"));
    const double raw = std::stod(summary(csv, "visibility"));
    const double net = std::stod(summary(csv, "net_visibility"));
    const double net_err = std::stod(summary(csv, "net_visibility_err"));
    EXPECT_LT(raw, net);
    EXPECT_NEAR(net, 10.0 / 11.0, 4.0 * net_err);
    EXPECT_GT(std::stod(summary(csv, "accidentals_per_point")), 0.0);
}

TEST_F(Commands, FringeRejectsLoopAnalyzer) {
    const fs::path cfg = write("f.cfg", "analyzer.type = loop\n");
    EXPECT_EQ(cmd_fringe(cfg, path("f.csv"), no_env(), log_, err_), kExitConfigError);
}

TEST_F(Commands, ConfigErrorsExitTwoWithDiagnostics) {
    const fs::path cfg = write("bad.cfg", "[train]\ndimension = eleven\n");
    EXPECT_EQ(cmd_fringe(cfg, path("f.csv"), no_env(), log_, err_), kExitConfigError);
    EXPECT_NE(err_.str().find("bad.cfg:2"), std::string::npos);
    EXPECT_NE(err_.str().find("train.dimension"), std::string::npos);
    EXPECT_EQ(cmd_fringe(path("missing.cfg"), path("f.csv"), no_env(), log_, err_), kExitConfigError);
    const fs::path empty = write("empty.cfg", "experiment.n_trains = 0\n");
    EXPECT_EQ(cmd_histogram(empty, path("h.csv"), no_env(), log_, err_), kExitConfigError);
}

TEST_F(Commands, HistogramPeaksAndWindowConsistency) {
    const std::string text = std::string(kIdealFringe) + "[detectors]\ngate_width_ns = 60\n";
    const fs::path cfg = write("h.cfg", text);
    ASSERT_EQ(cmd_histogram(cfg, path("h.csv"), no_env(), log_, err_), kExitOk) << err_.str();
    ASSERT_EQ(cmd_fringe(cfg, path("f.csv"), no_env(), log_, err_), kExitOk) << err_.str();
    const std::string h = slurp(path("h.csv"));
    const auto r = rows(h);
    ASSERT_EQ(r[0], (std::vector<std::string>{"tau_ns", "counts"}));
    int peaks = 0;
    for (std::size_t i = 1; i < r.size(); ++i) {
        const double tau = std::stod(r[i][0]);
        if (std::stoll(r[i][1]) > 0) {
            ++peaks;
            EXPECT_EQ(std::fmod(std::abs(tau), 13.0), 0.0) << tau;
        }
    }
    EXPECT_EQ(peaks, 3);
    EXPECT_EQ(summary(h, "window_count"), summary(slurp(path("f.csv")), "window_count"));
}

TEST_F(Commands, FpCurveOptimum) {
    FpCurveOptions o;
    o.t2 = 0.3333333333;
    ASSERT_EQ(cmd_fp_curve(o, path("fp.csv"), no_env(), log_, err_), kExitOk) << err_.str();
    const std::string csv = slurp(path("fp.csv"));
    EXPECT_NEAR(std::stod(summary(csv, "best_t2").substr(summary(csv, "best_t2").find(',') + 1)), 1.0, 1e-6);
    const auto r = rows(csv);
    ASSERT_EQ(r[0], (std::vector<std::string>{"t2", "phi_sum_rad", "p_coinc"}));
    EXPECT_EQ(r.size(), 65u);
}

TEST_F(Commands, FpCurveFlatAtZeroTransmission) {
    FpCurveOptions o;
    o.t2 = 0.0;
    o.phi_points = 16;
    ASSERT_EQ(cmd_fp_curve(o, path("fp.csv"), no_env(), log_, err_), kExitOk);
    const auto r = rows(slurp(path("fp.csv")));
    ASSERT_EQ(r.size(), 17u);
    for (std::size_t i = 1; i < r.size(); ++i) {
        EXPECT_NEAR(std::stod(r[i][2]), 1.0, 1e-15);
    }
}

TEST_F(Commands, FpCurveScanPicksGridPointNearestOneThird) {
    FpCurveOptions o;
    o.scan_t2 = "0.05:0.95:19";
    ASSERT_EQ(cmd_fp_curve(o, path("fp.csv"), no_env(), log_, err_), kExitOk);
    const std::string best = summary(slurp(path("fp.csv")), "best_t2");
    EXPECT_NEAR(std::stod(best.substr(0, best.find(','))), 0.35, 1e-12);
}

TEST_F(Commands, FpCurveErrors) {
    FpCurveOptions o;
    o.t2 = 1.5;
    EXPECT_EQ(cmd_fp_curve(o, path("fp.csv"), no_env(), log_, err_), kExitConfigError);
    o.t2 = -0.1;
    EXPECT_EQ(cmd_fp_curve(o, path("fp.csv"), no_env(), log_, err_), kExitConfigError);
    o.t2 = 0.3;
    o.phi_points = 4;
    EXPECT_EQ(cmd_fp_curve(o, path("fp.csv"), no_env(), log_, err_), kExitConfigError);
    FpCurveOptions s;
    s.scan_t2 = "0:2:3";
    EXPECT_EQ(cmd_fp_curve(s, path("fp.csv"), no_env(), log_, err_), kExitConfigError);
}

TEST_F(Commands, OutputsAreByteIdenticalAcrossRuns) {
    const fs::path cfg = write("f.cfg", std::string(kIdealFringe) + "[detectors]\ndark_rate_ge = 1e5\n"
                                                                    "noise_prob_ingaas = 1e-3\n");
    ASSERT_EQ(cmd_fringe(cfg, path("a.csv"), no_env(), log_, err_), kExitOk) << err_.str();
    const std::string first = slurp(path("a.csv"));
    const std::string first_manifest = slurp(manifest_path(path("a.csv")));
    ASSERT_EQ(cmd_fringe(cfg, path("a.csv"), no_env(), log_, err_), kExitOk);
    EXPECT_EQ(first, slurp(path("a.csv")));
    EXPECT_EQ(first_manifest, slurp(manifest_path(path("a.csv"))));
}

TEST_F(Commands, ManifestReproducesRun) {
    const fs::path cfg = write("f.cfg", kIdealFringe);
    ASSERT_EQ(cmd_fringe(cfg, path("a.csv"), no_env(), log_, err_), kExitOk);
    ASSERT_EQ(cmd_fringe(manifest_path(path("a.csv")), path("b.csv"), no_env(), log_, err_), kExitOk)
        << err_.str();
    EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
    const std::string hash_line = "manifest.config_hash = ";
    const std::string ma = slurp(manifest_path(path("a.csv")));
    const std::string mb = slurp(manifest_path(path("b.csv")));
    EXPECT_EQ(ma.substr(ma.find(hash_line), 88), mb.substr(mb.find(hash_line), 88));
}

TEST_F(Commands, SelftestPassesAndRejectsCorruptEnvironment) {
    EXPECT_EQ(cmd_selftest(no_env(), log_, err_), kExitOk) << log_.str() << err_.str();
    EXPECT_NE(log_.str().find("PASS"), std::string::npos);
    EXPECT_EQ(log_.str().find("FAIL"), std::string::npos);
    const EnvLookup bad = [](const std::string &k) -> std::optional<std::string> {
        if (k == "TIMEBIN_EXPERIMENT_N_TRAINS") {
            return "lots";
        }
        return std::nullopt;
    };
    EXPECT_EQ(cmd_selftest(bad, log_, err_), kExitConfigError);
    const EnvLookup bad_seed = [](const std::string &k) -> std::optional<std::string> {
        if (k == "TIMEBIN_SELFTEST_SEED") {
            return "-3";
        }
        return std::nullopt;
    };
    EXPECT_EQ(cmd_selftest(bad_seed, log_, err_), kExitConfigError);
}

TEST_F(Commands, PresetsLoad) {
    for (const char *name : {"paper-fig2.cfg", "paper-fig3.cfg", "paper-fig5.cfg"}) {
        std::ostringstream warn;
        EXPECT_NO_THROW(load_config(fs::path(TIMEBIN_PRESET_DIR) / name, no_env(), warn)) << name;
    }
}
