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

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "timebin/commands.hpp"

namespace cli = timebin::cli;

int main(int argc, char **argv) {
    CLI::App app{"Time-bin entanglement analyzer models and Monte-Carlo experiments"};
    app.set_version_flag("--version", std::string(cli::kToolVersion));
    app.require_subcommand(1);

    std::string config;
    std::string out;

    auto *fringe = app.add_subcommand("fringe", "Phase scan of tau = 0 coincidences with a fringe fit");
    fringe->add_option("config", config, "Config file")->required();
    fringe->add_option("--out", out, "Output CSV")->required();

    auto *histogram = app.add_subcommand("histogram", "TAC histogram of coincidence delays");
    histogram->add_option("config", config, "Config file")->required();
    histogram->add_option("--out", out, "Output CSV")->required();

    cli::FpCurveOptions fp;
    auto *fp_curve = app.add_subcommand("fp-curve", "Fiber-loop analyzer coincidence curve");
    fp_curve->add_option("--config", fp.config, "Config file providing fp.* defaults");
    auto *t2 = fp_curve->add_option("--t2", fp.t2, "Coupler transmission t^2");
    fp_curve->add_option("--scan-t2", fp.scan_t2, "t^2 scan a:b:n (inclusive)")->excludes(t2);
    fp_curve->add_option("--phi-points", fp.phi_points, "Phase samples over [0, 2 pi)");
    fp_curve->add_option("--out", out, "Output CSV")->required();

    auto *selftest = app.add_subcommand("selftest", "Run the oracle property suites");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return cli::kExitConfigError;
    }

    const cli::EnvLookup env = cli::process_environment();
    if (fringe->parsed()) {
        return cli::cmd_fringe(config, out, env, std::cout, std::cerr);
    }
    if (histogram->parsed()) {
        return cli::cmd_histogram(config, out, env, std::cout, std::cerr);
    }
    if (fp_curve->parsed()) {
        return cli::cmd_fp_curve(fp, out, env, std::cout, std::cerr);
    }
    if (selftest->parsed()) {
        return cli::cmd_selftest(env, std::cout, std::cerr);
    }
    return cli::kExitConfigError;
}
