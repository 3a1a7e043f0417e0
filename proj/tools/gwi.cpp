/*
   Copyright 2026 The gwi Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "gwi/cli.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitResource = 3;

struct Flags {
    std::string config;
    std::string model;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::optional<int> workers;
};

void add_common(CLI::App* sub, Flags& f) {
    sub->add_option("--config", f.config, "JSON config file");
    sub->add_option("--model", f.model, "preset name (modelA, modelC, modelD, modelD_deterministic_immigration)");
    sub->add_option("--seed", f.seed, "master seed (overrides the config)");
    sub->add_option("--out", f.out, "output path (overrides the config; default stdout)");
    sub->add_option("--workers", f.workers, "worker threads (overrides the config)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gwi: two-type Galton-Watson processes with immigration, CLS estimation and limit laws"};
    app.require_subcommand(1);
    Flags flags;
    const std::map<std::string, std::string> about{
        {"simulate", "simulate one trajectory and print it as CSV"},
        {"estimate", "CLS estimates from a trajectory file or from simulated replications"},
        {"limit-sample", "sample a limit functional by Euler-Maruyama"},
        {"mc-compare", "KS comparison of an estimator statistic with its limit law"},
        {"moments-check", "moment scaling, conditional moment and time-average checks"},
        {"validate-laws", "report means, covariances, criticality and degeneracy of a model"}};
    for (const auto& name : gwi::cli::subcommands()) add_common(app.add_subcommand(name, about.at(name)), flags);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }
    const std::string sub = app.get_subcommands().front()->get_name();
    try {
        nlohmann::json cfg = nlohmann::json::object();
        if (!flags.config.empty()) cfg = gwi::io::read_json_file(flags.config);
        if (!flags.model.empty()) cfg["model"] = flags.model;
        gwi::cli::RunConfig rc = gwi::cli::parse_config(cfg);
        if (flags.seed) rc.seed = *flags.seed;
        if (flags.workers) {
            if (*flags.workers < 1) throw gwi::ConfigError("workers: expected a positive integer");
            rc.workers = *flags.workers;
        }
        if (!flags.out.empty()) rc.out = flags.out;
        const std::string content = gwi::cli::dispatch(sub, rc);
        if (rc.out)
            gwi::io::write_file_atomic(*rc.out, content);
        else
            std::cout << content;
        return 0;
    } catch (const gwi::ConfigError& e) {
        std::cerr << "gwi " << sub << ": config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const gwi::ResourceError& e) {
        std::cerr << "gwi " << sub << ": resource error: " << e.what() << "\n";
        return kExitResource;
    } catch (const std::bad_alloc&) {
        std::cerr << "gwi " << sub << ": resource error: out of memory\n";
        return kExitResource;
    } catch (const std::exception& e) {
        std::cerr << "gwi " << sub << ": error: " << e.what() << "\n";
        return kExitResource;
    }
}
