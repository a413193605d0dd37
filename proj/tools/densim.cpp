// SPDX-License-Identifier: Apache-2.0
//
// densim: system-level simulator for mmWave network densification
// Copyright (C) 2026 The densim authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

// Command-line front end: run campaigns, validate configs, dump the built-in layout.

#include "densim/campaign.hpp"
#include "densim/config.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <fstream>
#include <iostream>

namespace
{

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

void set_log_level()
{
    const char *env = std::getenv("DENSIM_LOG");
    if (!env || !*env)
    {
        spdlog::set_level(spdlog::level::warn);
        return;
    }
    const auto level = spdlog::level::from_str(env);
    if (level == spdlog::level::off && std::string(env) != "off")
    {
        spdlog::set_level(spdlog::level::warn);
        spdlog::warn("DENSIM_LOG: unknown level '{}', using warn", env);
        return;
    }
    spdlog::set_level(level);
}

} // namespace

int main(int argc, char **argv)
{
    set_log_level();

    CLI::App app{"densim: system-level simulator for IAB, NCR and RIS densification"};
    app.require_subcommand(1);

    std::string config_path, deployment, out_dir, layout_path;
    std::uint64_t seed = 0, slots = 0;

    auto *run = app.add_subcommand("run", "Run a campaign");
    run->add_option("--config", config_path, "Configuration file (INI)")->required();
    run->add_option("--deployment", deployment, "Only this deployment (e.g. stationary_ncr)");
    run->add_option("--seed", seed, "Only this seed");
    run->add_option("--slots", slots, "Number of slots per run");
    run->add_option("--out", out_dir, "Output directory");
    run->add_option("--layout", layout_path, "Layout file overriding node placement");

    std::string validate_path;
    auto *validate = app.add_subcommand("validate", "Check a configuration file");
    validate->add_option("--config", validate_path, "Configuration file (INI)")->required();

    std::string layout_out;
    auto *layout = app.add_subcommand("layout", "Print the built-in layout");
    layout->add_option("--out", layout_out, "Write to a file instead of stdout");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    densim::config::RunConfig cfg;
    try
    {
        if (*validate)
        {
            cfg = densim::config::load_config(validate_path);
            std::cout << densim::config::serialize(cfg);
            return 0;
        }
        if (*layout)
        {
            const auto records = densim::scenario::default_layout({});
            if (layout_out.empty())
                densim::scenario::write_layout(std::cout, records);
            else
            {
                std::ofstream f(layout_out);
                if (!f)
                {
                    std::cerr << "error: cannot write '" << layout_out << "'\n";
                    return kExitRuntime;
                }
                densim::scenario::write_layout(f, records);
            }
            return 0;
        }

        cfg = densim::config::load_config(config_path);
        if (!deployment.empty())
        {
            try
            {
                cfg.deployments = {densim::scenario::parse_deployment(deployment)};
            }
            catch (const std::invalid_argument &e)
            {
                throw densim::config::ConfigError("--deployment", e.what());
            }
        }
        if (run->count("--seed"))
            cfg.seeds = {seed};
        if (run->count("--slots"))
            cfg.n_slots = slots;
        if (!out_dir.empty())
            cfg.output_dir = out_dir;
        if (!layout_path.empty())
            cfg.layout = layout_path;
        densim::config::validate(cfg);
        if (!cfg.layout.empty())
            (void)densim::scenario::read_layout_file(cfg.layout);
    }
    catch (const densim::config::ConfigError &e)
    {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    }
    catch (const std::exception &e)
    {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    }

    try
    {
        const auto result = densim::campaign::run_campaign(cfg);
        densim::campaign::write_summary(result.rows, std::cout);
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return 0;
}
