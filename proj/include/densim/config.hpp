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

#pragma once

#include "densim/scenario.hpp"
#include "densim/sim.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace densim::config
{

/// Invalid configuration. key() names the offending entry as "section.key".
class ConfigError : public std::runtime_error
{
  public:
    ConfigError(std::string key, const std::string &message)
        : std::runtime_error(key + ": " + message), key_(std::move(key))
    {
    }
    const std::string &key() const { return key_; }

  private:
    std::string key_;
};

/// Campaign description. Every field defaults to the reference setup, so an empty file is a valid config.
struct RunConfig
{
    std::vector<scenario::DeploymentKind> deployments{std::begin(scenario::kAllDeployments),
                                                      std::end(scenario::kAllDeployments)};
    std::uint64_t n_slots = 8000;
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};

    double carrier_ghz = 28.0;
    double bandwidth_mhz = 50.0;
    double scs_khz = 60.0;
    int n_prbs = 66;
    double ncr_gain_db = 60.0;

    std::string output_dir = "densim_out";
    std::string layout; // empty: built-in layout
    bool write_trace = true;
    bool channel_trace = false;

    /// Free-form "key = value" tuning of the models; see override_keys().
    std::map<std::string, std::string> overrides;

    bool operator==(const RunConfig &) const = default;
};

/// INI text with sections [run], [radio] and [overrides]. Throws ConfigError.
RunConfig parse_config(std::istream &in);
RunConfig load_config(const std::string &path);

/// Throws ConfigError naming the first offending key.
void validate(const RunConfig &cfg);

/// INI text that parse_config maps back to an equal RunConfig.
std::string serialize(const RunConfig &cfg);

/// Names accepted in the [overrides] section.
std::vector<std::string> override_keys();

scenario::GridGeometry grid_geometry(const RunConfig &cfg);
scenario::ScenarioParams scenario_params(const RunConfig &cfg);
sim::SimParams sim_params(const RunConfig &cfg);

} // namespace densim::config
