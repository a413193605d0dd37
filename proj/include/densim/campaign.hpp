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

#include "densim/config.hpp"
#include "densim/sim.hpp"

#include <array>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace densim::campaign
{

/// Percentiles of one deployment and direction, pooled over all seeds of a campaign.
struct SummaryRow
{
    scenario::DeploymentKind deployment = scenario::DeploymentKind::MacroOnly;
    Direction direction = Direction::Downlink;
    double sinr_p10 = 0.0, sinr_p50 = 0.0, sinr_p90 = 0.0;   // dB
    double tput_p10 = 0.0, tput_p50 = 0.0, tput_p90 = 0.0;   // Mbit/s
    double jain = 0.0;                                        // median over seeds
    std::size_t n_runs = 0;
};

struct CampaignResult
{
    std::vector<SummaryRow> rows; // deployment-major, DL before UL
    std::vector<std::filesystem::path> run_dirs;
};

/// Writes the per-run CSV files of one result into dir (created if needed).
void write_run_outputs(const sim::RunResult &result, const std::filesystem::path &dir, bool with_trace);

/// Summary rows for a set of runs of the same deployment.
std::array<SummaryRow, 2> summarise_runs(const std::vector<sim::RunResult> &runs);

void write_summary(const std::vector<SummaryRow> &rows, std::ostream &out);

/// Runs every (deployment, seed) of the config, writing <out>/<deployment>/seed_<n>/ per run plus
/// <out>/summary.csv and <out>/fairness.csv. Throws std::runtime_error when the output cannot be written.
CampaignResult run_campaign(const config::RunConfig &cfg);

} // namespace densim::campaign
