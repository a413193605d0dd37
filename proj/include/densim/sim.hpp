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

#include "densim/channel.hpp"
#include "densim/mac.hpp"
#include "densim/phy.hpp"
#include "densim/scenario.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <vector>

namespace densim::sim
{

struct SimParams
{
    double fc_ghz = 28.0;
    double bandwidth_hz = 50e6;
    double scs_hz = 60e3;
    int subcarriers_per_prb = 12;
    double noise_density_dbm_hz = -174.0;
    double noise_figure_db = 9.0;

    double ncr_gain_db = 60.0;
    bool ncr_output_cap = true; // limit the per-PRB output power to the NCR's transmit power

    channel::FadingParams fading;
    bool shadowing = true;

    std::size_t codebook_az = 8;
    std::size_t codebook_el = 4;
    int geometry_epoch_slots = 40;

    std::optional<int> ris_phase_bits; // continuous phases when empty

    double association_floor_dbm = -150.0;
    int reassociation_slots = 0; // 0: associate once at t = 0

    mac::MacConfig mac;
    double throughput_window_s = 0.1;

    double noise_mw() const;
};

struct RunResult
{
    scenario::DeploymentKind deployment = scenario::DeploymentKind::MacroOnly;
    std::uint64_t seed = 0;
    std::uint64_t n_slots = 0;
    double duration_s = 0.0;

    std::map<NodeId, scenario::ServingChain> associations;
    std::vector<mac::TbRecord> trace;
    std::vector<mac::Delivery> deliveries;

    /// Effective SINR (dB) of every TB on a UE's own link, per direction (0 = DL, 1 = UL).
    std::array<std::vector<double>, 2> sinr_db;
    /// Mean throughput per UE over the run, bit/s.
    std::array<std::map<NodeId, double>, 2> ue_throughput_bps;
    /// Per-UE throughput over consecutive windows, Mbit/s.
    std::array<std::vector<double>, 2> throughput_samples_mbps;
    std::array<double, 2> jain{0.0, 0.0};
    /// Number of slots in which some node both transmitted and received.
    std::uint64_t half_duplex_violations = 0;
};

class Engine;

/// Channel-driven PHY plus the MAC state machine for one deployment and seed.
class Simulator
{
  public:
    Simulator(scenario::ScenarioState state, SimParams params, std::uint64_t seed);
    ~Simulator();
    Simulator(const Simulator &) = delete;
    Simulator &operator=(const Simulator &) = delete;

    RunResult run(std::uint64_t n_slots, std::ostream *channel_trace = nullptr);

    /// Wideband received power (dBm) of a UE through a chain under the current channels.
    double chain_power_dbm(NodeId ue, const scenario::ServingChain &chain);
    const scenario::ScenarioState &state() const;

    /// Beamformed gain d^H H f between codebook beams of two nodes on a PRB, large-scale loss and
    /// element gains included. Beam index = panel * beams_per_panel + beam within the panel.
    cplx beamformed_gain(NodeId tx, std::size_t tx_beam, NodeId rx, std::size_t rx_beam, int prb);
    /// Path loss plus shadowing of the link between two nodes, dB.
    double large_scale_loss_db(NodeId x, NodeId y);

  private:
    std::unique_ptr<Engine> engine_;
};

RunResult run_deployment(scenario::DeploymentKind kind, const scenario::GridGeometry &geometry,
                         const scenario::ScenarioParams &scenario_params, const SimParams &params, std::uint64_t seed,
                         std::uint64_t n_slots, const std::vector<scenario::NodeRecord> &layout = {});

/// Fills the per-direction summary fields of a result from its trace and deliveries.
void summarise(RunResult &result, double slot_duration_s, double window_s);

} // namespace densim::sim
