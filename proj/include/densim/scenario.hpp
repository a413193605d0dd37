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

#include "densim/antenna.hpp"
#include "densim/types.hpp"

#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace densim::scenario
{

/// Manhattan ("Madrid") street grid. Street centrelines sit on multiples of the pitch
/// block_size + street_width; sidewalks are the outer part of each street.
struct GridGeometry
{
    double block_size = 120.0;
    double sidewalk_width = 3.0;
    double street_width = 14.0;
    int n_blocks_traversed = 3;

    double pitch() const { return block_size + street_width; }
    void validate() const; // throws std::invalid_argument
};

enum class DeploymentKind
{
    MacroOnly,
    StationaryIab,
    StationaryNcr,
    StationaryRis,
    UavIab,
    UavNcr
};

inline constexpr DeploymentKind kAllDeployments[] = {
    DeploymentKind::MacroOnly,     DeploymentKind::StationaryIab, DeploymentKind::StationaryNcr,
    DeploymentKind::StationaryRis, DeploymentKind::UavIab,        DeploymentKind::UavNcr};

std::string_view to_string(DeploymentKind k);
/// Accepts the snake_case names printed by to_string. Throws std::invalid_argument.
DeploymentKind parse_deployment(std::string_view name);

enum class NodeKind
{
    Gnb,
    IabNode,
    Ncr,
    Ris,
    Ue
};

std::string_view to_string(NodeKind k);

struct NodeDescriptor
{
    NodeId id = kNoNode;
    NodeKind kind = NodeKind::Ue;
    Vec3 position;
    std::optional<double> tx_power_dbm; // empty for passive nodes
    /// Panel 0 is the backhaul panel for IAB/NCR nodes; the rest are access panels.
    std::vector<antenna::ArrayGeometry> panels;
    double speed_kmh = 0.0;
    bool mounted_on_uav = false;
    NodeId cell = kNoNode; // home gNB, used for same-cell link classification

    double height() const { return position.z; }
    bool is_auxiliary() const { return kind == NodeKind::IabNode || kind == NodeKind::Ncr || kind == NodeKind::Ris; }
};

enum class ChainKind
{
    Direct,
    ViaIab,
    ViaNcr,
    ViaRis
};

std::string_view to_string(ChainKind k);

struct ServingChain
{
    ChainKind kind = ChainKind::Direct;
    NodeId gnb = kNoNode;
    NodeId relay = kNoNode; // IAB node, NCR or RIS; kNoNode for direct
    bool out_of_coverage = false;

    /// Node the UE exchanges data with over the air on its last hop.
    NodeId access_node() const { return relay == kNoNode ? gnb : relay; }
    bool operator==(const ServingChain &) const = default;
};

/// Per-entity parameters (heights, powers, arrays, speeds) plus the tunables for the default layout.
struct ScenarioParams
{
    double gnb_height = 25.0, gnb_power_dbm = 35.0;
    double stationary_height = 10.0, stationary_power_dbm = 32.0;
    double ris_height = 40.0;
    double uav_height = 40.0, uav_power_dbm = 29.0, uav_speed_kmh = 40.0;
    double ue_height = 1.5, ue_power_dbm = 24.0, ue_speed_kmh = 40.0;
    std::size_t gnb_array = 8, aux_array = 4, ris_array = 8;
    double element_gain_dbi = 8.0;
    double ris_downtilt_deg = 25.0;
    double uav_access_downtilt_deg = 90.0;
    std::size_t ues_per_street = 4;
    /// Initial UE positions as fractions of the left block, shared by both streets.
    std::vector<double> ue_block_fractions{0.2, 0.4, 0.6, 0.8};
};

/// One line of a layout file.
struct NodeRecord
{
    NodeId id = kNoNode;
    std::string kind; // gnb | ue | iab | ncr | ris | uav_iab | uav_ncr
    Vec3 position;
    std::optional<double> power_dbm;
    std::vector<double> panel_azimuths_deg;
    std::vector<double> panel_downtilts_deg;
    NodeId cell = kNoNode;
};

std::vector<NodeRecord> read_layout(std::istream &in);
std::vector<NodeRecord> read_layout_file(const std::string &path);
void write_layout(std::ostream &out, const std::vector<NodeRecord> &records);

struct MobilityTrack
{
    double x_end = 0.0; // UE course end along +x
};

struct ScenarioState
{
    GridGeometry geometry;
    DeploymentKind kind = DeploymentKind::MacroOnly;
    std::vector<NodeDescriptor> nodes; // sorted by id
    std::map<NodeId, ServingChain> associations;
    std::map<NodeId, MobilityTrack> tracks;
    double sim_time = 0.0;

    const NodeDescriptor &node(NodeId id) const;
    NodeDescriptor &node(NodeId id);
    bool has_node(NodeId id) const;

    std::vector<NodeId> gnbs() const;       // set B
    std::vector<NodeId> iab_nodes() const;  // set R
    std::vector<NodeId> ncrs() const;       // set S
    std::vector<NodeId> riss() const;       // set T
    std::vector<NodeId> ues() const;        // set U
    std::vector<NodeId> auxiliaries() const;
    std::vector<NodeId> uavs() const;

    const ServingChain &chain(NodeId ue) const;
};

/// Reserved id ranges keep node identities (and their random streams) stable across deployments.
namespace ids
{
inline constexpr NodeId kGnb0 = 0;
inline constexpr NodeId kFirstUe = 2;
inline constexpr NodeId kFirstIab = 10;
inline constexpr NodeId kFirstNcr = 12;
inline constexpr NodeId kFirstRis = 14;
inline constexpr NodeId kFirstUavIab = 18;
inline constexpr NodeId kFirstUavNcr = 20;
} // namespace ids

/// Node records of the built-in layout for every deployment (all ids from the `ids` ranges).
std::vector<NodeRecord> default_layout(const GridGeometry &geometry, const ScenarioParams &params = {});

/// Builds the node inventory for one deployment. Records in `layout` override the default
/// position/power/orientation of the node with the same id; unknown ids are ignored.
/// Associations start as direct links to the home gNB; call associate_ues to refine them.
ScenarioState build_scenario(DeploymentKind kind, const GridGeometry &geometry, const ScenarioParams &params = {},
                             const std::vector<NodeRecord> &layout = {});

/// Advances UEs along +x by speed*dt (clamped at the course end) and moves UAVs towards the centroid
/// of their cell's UEs at no more than their speed. Stationary nodes are unchanged.
ScenarioState step_mobility(const ScenarioState &state, double dt);

/// True once every UE has reached its course end.
bool course_finished(const ScenarioState &state);

/// All serving chains available to a UE in the state's deployment.
std::vector<ServingChain> candidate_chains(const ScenarioState &state, NodeId ue);

/// Wideband received power (dBm) a UE would see through a chain.
using ChainPowerFn = std::function<double(const ScenarioState &, NodeId ue, const ServingChain &)>;

/// Picks, per UE, the candidate chain with the highest received power. Ties go to the lowest
/// access-node id. A UE whose best candidate is below floor_dbm is flagged out of coverage.
ScenarioState associate_ues(const ScenarioState &state, const ChainPowerFn &power, double floor_dbm = -150.0);

} // namespace densim::scenario
