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

#include "densim/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace densim::scenario
{

void GridGeometry::validate() const
{
    if (!(block_size > 0.0) || !(sidewalk_width > 0.0) || !(street_width > 0.0))
        throw std::invalid_argument("grid geometry: dimensions must be positive");
    if (!(street_width > sidewalk_width))
        throw std::invalid_argument("grid geometry: street_width must exceed sidewalk_width");
    if (n_blocks_traversed <= 0)
        throw std::invalid_argument("grid geometry: n_blocks_traversed must be positive");
}

std::string_view to_string(DeploymentKind k)
{
    switch (k)
    {
    case DeploymentKind::MacroOnly: return "macro_only";
    case DeploymentKind::StationaryIab: return "stationary_iab";
    case DeploymentKind::StationaryNcr: return "stationary_ncr";
    case DeploymentKind::StationaryRis: return "stationary_ris";
    case DeploymentKind::UavIab: return "uav_iab";
    case DeploymentKind::UavNcr: return "uav_ncr";
    }
    return "?";
}

DeploymentKind parse_deployment(std::string_view name)
{
    for (DeploymentKind k : kAllDeployments)
        if (to_string(k) == name)
            return k;
    throw std::invalid_argument("unknown deployment kind '" + std::string(name) + "'");
}

std::string_view to_string(NodeKind k)
{
    switch (k)
    {
    case NodeKind::Gnb: return "gnb";
    case NodeKind::IabNode: return "iab";
    case NodeKind::Ncr: return "ncr";
    case NodeKind::Ris: return "ris";
    case NodeKind::Ue: return "ue";
    }
    return "?";
}

std::string_view to_string(ChainKind k)
{
    switch (k)
    {
    case ChainKind::Direct: return "direct";
    case ChainKind::ViaIab: return "via_iab";
    case ChainKind::ViaNcr: return "via_ncr";
    case ChainKind::ViaRis: return "via_ris";
    }
    return "?";
}

// ---- ScenarioState ------------------------------------------------------------------------------

const NodeDescriptor &ScenarioState::node(NodeId id) const
{
    auto it = std::lower_bound(nodes.begin(), nodes.end(), id, [](const NodeDescriptor &n, NodeId v) { return n.id < v; });
    if (it == nodes.end() || it->id != id)
        throw std::out_of_range("scenario: no node with id " + std::to_string(id));
    return *it;
}

NodeDescriptor &ScenarioState::node(NodeId id)
{
    return const_cast<NodeDescriptor &>(std::as_const(*this).node(id));
}

bool ScenarioState::has_node(NodeId id) const
{
    return std::binary_search(nodes.begin(), nodes.end(), id,
                              [](const auto &a, const auto &b)
                              {
                                  auto key = [](const auto &v) -> NodeId
                                  {
                                      if constexpr (std::is_same_v<std::decay_t<decltype(v)>, NodeId>)
                                          return v;
                                      else
                                          return v.id;
                                  };
                                  return key(a) < key(b);
                              });
}

namespace
{
template <typename Pred>
std::vector<NodeId> collect(const std::vector<NodeDescriptor> &nodes, Pred pred)
{
    std::vector<NodeId> out;
    for (const auto &n : nodes)
        if (pred(n))
            out.push_back(n.id);
    return out;
}
} // namespace

std::vector<NodeId> ScenarioState::gnbs() const { return collect(nodes, [](auto &n) { return n.kind == NodeKind::Gnb; }); }
std::vector<NodeId> ScenarioState::iab_nodes() const { return collect(nodes, [](auto &n) { return n.kind == NodeKind::IabNode; }); }
std::vector<NodeId> ScenarioState::ncrs() const { return collect(nodes, [](auto &n) { return n.kind == NodeKind::Ncr; }); }
std::vector<NodeId> ScenarioState::riss() const { return collect(nodes, [](auto &n) { return n.kind == NodeKind::Ris; }); }
std::vector<NodeId> ScenarioState::ues() const { return collect(nodes, [](auto &n) { return n.kind == NodeKind::Ue; }); }
std::vector<NodeId> ScenarioState::auxiliaries() const { return collect(nodes, [](auto &n) { return n.is_auxiliary(); }); }
std::vector<NodeId> ScenarioState::uavs() const { return collect(nodes, [](auto &n) { return n.mounted_on_uav; }); }

const ServingChain &ScenarioState::chain(NodeId ue) const
{
    auto it = associations.find(ue);
    if (it == associations.end())
        throw std::out_of_range("scenario: UE " + std::to_string(ue) + " has no serving chain");
    return it->second;
}

// ---- layout files -------------------------------------------------------------------------------

namespace
{
std::string trim(std::string s)
{
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string &s, char sep)
{
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep))
        out.push_back(trim(item));
    if (!s.empty() && s.back() == sep)
        out.emplace_back();
    return out;
}

double parse_double(const std::string &s, std::size_t line)
{
    try
    {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size())
            throw std::invalid_argument(s);
        return v;
    }
    catch (const std::exception &)
    {
        throw std::invalid_argument("layout line " + std::to_string(line) + ": not a number: '" + s + "'");
    }
}

std::vector<double> parse_list(const std::string &s, std::size_t line)
{
    std::vector<double> out;
    if (s.empty() || s == "-")
        return out;
    for (const auto &item : split(s, ';'))
        out.push_back(parse_double(item, line));
    return out;
}

bool known_kind(const std::string &k)
{
    return k == "gnb" || k == "ue" || k == "iab" || k == "ncr" || k == "ris" || k == "uav_iab" || k == "uav_ncr";
}
} // namespace

std::vector<NodeRecord> read_layout(std::istream &in)
{
    std::vector<NodeRecord> out;
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw))
    {
        ++line;
        const std::string text = trim(raw.substr(0, raw.find('#')));
        if (text.empty())
            continue;
        const auto f = split(text, ',');
        if (f.size() < 7)
            throw std::invalid_argument("layout line " + std::to_string(line) +
                                        ": expected id, kind, x, y, z, power_dbm, panel_azimuths[, panel_downtilts[, cell]]");
        NodeRecord r;
        r.id = static_cast<NodeId>(parse_double(f[0], line));
        r.kind = f[1];
        if (!known_kind(r.kind))
            throw std::invalid_argument("layout line " + std::to_string(line) + ": unknown kind '" + r.kind + "'");
        r.position = {parse_double(f[2], line), parse_double(f[3], line), parse_double(f[4], line)};
        if (!f[5].empty() && f[5] != "-")
            r.power_dbm = parse_double(f[5], line);
        r.panel_azimuths_deg = parse_list(f[6], line);
        if (f.size() > 7)
            r.panel_downtilts_deg = parse_list(f[7], line);
        if (f.size() > 8 && !f[8].empty() && f[8] != "-")
            r.cell = static_cast<NodeId>(parse_double(f[8], line));
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<NodeRecord> read_layout_file(const std::string &path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open layout file '" + path + "'");
    return read_layout(in);
}

void write_layout(std::ostream &out, const std::vector<NodeRecord> &records)
{
    auto list = [](const std::vector<double> &v)
    {
        if (v.empty())
            return std::string("-");
        std::ostringstream s;
        s << std::setprecision(10);
        for (std::size_t i = 0; i < v.size(); ++i)
            s << (i ? ";" : "") << v[i];
        return s.str();
    };
    out << "# id, kind, x, y, z, power_dbm, panel_azimuths, panel_downtilts, cell\n";
    out << std::setprecision(10);
    for (const auto &r : records)
    {
        out << r.id << ", " << r.kind << ", " << r.position.x << ", " << r.position.y << ", " << r.position.z << ", ";
        if (r.power_dbm)
            out << *r.power_dbm;
        else
            out << "-";
        out << ", " << list(r.panel_azimuths_deg) << ", " << list(r.panel_downtilts_deg) << ", ";
        if (r.cell == kNoNode)
            out << "-";
        else
            out << r.cell;
        out << "\n";
    }
}

// ---- default layout -----------------------------------------------------------------------------

namespace
{
double azimuth_towards(const Vec3 &from, const Vec3 &to) { return rad2deg(std::atan2(to.y - from.y, to.x - from.x)); }

double wrap180(double deg)
{
    while (deg > 180.0)
        deg -= 360.0;
    while (deg <= -180.0)
        deg += 360.0;
    return deg;
}
} // namespace

std::vector<NodeRecord> default_layout(const GridGeometry &g, const ScenarioParams &p)
{
    g.validate();
    const double P = g.pitch();
    const double half = g.street_width / 2.0;
    const double corner = half - g.sidewalk_width / 2.0; // sidewalk centre offset from street axis
    const double street_y[2] = {0.0, P};                  // lower and upper middle streets

    std::vector<NodeRecord> out;
    const Vec3 gnb_pos[2] = {{P, -2.0 * P, p.gnb_height}, {P, 3.0 * P, p.gnb_height}};
    for (NodeId c = 0; c < 2; ++c)
        out.push_back({c, "gnb", gnb_pos[c], p.gnb_power_dbm, {c == 0 ? 90.0 : -90.0}, {0.0}, c});

    NodeId id = ids::kFirstUe;
    double centroid_x = 0.0;
    for (double f : p.ue_block_fractions)
        centroid_x += half + f * g.block_size;
    centroid_x /= static_cast<double>(std::max<std::size_t>(1, p.ue_block_fractions.size()));
    for (NodeId c = 0; c < 2; ++c)
        for (std::size_t i = 0; i < p.ues_per_street; ++i)
        {
            const double f = p.ue_block_fractions[i % p.ue_block_fractions.size()];
            out.push_back({id++, "ue", {half + f * g.block_size, street_y[c], p.ue_height}, p.ue_power_dbm, {0.0}, {0.0}, c});
        }

    // Stationary IAB/NCR: on the corner sidewalk where the gNB's vertical street meets the UE street,
    // i.e. two blocks from the gNB. Backhaul panel faces the gNB, access panels are 120 deg away.
    for (const char *kind : {"iab", "ncr"})
    {
        const NodeId first = std::string(kind) == "iab" ? ids::kFirstIab : ids::kFirstNcr;
        for (NodeId c = 0; c < 2; ++c)
        {
            const Vec3 pos{P - corner, c == 0 ? street_y[0] - corner : street_y[1] + corner, p.stationary_height};
            const double bh = azimuth_towards(pos, gnb_pos[c]);
            out.push_back({first + c, kind, pos, p.stationary_power_dbm,
                           {bh, wrap180(bh + 120.0), wrap180(bh - 120.0)}, {0.0, 0.0, 0.0}, c});
        }
    }

    // RIS: on the building faces of the middle block row, mid-block, facing the UE street and its gNB.
    for (NodeId c = 0; c < 2; ++c)
        for (int b = 0; b < 2; ++b)
        {
            const double x = half + g.block_size / 2.0 + b * P;
            const double y = c == 0 ? street_y[0] + half : street_y[1] - half;
            out.push_back({ids::kFirstRis + 2 * c + static_cast<NodeId>(b), "ris", {x, y, p.ris_height}, std::nullopt,
                           {c == 0 ? -90.0 : 90.0}, {p.ris_downtilt_deg}, c});
        }

    // UAV-mounted nodes start above the centroid of their street's UE group.
    for (const char *kind : {"uav_iab", "uav_ncr"})
    {
        const NodeId first = std::string(kind) == "uav_iab" ? ids::kFirstUavIab : ids::kFirstUavNcr;
        for (NodeId c = 0; c < 2; ++c)
        {
            const Vec3 pos{centroid_x, street_y[c], p.uav_height};
            out.push_back({first + c, kind, pos, p.uav_power_dbm, {azimuth_towards(pos, gnb_pos[c]), 90.0},
                           {0.0, p.uav_access_downtilt_deg}, c});
        }
    }
    return out;
}

// ---- build_scenario -----------------------------------------------------------------------------

namespace
{
bool included(DeploymentKind k, const std::string &kind)
{
    if (kind == "gnb" || kind == "ue")
        return true;
    switch (k)
    {
    case DeploymentKind::MacroOnly: return false;
    case DeploymentKind::StationaryIab: return kind == "iab";
    case DeploymentKind::StationaryNcr: return kind == "ncr";
    case DeploymentKind::StationaryRis: return kind == "ris";
    case DeploymentKind::UavIab: return kind == "uav_iab";
    case DeploymentKind::UavNcr: return kind == "uav_ncr";
    }
    return false;
}

NodeDescriptor make_node(const NodeRecord &r, const ScenarioParams &p)
{
    NodeDescriptor n;
    n.id = r.id;
    n.position = r.position;
    n.cell = r.cell;
    n.tx_power_dbm = r.power_dbm;
    std::size_t array = 1;
    std::size_t n_panels = 1;
    auto pattern = antenna::ElementPattern::sector();
    pattern.max_gain_dbi = p.element_gain_dbi;

    if (r.kind == "gnb")
    {
        n.kind = NodeKind::Gnb;
        array = p.gnb_array;
    }
    else if (r.kind == "ue")
    {
        n.kind = NodeKind::Ue;
        n.speed_kmh = p.ue_speed_kmh;
        pattern = antenna::ElementPattern::isotropic();
    }
    else if (r.kind == "ris")
    {
        n.kind = NodeKind::Ris;
        array = p.ris_array;
        n.tx_power_dbm.reset();
    }
    else
    {
        n.kind = r.kind.ends_with("iab") ? NodeKind::IabNode : NodeKind::Ncr;
        n.mounted_on_uav = r.kind.starts_with("uav");
        n.speed_kmh = n.mounted_on_uav ? p.uav_speed_kmh : 0.0;
        array = p.aux_array;
        n_panels = n.mounted_on_uav ? 2 : 3;
    }
    if (r.panel_azimuths_deg.size() != n_panels)
        throw std::invalid_argument("node " + std::to_string(r.id) + " (" + r.kind + "): expected " +
                                    std::to_string(n_panels) + " panel azimuths, got " +
                                    std::to_string(r.panel_azimuths_deg.size()));
    for (std::size_t i = 0; i < n_panels; ++i)
    {
        const double tilt = i < r.panel_downtilts_deg.size() ? r.panel_downtilts_deg[i] : 0.0;
        n.panels.push_back(antenna::ura(array, array, r.panel_azimuths_deg[i], -tilt, pattern));
    }
    if (n.kind == NodeKind::Ue)
        n.panels = {antenna::ura(1, 1, 0.0, 0.0, antenna::ElementPattern::isotropic())};
    return n;
}
} // namespace

ScenarioState build_scenario(DeploymentKind kind, const GridGeometry &geometry, const ScenarioParams &params,
                             const std::vector<NodeRecord> &layout)
{
    geometry.validate();
    if (std::find(std::begin(kAllDeployments), std::end(kAllDeployments), kind) == std::end(kAllDeployments))
        throw std::invalid_argument("build_scenario: unknown deployment kind");

    auto records = default_layout(geometry, params);
    for (const auto &o : layout)
    {
        auto it = std::find_if(records.begin(), records.end(), [&](const NodeRecord &r) { return r.id == o.id; });
        if (it == records.end())
            continue;
        if (it->kind != o.kind)
            throw std::invalid_argument("layout: node " + std::to_string(o.id) + " must have kind '" + it->kind + "'");
        it->position = o.position;
        if (o.power_dbm)
            it->power_dbm = o.power_dbm;
        if (!o.panel_azimuths_deg.empty())
            it->panel_azimuths_deg = o.panel_azimuths_deg;
        if (!o.panel_downtilts_deg.empty())
            it->panel_downtilts_deg = o.panel_downtilts_deg;
        if (o.cell != kNoNode)
            it->cell = o.cell;
    }

    ScenarioState s;
    s.geometry = geometry;
    s.kind = kind;
    for (const auto &r : records)
        if (included(kind, r.kind))
            s.nodes.push_back(make_node(r, params));
    std::sort(s.nodes.begin(), s.nodes.end(), [](auto &a, auto &b) { return a.id < b.id; });

    const double course = geometry.n_blocks_traversed * geometry.pitch();
    for (const auto &n : s.nodes)
        if (n.kind == NodeKind::Ue)
        {
            s.tracks[n.id] = {n.position.x + course};
            s.associations[n.id] = {ChainKind::Direct, n.cell, kNoNode, false};
        }
    return s;
}

// ---- mobility -----------------------------------------------------------------------------------

ScenarioState step_mobility(const ScenarioState &state, double dt)
{
    if (!(dt >= 0.0))
        throw std::invalid_argument("step_mobility: dt must be >= 0");
    ScenarioState next = state;
    if (dt == 0.0)
        return next;

    for (auto &n : next.nodes)
        if (n.kind == NodeKind::Ue)
        {
            const double step = n.speed_kmh / 3.6 * dt;
            n.position.x = std::min(n.position.x + step, next.tracks.at(n.id).x_end);
        }

    for (auto &n : next.nodes)
    {
        if (!n.mounted_on_uav)
            continue;
        Vec3 target{0.0, 0.0, 0.0};
        int count = 0;
        for (const auto &u : next.nodes)
            if (u.kind == NodeKind::Ue && u.cell == n.cell)
            {
                target = target + u.position;
                ++count;
            }
        if (count == 0)
            continue;
        target = target * (1.0 / count);
        target.z = n.position.z;
        const Vec3 delta = target - n.position;
        const double dist = delta.norm();
        const double max_step = n.speed_kmh / 3.6 * dt;
        if (dist > 0.0)
            n.position = dist <= max_step ? target : n.position + delta * (max_step / dist);
        if (n.cell != kNoNode && next.has_node(n.cell))
            n.panels[0].boresight_az_deg = azimuth_towards(n.position, next.node(n.cell).position);
    }
    next.sim_time += dt;
    return next;
}

bool course_finished(const ScenarioState &state)
{
    for (const auto &n : state.nodes)
        if (n.kind == NodeKind::Ue && n.position.x < state.tracks.at(n.id).x_end)
            return false;
    return true;
}

// ---- association --------------------------------------------------------------------------------

std::vector<ServingChain> candidate_chains(const ScenarioState &state, NodeId ue)
{
    (void)state.node(ue);
    std::vector<ServingChain> out;
    for (NodeId b : state.gnbs())
        out.push_back({ChainKind::Direct, b, kNoNode, false});
    for (const auto &n : state.nodes)
    {
        if (!n.is_auxiliary())
            continue;
        const ChainKind k = n.kind == NodeKind::IabNode ? ChainKind::ViaIab
                            : n.kind == NodeKind::Ncr   ? ChainKind::ViaNcr
                                                        : ChainKind::ViaRis;
        out.push_back({k, n.cell, n.id, false});
    }
    return out;
}

ScenarioState associate_ues(const ScenarioState &state, const ChainPowerFn &power, double floor_dbm)
{
    ScenarioState next = state;
    for (NodeId ue : state.ues())
    {
        const auto candidates = candidate_chains(state, ue);
        const ServingChain *best = nullptr;
        double best_p = 0.0;
        for (const auto &c : candidates)
        {
            const double p = power(state, ue, c);
            if (!best || p > best_p || (p == best_p && c.access_node() < best->access_node()))
            {
                best = &c;
                best_p = p;
            }
        }
        ServingChain chosen = *best;
        chosen.out_of_coverage = !(best_p >= floor_dbm);
        next.associations[ue] = chosen;
    }
    return next;
}

} // namespace densim::scenario
