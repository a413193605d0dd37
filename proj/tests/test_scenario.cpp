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
#include "support/gen.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <sstream>

using namespace densim;
using namespace densim::scenario;
using Catch::Approx;
using densim::testing::Gen;

namespace
{
double wrapped_gap(double a, double b)
{
    double d = std::fmod(std::abs(a - b), 360.0);
    return d > 180.0 ? 360.0 - d : d;
}

void check_node_invariants(const ScenarioState &s)
{
    for (const auto &n : s.nodes)
    {
        INFO("node " << n.id);
        switch (n.kind)
        {
        case NodeKind::Gnb:
            CHECK(n.height() == 25.0);
            CHECK(n.tx_power_dbm == 35.0);
            CHECK(n.panels.size() == 1);
            CHECK(n.panels[0].size() == 64);
            break;
        case NodeKind::Ue:
            CHECK(n.height() == 1.5);
            CHECK(n.tx_power_dbm == 24.0);
            CHECK(n.speed_kmh == 40.0);
            break;
        case NodeKind::Ris:
            CHECK(n.height() == 40.0);
            CHECK_FALSE(n.tx_power_dbm.has_value());
            CHECK(n.panels.size() == 1);
            CHECK(n.panels[0].size() == 64);
            break;
        case NodeKind::IabNode:
        case NodeKind::Ncr:
            for (const auto &p : n.panels)
                CHECK(p.size() == 16);
            if (n.mounted_on_uav)
            {
                CHECK(n.height() == 40.0);
                CHECK(n.tx_power_dbm == 29.0);
                CHECK(n.panels.size() == 2);
                CHECK(n.speed_kmh == 40.0);
            }
            else
            {
                CHECK(n.height() == 10.0);
                CHECK(n.tx_power_dbm == 32.0);
                REQUIRE(n.panels.size() == 3);
                for (std::size_t i = 0; i < 3; ++i)
                    CHECK(wrapped_gap(n.panels[i].boresight_az_deg, n.panels[(i + 1) % 3].boresight_az_deg) ==
                          Approx(120.0).margin(1e-9));
            }
            break;
        }
    }
}
} // namespace

TEST_CASE("node inventory of every deployment")
{
    const GridGeometry g;
    for (DeploymentKind k : kAllDeployments)
    {
        INFO(to_string(k));
        const auto s = build_scenario(k, g);
        CHECK(s.kind == k);
        CHECK(s.gnbs().size() == 2);
        CHECK(s.ues().size() == 8);
        CHECK(s.associations.size() == 8);
        const std::size_t n_aux = s.auxiliaries().size();
        switch (k)
        {
        case DeploymentKind::MacroOnly: CHECK(n_aux == 0); break;
        case DeploymentKind::StationaryRis:
            CHECK(s.riss().size() == 4);
            CHECK(n_aux == 4);
            break;
        case DeploymentKind::StationaryIab:
        case DeploymentKind::UavIab:
            CHECK(s.iab_nodes().size() == 2);
            CHECK(n_aux == 2);
            break;
        case DeploymentKind::StationaryNcr:
        case DeploymentKind::UavNcr:
            CHECK(s.ncrs().size() == 2);
            CHECK(n_aux == 2);
            break;
        }
        const bool uav = k == DeploymentKind::UavIab || k == DeploymentKind::UavNcr;
        CHECK(s.uavs().size() == (uav ? 2u : 0u));
        check_node_invariants(s);

        std::set<double> ys;
        for (NodeId u : s.ues())
            ys.insert(s.node(u).position.y);
        CHECK(ys.size() == 2);
        std::set<NodeId> seen;
        for (const auto &n : s.nodes)
            CHECK(seen.insert(n.id).second);
    }
}

TEST_CASE("auxiliary nodes sit two blocks from their gNB")
{
    const GridGeometry g;
    const auto s = build_scenario(DeploymentKind::StationaryIab, g);
    for (NodeId r : s.iab_nodes())
    {
        const auto &n = s.node(r);
        const auto &gnb = s.node(n.cell);
        const double blocks = std::abs(gnb.position.y - n.position.y) / g.pitch();
        CHECK(blocks == Approx(2.0).margin(0.1));
    }
}

TEST_CASE("unknown kinds and bad geometry are rejected")
{
    GridGeometry bad;
    bad.block_size = 0.0;
    CHECK_THROWS_AS(build_scenario(DeploymentKind::MacroOnly, bad), std::invalid_argument);
    GridGeometry narrow;
    narrow.street_width = 2.0;
    CHECK_THROWS_AS(build_scenario(DeploymentKind::MacroOnly, narrow), std::invalid_argument);
    CHECK_THROWS_AS(build_scenario(static_cast<DeploymentKind>(42), GridGeometry{}), std::invalid_argument);
    CHECK_THROWS_AS(parse_deployment("tower"), std::invalid_argument);
    for (DeploymentKind k : kAllDeployments)
        CHECK(parse_deployment(to_string(k)) == k);
}

TEST_CASE("mobility examples")
{
    const auto s = build_scenario(DeploymentKind::UavNcr, GridGeometry{});
    const auto same = step_mobility(s, 0.0);
    for (std::size_t i = 0; i < s.nodes.size(); ++i)
        CHECK(same.nodes[i].position == s.nodes[i].position);

    const auto moved = step_mobility(s, 1.0);
    for (NodeId u : s.ues())
    {
        CHECK(moved.node(u).position.x - s.node(u).position.x == Approx(40.0 / 3.6).epsilon(1e-12));
        CHECK(moved.node(u).position.y == s.node(u).position.y);
    }
    CHECK(moved.sim_time == 1.0);

    auto end = s;
    for (int i = 0; i < 200; ++i)
        end = step_mobility(end, 1.0);
    CHECK(course_finished(end));
    for (NodeId u : s.ues())
        CHECK(end.node(u).position.x == end.tracks.at(u).x_end);
    CHECK_THROWS_AS(step_mobility(s, -1.0), std::invalid_argument);
}

TEST_CASE("mobility keeps UEs on their street, caps UAV speed and leaves fixed nodes alone")
{
    Gen g(61);
    for (DeploymentKind k : {DeploymentKind::UavIab, DeploymentKind::StationaryNcr})
    {
        auto s = build_scenario(k, GridGeometry{});
        const auto initial = s;
        for (int i = 0; i < 5000; ++i)
        {
            const double dt = g.coin() ? g.uniform(0.0, 0.01) : g.uniform(0.0, 2.0);
            const auto next = step_mobility(s, dt);
            for (std::size_t j = 0; j < s.nodes.size(); ++j)
            {
                const auto &a = s.nodes[j];
                const auto &b = next.nodes[j];
                if (a.kind == NodeKind::Ue)
                {
                    REQUIRE(b.position.y == initial.nodes[j].position.y);
                    REQUIRE(b.position.z == a.position.z);
                    REQUIRE(b.position.x >= a.position.x);
                    REQUIRE(b.position.x <= s.tracks.at(a.id).x_end);
                }
                else if (a.mounted_on_uav)
                {
                    REQUIRE(b.position.z == 40.0);
                    REQUIRE((b.position - a.position).norm() <= 40.0 / 3.6 * dt * (1.0 + 1e-12) + 1e-12);
                }
                else
                    REQUIRE(b.position == a.position);
            }
            s = next;
        }
    }
}

TEST_CASE("mobility is reproducible for a given step sequence")
{
    Gen g1(62), g2(62);
    auto a = build_scenario(DeploymentKind::UavIab, GridGeometry{});
    auto b = a;
    for (int i = 0; i < 1000; ++i)
    {
        a = step_mobility(a, g1.uniform(0.0, 0.5));
        b = step_mobility(b, g2.uniform(0.0, 0.5));
    }
    for (std::size_t j = 0; j < a.nodes.size(); ++j)
        REQUIRE(a.nodes[j].position == b.nodes[j].position);
}

TEST_CASE("association picks the strongest candidate with ties to the lowest id")
{
    auto s = build_scenario(DeploymentKind::MacroOnly, GridGeometry{});
    const ChainPowerFn by_gnb = [](const ScenarioState &, NodeId ue, const ServingChain &c)
    { return c.gnb == (ue % 2) ? -60.0 : -70.0; };
    const auto a = associate_ues(s, by_gnb);
    for (NodeId u : s.ues())
    {
        CHECK(a.chain(u).kind == ChainKind::Direct);
        CHECK(a.chain(u).gnb == u % 2);
        CHECK_FALSE(a.chain(u).out_of_coverage);
    }

    const ChainPowerFn flat = [](const ScenarioState &, NodeId, const ServingChain &) { return -80.0; };
    auto ncr = build_scenario(DeploymentKind::StationaryNcr, GridGeometry{});
    for (NodeId u : ncr.ues())
        CHECK(associate_ues(ncr, flat).chain(u).access_node() == 0);

    const ChainPowerFn prefers_ncr = [](const ScenarioState &, NodeId, const ServingChain &c)
    { return c.kind == ChainKind::ViaNcr ? -50.0 : -90.0; };
    const auto via = associate_ues(ncr, prefers_ncr);
    for (NodeId u : ncr.ues())
    {
        CHECK(via.chain(u).kind == ChainKind::ViaNcr);
        CHECK(via.chain(u).relay == ids::kFirstNcr);
    }

    const auto weak = associate_ues(s, flat, -70.0);
    for (NodeId u : s.ues())
        CHECK(weak.chain(u).out_of_coverage);
}

TEST_CASE("association is idempotent for frozen channels")
{
    Gen g(63);
    for (int i = 0; i < 200; ++i)
    {
        const auto k = kAllDeployments[static_cast<std::size_t>(g.integer(0, 5))];
        const auto s = build_scenario(k, GridGeometry{});
        std::map<std::pair<NodeId, NodeId>, double> table;
        for (NodeId u : s.ues())
            for (const auto &c : candidate_chains(s, u))
                table[{u, c.access_node()}] = std::round(g.uniform(-120.0, -60.0));
        const ChainPowerFn frozen = [&](const ScenarioState &, NodeId ue, const ServingChain &c)
        { return table.at({ue, c.access_node()}); };
        const auto once = associate_ues(s, frozen);
        const auto twice = associate_ues(once, frozen);
        REQUIRE(once.associations == twice.associations);
        for (NodeId u : s.ues())
            for (const auto &c : candidate_chains(s, u))
                REQUIRE(frozen(s, u, once.chain(u)) >= frozen(s, u, c));
    }
}

TEST_CASE("layout records round-trip and override the defaults")
{
    const auto records = default_layout(GridGeometry{});
    std::stringstream ss;
    write_layout(ss, records);
    const auto back = read_layout(ss);
    REQUIRE(back.size() == records.size());
    for (std::size_t i = 0; i < back.size(); ++i)
    {
        CHECK(back[i].id == records[i].id);
        CHECK(back[i].kind == records[i].kind);
        CHECK(back[i].position.x == Approx(records[i].position.x).margin(1e-6));
        CHECK(back[i].position.y == Approx(records[i].position.y).margin(1e-6));
        CHECK(back[i].power_dbm.has_value() == records[i].power_dbm.has_value());
        CHECK(back[i].panel_azimuths_deg.size() == records[i].panel_azimuths_deg.size());
        CHECK(back[i].cell == records[i].cell);
    }

    std::istringstream over("# moved gNB\n0, gnb, 10, -250, 30, 33, 80\n");
    const auto s = build_scenario(DeploymentKind::MacroOnly, GridGeometry{}, {}, read_layout(over));
    CHECK(s.node(0).position == Vec3{10, -250, 30});
    CHECK(s.node(0).tx_power_dbm == 33.0);
    CHECK(s.node(0).panels[0].boresight_az_deg == 80.0);

    std::istringstream wrong_kind("0, ue, 1, 2, 1.5, 24, 0\n");
    CHECK_THROWS_AS(build_scenario(DeploymentKind::MacroOnly, GridGeometry{}, {}, read_layout(wrong_kind)),
                    std::invalid_argument);
    std::istringstream short_line("0, gnb, 1, 2\n");
    CHECK_THROWS_AS(read_layout(short_line), std::invalid_argument);
    std::istringstream unknown("0, tower, 1, 2, 3, 4, 5\n");
    CHECK_THROWS_AS(read_layout(unknown), std::invalid_argument);
    std::istringstream panels("10, iab, 1, 2, 10, 32, 0;120\n");
    CHECK_THROWS_AS(build_scenario(DeploymentKind::StationaryIab, GridGeometry{}, {}, read_layout(panels)),
                    std::invalid_argument);
}
