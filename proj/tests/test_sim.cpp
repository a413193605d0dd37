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

#include "densim/sim.hpp"
#include "support/gen.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

using namespace densim;
using namespace densim::sim;
using Catch::Approx;
using densim::testing::Gen;
using scenario::DeploymentKind;

namespace
{
SimParams quick_params()
{
    SimParams p;
    p.mac.pattern.slot_duration_s = 0.25e-3;
    return p;
}

bool same_trace(const RunResult &a, const RunResult &b)
{
    if (a.trace.size() != b.trace.size())
        return false;
    for (std::size_t i = 0; i < a.trace.size(); ++i)
    {
        const auto &x = a.trace[i], &y = b.trace[i];
        if (x.slot != y.slot || x.tx != y.tx || x.rx != y.rx || x.mcs != y.mcs || x.bits != y.bits ||
            x.sinr_db != y.sinr_db || x.outcome != y.outcome)
            return false;
    }
    return true;
}
} // namespace

TEST_CASE("runs are reproducible per seed")
{
    for (DeploymentKind k : {DeploymentKind::MacroOnly, DeploymentKind::StationaryRis, DeploymentKind::UavIab})
    {
        const auto a = run_deployment(k, {}, {}, quick_params(), 5, 120);
        const auto b = run_deployment(k, {}, {}, quick_params(), 5, 120);
        const auto c = run_deployment(k, {}, {}, quick_params(), 6, 120);
        CHECK(same_trace(a, b));
        CHECK(a.associations == b.associations);
        CHECK_FALSE(same_trace(a, c));
    }
}

TEST_CASE("beamformed gains equal the explicit matrix product")
{
    const std::uint64_t seed = 3;
    const auto params = quick_params();
    const auto state = scenario::build_scenario(DeploymentKind::StationaryNcr, {});
    Simulator sim(state, params, seed);

    auto fading = params.fading;
    fading.n_prbs = params.mac.n_prbs;
    fading.fc_ghz = params.fc_ghz;
    fading.prb_bandwidth_hz = params.subcarriers_per_prb * params.scs_hz;
    auto book = [&](const antenna::ArrayGeometry &a)
    {
        if (a.single_element())
            return std::vector<antenna::BeamVector>{{Eigen::VectorXcd::Ones(1), 0.0, 0.0}};
        return antenna::make_codebook(a, params.codebook_az, params.codebook_el);
    };

    Gen g(71);
    const std::vector<std::pair<NodeId, NodeId>> pairs{{0, 2}, {1, 7}, {0, 12}, {1, 13}, {12, 3}, {13, 9}, {0, 8}};
    for (const auto &[x, y] : pairs)
    {
        // links are stored with the lower id as endpoint a
        const NodeId a = std::min(x, y), b = std::max(x, y);
        const auto &na = state.node(a), &nb = state.node(b);
        const auto cls = channel::classify_link(na, nb, na.cell == nb.cell);
        // same per-link stream the engine draws from
        channel::RayChannel ch(cls, fading, stream_seed(seed, 0x66616465ULL, a, b));
        ch.set_geometry(na.position, nb.position);
        const double amp = std::sqrt(db_to_lin(-sim.large_scale_loss_db(a, b)));
        const std::size_t per_a = na.panels[0].single_element() ? 1 : 32;
        const std::size_t per_b = nb.panels[0].single_element() ? 1 : 32;
        for (int i = 0; i < 40; ++i)
        {
            const std::size_t pa = static_cast<std::size_t>(g.integer(0, static_cast<int>(na.panels.size()) - 1));
            const std::size_t pb = static_cast<std::size_t>(g.integer(0, static_cast<int>(nb.panels.size()) - 1));
            const std::size_t ba = static_cast<std::size_t>(g.integer(0, static_cast<int>(per_a) - 1));
            const std::size_t bb = static_cast<std::size_t>(g.integer(0, static_cast<int>(per_b) - 1));
            const int k = g.integer(0, 65);
            const Eigen::MatrixXcd H = ch.matrix(na.panels[pa], nb.panels[pb], k, true);
            const Eigen::VectorXcd f = book(na.panels[pa])[ba].weights;
            const Eigen::VectorXcd d = book(nb.panels[pb])[bb].weights;
            const cplx want = amp * d.dot(H * f);
            const cplx got = sim.beamformed_gain(a, pa * per_a + ba, b, pb * per_b + bb, k);
            REQUIRE(std::abs(got - want) <= 1e-9 * std::abs(want));
            // reverse link: transposed matrix with the same beams
            const cplx back = sim.beamformed_gain(b, pb * per_b + bb, a, pa * per_a + ba, k);
            REQUIRE(std::abs(back - got) <= 1e-12 * std::abs(got));
        }
    }
}

TEST_CASE("IAB deployments never make a node transmit and receive in one slot")
{
    for (DeploymentKind k : {DeploymentKind::StationaryIab, DeploymentKind::UavIab})
    {
        const auto r = run_deployment(k, {}, {}, quick_params(), 11, 400);
        CHECK(r.half_duplex_violations == 0);
        bool backhaul = false, access = false;
        for (const auto &tb : r.trace)
        {
            backhaul |= tb.hop == mac::Hop::Backhaul;
            access |= tb.hop == mac::Hop::Access;
        }
        CHECK(backhaul);
        CHECK(access);
    }
}

TEST_CASE("a UE next to an NCR is served through it")
{
    auto layout = scenario::default_layout({});
    Vec3 ncr_pos;
    for (const auto &r : layout)
        if (r.id == scenario::ids::kFirstNcr)
            ncr_pos = r.position;
    for (auto &r : layout)
        if (r.id == scenario::ids::kFirstUe)
            r.position = {ncr_pos.x + 20.0, ncr_pos.y, 1.5};
    const auto state = scenario::build_scenario(DeploymentKind::StationaryNcr, {}, {}, layout);
    Simulator sim(state, quick_params(), 2);
    const NodeId ue = scenario::ids::kFirstUe;
    const scenario::ServingChain direct{scenario::ChainKind::Direct, 0, kNoNode, false};
    const scenario::ServingChain via{scenario::ChainKind::ViaNcr, 0, scenario::ids::kFirstNcr, false};
    CHECK(sim.chain_power_dbm(ue, via) > sim.chain_power_dbm(ue, direct));
    const auto r = sim.run(2);
    CHECK(r.associations.at(ue).kind == scenario::ChainKind::ViaNcr);
    CHECK(r.associations.at(ue).relay == scenario::ids::kFirstNcr);
}

TEST_CASE("run summaries are well formed")
{
    for (DeploymentKind k : scenario::kAllDeployments)
    {
        const auto r = run_deployment(k, {}, {}, quick_params(), 1, 200);
        CHECK(r.n_slots == 200);
        CHECK(r.associations.size() == 8);
        for (int d = 0; d < 2; ++d)
        {
            CHECK_FALSE(r.sinr_db[static_cast<std::size_t>(d)].empty());
            for (double s : r.sinr_db[static_cast<std::size_t>(d)])
                REQUIRE(std::isfinite(s));
            CHECK(r.ue_throughput_bps[static_cast<std::size_t>(d)].size() == 8);
            CHECK(r.jain[static_cast<std::size_t>(d)] > 0.0);
            CHECK(r.jain[static_cast<std::size_t>(d)] <= 1.0 + 1e-12);
        }
    }
}

TEST_CASE("windowed throughput accounting")
{
    RunResult r;
    r.n_slots = 800;
    r.associations[2] = {};
    r.associations[3] = {};
    r.deliveries = {{10, 2, Direction::Downlink, 1000}, {500, 2, Direction::Downlink, 3000}, {7, 3, Direction::Uplink, 400}};
    summarise(r, 0.25e-3, 0.1);
    // two 400-slot windows per UE
    REQUIRE(r.throughput_samples_mbps[0].size() == 4);
    CHECK(r.throughput_samples_mbps[0][0] == Approx(0.01));
    CHECK(r.throughput_samples_mbps[0][1] == Approx(0.03));
    CHECK(r.throughput_samples_mbps[0][2] == 0.0);
    CHECK(r.ue_throughput_bps[0].at(2) == Approx(4000.0 / 0.2));
    CHECK(r.ue_throughput_bps[0].at(3) == 0.0);
    CHECK(r.jain[0] == Approx(0.5));
    CHECK(r.jain[1] == Approx(0.5));

    RunResult empty;
    empty.n_slots = 10;
    empty.associations[2] = {};
    summarise(empty, 0.25e-3, 0.1);
    CHECK(empty.jain[0] == 0.0);
    CHECK(empty.throughput_samples_mbps[0].size() == 1);
}

TEST_CASE("channel trace has one row per link and PRB at every geometry epoch")
{
    Simulator sim(scenario::build_scenario(DeploymentKind::MacroOnly, {}), quick_params(), 1);
    std::ostringstream out;
    sim.run(41, &out);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line.find("slot") != std::string::npos);
    std::size_t rows = 0;
    while (std::getline(in, line))
        ++rows;
    // 16 gNB-UE links, 66 PRBs, epochs at slots 0 and 40
    CHECK(rows == 2u * 16u * 66u);
}
