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

#include "densim/mac.hpp"
#include "support/gen.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <set>

using namespace densim;
using namespace densim::mac;
using Catch::Approx;
using densim::testing::Gen;
using scenario::ChainKind;
using scenario::ServingChain;

namespace
{
/// Same linear SINR on every PRB of every transmission.
struct FlatPhy final : PhyModel
{
    double sinr_linear = 1e6;
    std::vector<std::vector<PlannedTransmission>> plans;

    std::vector<std::vector<double>> evaluate(std::uint64_t, const std::vector<PlannedTransmission> &plan) override
    {
        plans.push_back(plan);
        std::vector<std::vector<double>> out;
        for (const auto &p : plan)
            out.emplace_back(p.prbs.size(), sinr_linear);
        return out;
    }
};

/// gNB 0 with direct UEs 2..(1+n_direct); gNB 1 hosting IAB node 10 with UEs after them.
Topology mixed_topology(int n_direct, int n_iab)
{
    Topology t;
    t.gnbs = {0, 1};
    t.iab_donor[10] = 1;
    NodeId ue = 2;
    for (int i = 0; i < n_direct; ++i)
        t.chains[ue++] = ServingChain{ChainKind::Direct, 0, kNoNode, false};
    for (int i = 0; i < n_iab; ++i)
        t.chains[ue++] = ServingChain{ChainKind::ViaIab, 1, 10, false};
    return t;
}
} // namespace

TEST_CASE("TDD alternation")
{
    CHECK(tdd_direction(0) == Direction::Downlink);
    CHECK(tdd_direction(7) == Direction::Uplink);
    int dl = 0;
    for (std::uint64_t s = 0; s < 1000; ++s)
        dl += tdd_direction(s) == Direction::Downlink;
    CHECK(dl == 500);
}

TEST_CASE("round robin allocation examples")
{
    std::size_t ptr = 0;
    auto one = rr_allocate(ptr, 1, 66);
    REQUIRE(one.size() == 1);
    CHECK(one[0].n_prbs == 66);

    ptr = 0;
    auto eight = rr_allocate(ptr, 8, 66);
    REQUIRE(eight.size() == 8);
    int nines = 0, total = 0;
    for (const auto &c : eight)
    {
        CHECK((c.n_prbs == 8 || c.n_prbs == 9));
        nines += c.n_prbs == 9;
        total += c.n_prbs;
    }
    CHECK(nines == 2);
    CHECK(total == 66);
    CHECK(ptr == 1);

    ptr = 5;
    for (const auto &c : rr_allocate(ptr, 6, 66))
        CHECK(c.n_prbs == 11);

    ptr = 3;
    CHECK(rr_allocate(ptr, 0, 66).empty());
    CHECK(ptr == 3);
}

TEST_CASE("round robin chunks are contiguous and disjoint, and even out over a rotation")
{
    Gen g(41);
    for (int i = 0; i < 10000; ++i)
    {
        const std::size_t n = static_cast<std::size_t>(g.integer(1, 80));
        const int prbs = g.integer(1, 100);
        std::size_t ptr = static_cast<std::size_t>(g.integer(0, 1000));
        std::vector<int> totals(n, 0);
        const int rounds = static_cast<int>(n) * g.integer(1, 3);
        for (int r = 0; r < rounds; ++r)
        {
            int next = 0;
            for (const auto &c : rr_allocate(ptr, n, prbs))
            {
                REQUIRE(c.first_prb == next);
                REQUIRE(c.n_prbs > 0);
                next += c.n_prbs;
                totals[c.user] += c.n_prbs;
            }
            REQUIRE(next == prbs);
        }
        for (int t : totals)
            REQUIRE(t == totals[0]);
    }
}

TEST_CASE("two-hop schedule")
{
    CHECK(schedule_iab_hop(0) == Hop::Backhaul);
    CHECK(schedule_iab_hop(2) == Hop::Access);
    CHECK(schedule_iab_hop(4) == Hop::Backhaul);
    CHECK(schedule_iab_hop(1) == Hop::Access);
    CHECK(schedule_iab_hop(3) == Hop::Backhaul);
    const ServingChain ncr{ChainKind::ViaNcr, 0, 12, false};
    for (std::uint64_t s = 0; s < 8; ++s)
        CHECK(schedule_iab_hop(s, ncr) == Hop::Direct);
}

TEST_CASE("a DL packet through an IAB node takes two DL slots; through an NCR one")
{
    FlatPhy phy;
    MacRunner iab(mixed_topology(0, 1), {}, 1);
    auto s0 = iab.run_slot(0, phy);
    REQUIRE(s0.size() == 1);
    CHECK(s0[0].hop == Hop::Backhaul);
    CHECK(iab.deliveries().empty());
    iab.run_slot(1, phy);
    auto s2 = iab.run_slot(2, phy);
    REQUIRE(s2.size() == 1);
    CHECK(s2[0].hop == Hop::Access);
    REQUIRE(iab.deliveries().size() == 1);
    CHECK(iab.deliveries()[0].slot == 2);

    Topology t;
    t.gnbs = {0};
    t.chains[2] = ServingChain{ChainKind::ViaNcr, 0, 12, false};
    MacRunner ncr(t, {}, 1);
    auto n0 = ncr.run_slot(0, phy);
    REQUIRE(n0.size() == 1);
    CHECK(n0[0].hop == Hop::Direct);
    REQUIRE(ncr.deliveries().size() == 1);
    CHECK(ncr.deliveries()[0].slot == 0);
    REQUIRE(phy.plans.back().size() == 1);
    CHECK(phy.plans.back()[0].relay == 12);
    CHECK(phy.plans.back()[0].chain == ChainKind::ViaNcr);
}

TEST_CASE("access slots idle without buffered backhaul data")
{
    FlatPhy phy;
    phy.sinr_linear = 1e-6; // every TB fails
    MacRunner iab(mixed_topology(0, 1), {}, 3);
    iab.run_slot(0, phy);
    CHECK(iab.dl_buffer(2) == 0);
    CHECK(iab.plan_slot(2).empty());
}

TEST_CASE("MCS selection")
{
    const auto table = McsTable::standard();
    REQUIRE(table.size() == 16);
    CHECK(select_mcs(table, -30.0, 0.0) == 0);
    CHECK(select_mcs(table, 40.0, 0.0) == 15);
    CHECK(select_mcs(table, 22.7, 0.0) == 15);
    CHECK(select_mcs(table, 22.6, 0.0) == 14);
    CHECK(select_mcs(table, 23.0, -1.0) == 14);

    Gen g(42);
    for (int i = 0; i < 10000; ++i)
    {
        const double a = g.uniform(-40.0, 40.0), b = g.uniform(-40.0, 40.0), off = g.uniform(-20.0, 5.0);
        REQUIRE((select_mcs(table, std::min(a, b), off) <= select_mcs(table, std::max(a, b), off)));
    }
    CHECK_THROWS_AS(McsTable(std::vector<McsEntry>{}), std::invalid_argument);
    CHECK_THROWS_AS(McsTable({{0, 2, 30, 0.5, 1.0}, {1, 2, 40, 0.4, 2.0}}), std::invalid_argument);
    CHECK_THROWS_AS(McsTable({{0, 2, 30, 0.5, 1.0}, {1, 2, 40, 0.6, 1.0}}), std::invalid_argument);
}

TEST_CASE("outer loop steps")
{
    CHECK(outer_loop_update({0.0}, Outcome::Nack).offset_db == Approx(-1.0));
    CHECK(outer_loop_update({0.0}, Outcome::Ack).offset_db == Approx(0.1));
    OuterLoopState s;
    for (int i = 0; i < 10; ++i)
        s = outer_loop_update(s, Outcome::Ack);
    s = outer_loop_update(s, Outcome::Nack);
    CHECK(s.offset_db == Approx(0.0).margin(1e-12));

    OuterLoopState low{-19.5};
    CHECK(outer_loop_update(low, Outcome::Nack).offset_db == -20.0);
    OuterLoopState high{4.95};
    CHECK(outer_loop_update(high, Outcome::Ack).offset_db == 5.0);
}

TEST_CASE("error draws follow the BLER curve")
{
    const auto table = McsTable::standard();
    const BlerModel model;
    CHECK(model.bler(3.0, 3.0) == Approx(0.1).epsilon(1e-15));
    std::mt19937_64 rng(43);
    TransportBlock tb;
    tb.mcs = 9;
    int nacks = 0;
    for (int i = 0; i < 10000; ++i)
        nacks += transmit(tb, table[9].threshold_db, table, model, rng) == Outcome::Nack;
    CHECK(nacks / 1e4 == Approx(0.10).margin(0.01));

    CHECK(model.bler(table[9].threshold_db, table[9].threshold_db + 50.0) <= 1e-6);
    int acks = 0;
    for (int i = 0; i < 10000; ++i)
        acks += transmit(tb, table[9].threshold_db + 50.0, table, model, rng) == Outcome::Ack;
    CHECK(acks == 10000);
    for (int i = 0; i < 1000; ++i)
        REQUIRE(transmit(tb, -50.0, table, model, rng) == Outcome::Nack);
}

TEST_CASE("transport block size and effective SINR")
{
    const auto table = McsTable::standard();
    // floor(5.5547 * 12 * 14 * 66 * 0.86)
    CHECK(transport_block_size(table, 15, 66) == 52967);
    CHECK(transport_block_size(table, 0, 0) == 0);
    CHECK(effective_sinr_db({10.0}) == Approx(10.0).margin(1e-12));
    CHECK(effective_sinr_db({1.0, 1.0, 1.0}) == Approx(0.0).margin(1e-12));
    // 2^(mean(log2 4, log2 16)) - 1 = 7
    CHECK(effective_sinr_db({3.0, 15.0}) == Approx(lin_to_db(7.0)).margin(1e-12));
    CHECK_THROWS_AS(effective_sinr_db({}), std::invalid_argument);
}

TEST_CASE("throughput accounting")
{
    CHECK(account_throughput(std::vector<Delivery>{}, 1.0).empty());
    std::vector<TransportBlock> tbs{{0, 2, 2, 5, {}, 10000, Outcome::Ack}, {0, 3, 3, 5, {}, 5000, Outcome::Nack}};
    const auto bps = account_throughput(tbs, 1e-3);
    CHECK(bps.at(2) == Approx(1e7));
    CHECK(bps.at(3) == 0.0);
    const auto dl = account_throughput(std::vector<Delivery>{{0, 4, Direction::Downlink, 300}, {5, 4, Direction::Downlink, 700}}, 2.0);
    CHECK(dl.at(4) == Approx(500.0));
    CHECK_THROWS_AS(account_throughput(tbs, 0.0), std::invalid_argument);
}

TEST_CASE("IAB throughput is half the single-hop throughput on error-free links")
{
    FlatPhy phy;
    Topology t;
    t.gnbs = {0, 1};
    t.iab_donor[10] = 0;
    t.chains[2] = ServingChain{ChainKind::ViaIab, 0, 10, false};
    t.chains[3] = ServingChain{ChainKind::ViaNcr, 1, 12, false};
    MacRunner mac(t, {}, 44);
    const std::uint64_t n = 4000;
    for (std::uint64_t s = 0; s < n; ++s)
        mac.run_slot(s, phy);
    std::uint64_t iab_bits = 0, ncr_bits = 0;
    for (const auto &d : mac.deliveries())
        if (d.direction == Direction::Downlink)
            (d.ue == 2 ? iab_bits : ncr_bits) += d.bits;
    CHECK(static_cast<double>(iab_bits) / static_cast<double>(ncr_bits) == Approx(0.5).epsilon(0.02));
}

TEST_CASE("no IAB node transmits and receives in the same slot, and delivered bits are conserved")
{
    Gen g(45);
    for (int trial = 0; trial < 20; ++trial)
    {
        FlatPhy phy;
        phy.sinr_linear = db_to_lin(g.uniform(-5.0, 25.0));
        MacRunner mac(mixed_topology(g.integer(0, 3), g.integer(1, 4)), {}, static_cast<std::uint64_t>(trial));
        std::uint64_t acked_end_to_end = 0;
        for (std::uint64_t s = 0; s < 500; ++s)
        {
            const auto recs = mac.run_slot(s, phy);
            std::set<NodeId> tx, rx;
            for (const auto &p : phy.plans.back())
            {
                tx.insert(p.tx);
                rx.insert(p.rx);
            }
            REQUIRE_FALSE((tx.contains(10) && rx.contains(10)));
            for (const auto &r : recs)
            {
                if (r.outcome != Outcome::Ack)
                    continue;
                const bool end_to_end = r.hop == Hop::Direct ||
                                        (r.hop == Hop::Access && r.direction == Direction::Downlink) ||
                                        (r.hop == Hop::Backhaul && r.direction == Direction::Uplink);
                if (end_to_end)
                    acked_end_to_end += r.bits;
            }
        }
        std::uint64_t delivered = 0;
        for (const auto &d : mac.deliveries())
            delivered += d.bits;
        REQUIRE(delivered == acked_end_to_end);
    }
}

TEST_CASE("outer loop settles near the BLER target on a stationary channel")
{
    FlatPhy phy;
    phy.sinr_linear = db_to_lin(12.3);
    Topology t;
    t.gnbs = {0};
    t.chains[2] = ServingChain{ChainKind::Direct, 0, kNoNode, false};
    MacRunner mac(t, {}, 46);
    std::uint64_t nacks = 0, total = 0;
    for (std::uint64_t s = 0; s < 20000; ++s)
        for (const auto &r : mac.run_slot(s, phy))
        {
            ++total;
            nacks += r.outcome == Outcome::Nack;
        }
    const double rate = static_cast<double>(nacks) / static_cast<double>(total);
    CHECK(rate >= 0.05);
    CHECK(rate <= 0.15);
}

TEST_CASE("runner rejects inconsistent topologies")
{
    Topology t;
    t.gnbs = {0};
    t.chains[2] = ServingChain{ChainKind::ViaIab, 0, 10, false};
    CHECK_THROWS_AS(MacRunner(t, {}, 1), std::invalid_argument);
    MacConfig bad;
    bad.n_prbs = 0;
    CHECK_THROWS_AS(MacRunner(Topology{}, bad, 1), std::invalid_argument);
}
