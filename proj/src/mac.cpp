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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace densim::mac
{

using scenario::ChainKind;
using scenario::ServingChain;

Direction tdd_direction(std::uint64_t slot) { return SlotPattern{}.direction(slot); }

std::vector<PrbChunk> rr_allocate(std::size_t &rr_pointer, std::size_t n_users, int n_prbs)
{
    std::vector<PrbChunk> out;
    if (n_users == 0 || n_prbs <= 0)
        return out;
    const std::size_t start = rr_pointer % n_users;
    const int base = n_prbs / static_cast<int>(n_users);
    const int extra = n_prbs % static_cast<int>(n_users);
    int next = 0;
    for (std::size_t i = 0; i < n_users; ++i)
    {
        const int count = base + (static_cast<int>(i) < extra ? 1 : 0);
        if (count == 0)
            continue;
        out.push_back({(start + i) % n_users, next, count});
        next += count;
    }
    ++rr_pointer;
    return out;
}

std::string_view to_string(Hop h)
{
    switch (h)
    {
    case Hop::Direct: return "direct";
    case Hop::Backhaul: return "backhaul";
    case Hop::Access: return "access";
    }
    return "?";
}

Hop schedule_iab_hop(std::uint64_t slot)
{
    const std::uint64_t m = slot / 2;
    if (tdd_direction(slot) == Direction::Downlink)
        return m % 2 == 0 ? Hop::Backhaul : Hop::Access;
    return m % 2 == 0 ? Hop::Access : Hop::Backhaul;
}

Hop schedule_iab_hop(std::uint64_t slot, const ServingChain &chain)
{
    return chain.kind == ChainKind::ViaIab ? schedule_iab_hop(slot) : Hop::Direct;
}

// ---- MCS ----------------------------------------------------------------------------------------

McsTable::McsTable(std::vector<McsEntry> entries) : entries_(std::move(entries))
{
    if (entries_.empty())
        throw std::invalid_argument("MCS table must not be empty");
    for (std::size_t i = 1; i < entries_.size(); ++i)
    {
        if (!(entries_[i].spectral_efficiency > entries_[i - 1].spectral_efficiency))
            throw std::invalid_argument("MCS table: spectral efficiency must increase strictly with the index");
        if (!(entries_[i].threshold_db > entries_[i - 1].threshold_db))
            throw std::invalid_argument("MCS table: thresholds must increase strictly with the index");
    }
}

McsTable McsTable::standard()
{
    // index, Qm, rate x1024, SE, SINR for 10 % BLER
    return McsTable({{0, 2, 30, 0.0586, -8.7},   {1, 2, 78, 0.1523, -6.7},   {2, 2, 120, 0.2344, -4.7},
                     {3, 2, 193, 0.3770, -2.3},  {4, 2, 308, 0.6016, 0.2},   {5, 2, 449, 0.8770, 2.4},
                     {6, 2, 602, 1.1758, 4.3},   {7, 4, 378, 1.4766, 5.9},   {8, 4, 490, 1.9141, 8.1},
                     {9, 4, 616, 2.4063, 10.3},  {10, 6, 466, 2.7305, 11.7}, {11, 6, 567, 3.3223, 14.1},
                     {12, 6, 666, 3.9023, 16.3}, {13, 6, 772, 4.5234, 18.7}, {14, 6, 873, 5.1152, 21.0},
                     {15, 6, 948, 5.5547, 22.7}});
}

int select_mcs(const McsTable &table, double estimated_sinr_db, double offset_db)
{
    if (table.size() == 0)
        throw std::invalid_argument("select_mcs: empty table");
    const double s = estimated_sinr_db + offset_db;
    int best = 0;
    for (const auto &e : table.entries())
        if (e.threshold_db <= s)
            best = e.index;
    return best;
}

OuterLoopState outer_loop_update(OuterLoopState state, Outcome outcome, const OuterLoopConfig &cfg)
{
    state.offset_db += outcome == Outcome::Ack ? cfg.step_up_db : -cfg.step_down_db;
    state.offset_db = std::clamp(state.offset_db, cfg.min_offset_db, cfg.max_offset_db);
    return state;
}

double BlerModel::bler(double threshold_db, double sinr_db) const
{
    const double x = slope_per_db * (sinr_db - threshold_db);
    if (x > 700.0)
        return 0.0;
    return 1.0 / (1.0 + 9.0 * std::exp(x));
}

std::uint64_t transport_block_size(const McsTable &table, int mcs, int n_prbs, double overhead, int symbols_per_slot)
{
    if (n_prbs <= 0)
        return 0;
    const double se = table[static_cast<std::size_t>(mcs)].spectral_efficiency;
    return static_cast<std::uint64_t>(std::floor(se * 12.0 * symbols_per_slot * n_prbs * overhead));
}

Outcome transmit(const TransportBlock &tb, double actual_sinr_db, const McsTable &table, const BlerModel &model,
                 std::mt19937_64 &rng)
{
    const double p = model.bler(table[static_cast<std::size_t>(tb.mcs)].threshold_db, actual_sinr_db);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    return u(rng) < p ? Outcome::Nack : Outcome::Ack;
}

double effective_sinr_db(const std::vector<double> &sinr_linear)
{
    if (sinr_linear.empty())
        throw std::invalid_argument("effective_sinr_db: no PRBs");
    double acc = 0.0;
    for (double s : sinr_linear)
        acc += std::log2(1.0 + std::max(s, 0.0));
    const double mean = acc / static_cast<double>(sinr_linear.size());
    return lin_to_db(std::exp2(mean) - 1.0);
}

std::map<NodeId, double> account_throughput(const std::vector<Delivery> &deliveries, double window_s)
{
    if (!(window_s > 0.0))
        throw std::invalid_argument("account_throughput: window must be positive");
    std::map<NodeId, double> out;
    for (const auto &d : deliveries)
        out[d.ue] += static_cast<double>(d.bits);
    for (auto &[ue, v] : out)
        v /= window_s;
    return out;
}

std::map<NodeId, double> account_throughput(const std::vector<TransportBlock> &tbs, double window_s)
{
    if (!(window_s > 0.0))
        throw std::invalid_argument("account_throughput: window must be positive");
    std::map<NodeId, double> out;
    for (const auto &tb : tbs)
    {
        auto &v = out[tb.ue];
        if (tb.outcome == Outcome::Ack)
            v += static_cast<double>(tb.bits);
    }
    for (auto &[ue, v] : out)
        v /= window_s;
    return out;
}

// ---- MacRunner ----------------------------------------------------------------------------------

MacRunner::MacRunner(Topology topology, MacConfig config, std::uint64_t seed)
    : topology_(std::move(topology)), config_(std::move(config)), rng_(stream_seed(seed, 0x6d6163ULL))
{
    if (config_.n_prbs <= 0)
        throw std::invalid_argument("MacRunner: n_prbs must be positive");
    for (const auto &[ue, chain] : topology_.chains)
        if (chain.kind == ChainKind::ViaIab && !topology_.iab_donor.contains(chain.relay))
            throw std::invalid_argument("MacRunner: UE " + std::to_string(ue) + " served by unknown IAB node");
}

std::vector<NodeId> MacRunner::iab_ues(NodeId iab) const
{
    std::vector<NodeId> out;
    for (const auto &[ue, chain] : topology_.chains)
        if (chain.kind == ChainKind::ViaIab && chain.relay == iab && !chain.out_of_coverage)
            out.push_back(ue);
    return out;
}

std::uint64_t MacRunner::dl_buffer(NodeId ue) const
{
    auto it = dl_buffers_.find(ue);
    return it == dl_buffers_.end() ? 0 : it->second;
}

std::uint64_t MacRunner::ul_buffer(NodeId ue) const
{
    auto it = ul_buffers_.find(ue);
    return it == ul_buffers_.end() ? 0 : it->second;
}

const OuterLoopState &MacRunner::outer_loop(NodeId tx, NodeId rx) const
{
    static const OuterLoopState none{};
    auto it = links_.find({tx, rx});
    return it == links_.end() ? none : it->second.loop;
}

void MacRunner::deliver(std::uint64_t slot, NodeId ue, Direction d, std::uint64_t bits)
{
    if (bits > 0)
        deliveries_.push_back({slot, ue, d, bits});
}

std::vector<PlannedTransmission> MacRunner::plan_slot(std::uint64_t slot)
{
    const Direction dir = config_.pattern.direction(slot);
    const Hop iab_hop = schedule_iab_hop(slot);
    const int d = dir == Direction::Downlink ? 0 : 1;
    std::vector<PlannedTransmission> plan;

    auto emit = [&](Hop hop, NodeId sched, NodeId ue, NodeId other, const ServingChain *chain, const PrbChunk &c)
    {
        PlannedTransmission t;
        t.direction = dir;
        t.hop = hop;
        t.ue = ue;
        if (chain && hop == Hop::Direct)
        {
            t.chain = chain->kind;
            t.relay = chain->relay;
        }
        else if (hop != Hop::Direct)
            t.chain = ChainKind::ViaIab;
        const NodeId far = ue != kNoNode ? ue : other;
        t.tx = dir == Direction::Downlink ? sched : far;
        t.rx = dir == Direction::Downlink ? far : sched;
        for (int k = 0; k < c.n_prbs; ++k)
            t.prbs.push_back(c.first_prb + k);
        plan.push_back(std::move(t));
    };

    for (NodeId b : topology_.gnbs)
    {
        std::vector<NodeId> users;
        for (const auto &[ue, chain] : topology_.chains)
            if (chain.gnb == b && chain.kind != ChainKind::ViaIab && !chain.out_of_coverage)
                users.push_back(ue);
        const std::size_t n_ue = users.size();
        if (iab_hop == Hop::Backhaul)
            for (const auto &[iab, donor] : topology_.iab_donor)
            {
                if (donor != b || iab_ues(iab).empty())
                    continue;
                if (dir == Direction::Uplink)
                {
                    std::uint64_t total = 0;
                    for (NodeId u : iab_ues(iab))
                        total += ul_buffer(u);
                    if (total == 0)
                        continue;
                }
                users.push_back(iab);
            }
        auto &ptr = rr_pointers_[{b, d}];
        for (const auto &c : rr_allocate(ptr, users.size(), config_.n_prbs))
        {
            if (c.user < n_ue)
                emit(Hop::Direct, b, users[c.user], kNoNode, &topology_.chains.at(users[c.user]), c);
            else
                emit(Hop::Backhaul, b, kNoNode, users[c.user], nullptr, c);
        }
    }

    if (iab_hop == Hop::Access)
        for (const auto &[iab, donor] : topology_.iab_donor)
        {
            std::vector<NodeId> users;
            for (NodeId u : iab_ues(iab))
                if (dir == Direction::Uplink || dl_buffer(u) > 0)
                    users.push_back(u);
            auto &ptr = rr_pointers_[{iab, d}];
            for (const auto &c : rr_allocate(ptr, users.size(), config_.n_prbs))
                emit(Hop::Access, iab, users[c.user], kNoNode, nullptr, c);
        }
    return plan;
}

std::vector<TbRecord> MacRunner::run_slot(std::uint64_t slot, PhyModel &phy)
{
    const auto plan = plan_slot(slot);
    const auto sinr = phy.evaluate(slot, plan);
    if (sinr.size() != plan.size())
        throw std::runtime_error("PHY returned SINRs for a different number of transmissions");

    std::vector<TbRecord> out;
    out.reserve(plan.size());
    for (std::size_t i = 0; i < plan.size(); ++i)
    {
        const auto &p = plan[i];
        if (sinr[i].size() != p.prbs.size())
            throw std::runtime_error("PHY returned SINRs for a different number of PRBs");
        auto &link = links_[{p.tx, p.rx}];
        const double actual = effective_sinr_db(sinr[i]);
        const double estimate = link.has_report ? link.last_report_db : actual;

        TbRecord r;
        r.slot = slot;
        r.direction = p.direction;
        r.hop = p.hop;
        r.tx = p.tx;
        r.rx = p.rx;
        r.ue = p.ue;
        r.n_prbs = static_cast<int>(p.prbs.size());
        r.sinr_db = actual;
        r.estimate_db = estimate;
        r.offset_db = link.loop.offset_db;
        r.mcs = select_mcs(config_.table, estimate, link.loop.offset_db);

        std::uint64_t bits = transport_block_size(config_.table, r.mcs, r.n_prbs, config_.overhead,
                                                  config_.pattern.symbols_per_slot);
        if (p.hop == Hop::Access && p.direction == Direction::Downlink)
            bits = std::min(bits, dl_buffer(p.ue));
        std::vector<NodeId> bh_ues;
        if (p.hop == Hop::Backhaul)
            bh_ues = iab_ues(p.direction == Direction::Downlink ? p.rx : p.tx);
        if (p.hop == Hop::Backhaul && p.direction == Direction::Uplink)
        {
            std::uint64_t total = 0;
            for (NodeId u : bh_ues)
                total += ul_buffer(u);
            bits = std::min(bits, total);
        }
        r.bits = bits;

        TransportBlock tb{p.tx, p.rx, p.ue, r.mcs, p.prbs, bits, Outcome::Nack};
        r.outcome = transmit(tb, actual, config_.table, config_.bler, rng_);
        link.loop = outer_loop_update(link.loop, r.outcome, config_.outer_loop);
        link.has_report = true;
        link.last_report_db = actual;

        if (r.outcome == Outcome::Ack && bits > 0)
        {
            switch (p.hop)
            {
            case Hop::Direct: deliver(slot, p.ue, p.direction, bits); break;
            case Hop::Access:
                if (p.direction == Direction::Downlink)
                {
                    dl_buffers_[p.ue] -= bits;
                    deliver(slot, p.ue, Direction::Downlink, bits);
                }
                else
                    ul_buffers_[p.ue] += bits;
                break;
            case Hop::Backhaul:
                if (p.direction == Direction::Downlink)
                {
                    // Donor data for the IAB's UEs is split evenly over their buffers.
                    const std::uint64_t share = bits / bh_ues.size();
                    std::uint64_t rest = bits - share * bh_ues.size();
                    for (NodeId u : bh_ues)
                    {
                        dl_buffers_[u] += share + (rest > 0 ? 1 : 0);
                        if (rest > 0)
                            --rest;
                    }
                }
                else
                {
                    // Drain the UL buffers round robin starting at a rotating UE.
                    auto &cursor = backhaul_cursor_[p.tx];
                    std::uint64_t left = bits;
                    const std::size_t n = bh_ues.size();
                    // equal shares first, then whatever a short buffer left unused
                    for (int pass = 0; pass < 2 && left > 0; ++pass)
                        for (std::size_t j = 0; j < n && left > 0; ++j)
                        {
                            const NodeId u = bh_ues[(cursor + j) % n];
                            const std::uint64_t want = pass == 0 ? (bits + n - 1) / n : left;
                            const std::uint64_t take = std::min({want, left, ul_buffers_[u]});
                            ul_buffers_[u] -= take;
                            left -= take;
                            deliver(slot, u, Direction::Uplink, take);
                        }
                    ++cursor;
                }
                break;
            }
        }
        out.push_back(r);
    }
    return out;
}

} // namespace densim::mac
