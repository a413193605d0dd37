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
#include "densim/types.hpp"

#include <cstdint>
#include <map>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace densim::mac
{

struct SlotPattern
{
    double slot_duration_s = 0.25e-3;
    int symbols_per_slot = 14;

    Direction direction(std::uint64_t slot) const { return slot % 2 == 0 ? Direction::Downlink : Direction::Uplink; }
};

/// Even slots are DL, odd slots UL.
Direction tdd_direction(std::uint64_t slot);

struct PrbChunk
{
    std::size_t user = 0; // index into the caller's user list
    int first_prb = 0;
    int n_prbs = 0;
};

/// Round robin over `n_users`: contiguous chunks in user order starting at rr_pointer % n_users;
/// the first (n_prbs mod n_users) users of that order get one extra PRB. Advances the pointer by
/// one. No users leaves every PRB idle (and the pointer untouched).
std::vector<PrbChunk> rr_allocate(std::size_t &rr_pointer, std::size_t n_users, int n_prbs);

enum class Hop
{
    Direct,   // gNB <-> UE, possibly assisted by an NCR or RIS
    Backhaul, // gNB <-> IAB node
    Access    // IAB node <-> UE
};

std::string_view to_string(Hop h);

/// Which hop of a two-hop IAB chain is active in a slot. In DL, the even DL slots (slot/2 even) carry
/// backhaul and the odd ones access; in UL, slot/2 even carries access and odd backhaul, so UL data
/// reaches the donor after its access hop.
Hop schedule_iab_hop(std::uint64_t slot);
/// Hop of a serving chain in a slot: IAB chains alternate, every other chain is always Direct.
Hop schedule_iab_hop(std::uint64_t slot, const scenario::ServingChain &chain);

struct McsEntry
{
    int index = 0;
    int modulation_order = 2;
    double code_rate = 0.0; // x1024
    double spectral_efficiency = 0.0;
    double threshold_db = 0.0; // SINR at 10 % BLER
};

class McsTable
{
  public:
    McsTable() = default;
    /// Throws std::invalid_argument unless non-empty with strictly increasing SE and thresholds.
    explicit McsTable(std::vector<McsEntry> entries);

    /// 16 entries: a QPSK rate-30/1024 floor followed by the 15 CQI entries of the 64QAM table.
    static McsTable standard();

    const std::vector<McsEntry> &entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    const McsEntry &operator[](std::size_t i) const { return entries_.at(i); }
    int max_index() const { return static_cast<int>(entries_.size()) - 1; }

  private:
    std::vector<McsEntry> entries_;
};

/// Highest index whose threshold is <= estimated + offset; index 0 below the lowest threshold.
int select_mcs(const McsTable &table, double estimated_sinr_db, double offset_db);

struct OuterLoopConfig
{
    double step_down_db = 1.0;
    double step_up_db = 0.1;
    double min_offset_db = -20.0;
    double max_offset_db = 5.0;
};

struct OuterLoopState
{
    double offset_db = 0.0;
};

enum class Outcome
{
    Ack,
    Nack
};

OuterLoopState outer_loop_update(OuterLoopState state, Outcome outcome, const OuterLoopConfig &cfg = {});

/// BLER(s) = 1 / (1 + 9 exp(slope (s - threshold))): exactly 10 % at the threshold.
struct BlerModel
{
    double slope_per_db = 2.0;

    double bler(double threshold_db, double sinr_db) const;
};

struct TransportBlock
{
    NodeId tx = kNoNode;
    NodeId rx = kNoNode;
    NodeId ue = kNoNode; // end user; kNoNode for aggregated backhaul
    int mcs = 0;
    std::vector<int> prbs;
    std::uint64_t bits = 0;
    Outcome outcome = Outcome::Nack;
};

/// floor(SE * 12 * symbols * n_prbs * overhead)
std::uint64_t transport_block_size(const McsTable &table, int mcs, int n_prbs, double overhead = 0.86,
                                   int symbols_per_slot = 14);

/// Draws ACK/NACK once for a TB.
Outcome transmit(const TransportBlock &tb, double actual_sinr_db, const McsTable &table, const BlerModel &model,
                 std::mt19937_64 &rng);

/// 2^(mean log2(1 + s)) - 1 over linear per-PRB SINRs, returned in dB.
double effective_sinr_db(const std::vector<double> &sinr_linear);

/// Bits handed to (DL) or received from (UL) a UE end to end.
struct Delivery
{
    std::uint64_t slot = 0;
    NodeId ue = kNoNode;
    Direction direction = Direction::Downlink;
    std::uint64_t bits = 0;
};

/// Per-UE throughput in bit/s over a window. Throws std::invalid_argument for a non-positive window.
std::map<NodeId, double> account_throughput(const std::vector<Delivery> &deliveries, double window_s);
/// Same from single-hop TBs: ACKed bits per UE (for chains where every TB is end to end).
std::map<NodeId, double> account_throughput(const std::vector<TransportBlock> &tbs, double window_s);

// ---- slot state machine -------------------------------------------------------------------------

struct Topology
{
    std::vector<NodeId> gnbs;
    std::map<NodeId, NodeId> iab_donor;                 // IAB node -> donor gNB
    std::map<NodeId, scenario::ServingChain> chains;    // UE -> serving chain
};

struct MacConfig
{
    int n_prbs = 66;
    double overhead = 0.86;
    SlotPattern pattern;
    McsTable table = McsTable::standard();
    BlerModel bler;
    OuterLoopConfig outer_loop;
};

/// One scheduled transmission of a slot, before the PHY has been evaluated.
struct PlannedTransmission
{
    Direction direction = Direction::Downlink;
    Hop hop = Hop::Direct;
    NodeId tx = kNoNode;
    NodeId rx = kNoNode;
    NodeId ue = kNoNode; // kNoNode for backhaul
    scenario::ChainKind chain = scenario::ChainKind::Direct;
    NodeId relay = kNoNode; // NCR or RIS assisting a direct hop
    std::vector<int> prbs;
};

/// Supplies the per-PRB linear SINR of every planned transmission of a slot.
class PhyModel
{
  public:
    virtual ~PhyModel() = default;
    virtual std::vector<std::vector<double>> evaluate(std::uint64_t slot,
                                                      const std::vector<PlannedTransmission> &plan) = 0;
};

struct TbRecord
{
    std::uint64_t slot = 0;
    Direction direction = Direction::Downlink;
    Hop hop = Hop::Direct;
    NodeId tx = kNoNode, rx = kNoNode, ue = kNoNode;
    int mcs = 0;
    int n_prbs = 0;
    std::uint64_t bits = 0;
    double sinr_db = 0.0;     // effective SINR of the TB
    double estimate_db = 0.0; // SINR the MCS was chosen from (before the offset)
    double offset_db = 0.0;
    Outcome outcome = Outcome::Nack;

    /// True for receptions the UE itself experiences (its direct or access hop).
    bool ue_link() const { return hop != Hop::Backhaul; }
};

class MacRunner
{
  public:
    MacRunner(Topology topology, MacConfig config, std::uint64_t seed);

    /// Scheduling decisions of a slot (does not change state except the RR pointers).
    std::vector<PlannedTransmission> plan_slot(std::uint64_t slot);
    /// Plans, asks the PHY for SINRs, draws outcomes and updates buffers and link adaptation.
    std::vector<TbRecord> run_slot(std::uint64_t slot, PhyModel &phy);

    /// Replaces the serving chains (re-association). Buffers and link state are kept.
    void update_chains(std::map<NodeId, scenario::ServingChain> chains) { topology_.chains = std::move(chains); }

    const std::vector<Delivery> &deliveries() const { return deliveries_; }
    std::uint64_t dl_buffer(NodeId ue) const;
    std::uint64_t ul_buffer(NodeId ue) const;
    const OuterLoopState &outer_loop(NodeId tx, NodeId rx) const;
    const Topology &topology() const { return topology_; }
    const MacConfig &config() const { return config_; }

  private:
    struct LinkState
    {
        OuterLoopState loop;
        bool has_report = false;
        double last_report_db = 0.0;
    };

    std::vector<NodeId> iab_ues(NodeId iab) const;
    void deliver(std::uint64_t slot, NodeId ue, Direction d, std::uint64_t bits);

    Topology topology_;
    MacConfig config_;
    std::mt19937_64 rng_;
    std::map<std::pair<NodeId, int>, std::size_t> rr_pointers_;
    std::map<std::pair<NodeId, NodeId>, LinkState> links_;
    std::map<NodeId, std::uint64_t> dl_buffers_, ul_buffers_;
    std::map<NodeId, std::size_t> backhaul_cursor_;
    std::vector<Delivery> deliveries_;
};

} // namespace densim::mac
