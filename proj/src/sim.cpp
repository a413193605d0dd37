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

#include "densim/metrics.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>
#include <stdexcept>
#include <unordered_map>

namespace densim::sim
{

using scenario::ChainKind;
using scenario::NodeDescriptor;
using scenario::NodeKind;
using scenario::ScenarioState;
using scenario::ServingChain;

double SimParams::noise_mw() const
{
    return phy::noise_power_prb(noise_density_dbm_hz, subcarriers_per_prb, scs_hz, noise_figure_db);
}

namespace
{
constexpr std::uint64_t kFadingTag = 0x66616465ULL;
constexpr std::uint64_t kShadowTag = 0x73686164ULL;

// Array responses of one link endpoint towards every ray, for the current geometry epoch.
struct LinkEnd
{
    bool valid = false;
    std::vector<std::vector<Eigen::VectorXcd>> response; // [panel][ray]
    std::vector<std::vector<double>> sqrt_gain;          // [panel][ray]
    std::unordered_map<std::size_t, std::vector<cplx>> projection; // flat beam -> [ray]
};

struct Link
{
    Link(NodeId a_, NodeId b_, channel::LinkClass c, channel::RayChannel f)
        : a(a_), b(b_), cls(c), fading(std::move(f))
    {
    }

    NodeId a = kNoNode, b = kNoNode; // a < b
    channel::LinkClass cls;
    channel::RayChannel fading;
    std::optional<channel::ShadowingProcess> shadow;
    double path_loss_db = 0.0;
    double shadow_db = 0.0;
    double amp = 0.0; // sqrt of the large-scale power gain
    Vec3 last_rel;
    std::size_t n_rays = 0;
    std::vector<cplx> phase; // [prb * n_rays + ray]
    Eigen::MatrixXcd gram;   // sum_k conj(E_k) E_k^T over PRBs
    LinkEnd end[2];
    std::unordered_map<std::uint64_t, std::vector<cplx>> coeff_memo; // per slot
};

struct RisState
{
    NodeId id = kNoNode;
    NodeId gnb = kNoNode;
    NodeId target = kNoNode;
    std::size_t gnb_beam_to_ris = 0;
    std::vector<cplx> theta;
    std::map<std::pair<NodeId, NodeId>, Eigen::MatrixXcd> kernels; // (gnb, ue) -> [m][l]
};

std::uint64_t beam_key(std::size_t ba, std::size_t bb) { return (static_cast<std::uint64_t>(ba) << 32) | bb; }
} // namespace

class Engine final : public mac::PhyModel
{
  public:
    Engine(ScenarioState state, SimParams params, std::uint64_t seed);

    RunResult run(std::uint64_t n_slots, std::ostream *channel_trace);
    double chain_power_dbm(NodeId ue, const ServingChain &chain);
    const ScenarioState &state() const { return state_; }

    std::vector<std::vector<double>> evaluate(std::uint64_t slot, const std::vector<mac::PlannedTransmission> &plan) override;

    // gains (|gamma|^2 with large-scale loss and element gains) between node beams on a PRB
    double gain_sq(NodeId x, std::size_t bx, NodeId y, std::size_t by, int prb);
    double cascade_sq(NodeId gnb, std::size_t bg, NodeId ris, NodeId ue, int prb);

    cplx beamformed_gain(NodeId x, std::size_t bx, NodeId y, std::size_t by, int prb)
    {
        ensure_fresh();
        Link &l = link(x, y);
        l.coeff_memo.clear();
        const auto &c = x == l.a ? coefficients(l, bx, by) : coefficients(l, by, bx);
        return gamma(l, c, prb);
    }
    double large_scale_loss_db(NodeId x, NodeId y)
    {
        ensure_fresh();
        const Link &l = link(x, y);
        return l.path_loss_db + l.shadow_db;
    }

    void ensure_fresh()
    {
        if (stale_)
            refresh_epoch();
    }

  private:

    friend class PrbOracle;

    Link &link(NodeId x, NodeId y);
    bool has_link(NodeId x, NodeId y) const;
    void add_link(NodeId x, NodeId y);
    void update_geometry();
    void refresh_epoch();
    void ensure_end(Link &l, int e);
    const std::vector<cplx> &projection(Link &l, int e, std::size_t flat_beam);
    const std::vector<cplx> &coefficients(Link &l, std::size_t beam_a, std::size_t beam_b);
    cplx gamma(Link &l, const std::vector<cplx> &c, int prb) const;
    double wideband(Link &l, const std::vector<cplx> &c) const;
    const std::vector<antenna::BeamVector> &codebook(const antenna::ArrayGeometry &a);
    std::size_t beams_per_panel(const NodeDescriptor &n) const;
    std::vector<std::size_t> allowed_beams(const NodeDescriptor &x, const NodeDescriptor &peer);
    std::pair<std::size_t, std::size_t> beam_pair(NodeId x, NodeId y);
    std::size_t beam_towards_ris(NodeId gnb, NodeId ris);
    std::pair<std::size_t, std::size_t> plan_beams(const mac::PlannedTransmission &t);
    std::size_t gnb_beam_for(NodeId ue);

    double tx_power_mw(NodeId n) const;
    NodeId ncr_donor(NodeId ncr) const { return state_.node(ncr).cell; }

    // RIS
    RisState &ris(NodeId id);
    Eigen::MatrixXcd kernel(NodeId ris, NodeId gnb, NodeId ue, const std::vector<cplx> &theta);
    const Eigen::MatrixXcd &cached_kernel(RisState &r, NodeId gnb, NodeId ue);
    cplx eta(NodeId gnb, std::size_t bg, NodeId ris, NodeId ue, const Eigen::MatrixXcd &K, int prb);
    void ris_vectors(NodeId gnb, std::size_t bg, NodeId ris, NodeId ue, int prb, std::vector<cplx> &a,
                     std::vector<cplx> &b);
    void configure_ris();
    std::size_t choose_ris_gnb_beam(NodeId ue, NodeId ris_id, const std::vector<cplx> &theta,
                                    const Eigen::MatrixXcd *K, double *best_gain);

    void associate();
    mac::Topology topology() const;
    void dump_channels(std::ostream &out, std::uint64_t slot);

    ScenarioState state_;
    SimParams params_;
    std::uint64_t seed_;
    int n_prbs_;
    double noise_mw_;
    std::vector<Link> links_;
    std::vector<int> link_index_; // (max_id + 1)^2 table
    std::size_t id_span_ = 0;
    std::map<std::pair<std::size_t, std::size_t>, std::vector<antenna::BeamVector>> codebooks_;
    std::map<std::pair<NodeId, NodeId>, std::pair<std::size_t, std::size_t>> beam_pairs_;
    std::map<std::pair<NodeId, NodeId>, std::size_t> ris_beams_;
    std::map<NodeId, std::size_t> ris_ue_beams_;
    std::vector<RisState> riss_;
    std::unique_ptr<mac::MacRunner> mac_;
    std::uint64_t half_duplex_violations_ = 0;
    bool stale_ = true; // geometry moved since the last epoch refresh
};

// ---- per-PRB gain oracle ------------------------------------------------------------------------

struct NcrPrbState
{
    NodeId id = kNoNode;
    std::size_t in_beam = 0, out_beam = 0;
    double gain = 0.0;
};

class PrbOracle final : public phy::GainOracle
{
  public:
    PrbOracle(Engine &e, int prb, const std::vector<std::pair<NodeId, std::size_t>> &tx_beams,
              const std::vector<NcrPrbState> &ncrs)
        : e_(e), prb_(prb), tx_beams_(tx_beams), ncrs_(ncrs)
    {
    }

    void set_receiver(NodeId rx, std::size_t beam)
    {
        rx_ = rx;
        rx_beam_ = beam;
    }

    double direct(NodeId tx, NodeId rx) const override
    {
        check_rx(rx);
        return e_.gain_sq(tx, tx_beam(tx), rx, rx_beam_, prb_);
    }
    double relay_in(NodeId tx, NodeId ncr) const override
    {
        return e_.gain_sq(tx, tx_beam(tx), ncr, ncr_state(ncr).in_beam, prb_);
    }
    double relay_out(NodeId ncr, NodeId rx) const override
    {
        check_rx(rx);
        return e_.gain_sq(ncr, ncr_state(ncr).out_beam, rx, rx_beam_, prb_);
    }
    double cascade(NodeId tx, NodeId ris, NodeId rx) const override
    {
        check_rx(rx);
        const auto &n = e_.state().node(tx);
        if (n.kind == NodeKind::Gnb)
            return e_.cascade_sq(tx, tx_beam(tx), ris, rx, prb_);
        return e_.cascade_sq(rx, rx_beam_, ris, tx, prb_);
    }

  private:
    void check_rx(NodeId rx) const
    {
        if (rx != rx_)
            throw std::logic_error("PRB oracle queried for a receiver it was not set up for");
    }
    std::size_t tx_beam(NodeId tx) const
    {
        for (const auto &[n, b] : tx_beams_)
            if (n == tx)
                return b;
        throw std::logic_error("PRB oracle: node " + std::to_string(tx) + " does not transmit on this PRB");
    }
    const NcrPrbState &ncr_state(NodeId id) const
    {
        for (const auto &s : ncrs_)
            if (s.id == id)
                return s;
        throw std::logic_error("PRB oracle: NCR " + std::to_string(id) + " is not active on this PRB");
    }

    Engine &e_;
    int prb_;
    const std::vector<std::pair<NodeId, std::size_t>> &tx_beams_;
    const std::vector<NcrPrbState> &ncrs_;
    NodeId rx_ = kNoNode;
    std::size_t rx_beam_ = 0;
};

// ---- construction -------------------------------------------------------------------------------

Engine::Engine(ScenarioState state, SimParams params, std::uint64_t seed)
    : state_(std::move(state)), params_(std::move(params)), seed_(seed)
{
    if (params_.geometry_epoch_slots <= 0)
        throw std::invalid_argument("geometry_epoch_slots must be positive");
    n_prbs_ = params_.mac.n_prbs;
    params_.fading.n_prbs = n_prbs_;
    params_.fading.fc_ghz = params_.fc_ghz;
    params_.fading.prb_bandwidth_hz = params_.subcarriers_per_prb * params_.scs_hz;
    noise_mw_ = params_.noise_mw();

    NodeId max_id = 0;
    for (const auto &n : state_.nodes)
        max_id = std::max(max_id, n.id);
    id_span_ = static_cast<std::size_t>(max_id) + 1;
    link_index_.assign(id_span_ * id_span_, -1);

    // Every pair the link taxonomy covers; gNB-gNB, aux-aux and UE-UE links never carry signal here.
    for (std::size_t i = 0; i < state_.nodes.size(); ++i)
        for (std::size_t j = i + 1; j < state_.nodes.size(); ++j)
        {
            const auto &x = state_.nodes[i], &y = state_.nodes[j];
            const bool x_infra = x.kind != NodeKind::Ue, y_infra = y.kind != NodeKind::Ue;
            if (x.kind == NodeKind::Ue && y.kind == NodeKind::Ue)
                continue;
            if (x_infra && y_infra && (x.kind == NodeKind::Gnb) == (y.kind == NodeKind::Gnb))
                continue;
            add_link(x.id, y.id);
        }
    for (NodeId t : state_.riss())
    {
        RisState r;
        r.id = t;
        r.gnb = state_.node(t).cell;
        r.theta.assign(state_.node(t).panels.at(0).size(), cplx(1.0, 0.0));
        riss_.push_back(std::move(r));
    }
}

void Engine::add_link(NodeId x, NodeId y)
{
    const NodeId a = std::min(x, y), b = std::max(x, y);
    const auto &na = state_.node(a), &nb = state_.node(b);
    const bool same = na.cell == nb.cell;
    const auto cls = channel::classify_link(na, nb, same);
    Link l(a, b, cls, channel::RayChannel(cls, params_.fading, stream_seed(seed_, kFadingTag, a, b)));
    if (params_.shadowing)
        l.shadow.emplace(channel::default_shadowing(cls), stream_seed(seed_, kShadowTag, a, b));
    l.fading.set_geometry(na.position, nb.position);
    l.last_rel = nb.position - na.position;
    l.n_rays = l.fading.rays().size();
    l.phase.resize(static_cast<std::size_t>(n_prbs_) * l.n_rays);
    for (int k = 0; k < n_prbs_; ++k)
        for (std::size_t r = 0; r < l.n_rays; ++r)
            l.phase[static_cast<std::size_t>(k) * l.n_rays + r] = l.fading.delay_phase(r, k);
    l.gram = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(l.n_rays), static_cast<Eigen::Index>(l.n_rays));
    for (int k = 0; k < n_prbs_; ++k)
        for (std::size_t r = 0; r < l.n_rays; ++r)
            for (std::size_t s = 0; s < l.n_rays; ++s)
                l.gram(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(s)) +=
                    std::conj(l.phase[static_cast<std::size_t>(k) * l.n_rays + r]) *
                    l.phase[static_cast<std::size_t>(k) * l.n_rays + s];
    link_index_[a * id_span_ + b] = static_cast<int>(links_.size());
    links_.push_back(std::move(l));
}

bool Engine::has_link(NodeId x, NodeId y) const
{
    const NodeId a = std::min(x, y), b = std::max(x, y);
    return b < id_span_ && link_index_[a * id_span_ + b] >= 0;
}

Link &Engine::link(NodeId x, NodeId y)
{
    const NodeId a = std::min(x, y), b = std::max(x, y);
    if (b >= id_span_ || link_index_[a * id_span_ + b] < 0)
        throw std::logic_error("no channel between nodes " + std::to_string(x) + " and " + std::to_string(y));
    return links_[static_cast<std::size_t>(link_index_[a * id_span_ + b])];
}

double Engine::tx_power_mw(NodeId n) const
{
    const auto &node = state_.node(n);
    if (!node.tx_power_dbm)
        throw std::logic_error("node " + std::to_string(n) + " has no transmit power");
    return db_to_lin(*node.tx_power_dbm);
}

// ---- geometry -----------------------------------------------------------------------------------

void Engine::update_geometry()
{
    for (auto &l : links_)
        l.fading.set_geometry(state_.node(l.a).position, state_.node(l.b).position);
}

void Engine::refresh_epoch()
{
    for (auto &l : links_)
    {
        const auto &na = state_.node(l.a), &nb = state_.node(l.b);
        const Vec3 rel = nb.position - na.position;
        l.path_loss_db = channel::path_loss(l.cls, rel.norm(), params_.fc_ghz, na.height(), nb.height());
        if (l.shadow)
            l.shadow_db = l.shadow->advance((rel - l.last_rel).norm());
        l.last_rel = rel;
        l.amp = std::sqrt(db_to_lin(-(l.path_loss_db + l.shadow_db)));
        l.end[0] = LinkEnd{};
        l.end[1] = LinkEnd{};
        l.coeff_memo.clear();
    }
    beam_pairs_.clear();
    ris_beams_.clear();
    ris_ue_beams_.clear();
    for (auto &r : riss_)
        r.kernels.clear();
    stale_ = false;
}

const std::vector<antenna::BeamVector> &Engine::codebook(const antenna::ArrayGeometry &a)
{
    const auto key = std::make_pair(a.n_rows, a.n_cols);
    auto it = codebooks_.find(key);
    if (it != codebooks_.end())
        return it->second;
    std::vector<antenna::BeamVector> book;
    if (a.single_element())
        book.push_back({Eigen::VectorXcd::Ones(1), 0.0, 0.0});
    else
        book = antenna::make_codebook(a, params_.codebook_az, params_.codebook_el);
    return codebooks_.emplace(key, std::move(book)).first->second;
}

std::size_t Engine::beams_per_panel(const NodeDescriptor &n) const
{
    return n.panels.at(0).single_element() ? 1 : params_.codebook_az * params_.codebook_el;
}

void Engine::ensure_end(Link &l, int e)
{
    LinkEnd &end = l.end[e];
    if (end.valid)
        return;
    const auto &node = state_.node(e == 0 ? l.a : l.b);
    end.response.assign(node.panels.size(), {});
    end.sqrt_gain.assign(node.panels.size(), {});
    for (std::size_t p = 0; p < node.panels.size(); ++p)
        for (std::size_t r = 0; r < l.n_rays; ++r)
        {
            const Vec3 dir = e == 0 ? l.fading.direction_at_a(r) : l.fading.direction_at_b(r);
            end.response[p].push_back(antenna::array_response(node.panels[p], dir));
            end.sqrt_gain[p].push_back(std::sqrt(antenna::element_gain_linear(node.panels[p], dir)));
        }
    end.valid = true;
}

const std::vector<cplx> &Engine::projection(Link &l, int e, std::size_t flat_beam)
{
    ensure_end(l, e);
    LinkEnd &end = l.end[e];
    auto it = end.projection.find(flat_beam);
    if (it != end.projection.end())
        return it->second;
    const auto &node = state_.node(e == 0 ? l.a : l.b);
    const std::size_t per_panel = beams_per_panel(node);
    const std::size_t panel = flat_beam / per_panel, beam = flat_beam % per_panel;
    const auto &w = codebook(node.panels.at(panel)).at(beam).weights;
    std::vector<cplx> p(l.n_rays);
    for (std::size_t r = 0; r < l.n_rays; ++r)
        p[r] = end.sqrt_gain[panel][r] * end.response[panel][r].dot(w);
    return end.projection.emplace(flat_beam, std::move(p)).first->second;
}

const std::vector<cplx> &Engine::coefficients(Link &l, std::size_t beam_a, std::size_t beam_b)
{
    const std::uint64_t key = beam_key(beam_a, beam_b);
    auto it = l.coeff_memo.find(key);
    if (it != l.coeff_memo.end())
        return it->second;
    const auto &pa = projection(l, 0, beam_a);
    const auto &pb = projection(l, 1, beam_b);
    const auto &rays = l.fading.rays();
    std::vector<cplx> c(l.n_rays);
    for (std::size_t r = 0; r < l.n_rays; ++r)
        c[r] = l.amp * rays[r].alpha * pa[r] * std::conj(pb[r]);
    return l.coeff_memo.emplace(key, std::move(c)).first->second;
}

cplx Engine::gamma(Link &l, const std::vector<cplx> &c, int prb) const
{
    const cplx *e = &l.phase[static_cast<std::size_t>(prb) * l.n_rays];
    cplx g = 0.0;
    for (std::size_t r = 0; r < l.n_rays; ++r)
        g += c[r] * e[r];
    return g;
}

double Engine::wideband(Link &l, const std::vector<cplx> &c) const
{
    const Eigen::Map<const Eigen::VectorXcd> v(c.data(), static_cast<Eigen::Index>(c.size()));
    return std::real(v.dot(l.gram * v)) / n_prbs_;
}

double Engine::gain_sq(NodeId x, std::size_t bx, NodeId y, std::size_t by, int prb)
{
    Link &l = link(x, y);
    const auto &c = x == l.a ? coefficients(l, bx, by) : coefficients(l, by, bx);
    return std::norm(gamma(l, c, prb));
}

// ---- beams --------------------------------------------------------------------------------------

std::vector<std::size_t> Engine::allowed_beams(const NodeDescriptor &x, const NodeDescriptor &peer)
{
    const std::size_t per = beams_per_panel(x);
    std::vector<std::size_t> out;
    if (per == 1 && x.panels.size() == 1)
        return {0};
    std::size_t first_panel = 0, last_panel = x.panels.size();
    if (x.kind == NodeKind::IabNode || x.kind == NodeKind::Ncr)
    {
        if (peer.kind == NodeKind::Gnb)
            last_panel = 1;
        else
            first_panel = 1;
    }
    for (std::size_t p = first_panel; p < last_panel; ++p)
        for (std::size_t b = 0; b < per; ++b)
            out.push_back(p * per + b);
    return out;
}

std::pair<std::size_t, std::size_t> Engine::beam_pair(NodeId x, NodeId y)
{
    auto it = beam_pairs_.find({x, y});
    if (it != beam_pairs_.end())
        return it->second;
    Link &l = link(x, y);
    const auto &nx = state_.node(x), &ny = state_.node(y);
    const auto bx = allowed_beams(nx, ny), by = allowed_beams(ny, nx);
    std::pair<std::size_t, std::size_t> best{bx.front(), by.front()};
    double best_gain = -1.0;
    const auto &rays = l.fading.rays();
    std::vector<cplx> c(l.n_rays);
    for (std::size_t i : bx)
    {
        const auto &px = projection(l, x == l.a ? 0 : 1, i);
        for (std::size_t j : by)
        {
            const auto &py = projection(l, y == l.a ? 0 : 1, j);
            for (std::size_t r = 0; r < l.n_rays; ++r)
            {
                const cplx pa = x == l.a ? px[r] : py[r];
                const cplx pb = x == l.a ? py[r] : px[r];
                c[r] = l.amp * rays[r].alpha * pa * std::conj(pb);
            }
            const double g = wideband(l, c);
            if (g > best_gain)
            {
                best_gain = g;
                best = {i, j};
            }
        }
    }
    beam_pairs_[{x, y}] = best;
    beam_pairs_[{y, x}] = {best.second, best.first};
    return best;
}

std::size_t Engine::beam_towards_ris(NodeId gnb, NodeId ris_id)
{
    auto it = ris_beams_.find({gnb, ris_id});
    if (it != ris_beams_.end())
        return it->second;
    // Power delivered to the surface as a whole: incoherent over rays, RIS side unweighted.
    Link &l = link(gnb, ris_id);
    const int e = gnb == l.a ? 0 : 1;
    const auto &rays = l.fading.rays();
    std::size_t best = 0;
    double best_gain = -1.0;
    for (std::size_t b : allowed_beams(state_.node(gnb), state_.node(ris_id)))
    {
        const auto &p = projection(l, e, b);
        double g = 0.0;
        for (std::size_t r = 0; r < l.n_rays; ++r)
            g += std::norm(rays[r].alpha * p[r]);
        if (g > best_gain)
        {
            best_gain = g;
            best = b;
        }
    }
    ris_beams_[{gnb, ris_id}] = best;
    return best;
}

// ---- RIS ----------------------------------------------------------------------------------------

RisState &Engine::ris(NodeId id)
{
    for (auto &r : riss_)
        if (r.id == id)
            return r;
    throw std::logic_error("unknown RIS " + std::to_string(id));
}

Eigen::MatrixXcd Engine::kernel(NodeId ris_id, NodeId gnb, NodeId ue, const std::vector<cplx> &theta)
{
    Link &in = link(gnb, ris_id);
    Link &out = link(ue, ris_id);
    if (in.b != ris_id || out.b != ris_id)
        throw std::logic_error("RIS must be the higher-id endpoint of its links");
    ensure_end(in, 1);
    ensure_end(out, 1);
    Eigen::MatrixXcd K(static_cast<Eigen::Index>(out.n_rays), static_cast<Eigen::Index>(in.n_rays));
    const Eigen::Map<const Eigen::VectorXcd> th(theta.data(), static_cast<Eigen::Index>(theta.size()));
    for (std::size_t m = 0; m < out.n_rays; ++m)
    {
        const Eigen::VectorXcd w = out.end[1].response[0][m].cwiseProduct(th) * out.end[1].sqrt_gain[0][m];
        for (std::size_t l = 0; l < in.n_rays; ++l)
            K(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(l)) =
                (w.transpose() * in.end[1].response[0][l])(0) * in.end[1].sqrt_gain[0][l];
    }
    return K;
}

const Eigen::MatrixXcd &Engine::cached_kernel(RisState &r, NodeId gnb, NodeId ue)
{
    auto it = r.kernels.find({gnb, ue});
    if (it != r.kernels.end())
        return it->second;
    return r.kernels.emplace(std::make_pair(gnb, ue), kernel(r.id, gnb, ue, r.theta)).first->second;
}

cplx Engine::eta(NodeId gnb, std::size_t bg, NodeId ris_id, NodeId ue, const Eigen::MatrixXcd &K, int prb)
{
    Link &in = link(gnb, ris_id);
    Link &out = link(ue, ris_id);
    const auto &pg = projection(in, 0, bg);
    const auto &pu = projection(out, 0, 0);
    const auto &ri = in.fading.rays();
    const auto &ro = out.fading.rays();
    const cplx *ei = &in.phase[static_cast<std::size_t>(prb) * in.n_rays];
    const cplx *eo = &out.phase[static_cast<std::size_t>(prb) * out.n_rays];
    std::vector<cplx> x(in.n_rays);
    cplx total = 0.0;
    for (std::size_t l = 0; l < in.n_rays; ++l)
        x[l] = in.amp * ri[l].alpha * ei[l] * pg[l];
    for (std::size_t m = 0; m < out.n_rays; ++m)
    {
        cplx s = 0.0;
        for (std::size_t l = 0; l < in.n_rays; ++l)
            s += K(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(l)) * x[l];
        total += out.amp * ro[m].alpha * eo[m] * std::conj(pu[m]) * s;
    }
    return total;
}

double Engine::cascade_sq(NodeId gnb, std::size_t bg, NodeId ris_id, NodeId ue, int prb)
{
    RisState &r = ris(ris_id);
    return std::norm(eta(gnb, bg, ris_id, ue, cached_kernel(r, gnb, ue), prb));
}

void Engine::ris_vectors(NodeId gnb, std::size_t bg, NodeId ris_id, NodeId ue, int prb, std::vector<cplx> &a,
                         std::vector<cplx> &b)
{
    Link &in = link(gnb, ris_id);
    Link &out = link(ue, ris_id);
    ensure_end(in, 1);
    ensure_end(out, 1);
    const auto &pg = projection(in, 0, bg);
    const auto &pu = projection(out, 0, 0);
    const std::size_t n = state_.node(ris_id).panels.at(0).size();
    Eigen::VectorXcd va = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(n));
    Eigen::VectorXcd vb = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(n));
    for (std::size_t l = 0; l < in.n_rays; ++l)
        va += in.amp * in.fading.rays()[l].alpha * in.phase[static_cast<std::size_t>(prb) * in.n_rays + l] * pg[l] *
              in.end[1].sqrt_gain[0][l] * in.end[1].response[0][l];
    for (std::size_t m = 0; m < out.n_rays; ++m)
        vb += out.amp * out.fading.rays()[m].alpha * out.phase[static_cast<std::size_t>(prb) * out.n_rays + m] *
              std::conj(pu[m]) * out.end[1].sqrt_gain[0][m] * out.end[1].response[0][m];
    a.assign(va.data(), va.data() + va.size());
    b.assign(vb.data(), vb.data() + vb.size());
}

std::size_t Engine::choose_ris_gnb_beam(NodeId ue, NodeId ris_id, const std::vector<cplx> &theta,
                                        const Eigen::MatrixXcd *K, double *best_gain)
{
    const NodeId g = state_.node(ris_id).cell;
    Eigen::MatrixXcd own;
    if (!K)
    {
        own = kernel(ris_id, g, ue, theta);
        K = &own;
    }
    const std::size_t candidates[2] = {beam_pair(g, ue).first, beam_towards_ris(g, ris_id)};
    std::size_t best = candidates[0];
    double best_s = -1.0;
    Link &direct = link(g, ue);
    for (std::size_t bg : candidates)
    {
        const auto &c = g == direct.a ? coefficients(direct, bg, 0) : coefficients(direct, 0, bg);
        double s = 0.0;
        for (int k = 0; k < n_prbs_; ++k)
            s += std::norm(gamma(direct, c, k)) + std::norm(eta(g, bg, ris_id, ue, *K, k));
        if (s > best_s)
        {
            best_s = s;
            best = bg;
        }
    }
    if (best_gain)
        *best_gain = best_s / n_prbs_;
    return best;
}

void Engine::configure_ris()
{
    const int centre = n_prbs_ / 2;
    for (auto &r : riss_)
    {
        std::vector<NodeId> candidates;
        for (const auto &[ue, chain] : state_.associations)
            if (chain.kind == ChainKind::ViaRis && chain.relay == r.id)
                candidates.push_back(ue);
        if (candidates.empty())
            for (NodeId ue : state_.ues())
                if (state_.node(ue).cell == r.gnb)
                    candidates.push_back(ue);
        const std::size_t bg = beam_towards_ris(r.gnb, r.id);
        double best = -1.0;
        std::vector<cplx> a, b, best_a, best_b;
        for (NodeId ue : candidates)
        {
            ris_vectors(r.gnb, bg, r.id, ue, centre, a, b);
            double g = 0.0;
            for (std::size_t n = 0; n < a.size(); ++n)
                g += std::abs(a[n] * b[n]);
            if (g > best)
            {
                best = g;
                r.target = ue;
                best_a = a;
                best_b = b;
            }
        }
        if (!best_a.empty())
            r.theta = phy::optimize_theta(best_a, best_b, params_.ris_phase_bits).theta;
        r.kernels.clear();
    }
    ris_ue_beams_.clear();
}

std::size_t Engine::gnb_beam_for(NodeId ue)
{
    const auto &chain = state_.chain(ue);
    switch (chain.kind)
    {
    case ChainKind::ViaNcr: return beam_pair(chain.gnb, chain.relay).first;
    case ChainKind::ViaRis:
    {
        auto it = ris_ue_beams_.find(ue);
        if (it != ris_ue_beams_.end())
            return it->second;
        RisState &r = ris(chain.relay);
        const std::size_t b = choose_ris_gnb_beam(ue, r.id, r.theta, &cached_kernel(r, chain.gnb, ue), nullptr);
        ris_ue_beams_[ue] = b;
        return b;
    }
    default: return beam_pair(chain.gnb, ue).first;
    }
}

std::pair<std::size_t, std::size_t> Engine::plan_beams(const mac::PlannedTransmission &t)
{
    const bool dl = t.direction == Direction::Downlink;
    std::size_t infra_beam = 0;
    if (t.hop == mac::Hop::Direct)
        infra_beam = gnb_beam_for(t.ue);
    else if (t.hop == mac::Hop::Backhaul)
    {
        const NodeId iab = dl ? t.rx : t.tx, gnb = dl ? t.tx : t.rx;
        const auto bp = beam_pair(gnb, iab);
        return dl ? bp : std::make_pair(bp.second, bp.first);
    }
    else
        infra_beam = beam_pair(dl ? t.tx : t.rx, t.ue).first;
    return dl ? std::make_pair(infra_beam, std::size_t{0}) : std::make_pair(std::size_t{0}, infra_beam);
}

// ---- association --------------------------------------------------------------------------------

double Engine::chain_power_dbm(NodeId ue, const ServingChain &chain)
{
    double mean_gain = 0.0; // mean per-PRB power gain
    double p_total = 0.0;
    switch (chain.kind)
    {
    case ChainKind::Direct:
    {
        const auto bp = beam_pair(chain.gnb, ue);
        Link &l = link(chain.gnb, ue);
        mean_gain = wideband(l, chain.gnb == l.a ? coefficients(l, bp.first, bp.second)
                                                 : coefficients(l, bp.second, bp.first));
        p_total = tx_power_mw(chain.gnb);
        break;
    }
    case ChainKind::ViaIab:
    {
        const auto bp = beam_pair(chain.relay, ue);
        Link &l = link(chain.relay, ue);
        mean_gain = wideband(l, chain.relay == l.a ? coefficients(l, bp.first, bp.second)
                                                   : coefficients(l, bp.second, bp.first));
        p_total = tx_power_mw(chain.relay);
        break;
    }
    case ChainKind::ViaNcr:
    {
        const NodeId b = chain.gnb, s = chain.relay;
        const auto bh = beam_pair(b, s);
        const std::size_t acc = beam_pair(s, ue).first;
        p_total = tx_power_mw(b);
        const double p = p_total / n_prbs_;
        const double g = db_to_lin(params_.ncr_gain_db);
        const double p_max = tx_power_mw(s) / n_prbs_;
        double sum = 0.0;
        for (int k = 0; k < n_prbs_; ++k)
        {
            const double in = gain_sq(b, bh.first, s, bh.second, k);
            const double g_eff = params_.ncr_output_cap ? std::min(g, p_max / (p * in + noise_mw_)) : g;
            sum += gain_sq(b, bh.first, ue, 0, k) + in * g_eff * gain_sq(s, acc, ue, 0, k);
        }
        mean_gain = sum / n_prbs_;
        break;
    }
    case ChainKind::ViaRis:
    {
        std::vector<cplx> a, b;
        ris_vectors(chain.gnb, beam_towards_ris(chain.gnb, chain.relay), chain.relay, ue, n_prbs_ / 2, a, b);
        const auto theta = phy::optimize_theta(a, b, params_.ris_phase_bits).theta;
        choose_ris_gnb_beam(ue, chain.relay, theta, nullptr, &mean_gain);
        p_total = tx_power_mw(chain.gnb);
        break;
    }
    }
    return lin_to_db(p_total * mean_gain);
}

void Engine::associate()
{
    state_ = scenario::associate_ues(
        state_, [this](const ScenarioState &, NodeId ue, const ServingChain &c) { return chain_power_dbm(ue, c); },
        params_.association_floor_dbm);
    for (const auto &[ue, chain] : state_.associations)
        spdlog::debug("UE {} -> {} via {} (gNB {})", ue, scenario::to_string(chain.kind),
                      chain.relay == kNoNode ? -1 : static_cast<int>(chain.relay), chain.gnb);
}

mac::Topology Engine::topology() const
{
    mac::Topology t;
    t.gnbs = state_.gnbs();
    for (NodeId r : state_.iab_nodes())
        t.iab_donor[r] = state_.node(r).cell;
    t.chains = state_.associations;
    return t;
}

// ---- PHY evaluation -----------------------------------------------------------------------------

std::vector<std::vector<double>> Engine::evaluate(std::uint64_t slot, const std::vector<mac::PlannedTransmission> &plan)
{
    (void)slot;
    const std::size_t n = plan.size();
    const bool dl = !plan.empty() && plan.front().direction == Direction::Downlink;

    std::map<NodeId, int> prb_count;
    std::set<NodeId> txs, rxs;
    for (const auto &t : plan)
    {
        prb_count[t.tx] += static_cast<int>(t.prbs.size());
        txs.insert(t.tx);
        rxs.insert(t.rx);
    }
    for (NodeId x : txs)
        if (rxs.contains(x))
        {
            ++half_duplex_violations_;
            break;
        }

    std::vector<double> power(n);
    std::vector<std::pair<std::size_t, std::size_t>> beams(n);
    std::vector<std::vector<int>> on(static_cast<std::size_t>(n_prbs_));
    std::map<NodeId, int> ncr_prbs;
    for (std::size_t i = 0; i < n; ++i)
    {
        power[i] = tx_power_mw(plan[i].tx) / prb_count[plan[i].tx];
        beams[i] = plan_beams(plan[i]);
        for (int k : plan[i].prbs)
            on[static_cast<std::size_t>(k)].push_back(static_cast<int>(i));
        if (plan[i].chain == ChainKind::ViaNcr && plan[i].hop == mac::Hop::Direct)
            ncr_prbs[plan[i].relay] += static_cast<int>(plan[i].prbs.size());
    }

    const bool has_ncr = !state_.ncrs().empty();
    const bool has_ris = !riss_.empty();
    const auto ris_ids = state_.riss();
    const double g_nominal = db_to_lin(params_.ncr_gain_db);

    std::vector<std::vector<double>> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i].resize(plan[i].prbs.size());

    std::vector<std::pair<NodeId, std::size_t>> tx_beams;
    std::vector<NcrPrbState> ncrs;
    for (int k = 0; k < n_prbs_; ++k)
    {
        const auto &active = on[static_cast<std::size_t>(k)];
        if (active.empty())
            continue;
        tx_beams.clear();
        ncrs.clear();
        phy::PrbView view;
        view.prb = k;
        view.noise_mw = noise_mw_;
        view.riss = ris_ids;
        for (int i : active)
        {
            tx_beams.emplace_back(plan[static_cast<std::size_t>(i)].tx, beams[static_cast<std::size_t>(i)].first);
            view.transmissions.push_back({plan[static_cast<std::size_t>(i)].tx, power[static_cast<std::size_t>(i)]});
        }
        for (int i : active)
        {
            const auto &t = plan[static_cast<std::size_t>(i)];
            if (t.chain != ChainKind::ViaNcr || t.hop != mac::Hop::Direct)
                continue;
            const NodeId s = t.relay;
            const auto bh = beam_pair(ncr_donor(s), s).second;
            const auto acc = beam_pair(s, t.ue).first;
            NcrPrbState st{s, dl ? bh : acc, dl ? acc : bh, g_nominal};
            if (params_.ncr_output_cap)
            {
                double p_in = noise_mw_;
                for (std::size_t j = 0; j < active.size(); ++j)
                    p_in += view.transmissions[j].power_mw * gain_sq(tx_beams[j].first, tx_beams[j].second, s, st.in_beam, k);
                const double p_max = tx_power_mw(s) / ncr_prbs[s];
                st.gain = std::min(g_nominal, p_max / p_in);
            }
            ncrs.push_back(st);
        }
        for (const auto &s : ncrs)
            view.ncrs.push_back({s.id, s.gain});

        PrbOracle oracle(*this, k, tx_beams, ncrs);
        view.gains = &oracle;
        for (int i : active)
        {
            const auto &t = plan[static_cast<std::size_t>(i)];
            oracle.set_receiver(t.rx, beams[static_cast<std::size_t>(i)].second);
            phy::SinrBreakdown s;
            if (t.hop != mac::Hop::Direct)
                s = phy::sinr_iab(t.rx, t.tx, view);
            else if (has_ncr)
                s = phy::sinr_ncr(t.rx, t.chain == ChainKind::ViaNcr ? t.relay : kNoNode, t.tx, view);
            else if (has_ris)
                s = phy::sinr_ris(t.rx, t.chain == ChainKind::ViaRis ? t.relay : kNoNode, t.tx, view);
            else
                s = phy::sinr_direct(t.rx, t.tx, view);
            out[static_cast<std::size_t>(i)][static_cast<std::size_t>(k - t.prbs.front())] = s.rho;
        }
    }
    return out;
}

// ---- run loop -----------------------------------------------------------------------------------

void Engine::dump_channels(std::ostream &out, std::uint64_t slot)
{
    for (std::size_t li = 0; li < links_.size(); ++li)
    {
        Link &l = links_[li];
        const auto &na = state_.node(l.a), &nb = state_.node(l.b);
        for (int k = 0; k < n_prbs_; ++k)
        {
            const Eigen::MatrixXcd H = l.fading.matrix(na.panels.at(0), nb.panels.at(0), k);
            const double h2 = H.squaredNorm() / static_cast<double>(H.size());
            out << slot << ',' << l.a << '-' << l.b << ',' << k << ',' << (l.path_loss_db + l.shadow_db) << ',' << h2
                << '\n';
        }
    }
}

RunResult Engine::run(std::uint64_t n_slots, std::ostream *channel_trace)
{
    if (n_slots == 0)
        throw std::invalid_argument("n_slots must be >= 1");
    RunResult result;
    result.deployment = state_.kind;
    result.seed = seed_;
    result.n_slots = n_slots;
    const double dt = params_.mac.pattern.slot_duration_s;
    result.duration_s = static_cast<double>(n_slots) * dt;
    if (channel_trace)
        *channel_trace << "slot,link_id,prb,loss_dB,h2\n";

    for (std::uint64_t slot = 0; slot < n_slots; ++slot)
    {
        const bool epoch = slot % static_cast<std::uint64_t>(params_.geometry_epoch_slots) == 0;
        if (epoch)
            refresh_epoch();
        const bool reassociate = slot == 0 || (params_.reassociation_slots > 0 &&
                                               slot % static_cast<std::uint64_t>(params_.reassociation_slots) == 0);
        if (reassociate)
        {
            associate();
            if (!mac_)
                mac_ = std::make_unique<mac::MacRunner>(topology(), params_.mac, seed_);
            else
                mac_->update_chains(state_.associations);
        }
        if (epoch || reassociate)
            configure_ris();
        if (epoch && channel_trace)
            dump_channels(*channel_trace, slot);

        for (auto &l : links_)
            l.coeff_memo.clear();
        auto records = mac_->run_slot(slot, *this);
        result.trace.insert(result.trace.end(), records.begin(), records.end());

        state_ = scenario::step_mobility(state_, dt);
        update_geometry();
        stale_ = true;
        for (auto &l : links_)
            l.fading.advance_slot();
    }
    result.associations = state_.associations;
    result.deliveries = mac_->deliveries();
    result.half_duplex_violations = half_duplex_violations_;
    for (NodeId ue : state_.ues())
        for (auto &m : result.ue_throughput_bps)
            m[ue] = 0.0;
    summarise(result, dt, params_.throughput_window_s);
    return result;
}

// ---- public wrappers ----------------------------------------------------------------------------

Simulator::Simulator(ScenarioState state, SimParams params, std::uint64_t seed)
    : engine_(std::make_unique<Engine>(std::move(state), std::move(params), seed))
{
}

Simulator::~Simulator() = default;

RunResult Simulator::run(std::uint64_t n_slots, std::ostream *channel_trace)
{
    return engine_->run(n_slots, channel_trace);
}

double Simulator::chain_power_dbm(NodeId ue, const ServingChain &chain)
{
    engine_->ensure_fresh();
    return engine_->chain_power_dbm(ue, chain);
}

cplx Simulator::beamformed_gain(NodeId tx, std::size_t tx_beam, NodeId rx, std::size_t rx_beam, int prb)
{
    return engine_->beamformed_gain(tx, tx_beam, rx, rx_beam, prb);
}

double Simulator::large_scale_loss_db(NodeId x, NodeId y) { return engine_->large_scale_loss_db(x, y); }

const ScenarioState &Simulator::state() const { return engine_->state(); }

RunResult run_deployment(scenario::DeploymentKind kind, const scenario::GridGeometry &geometry,
                         const scenario::ScenarioParams &scenario_params, const SimParams &params, std::uint64_t seed,
                         std::uint64_t n_slots, const std::vector<scenario::NodeRecord> &layout)
{
    Simulator sim(scenario::build_scenario(kind, geometry, scenario_params, layout), params, seed);
    return sim.run(n_slots);
}

void summarise(RunResult &result, double slot_duration_s, double window_s)
{
    for (auto &v : result.sinr_db)
        v.clear();
    for (auto &v : result.throughput_samples_mbps)
        v.clear();
    for (const auto &tb : result.trace)
        if (tb.ue_link())
            result.sinr_db[tb.direction == Direction::Downlink ? 0 : 1].push_back(tb.sinr_db);

    std::set<NodeId> ues;
    for (const auto &[ue, c] : result.associations)
        ues.insert(ue);
    for (const auto &m : result.ue_throughput_bps)
        for (const auto &[ue, v] : m)
            ues.insert(ue);

    const double duration = static_cast<double>(result.n_slots) * slot_duration_s;
    auto window_slots = static_cast<std::uint64_t>(std::llround(window_s / slot_duration_s));
    if (window_slots == 0 || window_slots > result.n_slots)
        window_slots = result.n_slots;
    const std::uint64_t n_windows = result.n_slots / window_slots;
    const double window_len = static_cast<double>(window_slots) * slot_duration_s;

    for (int d = 0; d < 2; ++d)
    {
        const Direction dir = d == 0 ? Direction::Downlink : Direction::Uplink;
        std::map<NodeId, double> bits;
        std::map<NodeId, std::vector<double>> per_window;
        for (NodeId ue : ues)
        {
            bits[ue] = 0.0;
            per_window[ue].assign(n_windows, 0.0);
        }
        for (const auto &dl : result.deliveries)
        {
            if (dl.direction != dir)
                continue;
            bits[dl.ue] += static_cast<double>(dl.bits);
            const std::uint64_t w = dl.slot / window_slots;
            if (w < n_windows)
                per_window[dl.ue][w] += static_cast<double>(dl.bits);
        }
        std::vector<double> tputs;
        for (const auto &[ue, b] : bits)
        {
            result.ue_throughput_bps[static_cast<std::size_t>(d)][ue] = b / duration;
            tputs.push_back(b / duration);
            for (double wb : per_window[ue])
                result.throughput_samples_mbps[static_cast<std::size_t>(d)].push_back(wb / window_len / 1e6);
        }
        const bool any = std::any_of(tputs.begin(), tputs.end(), [](double v) { return v > 0.0; });
        result.jain[static_cast<std::size_t>(d)] = any ? metrics::jain(tputs) : 0.0;
    }
}

} // namespace densim::sim
