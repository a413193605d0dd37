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

#include "densim/phy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace densim::phy
{

double noise_power_prb(double density_dbm_hz, int n_subcarriers, double scs_hz, double noise_figure_db)
{
    if (n_subcarriers <= 0 || !(scs_hz > 0.0))
        throw std::invalid_argument("noise_power_prb: bandwidth must be positive");
    return db_to_lin(density_dbm_hz + 10.0 * std::log10(n_subcarriers * scs_hz) + noise_figure_db);
}

LinkGain effective_gain(const Eigen::MatrixXcd &H, const Eigen::VectorXcd &f, const Eigen::VectorXcd &d)
{
    if (H.cols() != f.size() || H.rows() != d.size())
        throw std::invalid_argument("effective_gain: beam dimensions do not match H");
    return {d.dot(H * f), std::nullopt};
}

LinkGain effective_gain(const Eigen::MatrixXcd &H, const antenna::BeamVector &f, const antenna::BeamVector &d)
{
    return effective_gain(H, f.weights, d.weights);
}

cplx cascade_gain(const Eigen::MatrixXcd &H1, const std::vector<cplx> &theta, const Eigen::MatrixXcd &H2,
                  const Eigen::VectorXcd &f, const Eigen::VectorXcd &d)
{
    if (H1.rows() != static_cast<Eigen::Index>(theta.size()) || H2.cols() != H1.rows() || H1.cols() != f.size() ||
        H2.rows() != d.size())
        throw std::invalid_argument("cascade_gain: dimension mismatch");
    Eigen::VectorXcd incident = H1 * f;
    for (Eigen::Index n = 0; n < incident.size(); ++n)
        incident(n) *= theta[static_cast<std::size_t>(n)];
    return d.dot(H2 * incident);
}

double NcrConfig::gain_linear(int prb) const
{
    if (!powered_on)
        return 0.0;
    if (prb >= 0 && static_cast<std::size_t>(prb) < per_prb_gain.size())
        return std::max(0.0, per_prb_gain[static_cast<std::size_t>(prb)]);
    return db_to_lin(gain_db);
}

cplx reflected_gain(const std::vector<cplx> &a, const std::vector<cplx> &b, const std::vector<cplx> &theta)
{
    if (a.size() != b.size() || a.size() != theta.size())
        throw std::invalid_argument("reflected_gain: length mismatch");
    cplx s = 0.0;
    for (std::size_t n = 0; n < a.size(); ++n)
        s += b[n] * theta[n] * a[n];
    return s;
}

RisConfig optimize_theta(const std::vector<cplx> &a, const std::vector<cplx> &b, std::optional<int> phase_bits)
{
    if (a.empty())
        throw std::invalid_argument("optimize_theta: zero-length element vectors");
    if (a.size() != b.size())
        throw std::invalid_argument("optimize_theta: incident and outgoing vectors differ in length");
    const std::size_t n = a.size();
    std::vector<double> align(n);
    for (std::size_t i = 0; i < n; ++i)
        align[i] = -(std::arg(a[i]) + std::arg(b[i]));

    RisConfig cfg;
    cfg.phase_bits = phase_bits;
    if (!phase_bits)
    {
        for (double p : align)
            cfg.theta.push_back(std::polar(1.0, p));
        return cfg;
    }
    if (*phase_bits < 1 || *phase_bits > 16)
        throw std::invalid_argument("optimize_theta: phase_bits must be in [1, 16]");

    const double two_pi = 2.0 * std::numbers::pi;
    const int levels = 1 << *phase_bits;
    const double step = two_pi / levels;
    auto quantize = [&](double psi)
    {
        std::vector<cplx> t(n);
        for (std::size_t i = 0; i < n; ++i)
        {
            const double q = std::round((align[i] + psi) / step);
            t[i] = std::polar(1.0, q * step);
        }
        return t;
    };

    // The optimum rounds every aligned phase relative to a common reference psi; the rounding only
    // changes where some element crosses a decision boundary, so one psi per arc suffices.
    std::vector<double> edges;
    edges.reserve(n * static_cast<std::size_t>(levels));
    for (std::size_t i = 0; i < n; ++i)
        for (int j = 0; j < levels; ++j)
        {
            double e = std::fmod((j + 0.5) * step - align[i], two_pi);
            if (e < 0.0)
                e += two_pi;
            edges.push_back(e);
        }
    std::sort(edges.begin(), edges.end());
    double best = -1.0;
    for (std::size_t i = 0; i < edges.size(); ++i)
    {
        const double lo = edges[i];
        const double hi = i + 1 < edges.size() ? edges[i + 1] : edges.front() + two_pi;
        if (hi - lo <= 0.0)
            continue;
        auto t = quantize(0.5 * (lo + hi));
        const double g = std::abs(reflected_gain(a, b, t));
        if (g > best)
        {
            best = g;
            cfg.theta = std::move(t);
        }
    }
    if (cfg.theta.empty())
        cfg.theta = quantize(0.0);
    return cfg;
}

std::string_view to_string(Architecture a)
{
    switch (a)
    {
    case Architecture::Direct: return "direct";
    case Architecture::Iab: return "iab";
    case Architecture::Ncr: return "ncr";
    case Architecture::Ris: return "ris";
    }
    return "?";
}

namespace
{
const ActiveTransmission &find_tx(const PrbView &view, NodeId tx)
{
    for (const auto &t : view.transmissions)
        if (t.tx == tx)
            return t;
    throw std::invalid_argument("sinr: serving transmitter " + std::to_string(tx) + " is not active on PRB " +
                                std::to_string(view.prb));
}

void require_oracle(const PrbView &view)
{
    if (!view.gains)
        throw std::invalid_argument("sinr: PRB view without gain oracle");
}

SinrBreakdown finish(double S, double I, double N, Architecture arch)
{
    return {S, I, N, S / (I + N), arch};
}

SinrBreakdown point_to_point(NodeId rx, NodeId serving_tx, const PrbView &view, Architecture arch)
{
    require_oracle(view);
    const auto &g = *view.gains;
    const auto &own = find_tx(view, serving_tx);
    const double S = own.power_mw * g.direct(serving_tx, rx);
    double I = 0.0;
    for (const auto &t : view.transmissions)
        if (t.tx != serving_tx && t.tx != rx)
            I += t.power_mw * g.direct(t.tx, rx);
    return finish(S, I, view.noise_mw, arch);
}
} // namespace

SinrBreakdown sinr_direct(NodeId rx, NodeId serving_tx, const PrbView &view)
{
    return point_to_point(rx, serving_tx, view, Architecture::Direct);
}

SinrBreakdown sinr_iab(NodeId rx, NodeId serving_tx, const PrbView &view)
{
    return point_to_point(rx, serving_tx, view, Architecture::Iab);
}

SinrBreakdown sinr_ncr(NodeId rx, NodeId serving_ncr, NodeId serving_tx, const PrbView &view)
{
    require_oracle(view);
    const auto &g = *view.gains;
    const auto &own = find_tx(view, serving_tx);
    const double sigma2 = view.noise_mw;

    double g_serv = 0.0;
    for (const auto &s : view.ncrs)
        if (s.id == serving_ncr)
            g_serv = s.gain_linear;

    double S = own.power_mw * g.direct(serving_tx, rx);
    double amplified_noise = 0.0;
    if (g_serv > 0.0)
    {
        const double out = g.relay_out(serving_ncr, rx);
        S += own.power_mw * g.relay_in(serving_tx, serving_ncr) * g_serv * out;
        amplified_noise = sigma2 * out * g_serv;
    }

    double I = 0.0;
    for (const auto &t : view.transmissions)
    {
        if (t.tx == serving_tx || t.tx == rx)
            continue;
        I += t.power_mw * g.direct(t.tx, rx);
        for (const auto &s : view.ncrs)
            if (s.gain_linear > 0.0 && s.id != t.tx)
                I += t.power_mw * g.relay_in(t.tx, s.id) * s.gain_linear * g.relay_out(s.id, rx);
    }
    for (const auto &s : view.ncrs)
        if (s.id != serving_ncr && s.gain_linear > 0.0)
            I += sigma2 * g.relay_out(s.id, rx) * s.gain_linear;

    return finish(S, I, sigma2 + amplified_noise, Architecture::Ncr);
}

SinrBreakdown sinr_ris(NodeId rx, NodeId serving_ris, NodeId serving_tx, const PrbView &view)
{
    require_oracle(view);
    if (serving_ris != kNoNode && std::find(view.riss.begin(), view.riss.end(), serving_ris) == view.riss.end())
        throw std::invalid_argument("sinr_ris: RIS " + std::to_string(serving_ris) + " has no configuration");
    const auto &g = *view.gains;
    const auto &own = find_tx(view, serving_tx);
    const double reflected = serving_ris == kNoNode ? 0.0 : g.cascade(serving_tx, serving_ris, rx);
    const double S = own.power_mw * (g.direct(serving_tx, rx) + reflected);
    double I = 0.0;
    for (const auto &t : view.transmissions)
    {
        if (t.tx == serving_tx || t.tx == rx)
            continue;
        double through = 0.0;
        for (NodeId r : view.riss)
            through += g.cascade(t.tx, r, rx);
        I += t.power_mw * (g.direct(t.tx, rx) + through);
    }
    return finish(S, I, view.noise_mw, Architecture::Ris);
}

} // namespace densim::phy
