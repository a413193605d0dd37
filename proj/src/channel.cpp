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

#include "densim/channel.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace densim::channel
{

using scenario::NodeDescriptor;
using scenario::NodeKind;

EndpointRole endpoint_role(const NodeDescriptor &node)
{
    switch (node.kind)
    {
    case NodeKind::Gnb: return EndpointRole::Gnb;
    case NodeKind::Ue: return EndpointRole::Ue;
    default: return node.mounted_on_uav ? EndpointRole::UavAux : EndpointRole::StationaryAux;
    }
}

namespace
{
const char *role_name(EndpointRole r)
{
    switch (r)
    {
    case EndpointRole::Gnb: return "gNB";
    case EndpointRole::StationaryAux: return "aux";
    case EndpointRole::UavAux: return "uav";
    case EndpointRole::Ue: return "UE";
    }
    return "?";
}
} // namespace

std::string to_string(const LinkClass &c)
{
    return std::string(role_name(c.a)) + "-" + role_name(c.b) + (c.same_cell ? " same-cell " : " other-cell ") +
           (c.environment == Environment::UMa ? "UMa " : "UMi ") + (c.los() ? "LOS" : "NLOS");
}

LinkClass classify_roles(EndpointRole a, EndpointRole b, bool same_cell)
{
    if (b < a)
        std::swap(a, b);
    using R = EndpointRole;
    auto make = [&](Environment env, Visibility vis) { return LinkClass{a, b, same_cell, env, vis}; };
    const Visibility cell_dependent = same_cell ? Visibility::Los : Visibility::Nlos;

    if (a == R::Gnb && b == R::Ue)
        return make(Environment::UMa, Visibility::Nlos);
    if (a == R::Gnb && b == R::StationaryAux)
        return make(Environment::UMa, cell_dependent);
    if (a == R::Gnb && b == R::UavAux)
        return make(Environment::UMa, Visibility::Los);
    if (a == R::StationaryAux && b == R::Ue)
        return make(Environment::UMi, cell_dependent);
    if (a == R::UavAux && b == R::Ue)
        return make(Environment::UMi, Visibility::Los);
    if (a == R::Ue && b == R::Ue)
        return make(Environment::UMi, cell_dependent);
    throw std::invalid_argument(std::string("classify_link: unknown kind pair ") + role_name(a) + "-" + role_name(b));
}

LinkClass classify_link(const NodeDescriptor &a, const NodeDescriptor &b, bool same_cell)
{
    return classify_roles(endpoint_role(a), endpoint_role(b), same_cell);
}

double breakpoint_distance(Environment env, double fc_ghz, double h_tx, double h_rx)
{
    (void)env;
    const double h_bs = std::max(h_tx, h_rx) - 1.0;
    const double h_ut = std::min(h_tx, h_rx) - 1.0;
    return 4.0 * std::max(h_bs, 0.0) * std::max(h_ut, 0.0) * fc_ghz * 1e9 / kSpeedOfLight;
}

double path_loss(const LinkClass &c, double d3d, double fc_ghz, double h_tx, double h_rx)
{
    if (!(fc_ghz >= 0.5 && fc_ghz <= 100.0))
        throw std::invalid_argument("path_loss: carrier frequency outside [0.5, 100] GHz");
    if (!(d3d >= 1.0))
    {
        spdlog::warn("path_loss: distance {:.3f} m below 1 m, clamped", d3d);
        d3d = 1.0;
    }
    const double h_bs = std::max(h_tx, h_rx);
    const double h_ut = std::min(h_tx, h_rx);
    const double dh = h_bs - h_ut;
    const double d2d = std::sqrt(std::max(d3d * d3d - dh * dh, 0.0));
    const double d_bp = breakpoint_distance(c.environment, fc_ghz, h_tx, h_rx);
    const double lf = 20.0 * std::log10(fc_ghz);
    const double ld = std::log10(d3d);

    if (c.environment == Environment::UMa)
    {
        const double los = d2d <= d_bp ? 28.0 + 22.0 * ld + lf
                                        : 28.0 + 40.0 * ld + lf - 9.0 * std::log10(d_bp * d_bp + dh * dh);
        if (c.los())
            return los;
        return std::max(los, 13.54 + 39.08 * ld + lf - 0.6 * (h_ut - 1.5));
    }
    const double los = d2d <= d_bp ? 32.4 + 21.0 * ld + lf
                                    : 32.4 + 40.0 * ld + lf - 9.5 * std::log10(d_bp * d_bp + dh * dh);
    if (c.los())
        return los;
    return std::max(los, 35.3 * ld + 22.4 + 21.3 * std::log10(fc_ghz) - 0.3 * (h_ut - 1.5));
}

ShadowingParams default_shadowing(const LinkClass &c)
{
    if (c.environment == Environment::UMa)
        return {c.los() ? 4.0 : 6.0, 37.0};
    return {c.los() ? 4.0 : 7.82, 10.0};
}

ShadowingProcess::ShadowingProcess(ShadowingParams params, std::uint64_t seed) : params_(params), rng_(seed)
{
    if (params_.correlation_distance_m <= 0.0)
        throw std::invalid_argument("shadowing: correlation distance must be positive");
    value_ = params_.sigma_db * normal_(rng_);
}

double ShadowingProcess::advance(double moved_m)
{
    if (moved_m <= 0.0 || params_.sigma_db == 0.0)
        return value_;
    const double rho = std::exp(-moved_m / params_.correlation_distance_m);
    value_ = rho * value_ + params_.sigma_db * std::sqrt(1.0 - rho * rho) * normal_(rng_);
    return value_;
}

double sample_shadowing(const LinkClass &, std::uint64_t seed, const ShadowingParams &params)
{
    return ShadowingProcess(params, seed).value_db();
}

double sample_shadowing(const LinkClass &c, std::uint64_t seed)
{
    return sample_shadowing(c, seed, default_shadowing(c));
}

double delay_spread(const LinkClass &c, double fc_ghz)
{
    // Median delay spreads of the standard's UMa/UMi parameter tables.
    const double lf = std::log10(fc_ghz);
    if (c.environment == Environment::UMa)
        return c.los() ? std::pow(10.0, -6.955 - 0.0963 * lf) : std::pow(10.0, -6.28 - 0.204 * lf);
    return c.los() ? std::pow(10.0, -0.24 * std::log10(1.0 + fc_ghz) - 7.14)
                   : std::pow(10.0, -0.24 * std::log10(1.0 + fc_ghz) - 6.83);
}

// ---- RayChannel ---------------------------------------------------------------------------------

namespace
{
cplx complex_normal(std::mt19937_64 &rng)
{
    std::normal_distribution<double> n(0.0, std::sqrt(0.5));
    const double re = n(rng);
    return {re, n(rng)};
}

Vec3 rotate(const Vec3 &u, double daz_deg, double del_deg)
{
    const double az = std::atan2(u.y, u.x) + deg2rad(daz_deg);
    const double el = std::clamp(std::asin(std::clamp(u.z, -1.0, 1.0)) + deg2rad(del_deg), deg2rad(-89.9), deg2rad(89.9));
    return {std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el)};
}
} // namespace

RayChannel::RayChannel(const LinkClass &c, const FadingParams &params, std::uint64_t seed)
    : class_(c), params_(params), rng_(seed)
{
    if (params_.n_nlos_rays < 0 || params_.n_prbs <= 0)
        throw std::invalid_argument("RayChannel: invalid ray or PRB count");
    const bool with_los = params_.pure_los || c.los();
    const int n_nlos = params_.pure_los ? 0 : params_.n_nlos_rays;
    double los_power = 0.0;
    if (with_los)
    {
        const double k = db_to_lin(params_.k_factor_db);
        los_power = n_nlos == 0 ? 1.0 : k / (k + 1.0);
    }
    los_amplitude_ = std::sqrt(los_power);
    nlos_power_ = n_nlos > 0 ? (1.0 - los_power) / n_nlos : 0.0;

    if (with_los)
    {
        Ray r;
        r.los = true;
        r.alpha = los_amplitude_;
        rays_.push_back(r);
    }
    const double ds = delay_spread(c, params_.fc_ghz);
    std::exponential_distribution<double> delay(1.0 / ds);
    std::normal_distribution<double> unit(0.0, 1.0);
    for (int l = 0; l < n_nlos; ++l)
    {
        Ray r;
        r.delay_s = delay(rng_);
        // Store unit-variance offsets; spreads are applied per endpoint in set_geometry.
        r.az_off_a = unit(rng_);
        r.el_off_a = unit(rng_);
        r.az_off_b = unit(rng_);
        r.el_off_b = unit(rng_);
        const cplx s = complex_normal(rng_);
        nlos_state_.push_back(s);
        r.alpha = std::sqrt(nlos_power_) * s;
        rays_.push_back(r);
    }
}

void RayChannel::set_geometry(const Vec3 &pos_a, const Vec3 &pos_b)
{
    pos_a_ = pos_a;
    pos_b_ = pos_b;
    a_is_higher_ = pos_a.z >= pos_b.z;
    if (!rays_.empty() && rays_.front().los)
    {
        const double lambda = kSpeedOfLight / (params_.fc_ghz * 1e9);
        const double d = (pos_b - pos_a).norm();
        rays_.front().alpha = std::polar(los_amplitude_, -2.0 * std::numbers::pi * std::fmod(d / lambda, 1.0));
    }
}

void RayChannel::advance_slot()
{
    const double rho = params_.temporal_correlation;
    const double innov = std::sqrt(std::max(0.0, 1.0 - rho * rho));
    std::size_t j = 0;
    for (auto &r : rays_)
    {
        if (r.los)
            continue;
        nlos_state_[j] = rho * nlos_state_[j] + innov * complex_normal(rng_);
        r.alpha = std::sqrt(nlos_power_) * nlos_state_[j];
        ++j;
    }
}

Vec3 RayChannel::direction_at_a(std::size_t l) const
{
    Vec3 u = pos_b_ - pos_a_;
    const double n = u.norm();
    u = n > 0.0 ? u * (1.0 / n) : Vec3{1.0, 0.0, 0.0};
    const Ray &r = rays_.at(l);
    if (r.los)
        return u;
    const double saz = a_is_higher_ ? params_.az_spread_high_deg : params_.az_spread_low_deg;
    const double sel = a_is_higher_ ? params_.el_spread_high_deg : params_.el_spread_low_deg;
    return rotate(u, saz * r.az_off_a, sel * r.el_off_a);
}

Vec3 RayChannel::direction_at_b(std::size_t l) const
{
    Vec3 u = pos_a_ - pos_b_;
    const double n = u.norm();
    u = n > 0.0 ? u * (1.0 / n) : Vec3{-1.0, 0.0, 0.0};
    const Ray &r = rays_.at(l);
    if (r.los)
        return u;
    const bool b_higher = !a_is_higher_ || pos_a_.z == pos_b_.z;
    const double saz = b_higher ? params_.az_spread_high_deg : params_.az_spread_low_deg;
    const double sel = b_higher ? params_.el_spread_high_deg : params_.el_spread_low_deg;
    return rotate(u, saz * r.az_off_b, sel * r.el_off_b);
}

double RayChannel::prb_frequency(int prb) const
{
    return (static_cast<double>(prb) - 0.5 * static_cast<double>(params_.n_prbs - 1)) * params_.prb_bandwidth_hz;
}

cplx RayChannel::delay_phase(std::size_t l, int prb) const
{
    return std::polar(1.0, -2.0 * std::numbers::pi * prb_frequency(prb) * rays_[l].delay_s);
}

Eigen::MatrixXcd RayChannel::matrix(const antenna::ArrayGeometry &array_a, const antenna::ArrayGeometry &array_b,
                                    int prb, bool with_element_gain) const
{
    Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(array_b.size()),
                                                static_cast<Eigen::Index>(array_a.size()));
    for (std::size_t l = 0; l < rays_.size(); ++l)
    {
        const Vec3 da = direction_at_a(l), db = direction_at_b(l);
        cplx w = rays_[l].alpha * delay_phase(l, prb);
        if (with_element_gain)
            w *= std::sqrt(antenna::element_gain_linear(array_a, da) * antenna::element_gain_linear(array_b, db));
        H.noalias() += w * antenna::array_response(array_b, db) * antenna::array_response(array_a, da).adjoint();
    }
    return H;
}

double matrix_correlation(const Eigen::MatrixXcd &A, const Eigen::MatrixXcd &B)
{
    const double na = A.norm(), nb = B.norm();
    if (na == 0.0 || nb == 0.0)
        return 0.0;
    return std::abs((A.conjugate().cwiseProduct(B)).sum()) / (na * nb);
}

} // namespace densim::channel
