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
#include "densim/scenario.hpp"
#include "densim/types.hpp"

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace densim::channel
{

enum class Environment
{
    UMa,
    UMi
};

enum class Visibility
{
    Los,
    Nlos
};

/// Endpoint categories that drive the link taxonomy.
enum class EndpointRole
{
    Gnb,
    StationaryAux, // IAB node, NCR or RIS on a fixed mount
    UavAux,        // IAB node or NCR carried by a UAV
    Ue
};

EndpointRole endpoint_role(const scenario::NodeDescriptor &node);

struct LinkClass
{
    EndpointRole a = EndpointRole::Gnb;
    EndpointRole b = EndpointRole::Ue;
    bool same_cell = true;
    Environment environment = Environment::UMa;
    Visibility visibility = Visibility::Nlos;

    bool los() const { return visibility == Visibility::Los; }
    bool operator==(const LinkClass &) const = default;
};

std::string to_string(const LinkClass &c);

/// Propagation class of a link. Symmetric in its endpoints; the returned roles are ordered
/// (gNB < stationary aux < UAV aux < UE). Throws std::invalid_argument for pairs the taxonomy
/// does not cover (gNB-gNB, aux-aux).
LinkClass classify_roles(EndpointRole a, EndpointRole b, bool same_cell);
LinkClass classify_link(const scenario::NodeDescriptor &a, const scenario::NodeDescriptor &b, bool same_cell);

/// Breakpoint distance d'_BP in meters (effective heights h - 1 m).
double breakpoint_distance(Environment env, double fc_ghz, double h_tx, double h_rx);

/// 38.901 UMa/UMi path loss in dB. The taller endpoint plays the base-station role.
/// d3d below 1 m is clamped to 1 m with a logged warning; fc outside [0.5, 100] GHz throws.
double path_loss(const LinkClass &c, double d3d, double fc_ghz, double h_tx, double h_rx);

struct ShadowingParams
{
    double sigma_db = 0.0;
    double correlation_distance_m = 1.0;
};

ShadowingParams default_shadowing(const LinkClass &c);

/// Log-normal shadowing along a trajectory: a Gauss-Markov process in dB with exponential
/// autocorrelation exp(-distance / correlation_distance).
class ShadowingProcess
{
  public:
    ShadowingProcess(ShadowingParams params, std::uint64_t seed);

    double value_db() const { return value_; }
    /// Moves the process by `moved_m` meters of endpoint displacement and returns the new value.
    double advance(double moved_m);

  private:
    ShadowingParams params_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    double value_ = 0.0;
};

/// One shadowing draw for a link class at the given seed (the process's initial value).
double sample_shadowing(const LinkClass &c, std::uint64_t seed, const ShadowingParams &params);
double sample_shadowing(const LinkClass &c, std::uint64_t seed);

struct LargeScale
{
    double path_loss_db = 0.0;
    double shadowing_db = 0.0;

    double total_db() const { return path_loss_db + shadowing_db; }
    double linear_gain() const { return db_to_lin(-total_db()); }
};

struct FadingParams
{
    double fc_ghz = 28.0;
    int n_prbs = 66;
    double prb_bandwidth_hz = 720e3;
    int n_nlos_rays = 6;
    double k_factor_db = 10.0;
    double temporal_correlation = 0.9; // per slot, NLOS ray amplitudes
    /// Angular spreads (degrees, Gaussian) at the taller and shorter endpoint.
    double az_spread_high_deg = 8.0, el_spread_high_deg = 3.0;
    double az_spread_low_deg = 25.0, el_spread_low_deg = 8.0;
    bool pure_los = false; // drop NLOS rays entirely (tests, calibration)
};

/// Mean excess delay of the NLOS rays for a link class, seconds.
double delay_spread(const LinkClass &c, double fc_ghz);

struct Ray
{
    cplx alpha;          // complex amplitude, E|alpha|^2 sums to 1 over rays
    double delay_s = 0.0; // excess delay
    bool los = false;
    // angular offsets from the line of sight at each endpoint, degrees
    double az_off_a = 0.0, el_off_a = 0.0, az_off_b = 0.0, el_off_b = 0.0;
};

/// Small-scale fading of one link as a sum of plane-wave rays between endpoint a and endpoint b.
/// The canonical matrix H maps a's array to b's array; the reverse direction is its transpose.
/// Array responses are unit-modulus per element so E||H||_F^2 = n_a * n_b.
class RayChannel
{
  public:
    RayChannel(const LinkClass &c, const FadingParams &params, std::uint64_t seed);

    /// Updates endpoint positions: ray directions and the LOS phase follow the geometry.
    void set_geometry(const Vec3 &pos_a, const Vec3 &pos_b);
    /// One slot of temporal evolution of the NLOS ray amplitudes.
    void advance_slot();

    const std::vector<Ray> &rays() const { return rays_; }
    /// Global unit direction in which ray l leaves endpoint a (resp. b) towards the other end.
    Vec3 direction_at_a(std::size_t l) const;
    Vec3 direction_at_b(std::size_t l) const;

    /// Baseband frequency of a PRB centre relative to the carrier.
    double prb_frequency(int prb) const;
    /// exp(-j 2 pi f_k tau_l)
    cplx delay_phase(std::size_t l, int prb) const;

    /// H(b <- a) at a PRB. With element gains, each ray is weighted by sqrt(g_a g_b) of the panels'
    /// element patterns.
    Eigen::MatrixXcd matrix(const antenna::ArrayGeometry &array_a, const antenna::ArrayGeometry &array_b, int prb,
                            bool with_element_gain = false) const;

    const FadingParams &params() const { return params_; }
    const LinkClass &link_class() const { return class_; }

  private:
    LinkClass class_;
    FadingParams params_;
    std::mt19937_64 rng_;
    std::vector<Ray> rays_;
    std::vector<cplx> nlos_state_; // unit-variance AR(1) innovations per NLOS ray
    double nlos_power_ = 0.0;
    double los_amplitude_ = 0.0;
    Vec3 pos_a_, pos_b_;
    bool a_is_higher_ = true;
};

/// Frobenius-normalised correlation |<A,B>| / (||A|| ||B||) between two matrices.
double matrix_correlation(const Eigen::MatrixXcd &A, const Eigen::MatrixXcd &B);

} // namespace densim::channel
