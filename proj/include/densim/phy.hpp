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
#include "densim/types.hpp"

#include <Eigen/Dense>
#include <optional>
#include <string_view>
#include <vector>

namespace densim::phy
{

/// Thermal noise of one PRB in mW: density + 10 log10(n_subcarriers * scs) + noise figure.
double noise_power_prb(double density_dbm_hz, int n_subcarriers, double scs_hz, double noise_figure_db);
inline double noise_power_prb_dbm(double density_dbm_hz, int n_subcarriers, double scs_hz, double noise_figure_db)
{
    return lin_to_db(noise_power_prb(density_dbm_hz, n_subcarriers, scs_hz, noise_figure_db));
}

struct LinkGain
{
    cplx gamma;               // d^H H f
    std::optional<cplx> eta;  // d^H H2 Theta H1 f for reflected paths
};

/// gamma = d^H H f. Throws std::invalid_argument on a dimension mismatch.
LinkGain effective_gain(const Eigen::MatrixXcd &H, const antenna::BeamVector &f, const antenna::BeamVector &d);
LinkGain effective_gain(const Eigen::MatrixXcd &H, const Eigen::VectorXcd &f, const Eigen::VectorXcd &d);

/// eta = d^H H2 diag(theta) H1 f with H1: (n_ris x n_tx) and H2: (n_rx x n_ris).
cplx cascade_gain(const Eigen::MatrixXcd &H1, const std::vector<cplx> &theta, const Eigen::MatrixXcd &H2,
                  const Eigen::VectorXcd &f, const Eigen::VectorXcd &d);

struct NcrConfig
{
    double gain_db = 60.0;
    bool powered_on = true;
    std::vector<double> per_prb_gain; // linear; forced to 0 when off

    double gain_linear(int prb) const;
};

struct RisConfig
{
    std::vector<cplx> theta;     // diagonal of the reflection matrix, unit modulus
    std::optional<int> phase_bits; // empty for continuous phases
};

/// Reflection coefficients maximising |sum_n b_n theta_n a_n| for incident coefficients a = H1 f and
/// outgoing coefficients b = d^H H2. Continuous mode co-phases every term. Quantized mode picks the
/// best common reference rotation and rounds every phase to the nearest of 2^bits levels from it,
/// which attains the discrete optimum. Throws std::invalid_argument for empty or mismatched input.
RisConfig optimize_theta(const std::vector<cplx> &a, const std::vector<cplx> &b, std::optional<int> phase_bits = {});

/// sum_n b_n theta_n a_n
cplx reflected_gain(const std::vector<cplx> &a, const std::vector<cplx> &b, const std::vector<cplx> &theta);

enum class Architecture
{
    Direct,
    Iab,
    Ncr,
    Ris
};

std::string_view to_string(Architecture a);

struct SinrBreakdown
{
    double S = 0.0; // mW
    double I = 0.0; // mW
    double N = 0.0; // mW
    double rho = 0.0;
    Architecture architecture = Architecture::Direct;

    double rho_db() const { return lin_to_db(rho); }
};

/// Beamformed power gains |gamma|^2 (large-scale loss and element gains included) between the nodes
/// active on one PRB. Every transmitter uses the beam of its own transmission on that PRB and every
/// receiver the combiner of the reception being evaluated.
class GainOracle
{
  public:
    virtual ~GainOracle() = default;
    /// Transmitter to receiver.
    virtual double direct(NodeId tx, NodeId rx) const = 0;
    /// Transmitter to the input panel of an NCR.
    virtual double relay_in(NodeId tx, NodeId ncr) const = 0;
    /// Output panel of an NCR to a receiver.
    virtual double relay_out(NodeId ncr, NodeId rx) const = 0;
    /// |eta|^2 from a transmitter through a RIS to a receiver.
    virtual double cascade(NodeId tx, NodeId ris, NodeId rx) const = 0;
};

struct ActiveTransmission
{
    NodeId tx = kNoNode;
    double power_mw = 0.0;
};

struct ActiveNcr
{
    NodeId id = kNoNode;
    double gain_linear = 0.0; // g_{s,k}; 0 when muted on this PRB or powered off
};

/// Everything that radiates on one PRB in the current slot.
struct PrbView
{
    int prb = 0;
    double noise_mw = 0.0;
    std::vector<ActiveTransmission> transmissions;
    std::vector<ActiveNcr> ncrs;
    std::vector<NodeId> riss;
    const GainOracle *gains = nullptr;
};

/// Direct gNB link, no assisting node.
SinrBreakdown sinr_direct(NodeId rx, NodeId serving_tx, const PrbView &view);
/// Access link from an IAB node (or a backhaul hop): every other co-channel transmission interferes.
SinrBreakdown sinr_iab(NodeId rx, NodeId serving_tx, const PrbView &view);
/// Direct plus NCR-amplified useful signal, interference amplified by every NCR, amplified noise of
/// the serving and non-serving NCRs. serving_ncr = kNoNode evaluates a directly served UE among NCRs.
SinrBreakdown sinr_ncr(NodeId rx, NodeId serving_ncr, NodeId serving_tx, const PrbView &view);
/// Direct plus reflected useful signal; interference through every RIS; thermal noise only.
/// serving_ris = kNoNode evaluates a directly served UE among RISs (no reflected useful term).
SinrBreakdown sinr_ris(NodeId rx, NodeId serving_ris, NodeId serving_tx, const PrbView &view);

} // namespace densim::phy
