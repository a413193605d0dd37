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

#include "densim/types.hpp"

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

namespace densim::antenna
{

/// 3GPP 3D element pattern (TR 38.901 Table 7.3-1). `omni` yields a flat 0 dBi element.
struct ElementPattern
{
    double max_gain_dbi = 8.0;
    double half_power_beamwidth_deg = 65.0;
    double sidelobe_floor_db = 30.0;         // A_m
    double vertical_sidelobe_limit_db = 30.0; // SLA_V
    bool omni = false;

    static ElementPattern sector() { return {}; }
    static ElementPattern isotropic() { return {0.0, 65.0, 30.0, 30.0, true}; }
};

/// Element gain in dBi. theta is the zenith angle in [0, 180], phi the azimuth in [-180, 180],
/// both in the panel's local frame (boresight at theta = 90, phi = 0).
/// Throws std::invalid_argument for out-of-range angles.
double element_gain(const ElementPattern &pattern, double theta_deg, double phi_deg);

/// Uniform rectangular array. Rows stack vertically, columns horizontally. The boresight is the
/// panel's mechanical orientation in the global frame: azimuth from +x towards +y, elevation
/// positive above the horizon.
struct ArrayGeometry
{
    std::size_t n_rows = 1;
    std::size_t n_cols = 1;
    double element_spacing = 0.5; // wavelengths
    double boresight_az_deg = 0.0;
    double boresight_el_deg = 0.0;
    ElementPattern pattern = ElementPattern::isotropic();

    std::size_t size() const { return n_rows * n_cols; }
    bool single_element() const { return size() == 1; }
};

ArrayGeometry ura(std::size_t rows, std::size_t cols, double az_deg, double el_deg,
                  ElementPattern pattern = ElementPattern::sector());

/// Direction expressed in a panel's local frame.
struct LocalAngles
{
    double az_deg = 0.0;
    double el_deg = 0.0;

    double theta_deg() const { return 90.0 - el_deg; }
};

/// Maps a global unit direction into the local (az, el) of the array's boresight frame.
LocalAngles to_local(const ArrayGeometry &array, const Vec3 &global_dir);

/// Element gain (linear power) of the array's element pattern towards a global direction.
double element_gain_linear(const ArrayGeometry &array, const Vec3 &global_dir);

struct BeamVector
{
    Eigen::VectorXcd weights;
    double az_deg = 0.0; // local steering direction
    double el_deg = 0.0;
};

/// Unit-norm URA response towards local (az, el): element (r, c) has phase
/// 2*pi*spacing*(r*sin(el) + c*cos(el)*sin(az)).
BeamVector steering_vector(const ArrayGeometry &array, double az_deg, double el_deg);

/// Unnormalised (unit-modulus) array response towards a global direction; the building block of
/// channel matrices.
Eigen::VectorXcd array_response(const ArrayGeometry &array, const Vec3 &global_dir);

/// Angular extent covered by make_codebook.
inline constexpr double kCodebookAzSpanDeg = 120.0;
inline constexpr double kCodebookElSpanDeg = 60.0;

/// Uniform grid of n_az x n_el steering beams over the panel sector (120 deg in azimuth,
/// 60 deg in elevation, both centred on boresight). Beam index = el_index * n_az + az_index.
std::vector<BeamVector> make_codebook(const ArrayGeometry &array, std::size_t n_az, std::size_t n_el);

struct BeamPair
{
    std::size_t tx_index = 0;
    std::size_t rx_index = 0;
    double gain = 0.0; // |d^H H f|
};

/// Exhaustive search for the pair maximising |d^H H f|. Ties keep the lowest (tx, rx) index.
BeamPair select_beam_pair(const Eigen::MatrixXcd &H, const std::vector<BeamVector> &tx_codebook,
                          const std::vector<BeamVector> &rx_codebook);

} // namespace densim::antenna
