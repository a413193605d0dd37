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

#include "densim/antenna.hpp"

#include <algorithm>
#include <stdexcept>

namespace densim::antenna
{

double element_gain(const ElementPattern &pattern, double theta_deg, double phi_deg)
{
    if (!(theta_deg >= 0.0 && theta_deg <= 180.0))
        throw std::invalid_argument("element_gain: theta outside [0, 180] deg");
    if (!(phi_deg >= -180.0 && phi_deg <= 180.0))
        throw std::invalid_argument("element_gain: phi outside [-180, 180] deg");
    if (pattern.omni)
        return pattern.max_gain_dbi;

    const double hp = pattern.half_power_beamwidth_deg;
    const double tv = (theta_deg - 90.0) / hp;
    const double th = phi_deg / hp;
    const double a_v = -std::min(12.0 * tv * tv, pattern.vertical_sidelobe_limit_db);
    const double a_h = -std::min(12.0 * th * th, pattern.sidelobe_floor_db);
    return pattern.max_gain_dbi - std::min(-(a_v + a_h), pattern.sidelobe_floor_db);
}

ArrayGeometry ura(std::size_t rows, std::size_t cols, double az_deg, double el_deg, ElementPattern pattern)
{
    if (rows == 0 || cols == 0)
        throw std::invalid_argument("ura: array dimensions must be >= 1");
    ArrayGeometry a;
    a.n_rows = rows;
    a.n_cols = cols;
    a.boresight_az_deg = az_deg;
    a.boresight_el_deg = el_deg;
    a.pattern = pattern;
    return a;
}

namespace
{
struct Frame
{
    Vec3 x, y, z;
};

Frame panel_frame(const ArrayGeometry &array)
{
    const double az = deg2rad(array.boresight_az_deg);
    const double el = deg2rad(array.boresight_el_deg);
    const Vec3 x{std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el)};
    const Vec3 y{-std::sin(az), std::cos(az), 0.0};
    const Vec3 z{x.y * y.z - x.z * y.y, x.z * y.x - x.x * y.z, x.x * y.y - x.y * y.x};
    return {x, y, z};
}
} // namespace

LocalAngles to_local(const ArrayGeometry &array, const Vec3 &global_dir)
{
    const Frame f = panel_frame(array);
    const double n = global_dir.norm();
    const Vec3 v = n > 0.0 ? global_dir * (1.0 / n) : Vec3{1.0, 0.0, 0.0};
    const double lx = v.dot(f.x), ly = v.dot(f.y), lz = std::clamp(v.dot(f.z), -1.0, 1.0);
    return {rad2deg(std::atan2(ly, lx)), rad2deg(std::asin(lz))};
}

double element_gain_linear(const ArrayGeometry &array, const Vec3 &global_dir)
{
    if (array.pattern.omni)
        return db_to_lin(array.pattern.max_gain_dbi);
    const LocalAngles l = to_local(array, global_dir);
    return db_to_lin(element_gain(array.pattern, std::clamp(l.theta_deg(), 0.0, 180.0),
                                  std::clamp(l.az_deg, -180.0, 180.0)));
}

namespace
{
Eigen::VectorXcd response(const ArrayGeometry &array, double sin_el, double cos_el_sin_az)
{
    Eigen::VectorXcd a(static_cast<Eigen::Index>(array.size()));
    const double k = 2.0 * std::numbers::pi * array.element_spacing;
    for (std::size_t r = 0; r < array.n_rows; ++r)
        for (std::size_t c = 0; c < array.n_cols; ++c)
        {
            const double phase = k * (static_cast<double>(r) * sin_el + static_cast<double>(c) * cos_el_sin_az);
            a(static_cast<Eigen::Index>(r * array.n_cols + c)) = std::polar(1.0, phase);
        }
    return a;
}
} // namespace

BeamVector steering_vector(const ArrayGeometry &array, double az_deg, double el_deg)
{
    const double az = deg2rad(az_deg), el = deg2rad(el_deg);
    BeamVector b;
    b.weights = response(array, std::sin(el), std::cos(el) * std::sin(az)) /
                std::sqrt(static_cast<double>(array.size()));
    b.az_deg = az_deg;
    b.el_deg = el_deg;
    return b;
}

Eigen::VectorXcd array_response(const ArrayGeometry &array, const Vec3 &global_dir)
{
    if (array.single_element())
        return Eigen::VectorXcd::Ones(1);
    const Frame f = panel_frame(array);
    const double n = global_dir.norm();
    const Vec3 v = n > 0.0 ? global_dir * (1.0 / n) : f.x;
    // sin(el) and cos(el)*sin(az) are the local z and y components.
    return response(array, v.dot(f.z), v.dot(f.y));
}

std::vector<BeamVector> make_codebook(const ArrayGeometry &array, std::size_t n_az, std::size_t n_el)
{
    if (n_az == 0 || n_el == 0)
        throw std::invalid_argument("make_codebook: beam counts must be >= 1");
    std::vector<BeamVector> book;
    book.reserve(n_az * n_el);
    const double daz = kCodebookAzSpanDeg / static_cast<double>(n_az);
    const double del = kCodebookElSpanDeg / static_cast<double>(n_el);
    for (std::size_t e = 0; e < n_el; ++e)
        for (std::size_t a = 0; a < n_az; ++a)
        {
            const double az = -kCodebookAzSpanDeg / 2.0 + (static_cast<double>(a) + 0.5) * daz;
            const double el = -kCodebookElSpanDeg / 2.0 + (static_cast<double>(e) + 0.5) * del;
            book.push_back(steering_vector(array, az, el));
        }
    return book;
}

BeamPair select_beam_pair(const Eigen::MatrixXcd &H, const std::vector<BeamVector> &tx_codebook,
                          const std::vector<BeamVector> &rx_codebook)
{
    if (tx_codebook.empty() || rx_codebook.empty())
        throw std::invalid_argument("select_beam_pair: empty codebook");
    for (const auto &b : tx_codebook)
        if (b.weights.size() != H.cols())
            throw std::invalid_argument("select_beam_pair: tx beam length does not match H columns");
    for (const auto &b : rx_codebook)
        if (b.weights.size() != H.rows())
            throw std::invalid_argument("select_beam_pair: rx beam length does not match H rows");

    BeamPair best;
    bool first = true;
    for (std::size_t t = 0; t < tx_codebook.size(); ++t)
    {
        const Eigen::VectorXcd hf = H * tx_codebook[t].weights;
        for (std::size_t r = 0; r < rx_codebook.size(); ++r)
        {
            const double g = std::abs(rx_codebook[r].weights.dot(hf)); // dot() conjugates the left side
            if (first || g > best.gain)
            {
                best = {t, r, g};
                first = false;
            }
        }
    }
    return best;
}

} // namespace densim::antenna
