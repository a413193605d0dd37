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
#include "support/gen.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace densim;
using namespace densim::channel;
using Catch::Approx;
using densim::testing::Gen;
using R = EndpointRole;

namespace
{
scenario::NodeDescriptor node(scenario::NodeKind kind, bool uav = false)
{
    scenario::NodeDescriptor n;
    n.kind = kind;
    n.mounted_on_uav = uav;
    return n;
}

LinkClass cls(Environment e, Visibility v, bool same = true) { return {R::Gnb, R::Ue, same, e, v}; }
} // namespace

TEST_CASE("link taxonomy covers same-cell and cross-cell pairs")
{
    struct Row
    {
        R a, b;
        bool same;
        Environment env;
        Visibility vis;
    };
    using E = Environment;
    using V = Visibility;
    const Row rows[] = {
        {R::Gnb, R::Ue, true, E::UMa, V::Nlos},           {R::Gnb, R::StationaryAux, true, E::UMa, V::Los},
        {R::Gnb, R::UavAux, true, E::UMa, V::Los},        {R::StationaryAux, R::Ue, true, E::UMi, V::Los},
        {R::UavAux, R::Ue, true, E::UMi, V::Los},         {R::Ue, R::Ue, true, E::UMi, V::Los},
        {R::Gnb, R::Ue, false, E::UMa, V::Nlos},          {R::Gnb, R::StationaryAux, false, E::UMa, V::Nlos},
        {R::Gnb, R::UavAux, false, E::UMa, V::Los},       {R::StationaryAux, R::Ue, false, E::UMi, V::Nlos},
        {R::UavAux, R::Ue, false, E::UMi, V::Los},        {R::Ue, R::Ue, false, E::UMi, V::Nlos},
    };
    for (const auto &r : rows)
    {
        for (bool swap : {false, true})
        {
            const auto c = swap ? classify_roles(r.b, r.a, r.same) : classify_roles(r.a, r.b, r.same);
            CHECK(c.environment == r.env);
            CHECK(c.visibility == r.vis);
            CHECK(c.a == r.a);
            CHECK(c.b == r.b);
        }
    }
}

TEST_CASE("classify_link examples and rejected pairs")
{
    using K = scenario::NodeKind;
    const auto gnb_ue = classify_link(node(K::Gnb), node(K::Ue), true);
    CHECK(gnb_ue.environment == Environment::UMa);
    CHECK_FALSE(gnb_ue.los());
    const auto gnb_ncr = classify_link(node(K::Gnb), node(K::Ncr), true);
    CHECK(gnb_ncr.environment == Environment::UMa);
    CHECK(gnb_ncr.los());
    const auto uav_ue = classify_link(node(K::IabNode, true), node(K::Ue), false);
    CHECK(uav_ue.environment == Environment::UMi);
    CHECK(uav_ue.los());
    CHECK(classify_link(node(K::Ris), node(K::Ue), true).los());

    CHECK_THROWS_AS(classify_link(node(K::Gnb), node(K::Gnb), true), std::invalid_argument);
    CHECK_THROWS_AS(classify_link(node(K::Ncr), node(K::Ris), true), std::invalid_argument);
    CHECK_THROWS_AS(classify_link(node(K::IabNode), node(K::Ncr, true), true), std::invalid_argument);
}

TEST_CASE("path loss reference values")
{
    const auto uma_los = cls(Environment::UMa, Visibility::Los);
    const auto umi_los = cls(Environment::UMi, Visibility::Los);
    // 28 + 22 log10(100) + 20 log10(28)
    CHECK(path_loss(uma_los, 100.0, 28.0, 25.0, 1.5) == Approx(100.94316062684439).margin(1e-9));
    // 32.4 + 21 log10(100) + 20 log10(28)
    CHECK(path_loss(umi_los, 100.0, 28.0, 10.0, 1.5) == Approx(103.3431606268444).margin(1e-9));
    CHECK(path_loss(uma_los, 200.0, 28.0, 25.0, 1.5) - path_loss(uma_los, 100.0, 28.0, 25.0, 1.5) ==
          Approx(6.622659904607587).margin(1e-9));
    // NLOS forms take over when they exceed the LOS value
    CHECK(path_loss(cls(Environment::UMa, Visibility::Nlos), 100.0, 28.0, 25.0, 1.5) ==
          Approx(120.64316062684438).margin(1e-9));
    CHECK(path_loss(cls(Environment::UMi, Visibility::Nlos), 100.0, 28.0, 10.0, 1.5) ==
          Approx(123.82446606758927).margin(1e-9));
}

TEST_CASE("path loss clamps short distances and rejects out-of-band carriers")
{
    const auto c = cls(Environment::UMi, Visibility::Los);
    CHECK(path_loss(c, 0.2, 28.0, 1.5, 1.5) == path_loss(c, 1.0, 28.0, 1.5, 1.5));
    CHECK_THROWS_AS(path_loss(c, 10.0, 0.4, 10.0, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(path_loss(c, 10.0, 100.5, 10.0, 1.5), std::invalid_argument);
}

TEST_CASE("path loss is continuous at the breakpoint and non-decreasing in distance")
{
    Gen g(21);
    for (int i = 0; i < 10000; ++i)
    {
        const Environment env = g.coin() ? Environment::UMa : Environment::UMi;
        const Visibility vis = g.coin() ? Visibility::Los : Visibility::Nlos;
        const auto c = cls(env, vis);
        const double fc = g.uniform(0.5, 100.0);
        const double h_bs = g.uniform(5.0, 40.0), h_ut = g.uniform(1.5, 3.0);
        const double dh = h_bs - h_ut;
        const double bp = breakpoint_distance(env, fc, h_bs, h_ut);
        const double at_bp = std::hypot(bp, dh);
        const double below = path_loss(c, at_bp * (1.0 - 1e-9), fc, h_bs, h_ut);
        const double above = path_loss(c, at_bp * (1.0 + 1e-9), fc, h_bs, h_ut);
        REQUIRE(std::abs(above - below) < 0.01);

        double prev = -1e9;
        const double d_max = std::max(2.0 * at_bp, 50.0);
        for (int s = 0; s <= 20; ++s)
        {
            const double d = std::max(dh, 1.0) + (d_max - std::max(dh, 1.0)) * s / 20.0;
            const double pl = path_loss(c, d, fc, h_bs, h_ut);
            REQUIRE(pl >= prev - 1e-9);
            prev = pl;
        }
    }
}

TEST_CASE("shadowing statistics")
{
    const auto c = cls(Environment::UMi, Visibility::Los);
    CHECK(sample_shadowing(c, 7, {0.0, 10.0}) == 0.0);
    ShadowingProcess flat({0.0, 10.0}, 3);
    CHECK(flat.advance(25.0) == 0.0);

    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i)
        sum += sample_shadowing(c, static_cast<std::uint64_t>(i), {4.0, 10.0});
    CHECK(std::abs(sum / n) < 0.05);

    // exponential autocorrelation: exp(-1) at one correlation distance
    double sxy = 0.0, sxx = 0.0;
    for (int i = 0; i < n; ++i)
    {
        ShadowingProcess p({4.0, 10.0}, static_cast<std::uint64_t>(i) + 1000000);
        const double x = p.value_db();
        const double y = p.advance(10.0);
        sxy += x * y;
        sxx += x * x;
    }
    CHECK(sxy / sxx == Approx(std::exp(-1.0)).margin(0.05));

    CHECK(default_shadowing(cls(Environment::UMi, Visibility::Nlos)).sigma_db == 7.82);
    CHECK(default_shadowing(cls(Environment::UMa, Visibility::Los)).correlation_distance_m == 37.0);
}

TEST_CASE("delay spreads follow the class medians")
{
    CHECK(delay_spread(cls(Environment::UMa, Visibility::Los), 28.0) == Approx(8.047086720450753e-08).epsilon(1e-12));
    CHECK(delay_spread(cls(Environment::UMa, Visibility::Nlos), 28.0) == Approx(2.659376101248396e-07).epsilon(1e-12));
    CHECK(delay_spread(cls(Environment::UMi, Visibility::Los), 28.0) == Approx(3.228676112032453e-08).epsilon(1e-12));
    CHECK(delay_spread(cls(Environment::UMi, Visibility::Nlos), 28.0) == Approx(6.592110528984742e-08).epsilon(1e-12));
}

TEST_CASE("pure LOS single-element channel has unit magnitude")
{
    FadingParams p;
    p.pure_los = true;
    const auto one = antenna::ura(1, 1, 0, 0, antenna::ElementPattern::isotropic());
    Gen g(22);
    for (int i = 0; i < 100; ++i)
    {
        RayChannel ch(cls(Environment::UMa, Visibility::Nlos), p, static_cast<std::uint64_t>(i));
        ch.set_geometry({0, 0, 25}, {g.uniform(-300, 300), g.uniform(-300, 300), 1.5});
        for (int k : {0, 33, 65})
            REQUIRE(std::abs(ch.matrix(one, one, k)(0, 0)) == Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("channel power normalisation over many draws")
{
    const auto tx = antenna::ura(4, 4, 0, 0), rx = antenna::ura(8, 8, 180, 0);
    FadingParams p;
    double acc = 0.0;
    const int n = 10000;
    for (int i = 0; i < n; ++i)
    {
        RayChannel ch(cls(Environment::UMi, i % 2 ? Visibility::Los : Visibility::Nlos), p, static_cast<std::uint64_t>(i));
        ch.set_geometry({0, 0, 10}, {80, 20, 25});
        acc += ch.matrix(tx, rx, i % 66).squaredNorm();
    }
    CHECK(acc / n == Approx(1024.0).epsilon(0.03));
}

TEST_CASE("channel generation is deterministic per seed")
{
    const auto tx = antenna::ura(4, 4, 0, 0), rx = antenna::ura(2, 2, 90, 0);
    FadingParams p;
    RayChannel a(cls(Environment::UMa, Visibility::Los), p, 99), b(cls(Environment::UMa, Visibility::Los), p, 99);
    for (auto *ch : {&a, &b})
    {
        ch->set_geometry({1, 2, 25}, {100, -40, 10});
        for (int s = 0; s < 5; ++s)
            ch->advance_slot();
    }
    for (int k = 0; k < 66; ++k)
        REQUIRE(a.matrix(tx, rx, k) == b.matrix(tx, rx, k));
}

TEST_CASE("uplink through the transposed matrix with conjugate beams equals the downlink gain")
{
    Gen g(23);
    const auto tx = antenna::ura(4, 4, 0, 0), rx = antenna::ura(2, 2, 180, 0);
    FadingParams p;
    for (int i = 0; i < 10000; ++i)
    {
        RayChannel ch(cls(Environment::UMa, g.coin() ? Visibility::Los : Visibility::Nlos), p,
                      static_cast<std::uint64_t>(i));
        ch.set_geometry({0, 0, 25}, {g.uniform(20, 200), g.uniform(-50, 50), g.uniform(1.5, 20)});
        const int k = g.integer(0, 65);
        const auto H = ch.matrix(tx, rx, k);
        const auto f = g.eigen_vector(16).normalized();
        const auto d = g.eigen_vector(4).normalized();
        const cplx dl = d.dot(H * f);
        const Eigen::MatrixXcd Hul = H.transpose();
        const cplx ul = f.conjugate().dot(Hul * d.conjugate());
        REQUIRE(std::abs(dl - ul) <= 1e-12 * std::max(1.0, std::abs(dl)));
    }
}

TEST_CASE("adjacent PRBs are strongly correlated on LOS links")
{
    const auto tx = antenna::ura(4, 4, 0, 0), rx = antenna::ura(4, 4, 180, 0);
    FadingParams pure;
    pure.pure_los = true;
    Gen g(24);
    for (int i = 0; i < 200; ++i)
    {
        const Vec3 a{0, 0, 25}, b{g.uniform(30, 300), g.uniform(-100, 100), 1.5};
        RayChannel single(cls(Environment::UMa, Visibility::Los), pure, static_cast<std::uint64_t>(i));
        single.set_geometry(a, b);
        const int k = g.integer(0, 64);
        REQUIRE(matrix_correlation(single.matrix(tx, rx, k), single.matrix(tx, rx, k + 1)) > 0.9);
    }
}

TEST_CASE("NLOS amplitudes evolve with the configured correlation")
{
    FadingParams p;
    p.temporal_correlation = 0.9;
    const auto c = cls(Environment::UMi, Visibility::Nlos);
    double sxy = 0.0, sxx = 0.0;
    for (int i = 0; i < 4000; ++i)
    {
        RayChannel ch(c, p, static_cast<std::uint64_t>(i));
        ch.set_geometry({0, 0, 10}, {50, 0, 1.5});
        const auto before = ch.rays();
        ch.advance_slot();
        for (std::size_t l = 0; l < before.size(); ++l)
        {
            sxy += std::real(std::conj(before[l].alpha) * ch.rays()[l].alpha);
            sxx += std::norm(before[l].alpha);
        }
    }
    CHECK(sxy / sxx == Approx(0.9).margin(0.02));
}
