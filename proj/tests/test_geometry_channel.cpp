// SPDX-License-Identifier: Apache-2.0
//
// riscf: phase-shift design for RIS-aided cell-free massive MIMO channel estimation
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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "riscf/geometry_channel.hpp"
#include "riscf/linalg.hpp"

#include <cmath>

using namespace riscf;

namespace {

ChannelScenario small_scenario(std::size_t L = 3, std::size_t M = 3, std::size_t N = 6,
                               std::size_t K = 4)
{
    ChannelScenario s;
    s.geometry.num_aps = L;
    s.geometry.num_users = K;
    s.correlation.antennas_per_ap = M;
    s.correlation.ris_elements = N;
    s.unblocked_probability = 0.5;
    return s;
}

double max_abs(const CMatrix &a)
{
    return a.size() ? a.cwiseAbs().maxCoeff() : 0.0;
}

} // namespace

TEST_CASE("geometry stays inside the corner squares")
{
    GeometryConfig cfg;
    Rng rng = make_stream(3);
    const auto g = generate_geometry(cfg, rng);
    REQUIRE(g.num_aps() == 40);
    REQUIRE(g.num_users() == 10);
    for (const auto &p : g.ap_positions) {
        CHECK(p.x >= 0.0);
        CHECK(p.x <= 250.0);
        CHECK(p.y >= 0.0);
        CHECK(p.y <= 250.0);
        CHECK(p.z == 15.0);
    }
    for (const auto &p : g.user_positions) {
        CHECK(p.x >= 750.0);
        CHECK(p.x <= 1000.0);
        CHECK(p.y <= 250.0);
        CHECK(p.z == doctest::Approx(1.65));
    }
    CHECK(g.ris_position.x == 500.0);
    CHECK(g.ris_position.y == 500.0);
    CHECK(g.ris_position.z == 30.0);

    cfg.num_users = 0;
    CHECK_THROWS_AS(generate_geometry(cfg, rng), ConfigError);
}

TEST_CASE("log-distance gain")
{
    const LogDistanceModel m{2.0, 1.0, -30.0};
    CHECK(log_distance_gain(m, 1.0) == doctest::Approx(1e-3));
    CHECK(log_distance_gain(m, 10.0) == doctest::Approx(1e-5));
    // doubling the distance costs 10 * exponent * log10(2) dB
    const LogDistanceModel steep{3.76, 1.0, -30.5};
    const double ratio = log_distance_gain(steep, 200.0) / log_distance_gain(steep, 100.0);
    CHECK(10.0 * std::log10(ratio) == doctest::Approx(-37.6 * std::log10(2.0)));
    CHECK_THROWS_AS(log_distance_gain(m, 0.0), ConfigError);
}

TEST_CASE("large-scale gains follow the geometry")
{
    NetworkGeometry g;
    g.ap_positions = {{0, 0, 0}};
    g.user_positions = {{3, 4, 0}, {6, 8, 0}};
    g.ris_position = {0, 0, 10};
    PathlossConfig pl;
    pl.noise_power_dbm = 0.0;
    const auto gains = large_scale_fading(g, pl);
    CHECK(gains.direct_gain(0, 0) == doctest::Approx(log_distance_gain(pl.direct, 5.0)));
    CHECK(gains.direct_gain(0, 1) == doctest::Approx(log_distance_gain(pl.direct, 10.0)));
    CHECK(gains.ap_ris[0] == doctest::Approx(log_distance_gain(pl.ap_ris, 10.0)));
    CHECK(gains.ris_user[1] == doctest::Approx(log_distance_gain(pl.ris_user, std::sqrt(200.0))));

    g.user_positions[0] = g.ap_positions[0];
    CHECK_THROWS_AS(large_scale_fading(g, pl), ConfigError);
}

TEST_CASE("exponential correlation on a line")
{
    const auto c = exponential_correlation(ap_array_layout(4), 0.6);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            CHECK(std::abs(c(i, j) - std::pow(0.6, std::abs(i - j))) < 1e-14);
    CHECK(linalg::is_hermitian_psd(c));
}

TEST_CASE("RIS layout and steering vectors")
{
    const auto elems = ris_array_layout(10, 0);
    REQUIRE(elems.size() == 10);
    for (const auto &e : elems)
        CHECK(e.y == 0.0);
    const auto a = steering_vector(elems, {0.3, -0.8, std::sqrt(1 - 0.73)}, 0.5);
    for (Eigen::Index n = 0; n < a.size(); ++n)
        CHECK(std::abs(a(n)) == doctest::Approx(1.0));
    CHECK(a.squaredNorm() == doctest::Approx(10.0));
}

TEST_CASE("statistics are Hermitian PSD and respect blocking")
{
    for (auto model : {CorrelationModel::exponential, CorrelationModel::local_scattering}) {
        auto sc = small_scenario();
        sc.correlation.model = model;
        const auto stats = generate_statistics(sc, 42);
        CHECK_NOTHROW(stats.validate());
        for (std::size_t m = 0; m < stats.num_aps; ++m)
            for (std::size_t k = 0; k < stats.num_users; ++k) {
                if (!stats.blocking[stats.link(m, k)])
                    CHECK(max_abs(stats.G(m, k)) == 0.0);
                else
                    CHECK(stats.G(m, k).trace().real() > 0.0);
                CHECK(linalg::is_hermitian_psd(stats.G(m, k)));
            }
        for (const auto &r : stats.ris_side_cov)
            CHECK(r.trace().real() == doctest::Approx(static_cast<double>(sc.correlation.ris_elements)));
    }
}

TEST_CASE("statistics are reproducible per seed")
{
    const auto sc = small_scenario();
    const auto a = generate_statistics(sc, 9), b = generate_statistics(sc, 9),
               c = generate_statistics(sc, 10);
    CHECK(a.blocking == b.blocking);
    CHECK(max_abs(a.ap_ris_los[1] - b.ap_ris_los[1]) == 0.0);
    CHECK(max_abs(a.user_ris_cov[2] - b.user_ris_cov[2]) == 0.0);
    CHECK(max_abs(a.ap_side_cov[0] - c.ap_side_cov[0]) > 0.0);
}

TEST_CASE("blocking probability")
{
    Rng rng = make_stream(5);
    CHECK(sample_blocking(0.0, 4, 5, rng) == std::vector<std::uint8_t>(20, 0));
    CHECK(sample_blocking(1.0, 4, 5, rng) == std::vector<std::uint8_t>(20, 1));
    const auto mask = sample_blocking(0.2, 100, 100, rng);
    double ones = 0;
    for (auto a : mask)
        ones += a;
    // binomial standard deviation is 0.004 on 10^4 draws
    CHECK(ones / 1e4 == doctest::Approx(0.2).epsilon(0.1));
    CHECK_THROWS_AS(sample_blocking(1.5, 1, 1, rng), ConfigError);
}

TEST_CASE("geometry is independent of the blocking probability")
{
    auto sc = small_scenario();
    NetworkGeometry g1, g2;
    generate_statistics(sc, 77, &g1);
    sc.unblocked_probability = 0.9;
    generate_statistics(sc, 77, &g2);
    for (std::size_t m = 0; m < g1.num_aps(); ++m)
        CHECK(g1.ap_positions[m].x == g2.ap_positions[m].x);
}

TEST_CASE("infinite Rician factor removes the scattered RIS links")
{
    auto sc = small_scenario();
    sc.correlation.rician_factor_ap_ris_db = std::numeric_limits<double>::infinity();
    sc.correlation.rician_factor_ris_user_db = std::numeric_limits<double>::infinity();
    const auto stats = generate_statistics(sc, 1);
    for (const auto &r : stats.ap_side_cov)
        CHECK(max_abs(r) == 0.0);
    for (const auto &r : stats.user_ris_cov)
        CHECK(max_abs(r) == 0.0);

    // the reflected path is then deterministic
    Rng rng = make_stream(2);
    const auto r = sample_channel_realization(stats, rng);
    CHECK(max_abs(r.ap_ris[0] - stats.ap_ris_los[0]) < 1e-15);
    CHECK(max_abs(r.ris_user[1] - stats.ris_user_los[1]) < 1e-15);
}

TEST_CASE("gains scale the covariances linearly")
{
    auto sc = small_scenario();
    const auto base = generate_statistics(sc, 4);
    sc.pathloss.noise_power_dbm -= 10.0; // +10 dB on every noise-normalized link
    const auto louder = generate_statistics(sc, 4);
    for (std::size_t i = 0; i < base.direct_cov.size(); ++i)
        CHECK(max_abs(louder.direct_cov[i] - 10.0 * base.direct_cov[i]) <=
              1e-9 * max_abs(louder.direct_cov[i]));
    CHECK(max_abs(louder.ap_side_cov[0] - 10.0 * base.ap_side_cov[0]) <=
          1e-9 * max_abs(louder.ap_side_cov[0]));
    CHECK(max_abs(louder.user_ris_cov[0] - base.user_ris_cov[0]) == 0.0);
}

TEST_CASE("sampled moments match the statistics")
{
    const auto stats = generate_statistics(small_scenario(2, 2, 4, 2), 8);
    const ChannelSampler sampler(stats);
    const std::size_t S = 40000;
    const auto M = static_cast<Eigen::Index>(stats.antennas);
    const auto N = static_cast<Eigen::Index>(stats.ris_elements);
    CMatrix gg = CMatrix::Zero(M, M), hmean = CMatrix::Zero(M, N), zz = CMatrix::Zero(N, N);
    std::size_t link = 0;
    while (!stats.blocking[link])
        ++link;
    Rng rng = make_stream(21);
    for (std::size_t s = 0; s < S; ++s) {
        const auto r = sampler.draw(rng);
        gg += r.direct[link] * r.direct[link].adjoint();
        hmean += r.ap_ris[0];
        const CVector zt = r.ris_user[0] - stats.ris_user_los[0];
        zz += zt * zt.adjoint();
    }
    const double n = static_cast<double>(S);
    CHECK(linalg::relative_frobenius_error(gg / n, stats.direct_cov[link]) < 0.03);
    CHECK(linalg::relative_frobenius_error(zz / n, stats.user_ris_cov[0]) < 0.03);
    // the scattered part of H has total power Tr(R_AP) Tr(R_RIS)
    const double scatter = std::sqrt(stats.ap_side_cov[0].trace().real() *
                                     stats.ris_side_cov[0].trace().real() / n);
    CHECK((hmean / n - stats.ap_ris_los[0]).norm() < 5.0 * scatter);
}

TEST_CASE("aggregated channel is g + H diag(phi) z")
{
    const auto stats = generate_statistics(small_scenario(), 3);
    Rng rng = make_stream(1);
    const auto r = sample_channel_realization(stats, rng);
    std::vector<double> theta(stats.ris_elements);
    for (std::size_t n = 0; n < theta.size(); ++n)
        theta[n] = -3.0 + 0.9 * static_cast<double>(n);
    const PhaseShiftVector phase(theta);
    CMatrix phi = CMatrix::Zero(theta.size(), theta.size());
    for (std::size_t n = 0; n < theta.size(); ++n)
        phi(n, n) = std::polar(1.0, theta[n]);
    const CVector expected = r.g(1, 2) + r.ap_ris[1] * phi * r.ris_user[2];
    CHECK((aggregated_channel(r, phase, 1, 2) - expected).norm() < 1e-12 * expected.norm());

    const auto zero = ChannelStatistics::zeros(2, 2, 3, 2);
    Rng rng2 = make_stream(1);
    const auto rz = sample_channel_realization(zero, rng2);
    CHECK(aggregated_channel(rz, PhaseShiftVector::zeros(3), 0, 0).norm() == 0.0);
}

TEST_CASE("phase vector validation")
{
    CHECK_THROWS_AS(PhaseShiftVector({0.0, 4.0}), ConfigError);
    const std::vector<double> genes{-1.0, 0.5, 2.0};
    const auto p = PhaseShiftVector::from_normalized(genes);
    CHECK(p[0] == doctest::Approx(-pi));
    CHECK(p[1] == doctest::Approx(pi / 2));
    CHECK(p[2] == doctest::Approx(pi));
}
