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

#include "riscf/spectral_efficiency.hpp"

#include <cmath>

using namespace riscf;

namespace {

// One AP, no RIS contribution, G = g I for every user.
ChannelStatistics rayleigh_only(std::size_t M, std::size_t K, double g)
{
    auto s = ChannelStatistics::zeros(1, M, 2, K);
    for (auto &c : s.direct_cov)
        c = g * CMatrix::Identity(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(M));
    return s;
}

ChannelStatistics desk_statistics()
{
    ChannelScenario sc;
    sc.geometry.num_aps = 3;
    sc.geometry.num_users = 4;
    sc.correlation.antennas_per_ap = 2;
    sc.correlation.ris_elements = 6;
    sc.unblocked_probability = 0.5;
    return generate_statistics(sc, 3);
}

} // namespace

TEST_CASE("ergodic SE formula")
{
    SeConfig c;
    CHECK(ergodic_se(1.0, c, 1) == doctest::Approx(9.95)); // 10 MHz (1 - 1/200) log2(2)
    CHECK(ergodic_se(0.0, c, 1) == 0.0);
    CHECK(ergodic_se(3.0, c, 100) == doctest::Approx(10.0));
    CHECK_THROWS_AS(ergodic_se(-1.0, c, 1), ConfigError);
    CHECK_THROWS_AS(ergodic_se(1.0, c, 201), ConfigError);
}

TEST_CASE("single user Rayleigh SINR matches the analytic value")
{
    const std::size_t M = 4;
    const double g = 0.5, p = 2.0, pu = 3.0;
    const auto stats = rayleigh_only(M, 1, g);
    const auto pilots = pilot_assign(1, 1);
    SeConfig c;
    c.trials = 40000;
    c.uplink_snr = pu;
    const auto r = uplink_sinr(stats, PhaseShiftVector::zeros(2), pilots, p, c, 5);
    // estimate covariance c I with c = p g^2 / (p g + 1)
    const double ce = p * g * g / (p * g + 1.0);
    const double expected = pu * static_cast<double>(M) * ce / (pu * g + 1.0);
    CHECK(r[0].sinr == doctest::Approx(expected).epsilon(0.03));
    CHECK(r[0].desired == doctest::Approx(pu * M * M * ce * ce).epsilon(0.03));
    CHECK(r[0].noise == doctest::Approx(M * ce).epsilon(0.03));
    CHECK(r[0].interference == 0.0);
    CHECK_FALSE(r[0].degenerate);
}

TEST_CASE("pilot sharing adds coherent interference")
{
    // identical users on one pilot share the estimate u^ with covariance c I, c = p g^2 / (2 p g + 1),
    // so E|UI|^2 = p_u ((M c)^2 + M c g)
    const std::size_t M = 4;
    const double g = 1.0, p = 1.0;
    const auto stats = rayleigh_only(M, 2, g);
    SeConfig c;
    c.trials = 20000;
    const auto shared = uplink_sinr(stats, PhaseShiftVector::zeros(2), pilot_assign(2, 1), p, c, 6);
    const auto orthogonal =
        uplink_sinr(stats, PhaseShiftVector::zeros(2), pilot_assign(2, 2), p, c, 6);
    const double ce = p * g * g / (2.0 * p * g + 1.0);
    CHECK(shared[0].interference == doctest::Approx(p * (M * M * ce * ce + M * ce * g)).epsilon(0.03));
    // orthogonal pilots leave only the non-coherent part M c' g, c' = 2 p g^2 / (2 p g + 1)
    CHECK(orthogonal[0].interference == doctest::Approx(p * M * (2.0 * ce) * g).epsilon(0.03));
    CHECK(shared[0].sinr < orthogonal[0].sinr);
}

TEST_CASE("the estimate is orthogonal to its error")
{
    // E{u^H u} = E{||u^||^2}, which the desired-signal term relies on
    const auto stats = desk_statistics();
    const auto pilots = pilot_assign(4, 1);
    const auto phase = PhaseShiftVector::zeros(6);
    const NmseObjective objective(stats, pilots, 50.0);
    const auto terms = objective.terms_for_ap(phase, 1);
    const ChannelSampler sampler(stats);
    Rng rng = make_stream(77);
    cdouble cross = 0.0;
    double power = 0.0, scale = 0.0;
    const int S = 100000;
    for (int t = 0; t < S; ++t) {
        const auto h = sampler.draw(rng);
        const CVector y = received_pilot_signal(h, phase, pilots, 50.0, rng, 1, 2);
        const CVector u_hat = lmmse_estimate(y, terms[2]);
        const CVector u = aggregated_channel(h, phase, 1, 2);
        cross += u_hat.dot(u - u_hat);
        power += u_hat.squaredNorm();
        scale += std::sqrt(u_hat.squaredNorm() * (u - u_hat).squaredNorm());
    }
    CHECK(std::abs(cross) / S < 0.02 * scale / S);
    CHECK(power > 0.0);
}

TEST_CASE("SINR is reproducible and independent of the thread count")
{
    const auto stats = desk_statistics();
    const auto pilots = pilot_assign(4, 2);
    std::vector<double> theta{0.1, -0.4, 2.0, 3.0, -1.5, 0.7};
    const PhaseShiftVector phase(theta);
    SeConfig one;
    one.trials = 300;
    SeConfig many = one;
    many.threads = 3;
    const auto a = uplink_sinr(stats, phase, pilots, 100.0, one, 9);
    const auto b = uplink_sinr(stats, phase, pilots, 100.0, many, 9);
    const auto c = uplink_sinr(stats, phase, pilots, 100.0, one, 10);
    for (std::size_t k = 0; k < 4; ++k) {
        CHECK(a[k].sinr == b[k].sinr);
        CHECK(a[k].sinr >= 0.0);
    }
    CHECK(a[0].sinr != c[0].sinr);
}

TEST_CASE("Monte Carlo SINR stabilizes with more trials")
{
    ChannelScenario sc;
    sc.geometry.num_aps = 4;
    sc.geometry.num_users = 8;
    sc.correlation.antennas_per_ap = 4;
    sc.correlation.ris_elements = 32;
    const auto stats = generate_statistics(sc, 3);
    const auto pilots = pilot_assign(8, 2);
    const auto phase = PhaseShiftVector::zeros(32);
    SeConfig c;
    c.trials = 10000;
    const auto a = uplink_sinr(stats, phase, pilots, 100.0, c, 1);
    c.trials = 20000;
    const auto b = uplink_sinr(stats, phase, pilots, 100.0, c, 1);
    for (std::size_t k = 0; k < 8; ++k)
        CHECK(std::abs(a[k].sinr - b[k].sinr) < 0.05 * b[k].sinr);
}

TEST_CASE("power control and validation")
{
    const auto stats = rayleigh_only(2, 2, 1.0);
    const auto pilots = pilot_assign(2, 2);
    SeConfig c;
    c.trials = 100;
    c.power_coefficients = {0.0, 1.0};
    const auto r = uplink_sinr(stats, PhaseShiftVector::zeros(2), pilots, 1.0, c, 2);
    CHECK(r[0].degenerate);
    CHECK(r[0].sinr == 0.0);
    CHECK(r[1].sinr > 0.0);

    c.power_coefficients = {1.0};
    CHECK_THROWS_AS(uplink_sinr(stats, PhaseShiftVector::zeros(2), pilots, 1.0, c, 2), ConfigError);
    c.power_coefficients = {};
    c.trials = 0;
    CHECK_THROWS_AS(uplink_sinr(stats, PhaseShiftVector::zeros(2), pilots, 1.0, c, 2), ConfigError);
    c.trials = 10;
    c.coherence_block = 1;
    CHECK_THROWS_AS(uplink_sinr(stats, PhaseShiftVector::zeros(2), pilots, 1.0, c, 2), ConfigError);
}
