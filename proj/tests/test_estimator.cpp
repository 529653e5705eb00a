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

#include "riscf/estimator.hpp"
#include "riscf/linalg.hpp"

#include <cmath>
#include <memory>

using namespace riscf;

namespace {

CMatrix random_psd(Eigen::Index n, Rng &rng, double scale = 1.0)
{
    const CMatrix a = complex_normal_matrix(n, n, rng);
    return scale * a * a.adjoint() / static_cast<double>(n);
}

// O(1) synthetic statistics; every link blocked with probability 1/2.
ChannelStatistics random_statistics(std::size_t L, std::size_t M, std::size_t N, std::size_t K,
                                    Rng &rng)
{
    auto s = ChannelStatistics::zeros(L, M, N, K);
    const auto Mi = static_cast<Eigen::Index>(M), Ni = static_cast<Eigen::Index>(N);
    for (std::size_t m = 0; m < L; ++m) {
        s.ap_side_cov[m] = random_psd(Mi, rng, 0.5);
        s.ris_side_cov[m] = random_psd(Ni, rng);
        s.ap_ris_los[m] = complex_normal_matrix(Mi, Ni, rng) / std::sqrt(static_cast<double>(N));
        for (std::size_t k = 0; k < K; ++k) {
            const bool open = std::uniform_int_distribution<int>(0, 1)(rng) == 1;
            s.blocking[s.link(m, k)] = open ? 1 : 0;
            s.direct_cov[s.link(m, k)] = open ? random_psd(Mi, rng) : CMatrix::Zero(Mi, Mi);
        }
    }
    for (std::size_t k = 0; k < K; ++k) {
        s.user_ris_cov[k] = random_psd(Ni, rng, 0.3);
        s.ris_user_los[k] = complex_normal_vector(Ni, rng) / std::sqrt(static_cast<double>(N));
    }
    return s;
}

PhaseShiftVector random_angles(std::size_t n, Rng &rng)
{
    std::uniform_real_distribution<double> u(-pi, pi);
    std::vector<double> t(n);
    for (auto &x : t)
        x = u(rng);
    return PhaseShiftVector(t);
}

// Straight transcription of the closed forms with an explicit Phi and a dense inverse.
struct DenseLink {
    CMatrix delta, gamma, psi, error;
    CVector mean;
    double alpha = 0.0, nmse = 0.0;
};

DenseLink dense_link(const ChannelStatistics &s, const PhaseShiftVector &phase,
                     const PilotAssignment &pilots, double p, std::size_t m, std::size_t k)
{
    const auto N = static_cast<Eigen::Index>(s.ris_elements);
    const auto M = static_cast<Eigen::Index>(s.antennas);
    CMatrix phi = CMatrix::Zero(N, N);
    for (Eigen::Index n = 0; n < N; ++n)
        phi(n, n) = std::polar(1.0, phase[static_cast<std::size_t>(n)]);
    const CMatrix &hbar = s.ap_ris_los[m], &r_ap = s.ap_side_cov[m], &r_ris = s.ris_side_cov[m];
    const double ptau = p * static_cast<double>(pilots.tau_p);

    auto delta_of = [&](std::size_t j) {
        const CMatrix rot = phi * s.user_ris_cov[j] * phi.adjoint();
        return CMatrix(s.G(m, j) + hbar * rot * hbar.adjoint() + (r_ris * rot).trace() * r_ap);
    };
    CVector group = CVector::Zero(N);
    CMatrix group_delta = CMatrix::Zero(M, M);
    for (std::size_t j = 0; j < pilots.num_users(); ++j)
        if (pilots.pilot_of[j] == pilots.pilot_of[k]) {
            group += s.ris_user_los[j];
            group_delta += delta_of(j);
        }
    const CVector &zk = s.ris_user_los[k];

    DenseLink d;
    d.delta = delta_of(k);
    d.mean = hbar * phi * zk;
    d.alpha = (r_ris * phi * zk * zk.adjoint() * phi.adjoint()).trace().real();
    d.gamma = std::sqrt(ptau) *
              (d.delta + (r_ris * phi * zk * group.adjoint() * phi.adjoint()).trace() * r_ap);
    d.psi = ptau * (r_ris * phi * group * group.adjoint() * phi.adjoint()).trace() * r_ap +
            ptau * group_delta + CMatrix::Identity(M, M);
    const CMatrix prior = d.delta + d.alpha * r_ap;
    d.error = prior - d.gamma * d.psi.inverse() * d.gamma.adjoint();
    d.nmse = d.error.trace().real() / (d.mean.squaredNorm() + prior.trace().real());
    return d;
}

double rel(const CMatrix &a, const CMatrix &b)
{
    return linalg::relative_frobenius_error(a, b);
}

} // namespace

TEST_CASE("round-robin pilots")
{
    const auto a = pilot_assign(5, 2);
    CHECK(a.pilot_of == std::vector<std::size_t>{0, 1, 0, 1, 0});
    CHECK(a.copilots(0) == std::vector<std::size_t>{0, 2, 4});
    CHECK(a.copilots(3) == std::vector<std::size_t>{1, 3});
    CHECK(a.distinct_pilots() == 2);
    CHECK_NOTHROW(a.validate());

    const auto orthogonal = pilot_assign(4, 6);
    for (std::size_t k = 0; k < 4; ++k)
        CHECK(orthogonal.copilots(k) == std::vector<std::size_t>{k});

    auto broken = a;
    broken.copilot_sets[1] = {1};
    CHECK_THROWS_AS(broken.validate(), ContractError);
    CHECK_THROWS_AS(pilot_assign(3, 0), ConfigError);
}

TEST_CASE("estimator terms match a dense implementation")
{
    Rng rng = make_stream(11);
    for (int rep = 0; rep < 5; ++rep) {
        const auto stats = random_statistics(3, 3, 7, 5, rng);
        const auto pilots = pilot_assign(5, 2);
        const auto phase = random_angles(7, rng);
        const double p = 3.0;
        const NmseObjective objective(stats, pilots, p);
        double total = 0.0;
        for (std::size_t m = 0; m < 3; ++m) {
            const auto terms = objective.terms_for_ap(phase, m);
            for (std::size_t k = 0; k < 5; ++k) {
                const auto d = dense_link(stats, phase, pilots, p, m, k);
                const auto &t = terms[k];
                CHECK(rel(t.delta, d.delta) < 1e-12);
                CHECK(rel(t.gamma, d.gamma) < 1e-12);
                CHECK(rel(t.psi, d.psi) < 1e-12);
                CHECK(rel(t.mean, d.mean) < 1e-12);
                CHECK(t.alpha == doctest::Approx(d.alpha).epsilon(1e-12));
                CHECK(rel(error_covariance(t), d.error) < 1e-10);
                CHECK(nmse(t).value == doctest::Approx(d.nmse).epsilon(1e-10));
                CHECK(nmse_complement_form(t) == doctest::Approx(d.nmse).epsilon(1e-9));

                const auto single = estimator_terms(stats, phase, pilots, p, m, k);
                CHECK(rel(single.gamma, d.gamma) < 1e-12);
                total += d.nmse;
            }
        }
        CHECK(objective(phase) == doctest::Approx(total / 15.0).epsilon(1e-10));
        CHECK(average_nmse(stats, phase, pilots, p) == doctest::Approx(total / 15.0).epsilon(1e-10));
    }
}

TEST_CASE("single-user scalar channel without RIS")
{
    // G = g I, orthogonal pilots: NMSE = 1 / (1 + p tau g)
    auto s = ChannelStatistics::zeros(1, 3, 2, 1);
    const double g = 0.7, p = 4.0;
    s.direct_cov[0] = g * CMatrix::Identity(3, 3);
    const auto pilots = pilot_assign(1, 2);
    const auto t = estimator_terms(s, PhaseShiftVector::zeros(2), pilots, p, 0, 0);
    CHECK(nmse(t).value == doctest::Approx(1.0 / (1.0 + 2.0 * p * g)));
}

TEST_CASE("pilot contamination floors the NMSE")
{
    // two users on one pilot with identical G = g I: NMSE = 1 - p g / (2 p g + 1) -> 1/2
    auto s = ChannelStatistics::zeros(1, 2, 2, 2);
    const double g = 1.0;
    s.direct_cov[0] = s.direct_cov[1] = g * CMatrix::Identity(2, 2);
    const auto pilots = pilot_assign(2, 1);
    for (double p : {0.1, 10.0, 1e6}) {
        const auto t = estimator_terms(s, PhaseShiftVector::zeros(2), pilots, p, 0, 0);
        CHECK(nmse(t).value == doctest::Approx(1.0 - p * g / (2.0 * p * g + 1.0)));
    }
}

TEST_CASE("NMSE is bounded and decreases with pilot power under orthogonal pilots")
{
    Rng rng = make_stream(12);
    for (int rep = 0; rep < 20; ++rep) {
        const auto stats = random_statistics(2, 2, 5, 3, rng);
        const auto phase = random_angles(5, rng);
        for (std::size_t tau : {1, 3}) {
            const auto pilots = pilot_assign(3, tau);
            std::vector<double> previous(6, 2.0);
            for (double p = 1e-2; p <= 1e4 * 1.0001; p *= 10.0) {
                const auto links = NmseObjective(stats, pilots, p).per_link(phase);
                for (std::size_t i = 0; i < links.size(); ++i) {
                    CHECK(links[i].value >= 0.0);
                    CHECK(links[i].value <= 1.0);
                    if (tau == 3)
                        CHECK(links[i].value <= previous[i] + 1e-12);
                    previous[i] = links[i].value;
                }
            }
        }
    }
}

TEST_CASE("a common phase rotation leaves the NMSE unchanged")
{
    Rng rng = make_stream(13);
    const auto stats = random_statistics(2, 3, 6, 4, rng);
    const auto pilots = pilot_assign(4, 2);
    const NmseObjective objective(stats, pilots, 5.0);
    const auto phase = random_angles(6, rng);
    std::vector<double> shifted = phase.angles();
    for (auto &t : shifted)
        t = std::remainder(t + 1.1, 2.0 * pi);
    CHECK(objective(PhaseShiftVector(shifted)) == doctest::Approx(objective(phase)).epsilon(1e-12));
}

TEST_CASE("all-zero statistics are flagged degenerate")
{
    const auto s = ChannelStatistics::zeros(1, 2, 3, 2);
    const auto pilots = pilot_assign(2, 1);
    const auto t = estimator_terms(s, PhaseShiftVector::zeros(3), pilots, 1.0, 0, 1);
    const auto v = nmse(t);
    CHECK(v.degenerate);
    CHECK(v.value == 0.0);
}

TEST_CASE("LMMSE estimate")
{
    Rng rng = make_stream(14);
    const auto stats = random_statistics(1, 3, 4, 3, rng);
    const auto pilots = pilot_assign(3, 2);
    const auto phase = random_angles(4, rng);
    const auto t = estimator_terms(stats, phase, pilots, 2.0, 0, 2);
    // the observation at its mean maps to the prior mean
    CHECK((lmmse_estimate(t.pilot_mean, t) - t.mean).norm() < 1e-12);
    // affine in y with slope Gamma Psi^-1
    const CVector dy = complex_normal_vector(3, rng);
    const CVector slope = t.gamma * t.psi.inverse() * dy;
    CHECK((lmmse_estimate(t.pilot_mean + dy, t) - t.mean - slope).norm() < 1e-10 * slope.norm());
    CHECK_THROWS_AS(lmmse_estimate(CVector::Zero(2), t), ConfigError);

    // received pilot: sqrt(p tau) sum of co-pilot channels plus the given noise
    ChannelRealization r = sample_channel_realization(stats, rng);
    const CVector w = complex_normal_vector(3, rng);
    const CVector y = received_pilot_signal(r, phase, pilots, 2.0, 0, 2, w);
    const CVector expected =
        w + 2.0 * (aggregated_channel(r, phase, 0, 0) + aggregated_channel(r, phase, 0, 2));
    CHECK((y - expected).norm() < 1e-12 * expected.norm());
}

TEST_CASE("error covariance is PSD and below the prior")
{
    Rng rng = make_stream(15);
    for (int rep = 0; rep < 10; ++rep) {
        const auto stats = random_statistics(2, 3, 6, 4, rng);
        const auto pilots = pilot_assign(4, 1);
        const auto terms = NmseObjective(stats, pilots, 10.0).terms_for_ap(random_angles(6, rng), 1);
        for (const auto &t : terms) {
            const CMatrix c = error_covariance(t);
            CHECK(linalg::is_hermitian_psd(c, 1e-10, 1e-8));
            CHECK(linalg::is_hermitian_psd(t.prior_covariance() - c, 1e-10, 1e-8));
        }
    }
}

TEST_CASE("moment identities")
{
    Rng rng = make_stream(16);
    const auto stats = random_statistics(2, 3, 5, 3, rng);
    const auto phase = random_angles(5, rng);
    const MomentOracles oracles(stats, phase);
    const CMatrix d = random_psd(5, rng);
    const CMatrix expected = (stats.ris_side_cov[1] * d).trace() * stats.ap_side_cov[1];
    CHECK(rel(oracles.quadratic_form(d, 1), expected) < 1e-12);
    CHECK(rel(oracles.cross_covariance(0, 2, 2), oracles.nlos_covariance(0, 2)) < 1e-14);

    const auto pilots = pilot_assign(3, 3);
    const auto t = estimator_terms(stats, phase, pilots, 1.0, 0, 1);
    CHECK(rel(oracles.nlos_covariance(0, 1), t.prior_covariance()) < 1e-12);
    CHECK(rel(oracles.second_moment(0, 1), t.mean * t.mean.adjoint() + t.prior_covariance()) < 1e-12);
    // the cross term is Hermitian-swapped when the users are exchanged
    CHECK(rel(oracles.cross_covariance(1, 0, 2), oracles.cross_covariance(1, 2, 0).adjoint()) < 1e-12);
}

TEST_CASE("objective input validation and copy safety")
{
    Rng rng = make_stream(17);
    const auto stats = random_statistics(1, 2, 4, 2, rng);
    const auto pilots = pilot_assign(2, 1);
    CHECK_THROWS_AS(NmseObjective(stats, pilots, 0.0), ConfigError);
    CHECK_THROWS_AS(NmseObjective(stats, pilot_assign(3, 1), 1.0), ConfigError);
    const auto phase = random_angles(4, rng);

    auto original = std::make_unique<NmseObjective>(stats, pilots, 1.0);
    const double before = (*original)(phase);
    const NmseObjective copy = *original;
    original.reset();
    CHECK(copy(phase) == before);
    CHECK_THROWS_AS(copy(PhaseShiftVector::zeros(3)), ConfigError);
}
