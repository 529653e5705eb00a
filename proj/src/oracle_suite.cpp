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

#include "riscf/harness.hpp"
#include "riscf/linalg.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

namespace riscf {

OracleSuiteConfig::OracleSuiteConfig()
{
    scenario.name = "desk";
    scenario.channel.geometry.num_aps = 2;
    scenario.channel.geometry.num_users = 4;
    scenario.channel.correlation.antennas_per_ap = 2;
    scenario.channel.correlation.ris_elements = 8;
    scenario.channel.unblocked_probability = 0.5;
    scenario.pilot_length = 2;
}

namespace {

constexpr std::size_t block_size = 1000;

struct LinkSums {
    CVector u;
    CMatrix uu, uy, yy, ee;
    double e2 = 0.0, u2 = 0.0;
};

struct Sums {
    std::vector<LinkSums> links;   // m * K + k
    std::vector<CMatrix> scatter;  // per AP, sum H~ D H~^H
    std::vector<CMatrix> cross;    // m * K * K + k * K + k2, k < k2

    Sums(std::size_t L, std::size_t M, std::size_t K)
        : links(L * K), scatter(L, CMatrix::Zero(M, M)), cross(L * K * K, CMatrix::Zero(M, M))
    {
        for (auto &s : links) {
            s.u = CVector::Zero(M);
            s.uu = s.uy = s.yy = s.ee = CMatrix::Zero(M, M);
        }
    }

    void add(const Sums &o)
    {
        for (std::size_t i = 0; i < links.size(); ++i) {
            links[i].u += o.links[i].u;
            links[i].uu += o.links[i].uu;
            links[i].uy += o.links[i].uy;
            links[i].yy += o.links[i].yy;
            links[i].ee += o.links[i].ee;
            links[i].e2 += o.links[i].e2;
            links[i].u2 += o.links[i].u2;
        }
        for (std::size_t i = 0; i < scatter.size(); ++i)
            scatter[i] += o.scatter[i];
        for (std::size_t i = 0; i < cross.size(); ++i)
            cross[i] += o.cross[i];
    }
};

} // namespace

std::vector<OracleCheck> run_oracle_suite(const OracleSuiteConfig &config)
{
    config.scenario.validate();
    if (config.samples < 2)
        throw ConfigError("oracle suite needs at least two samples");

    const ChannelStatistics stats = generate_statistics(config.scenario.channel, config.seed);
    const PilotAssignment pilots =
        pilot_assign(stats.num_users, config.scenario.pilot_length, PilotPolicy::round_robin);
    const double p = config.scenario.pilot_snr;
    const std::size_t L = stats.num_aps, M = stats.antennas, N = stats.ris_elements,
                      K = stats.num_users;

    Rng setup = make_stream(config.seed, 11);
    const PhaseShiftVector phase = random_phase(N, setup);
    const CMatrix a = complex_normal_matrix(N, N, setup);
    const CMatrix d = a * a.adjoint() / static_cast<double>(N);

    const MomentOracles oracles(stats, phase);
    const NmseObjective objective(stats, pilots, p);
    std::vector<std::vector<EstimatorTerms>> terms(L);
    for (std::size_t m = 0; m < L; ++m)
        terms[m] = objective.terms_for_ap(phase, m);

    const ChannelSampler sampler(stats);
    const std::size_t blocks = (config.samples + block_size - 1) / block_size;
    std::vector<std::optional<Sums>> partial(blocks);

    auto run_block = [&](std::size_t b) {
        Sums s(L, M, K);
        const std::size_t end = std::min(config.samples, (b + 1) * block_size);
        std::vector<CVector> u(K), noise(pilots.tau_p);
        for (std::size_t t = b * block_size; t < end; ++t) {
            Rng rng = make_stream(config.seed, 1000, t);
            const ChannelRealization r = sampler.draw(rng);
            for (std::size_t m = 0; m < L; ++m) {
                for (auto &w : noise)
                    w = complex_normal_vector(M, rng);
                const CMatrix h_nlos = r.ap_ris[m] - stats.ap_ris_los[m];
                s.scatter[m] += h_nlos * d * h_nlos.adjoint();
                for (std::size_t k = 0; k < K; ++k)
                    u[k] = aggregated_channel(r, phase, m, k);
                for (std::size_t k = 0; k < K; ++k) {
                    const EstimatorTerms &tk = terms[m][k];
                    LinkSums &ls = s.links[stats.link(m, k)];
                    const CVector y = received_pilot_signal(r, phase, pilots, p, m, k,
                                                            noise[pilots.pilot_of[k]]);
                    const CVector uc = u[k] - tk.mean;
                    const CVector yc = y - tk.pilot_mean;
                    const CVector e = u[k] - lmmse_estimate(y, tk);
                    ls.u += u[k];
                    ls.uu += uc * uc.adjoint();
                    ls.uy += uc * yc.adjoint();
                    ls.yy += yc * yc.adjoint();
                    ls.ee += e * e.adjoint();
                    ls.e2 += e.squaredNorm();
                    ls.u2 += u[k].squaredNorm();
                    for (std::size_t k2 = k + 1; k2 < K; ++k2)
                        s.cross[(m * K + k) * K + k2] += uc * (u[k2] - terms[m][k2].mean).adjoint();
                }
            }
        }
        partial[b] = std::move(s);
    };

    const std::size_t threads = std::max<std::size_t>(1, std::min(config.threads, blocks));
    if (threads == 1) {
        for (std::size_t b = 0; b < blocks; ++b)
            run_block(b);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < threads; ++w)
            pool.emplace_back([&] {
                for (std::size_t b = next++; b < blocks; b = next++)
                    run_block(b);
            });
    }
    Sums total(L, M, K);
    for (const auto &s : partial)
        total.add(*s);

    const double S = static_cast<double>(config.samples);
    using linalg::relative_frobenius_error;
    auto check = [&](std::string name) {
        return OracleCheck{std::move(name), 0.0, config.tolerance};
    };
    OracleCheck quadratic = check("quadratic_form"), mean = check("mean"),
                covariance = check("nlos_covariance"), cross = check("cross_covariance"),
                gamma = check("gamma"), psi = check("psi"), error = check("error_covariance"),
                ratio = check("nmse");
    auto worst = [](OracleCheck &c, double e) { c.error = std::max(c.error, e); };

    for (std::size_t m = 0; m < L; ++m) {
        worst(quadratic, relative_frobenius_error(total.scatter[m] / S, oracles.quadratic_form(d, m)));
        for (std::size_t k = 0; k < K; ++k) {
            const EstimatorTerms &tk = terms[m][k];
            const LinkSums &ls = total.links[stats.link(m, k)];
            // Scaled by the RMS channel norm: a near-zero LoS mean has no usable relative error.
            const double rms = std::sqrt(oracles.second_moment(m, k).trace().real());
            worst(mean, rms > 0.0 ? (ls.u / S - oracles.mean(m, k)).norm() / rms : 0.0);
            worst(covariance, relative_frobenius_error(ls.uu / S, oracles.nlos_covariance(m, k)));
            // Cross moments are scaled by sqrt(||E u~u~^H|| ||E y~y~^H||), their Cauchy-Schwarz bound.
            worst(gamma, (ls.uy / S - tk.gamma).norm() /
                             std::sqrt(tk.prior_covariance().norm() * tk.psi.norm()));
            worst(psi, relative_frobenius_error(ls.yy / S, tk.psi));
            worst(error, relative_frobenius_error(ls.ee / S, error_covariance(tk)));
            const double closed = nmse(tk).value;
            if (closed > 0.0)
                worst(ratio, std::abs(ls.e2 / ls.u2 - closed) / closed);
            for (std::size_t k2 = k + 1; k2 < K; ++k2) {
                const CMatrix ref = oracles.cross_covariance(m, k, k2);
                const double scale = std::sqrt(oracles.nlos_covariance(m, k).norm() *
                                               oracles.nlos_covariance(m, k2).norm());
                if (scale > 0.0)
                    worst(cross, (total.cross[(m * K + k) * K + k2] / S - ref).norm() / scale);
            }
        }
    }
    return {quadratic, mean, covariance, cross, gamma, psi, error, ratio};
}

} // namespace riscf
