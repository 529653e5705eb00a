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

#include "riscf/spectral_efficiency.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace riscf {

void SeConfig::validate(std::size_t num_users, std::size_t tau_p) const
{
    if (!(bandwidth_mhz > 0.0))
        throw ConfigError("se.bandwidth_mhz must be positive");
    if (coherence_block < 1 || tau_p > coherence_block)
        throw ConfigError("se.coherence_block must be at least the pilot length");
    if (!(uplink_snr >= 0.0))
        throw ConfigError("se.uplink_snr must be nonnegative");
    if (!power_coefficients.empty() && power_coefficients.size() != num_users)
        throw ConfigError("se.power_coefficients must have one entry per user");
    for (double e : power_coefficients)
        if (!(e >= 0.0 && e <= 1.0))
            throw ConfigError("se.power_coefficients must lie in [0, 1]");
    if (trials < 1)
        throw ConfigError("se.trials must be at least 1");
}

namespace {

// Sums over a block of trials. Blocks have a fixed size and are reduced in order, so the
// totals are independent of how blocks are spread over threads.
struct Moments {
    std::size_t K = 0;
    std::vector<double> s_power;        // sum_t |s_kk'|^2, K x K row-major (k, k')
    std::vector<double> estimate_power; // sum_t sum_m ||u^_mk||^2

    explicit Moments(std::size_t users = 0)
        : K(users), s_power(users * users), estimate_power(users)
    {
    }
    void add(const Moments &o)
    {
        for (std::size_t i = 0; i < s_power.size(); ++i)
            s_power[i] += o.s_power[i];
        for (std::size_t i = 0; i < estimate_power.size(); ++i)
            estimate_power[i] += o.estimate_power[i];
    }
};

constexpr std::size_t block_size = 32;

} // namespace

std::vector<UserSinr> uplink_sinr(const ChannelStatistics &stats, const PhaseShiftVector &phase,
                                  const PilotAssignment &pilots, double pilot_snr,
                                  const SeConfig &config, std::uint64_t seed)
{
    const std::size_t L = stats.num_aps, K = stats.num_users;
    const auto M = static_cast<Eigen::Index>(stats.antennas);
    config.validate(K, pilots.tau_p);
    const double p_u = config.uplink_snr_or(pilot_snr);

    const NmseObjective objective(stats, pilots, pilot_snr);
    std::vector<std::vector<EstimatorTerms>> terms(L);
    for (std::size_t m = 0; m < L; ++m)
        terms[m] = objective.terms_for_ap(phase, m);
    const ChannelSampler sampler(objective.statistics());

    const CVector diag = phase.diagonal();
    const double scale = std::sqrt(pilot_snr * static_cast<double>(pilots.tau_p));
    auto run_trial = [&](std::size_t t, Moments &acc) {
        Rng rng = make_stream(seed, t);
        const ChannelRealization h = sampler.draw(rng);
        CMatrix reflected(static_cast<Eigen::Index>(stats.ris_elements), static_cast<Eigen::Index>(K));
        for (std::size_t k = 0; k < K; ++k)
            reflected.col(static_cast<Eigen::Index>(k)) = diag.cwiseProduct(h.ris_user[k]);
        // s[k][k'] = sum_m u^_mk^H u_mk'
        std::vector<cdouble> s(K * K, cdouble{0.0, 0.0});
        CMatrix u(M, static_cast<Eigen::Index>(K));
        CMatrix pilot_sum(M, static_cast<Eigen::Index>(pilots.tau_p));
        for (std::size_t m = 0; m < L; ++m) {
            u.noalias() = h.ap_ris[m] * reflected;
            for (std::size_t k = 0; k < K; ++k)
                u.col(static_cast<Eigen::Index>(k)) += h.g(m, k);
            for (Eigen::Index q = 0; q < pilot_sum.cols(); ++q)
                pilot_sum.col(q) = complex_normal_vector(M, rng);
            for (std::size_t k = 0; k < K; ++k)
                pilot_sum.col(static_cast<Eigen::Index>(pilots.pilot_of[k])) +=
                    scale * u.col(static_cast<Eigen::Index>(k));
            for (std::size_t k = 0; k < K; ++k) {
                const CVector u_hat = lmmse_estimate(
                    pilot_sum.col(static_cast<Eigen::Index>(pilots.pilot_of[k])), terms[m][k]);
                acc.estimate_power[k] += u_hat.squaredNorm();
                for (std::size_t j = 0; j < K; ++j)
                    s[k * K + j] += u_hat.dot(u.col(static_cast<Eigen::Index>(j)));
            }
        }
        for (std::size_t k = 0; k < K; ++k) {
            for (std::size_t j = 0; j < K; ++j)
                acc.s_power[k * K + j] += std::norm(s[k * K + j]);
        }
    };

    const std::size_t blocks = (config.trials + block_size - 1) / block_size;
    std::vector<Moments> partial(blocks, Moments(K));
    auto run_block = [&](std::size_t b) {
        const std::size_t end = std::min(config.trials, (b + 1) * block_size);
        for (std::size_t t = b * block_size; t < end; ++t)
            run_trial(t, partial[b]);
    };
    if (config.threads <= 1 || blocks < 2) {
        for (std::size_t b = 0; b < blocks; ++b)
            run_block(b);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < std::min(config.threads, blocks); ++w)
            pool.emplace_back([&] {
                for (std::size_t b = next++; b < blocks; b = next++)
                    run_block(b);
            });
    }
    Moments total(K);
    for (const auto &p : partial)
        total.add(p);

    const double n = static_cast<double>(config.trials);
    std::vector<UserSinr> out(K);
    for (std::size_t k = 0; k < K; ++k) {
        UserSinr &r = out[k];
        // The LMMSE error is orthogonal to the estimate, so E{sum_m u^H u} = E{sum_m ||u^||^2};
        // the right-hand side is sampled because it has far less variance for weak users.
        const double mean = total.estimate_power[k] / n;
        const double eta_k = config.eta(k);
        r.desired = p_u * eta_k * mean * mean;
        r.beamforming = p_u * eta_k * std::max(0.0, total.s_power[k * K + k] / n - mean * mean);
        for (std::size_t j = 0; j < K; ++j)
            if (j != k)
                r.interference += p_u * config.eta(j) * total.s_power[k * K + j] / n;
        // The data-phase noise is CN(0, I_M) per AP and independent of everything else, so
        // E|NO|^2 = E{sum_m ||u^_mk||^2}.
        r.noise = total.estimate_power[k] / n;
        const double denominator = r.beamforming + r.interference + r.noise;
        if (r.desired <= 0.0) {
            r.sinr = 0.0;
            r.degenerate = true;
        } else {
            r.sinr = denominator > 0.0 ? r.desired / denominator : 0.0;
            r.degenerate = !(denominator > 0.0);
        }
    }
    return out;
}

double ergodic_se(double sinr, const SeConfig &config, std::size_t tau_p)
{
    if (!(sinr >= 0.0))
        throw ConfigError("SINR must be nonnegative");
    if (config.coherence_block < 1 || tau_p > config.coherence_block)
        throw ConfigError("pilot length exceeds the coherence block");
    const double prelog =
        1.0 - static_cast<double>(tau_p) / static_cast<double>(config.coherence_block);
    return config.bandwidth_mhz * prelog * std::log2(1.0 + sinr);
}

} // namespace riscf
