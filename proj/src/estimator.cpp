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

#include "riscf/estimator.hpp"
#include "riscf/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace riscf {

// ---------- PILOTS ----------

std::size_t PilotAssignment::distinct_pilots() const
{
    return std::set<std::size_t>(pilot_of.begin(), pilot_of.end()).size();
}

void PilotAssignment::validate() const
{
    if (tau_p < 1)
        throw ConfigError("pilot length must be at least 1");
    if (copilot_sets.size() != pilot_of.size())
        throw ContractError("pilot assignment: co-pilot sets do not cover every user");
    if (distinct_pilots() > tau_p)
        throw ContractError("pilot assignment uses more pilots than tau_p");
    for (std::size_t k = 0; k < pilot_of.size(); ++k) {
        if (pilot_of[k] >= tau_p)
            throw ContractError("pilot index out of range");
        std::vector<std::size_t> expected;
        for (std::size_t j = 0; j < pilot_of.size(); ++j)
            if (pilot_of[j] == pilot_of[k])
                expected.push_back(j);
        if (copilot_sets[k] != expected)
            throw ContractError("co-pilot set of user " + std::to_string(k) +
                                " is not its pilot class");
    }
}

PilotAssignment pilot_assign(std::size_t num_users, std::size_t tau_p, PilotPolicy policy)
{
    if (tau_p < 1)
        throw ConfigError("pilot length must be at least 1");
    PilotAssignment a;
    a.tau_p = tau_p;
    a.pilot_of.resize(num_users);
    switch (policy) {
    case PilotPolicy::round_robin:
        for (std::size_t k = 0; k < num_users; ++k)
            a.pilot_of[k] = k % tau_p;
        break;
    }
    a.copilot_sets.resize(num_users);
    for (std::size_t k = 0; k < num_users; ++k)
        for (std::size_t j = 0; j < num_users; ++j)
            if (a.pilot_of[j] == a.pilot_of[k])
                a.copilot_sets[k].push_back(j);
    return a;
}

CVector received_pilot_signal(const ChannelRealization &realization, const PhaseShiftVector &phase,
                              const PilotAssignment &pilots, double p, std::size_t m,
                              std::size_t k, const CVector &noise)
{
    if (!(p > 0.0))
        throw ConfigError("pilot SNR must be positive");
    const double scale = std::sqrt(p * static_cast<double>(pilots.tau_p));
    CVector y = noise;
    for (std::size_t j : pilots.copilots(k))
        y += scale * aggregated_channel(realization, phase, m, j);
    return y;
}

CVector received_pilot_signal(const ChannelRealization &realization, const PhaseShiftVector &phase,
                              const PilotAssignment &pilots, double p, Rng &rng, std::size_t m,
                              std::size_t k)
{
    const auto M = realization.ap_ris.at(m).rows();
    return received_pilot_signal(realization, phase, pilots, p, m, k, complex_normal_vector(M, rng));
}

// ---------- LMMSE TERMS ----------

CMatrix EstimatorTerms::prior_covariance() const
{
    return delta + alpha * ap_side_cov;
}

CMatrix EstimatorTerms::solve_psi(const CMatrix &b) const
{
    return psi_factor.solve(b);
}

// Phase-independent factorizations of the statistics, built once per objective.
struct StatisticsCache {
    // H-bar_m = los_left[m] * los_right[m]^H with the rank of H-bar_m as inner dimension.
    std::vector<CMatrix> los_left, los_right;
    // AP m uses distinct RIS-side covariance ris_class[m].
    std::vector<std::size_t> ris_class;
    std::vector<CMatrix> distinct_ris;

    explicit StatisticsCache(const ChannelStatistics &stats)
    {
        const std::size_t L = stats.num_aps;
        los_left.resize(L);
        los_right.resize(L);
        ris_class.resize(L);
        for (std::size_t m = 0; m < L; ++m) {
            const CMatrix &hbar = stats.ap_ris_los[m];
            Eigen::JacobiSVD<CMatrix> svd(hbar, Eigen::ComputeThinU | Eigen::ComputeThinV);
            const auto &sv = svd.singularValues();
            Eigen::Index rank = 0;
            const double floor = sv.size() > 0 ? 1e-14 * sv(0) : 0.0;
            while (rank < sv.size() && sv(rank) > floor)
                ++rank;
            los_left[m] = svd.matrixU().leftCols(rank) * sv.head(rank).asDiagonal();
            los_right[m] = svd.matrixV().leftCols(rank);

            const CMatrix &r = stats.ris_side_cov[m];
            std::size_t c = 0;
            while (c < distinct_ris.size() && distinct_ris[c] != r)
                ++c;
            if (c == distinct_ris.size())
                distinct_ris.push_back(r);
            ris_class[m] = c;
        }
    }
};

namespace {

// Phase-dependent quantities shared by every (m, k) for one phase vector.
class TermBuilder {
public:
    TermBuilder(const ChannelStatistics &stats, const StatisticsCache &cache,
                const PilotAssignment &pilots, double p, const PhaseShiftVector &phase)
        : stats_(stats), cache_(cache), pilots_(pilots), p_(p), phi_(phase.diagonal())
    {
        if (phase.size() != stats.ris_elements)
            throw ConfigError("phase vector length does not match the RIS element count");
        if (pilots.num_users() != stats.num_users)
            throw ConfigError("pilot assignment does not match the user count");
        if (!(p > 0.0) || !std::isfinite(p))
            throw ConfigError("pilot SNR must be positive and finite");
        const std::size_t K = stats.num_users;
        const auto N = static_cast<Eigen::Index>(stats.ris_elements);
        rotated_los_.resize(K);
        for (std::size_t k = 0; k < K; ++k)
            rotated_los_[k] = phi_.cwiseProduct(stats.ris_user_los[k]);
        group_los_.resize(K);
        for (std::size_t k = 0; k < K; ++k) {
            group_los_[k] = CVector::Zero(N);
            for (std::size_t j : pilots.copilots(k))
                group_los_[k] += rotated_los_[j];
        }

        // Per distinct R_RIS: Tr(R_RIS Phi R_k Phi^H), R_RIS Phi zbar_k and the group power.
        const std::size_t C = cache.distinct_ris.size();
        scatter_trace_.assign(C * K, 0.0);
        ris_w_.resize(C * K);
        group_power_.assign(C * K, 0.0);
        for (std::size_t c = 0; c < C; ++c) {
            const CMatrix &r = cache.distinct_ris[c];
            for (std::size_t k = 0; k < K; ++k) {
                const CMatrix &rk = stats.user_ris_cov[k];
                cdouble t = 0.0;
                for (Eigen::Index j = 0; j < N; ++j) {
                    cdouble col = 0.0;
                    for (Eigen::Index i = 0; i < N; ++i)
                        col += std::conj(phi_(i)) * r(i, j) * rk(j, i);
                    t += col * phi_(j);
                }
                scatter_trace_[c * K + k] = t.real();
                ris_w_[c * K + k] = r * rotated_los_[k];
                group_power_[c * K + k] = std::max(0.0, group_los_[k].dot(r * group_los_[k]).real());
            }
        }
    }

    std::vector<EstimatorTerms> for_ap(std::size_t m) const
    {
        const std::size_t K = stats_.num_users;
        const std::size_t c = cache_.ris_class[m];
        const CMatrix &hbar = stats_.ap_ris_los.at(m);
        const CMatrix &left = cache_.los_left[m];
        const CMatrix &r_ap = stats_.ap_side_cov[m];
        const double ptau = p_ * static_cast<double>(pilots_.tau_p);
        const double scale = std::sqrt(ptau);
        const auto M = static_cast<Eigen::Index>(stats_.antennas);
        // Phi^H V, so that Hbar Phi R_k Phi^H Hbar^H = left (y^H R_k y) left^H
        const CMatrix y = phi_.conjugate().asDiagonal() * cache_.los_right[m];

        std::vector<CMatrix> delta(K);
        std::vector<CVector> mean(K);
        std::vector<double> alpha(K);
        for (std::size_t k = 0; k < K; ++k) {
            const CVector &w = rotated_los_[k];
            mean[k] = hbar * w;
            alpha[k] = std::max(0.0, w.dot(ris_w_[c * K + k]).real());
            const CMatrix inner = y.adjoint() * (stats_.user_ris_cov[k] * y);
            CMatrix d = stats_.G(m, k);
            d.noalias() += left * inner * left.adjoint();
            d += scatter_trace_[c * K + k] * r_ap;
            delta[k] = linalg::hermitian_part(d);
        }

        std::vector<EstimatorTerms> out(K);
        for (std::size_t k = 0; k < K; ++k) {
            EstimatorTerms &T = out[k];
            const CVector &s = group_los_[k];
            T.delta = delta[k];
            T.alpha = alpha[k];
            T.mean = mean[k];
            T.ap_side_cov = r_ap;

            // Tr(R_RIS w_k s^H) = s^H R_RIS w_k
            const cdouble cross = s.dot(ris_w_[c * K + k]);
            T.gamma = scale * (delta[k] + cross * r_ap);

            CMatrix group_delta = CMatrix::Zero(M, M);
            T.pilot_mean = CVector::Zero(M);
            for (std::size_t j : pilots_.copilots(k)) {
                group_delta += delta[j];
                T.pilot_mean += mean[j];
            }
            T.pilot_mean *= scale;
            T.psi = ptau * group_power_[c * K + k] * r_ap + ptau * group_delta;
            T.psi += CMatrix::Identity(M, M);
            T.psi = linalg::hermitian_part(T.psi);
            T.psi_factor.compute(T.psi);
            if (T.psi_factor.info() != Eigen::Success)
                throw NumericalError("pilot covariance Psi[" + std::to_string(m) + "," +
                                     std::to_string(k) + "] is not positive definite");
        }
        return out;
    }

private:
    const ChannelStatistics &stats_;
    const StatisticsCache &cache_;
    const PilotAssignment &pilots_;
    double p_;
    CVector phi_;
    std::vector<CVector> rotated_los_; // Phi zbar_k
    std::vector<CVector> group_los_;   // sum_{k' in P_k} Phi zbar_k'
    std::vector<double> scatter_trace_, group_power_;
    std::vector<CVector> ris_w_;
};

struct TraceParts {
    double error = 0.0;     // Tr(prior) - Tr(Gamma Psi^-1 Gamma^H)
    double explained = 0.0; // Tr(Gamma Psi^-1 Gamma^H)
    double los = 0.0;       // ||mean||^2
    double prior = 0.0;     // Tr(Delta + alpha R_AP)
};

TraceParts trace_parts(const EstimatorTerms &t)
{
    TraceParts parts;
    const CMatrix x = t.solve_psi(t.gamma.adjoint());
    parts.explained = linalg::trace_of_product(t.gamma, x).real();
    parts.prior = t.delta.trace().real() + t.alpha * t.ap_side_cov.trace().real();
    parts.los = t.mean.squaredNorm();
    parts.error = parts.prior - parts.explained;
    return parts;
}

} // namespace

EstimatorTerms estimator_terms(const ChannelStatistics &stats, const PhaseShiftVector &phase,
                               const PilotAssignment &pilots, double p, std::size_t m,
                               std::size_t k)
{
    if (m >= stats.num_aps || k >= stats.num_users)
        throw ConfigError("estimator terms: link index out of range");
    const StatisticsCache cache(stats);
    auto all = TermBuilder(stats, cache, pilots, p, phase).for_ap(m);
    return std::move(all[k]);
}

CVector lmmse_estimate(const CVector &y, const EstimatorTerms &terms)
{
    if (y.size() != terms.mean.size())
        throw ConfigError("observation length does not match the antenna count");
    const CVector centred = y - terms.pilot_mean;
    CVector u_hat = terms.mean;
    u_hat.noalias() += terms.gamma * terms.solve_psi(centred);
    if (!u_hat.allFinite())
        throw NumericalError("LMMSE solve produced non-finite values");
    return u_hat;
}

CMatrix error_covariance(const EstimatorTerms &terms)
{
    const CMatrix prior = terms.prior_covariance();
    CMatrix c = prior - terms.gamma * terms.solve_psi(terms.gamma.adjoint());
    c = linalg::hermitian_part(c);
    const double scale = std::max(prior.trace().real(), 0.0);
    if (c.size() > 0 && linalg::min_eigenvalue(c) < -1e-6 * scale)
        throw NumericalError("estimation error covariance is not positive semi-definite");
    return c;
}

NmseValue nmse(const EstimatorTerms &terms)
{
    const TraceParts t = trace_parts(terms);
    const double denominator = t.los + t.prior;
    if (!(denominator > 0.0))
        return {0.0, true};
    const double value = t.error / denominator;
    if (!std::isfinite(value) || value < -1e-9 || value > 1.0 + 1e-9)
        throw NumericalError("NMSE " + std::to_string(value) + " outside [0, 1]");
    return {std::clamp(value, 0.0, 1.0), false};
}

double nmse_complement_form(const EstimatorTerms &terms)
{
    const TraceParts t = trace_parts(terms);
    const double denominator = t.los + t.prior;
    if (!(denominator > 0.0))
        return 0.0;
    return 1.0 - (t.los + t.explained) / denominator;
}

// ---------- OBJECTIVE ----------

NmseObjective::NmseObjective(const ChannelStatistics &stats, const PilotAssignment &pilots,
                             double p)
    : stats_(stats), pilots_(pilots), p_(p)
{
    cache_ = std::make_shared<const StatisticsCache>(stats_);
    stats_.validate();
    pilots_.validate();
    if (pilots_.num_users() != stats_.num_users)
        throw ConfigError("pilot assignment does not match the user count");
    if (!(p_ > 0.0) || !std::isfinite(p_))
        throw ConfigError("pilot SNR must be positive and finite");
}

std::vector<EstimatorTerms> NmseObjective::terms_for_ap(const PhaseShiftVector &phase,
                                                        std::size_t m) const
{
    return TermBuilder(stats_, *cache_, pilots_, p_, phase).for_ap(m);
}

std::vector<NmseValue> NmseObjective::per_link(const PhaseShiftVector &phase) const
{
    TermBuilder builder(stats_, *cache_, pilots_, p_, phase);
    std::vector<NmseValue> out;
    out.reserve(stats_.num_aps * stats_.num_users);
    for (std::size_t m = 0; m < stats_.num_aps; ++m)
        for (const auto &t : builder.for_ap(m))
            out.push_back(nmse(t));
    return out;
}

double NmseObjective::operator()(const PhaseShiftVector &phase) const
{
    const auto links = per_link(phase);
    double sum = 0.0;
    for (const auto &v : links)
        sum += v.value;
    return sum / static_cast<double>(links.size());
}

double average_nmse(const ChannelStatistics &stats, const PhaseShiftVector &phase,
                    const PilotAssignment &pilots, double p)
{
    return NmseObjective(stats, pilots, p)(phase);
}

// ---------- MOMENT IDENTITIES ----------

MomentOracles::MomentOracles(const ChannelStatistics &stats, const PhaseShiftVector &phase)
    : stats_(stats), phi_(phase.diagonal())
{
    if (phase.size() != stats.ris_elements)
        throw ConfigError("phase vector length does not match the RIS element count");
}

CVector MomentOracles::mean(std::size_t m, std::size_t k) const
{
    return stats_.ap_ris_los.at(m) * phi_.cwiseProduct(stats_.ris_user_los.at(k));
}

CMatrix MomentOracles::nlos_covariance(std::size_t m, std::size_t k) const
{
    const CMatrix &hbar = stats_.ap_ris_los.at(m);
    const CMatrix rotated = phi_.asDiagonal() * stats_.user_ris_cov.at(k) * phi_.conjugate().asDiagonal();
    const CVector w = phi_.cwiseProduct(stats_.ris_user_los[k]);
    const CMatrix &r_ris = stats_.ris_side_cov[m];
    const double t = linalg::trace_of_product(r_ris, rotated).real();
    const double alpha = w.dot(r_ris * w).real();
    return stats_.G(m, k) + hbar * rotated * hbar.adjoint() + (t + alpha) * stats_.ap_side_cov[m];
}

CMatrix MomentOracles::second_moment(std::size_t m, std::size_t k) const
{
    const CVector u = mean(m, k);
    return u * u.adjoint() + nlos_covariance(m, k);
}

CMatrix MomentOracles::cross_covariance(std::size_t m, std::size_t k, std::size_t k2) const
{
    if (k == k2)
        return nlos_covariance(m, k);
    const CVector w = phi_.cwiseProduct(stats_.ris_user_los.at(k));
    const CVector w2 = phi_.cwiseProduct(stats_.ris_user_los.at(k2));
    return w2.dot(stats_.ris_side_cov.at(m) * w) * stats_.ap_side_cov[m];
}

CMatrix MomentOracles::quadratic_form(const CMatrix &d, std::size_t m) const
{
    return linalg::trace_of_product(stats_.ris_side_cov.at(m), d) * stats_.ap_side_cov.at(m);
}

} // namespace riscf
