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

#ifndef RISCF_ESTIMATOR_HPP
#define RISCF_ESTIMATOR_HPP

#include "riscf/common.hpp"
#include "riscf/geometry_channel.hpp"
#include "riscf/phase.hpp"

#include <cstddef>
#include <memory>
#include <vector>

namespace riscf {

struct StatisticsCache;

// ---------- PILOTS ----------

enum class PilotPolicy { round_robin };

// Users k and k' share a pilot iff pilot_of[k] == pilot_of[k'].
struct PilotAssignment {
    std::size_t tau_p = 1;
    std::vector<std::size_t> pilot_of;
    std::vector<std::vector<std::size_t>> copilot_sets; // P_k, ascending, contains k

    std::size_t num_users() const { return pilot_of.size(); }
    const std::vector<std::size_t> &copilots(std::size_t k) const { return copilot_sets.at(k); }
    std::size_t distinct_pilots() const;

    // Throws ContractError when the sets are not the equivalence classes of pilot_of.
    void validate() const;
};

// Round robin gives user k pilot (k mod tau_p).
PilotAssignment pilot_assign(std::size_t num_users, std::size_t tau_p,
                             PilotPolicy policy = PilotPolicy::round_robin);

// y_pmk = sqrt(p tau_p) sum_{k' in P_k} u_mk' + noise. The noise vector is the projected
// pilot-phase noise w_pmk; users on the same pilot observe the same w.
CVector received_pilot_signal(const ChannelRealization &realization, const PhaseShiftVector &phase,
                              const PilotAssignment &pilots, double p, std::size_t m,
                              std::size_t k, const CVector &noise);

// Same, drawing w_pmk ~ CN(0, I_M) from rng.
CVector received_pilot_signal(const ChannelRealization &realization, const PhaseShiftVector &phase,
                              const PilotAssignment &pilots, double p, Rng &rng, std::size_t m,
                              std::size_t k);

// ---------- LMMSE TERMS ----------

/// Closed-form second-order terms of the LMMSE estimate of u_mk.
///
/// delta  : G_mk + Hbar Phi R_k Phi^H Hbar^H + Tr(R_RIS Phi R_k Phi^H) R_AP
/// gamma  : E{u~ y~^H}, including the sqrt(p tau_p) factor
/// psi    : E{y~ y~^H}, including the unit-variance noise I_M
/// alpha  : Tr(R_RIS Phi zbar_k zbar_k^H Phi^H)
/// mean   : Hbar Phi zbar_k
struct EstimatorTerms {
    CMatrix delta, gamma, psi;
    double alpha = 0.0;
    CVector mean;

    CMatrix ap_side_cov; // R_m,AP, needed for the prior alpha R_AP
    CVector pilot_mean;  // E{y_pmk} = sqrt(p tau_p) sum_{k' in P_k} mean_mk'
    Eigen::LLT<CMatrix> psi_factor;

    // Prior covariance of the NLoS part, delta + alpha R_AP.
    CMatrix prior_covariance() const;

    // Psi^-1 b through the Cholesky factor.
    CMatrix solve_psi(const CMatrix &b) const;
};

EstimatorTerms estimator_terms(const ChannelStatistics &stats, const PhaseShiftVector &phase,
                               const PilotAssignment &pilots, double p, std::size_t m,
                               std::size_t k);

// u^ = mean + Gamma Psi^-1 (y - E{y})
CVector lmmse_estimate(const CVector &y, const EstimatorTerms &terms);

// Delta + alpha R_AP - Gamma Psi^-1 Gamma^H, Hermitian; throws NumericalError when the
// smallest eigenvalue is below -1e-6 times the prior trace.
CMatrix error_covariance(const EstimatorTerms &terms);

struct NmseValue {
    double value = 0.0;
    bool degenerate = false; // zero second moment: value pinned to 0
};

// Tr(error covariance) / Tr(mean mean^H + Delta + alpha R_AP)
NmseValue nmse(const EstimatorTerms &terms);

// 1 - Tr(mean mean^H + Gamma Psi^-1 Gamma^H) / Tr(mean mean^H + Delta + alpha R_AP),
// algebraically equal to nmse(); kept separate for cross-checking.
double nmse_complement_form(const EstimatorTerms &terms);

/// Network-average NMSE as a function of the phases for fixed statistics and pilots.
/// Safe to call concurrently; every call recomputes all (m, k) terms.
class NmseObjective {
public:
    NmseObjective(const ChannelStatistics &stats, const PilotAssignment &pilots, double p);

    double operator()(const PhaseShiftVector &phase) const;

    // NMSE_mk for every link, index m * K + k.
    std::vector<NmseValue> per_link(const PhaseShiftVector &phase) const;

    // All terms of AP m for every user k.
    std::vector<EstimatorTerms> terms_for_ap(const PhaseShiftVector &phase, std::size_t m) const;

    const ChannelStatistics &statistics() const { return stats_; }
    const PilotAssignment &pilots() const { return pilots_; }
    double pilot_power() const { return p_; }

private:
    ChannelStatistics stats_;
    PilotAssignment pilots_;
    double p_;
    std::shared_ptr<const StatisticsCache> cache_;
};

// (1 / LK) sum_m sum_k NMSE_mk
double average_nmse(const ChannelStatistics &stats, const PhaseShiftVector &phase,
                    const PilotAssignment &pilots, double p);

// ---------- MOMENT IDENTITIES ----------

/// Closed-form first and second moments of the aggregated channel for a fixed phase.
/// Keeps a reference to stats, which must outlive the object.
class MomentOracles {
public:
    MomentOracles(const ChannelStatistics &stats, const PhaseShiftVector &phase);

    // E{u_mk} = Hbar_m Phi zbar_k
    CVector mean(std::size_t m, std::size_t k) const;
    // E{u~_mk u~_mk^H} = Delta_mk + alpha_mk R_AP
    CMatrix nlos_covariance(std::size_t m, std::size_t k) const;
    // E{u_mk u_mk^H}
    CMatrix second_moment(std::size_t m, std::size_t k) const;
    // E{u~_mk u~_mk'^H} = Tr(R_RIS Phi zbar_k zbar_k'^H Phi^H) R_AP for k != k'
    CMatrix cross_covariance(std::size_t m, std::size_t k, std::size_t k2) const;
    // E{H~_m D H~_m^H} = Tr(R_RIS D) R_AP
    CMatrix quadratic_form(const CMatrix &d, std::size_t m) const;

private:
    const ChannelStatistics &stats_;
    CVector phi_;
};

} // namespace riscf

#endif
