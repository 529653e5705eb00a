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

#ifndef RISCF_SPECTRAL_EFFICIENCY_HPP
#define RISCF_SPECTRAL_EFFICIENCY_HPP

#include "riscf/common.hpp"
#include "riscf/estimator.hpp"
#include "riscf/geometry_channel.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace riscf {

struct SeConfig {
    double bandwidth_mhz = 10.0;
    std::size_t coherence_block = 200;      // tau_c in symbols
    double uplink_snr = 0.0;                // p_u; 0 selects the pilot SNR
    std::vector<double> power_coefficients; // eta_k; empty selects all ones
    std::size_t trials = 1000;
    std::size_t threads = 1;

    double uplink_snr_or(double pilot_snr) const { return uplink_snr > 0.0 ? uplink_snr : pilot_snr; }
    double eta(std::size_t k) const { return power_coefficients.empty() ? 1.0 : power_coefficients.at(k); }
    void validate(std::size_t num_users, std::size_t tau_p) const;
};

/// Monte Carlo moments behind the effective SINR of one user.
struct UserSinr {
    double desired = 0.0;       // |DS|^2
    double beamforming = 0.0;   // E|BU|^2
    double interference = 0.0;  // sum over k' != k of E|UI|^2
    double noise = 0.0;         // E|NO|^2
    double sinr = 0.0;
    bool degenerate = false;    // DS = 0: the user is unreachable
};

// Effective uplink SINR of every user with maximum-ratio combining on the stacked LMMSE
// estimates. Trial t draws channels and pilot noise from make_stream(seed, t); the result
// does not depend on the thread count.
std::vector<UserSinr> uplink_sinr(const ChannelStatistics &stats, const PhaseShiftVector &phase,
                                  const PilotAssignment &pilots, double pilot_snr,
                                  const SeConfig &config, std::uint64_t seed);

// B (1 - tau_p / tau_c) log2(1 + gamma) in Mbit/s.
double ergodic_se(double sinr, const SeConfig &config, std::size_t tau_p);

} // namespace riscf

#endif
