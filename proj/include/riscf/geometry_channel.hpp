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

#ifndef RISCF_GEOMETRY_CHANNEL_HPP
#define RISCF_GEOMETRY_CHANNEL_HPP

#include "riscf/common.hpp"
#include "riscf/phase.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace riscf {

// ---------- GEOMETRY ----------

struct Point3 {
    double x = 0.0, y = 0.0, z = 0.0;
};

double distance(const Point3 &a, const Point3 &b);

// Square deployment area with the APs in the south-west corner square, the users in the
// south-east corner square and the RIS above the centre.
struct GeometryConfig {
    std::size_t num_aps = 40;
    std::size_t num_users = 10;
    double area_side_m = 1000.0;
    double ap_square_side_m = 250.0;
    double user_square_side_m = 250.0;
    double ap_height_m = 15.0;
    double user_height_m = 1.65;
    double ris_height_m = 30.0;

    void validate() const;
};

struct NetworkGeometry {
    std::vector<Point3> ap_positions;
    std::vector<Point3> user_positions;
    Point3 ris_position;
    double area_side_m = 0.0;

    std::size_t num_aps() const { return ap_positions.size(); }
    std::size_t num_users() const { return user_positions.size(); }
};

NetworkGeometry generate_geometry(const GeometryConfig &config, Rng &rng);

// ---------- LARGE-SCALE FADING ----------

// gain(d) = 10^(reference_gain_db / 10) * (d / reference_distance_m)^(-exponent)
struct LogDistanceModel {
    double exponent = 3.76;
    double reference_distance_m = 1.0;
    double reference_gain_db = -30.5;

    void validate() const;
};

double log_distance_gain(const LogDistanceModel &model, double distance_m);

// Links terminating at an AP (direct and AP-RIS) are expressed relative to the receiver
// noise power, so the cascaded RIS channel is noise-normalized exactly once and the pilot
// power is in the same unit as the noise power (mW for the dBm default).
struct PathlossConfig {
    LogDistanceModel direct{3.76, 1.0, -30.5};
    LogDistanceModel ap_ris{2.2, 1.0, -30.5};
    LogDistanceModel ris_user{2.2, 1.0, -30.5};
    double noise_power_dbm = -94.0;

    void validate() const;
};

struct LargeScaleGains {
    std::size_t num_aps = 0, num_users = 0;
    std::vector<double> direct;   // index m * K + k
    std::vector<double> ap_ris;   // per AP
    std::vector<double> ris_user; // per user

    double direct_gain(std::size_t m, std::size_t k) const { return direct[m * num_users + k]; }
};

LargeScaleGains large_scale_fading(const NetworkGeometry &geometry, const PathlossConfig &config);

// ---------- SPATIAL CORRELATION ----------

enum class CorrelationModel {
    exponential,     // [C]_ij = r^dist(i, j), element distance in units of the element spacing
    local_scattering // Gaussian azimuth spread around the geometric direction
};

struct CorrelationConfig {
    std::size_t antennas_per_ap = 16;
    std::size_t ris_elements = 100;
    std::size_t ris_columns = 0; // 0: ceil(sqrt(N))

    CorrelationModel model = CorrelationModel::exponential;
    double ap_correlation = 0.5;  // exponential model coefficient, AP array
    double ris_correlation = 0.5; // exponential model coefficient, RIS array
    double angular_spread_deg = 10.0;

    double element_spacing_wavelengths = 0.5; // AP ULA and RIS grid

    // Rician factors in dB; +infinity puts all power into the LoS component.
    double rician_factor_ap_ris_db = 10.0;
    double rician_factor_ris_user_db = 10.0;

    void validate() const;
};

// Exponential correlation matrix for element positions given in spacing units.
CMatrix exponential_correlation(const std::vector<Point3> &elements, double coefficient);

// Element positions of the AP uniform linear array (along x) and the RIS planar array
// (x-z plane, facing the south edge), in units of the element spacing.
std::vector<Point3> ap_array_layout(std::size_t antennas);
std::vector<Point3> ris_array_layout(std::size_t elements, std::size_t columns);

// Far-field array response exp(j 2 pi spacing (u . p_n)) toward unit direction u.
CVector steering_vector(const std::vector<Point3> &elements, const Point3 &direction,
                        double spacing_wavelengths);

// ---------- STATISTICS / REALIZATIONS ----------

// Second-order statistics and LoS means of every link. Containers are indexed
// m * K + k for (AP, user) pairs, m for AP-side quantities and k for user-side ones.
struct ChannelStatistics {
    std::size_t num_aps = 0, antennas = 0, ris_elements = 0, num_users = 0;

    std::vector<CMatrix> direct_cov;   // G_mk, M x M
    std::vector<CMatrix> ap_side_cov;  // R_m,AP, M x M
    std::vector<CMatrix> ris_side_cov; // R_m,RIS, N x N
    std::vector<CMatrix> user_ris_cov; // R_k, N x N
    std::vector<CMatrix> ap_ris_los;   // Hbar_m, M x N
    std::vector<CVector> ris_user_los; // zbar_k, N
    std::vector<std::uint8_t> blocking; // alpha_mk in {0, 1}

    std::size_t link(std::size_t m, std::size_t k) const { return m * num_users + k; }
    const CMatrix &G(std::size_t m, std::size_t k) const { return direct_cov[link(m, k)]; }

    // Dimensions, Hermitian/PSD covariances, zero G for blocked links.
    void validate(double abs_tol = 1e-12, double rel_tol = 1e-9) const;

    // Statistics with every RIS quantity zero (H-bar, z-bar, R_RIS, R_k, R_AP).
    static ChannelStatistics zeros(std::size_t L, std::size_t M, std::size_t N, std::size_t K);
};

ChannelStatistics build_correlation_matrices(const NetworkGeometry &geometry,
                                             const LargeScaleGains &gains,
                                             const CorrelationConfig &config,
                                             const std::vector<std::uint8_t> &blocking);

// i.i.d. Bernoulli(unblocked_probability) mask, L x K row-major.
std::vector<std::uint8_t> sample_blocking(double unblocked_probability, std::size_t num_aps,
                                          std::size_t num_users, Rng &rng);

// Everything needed to go from a seed to ChannelStatistics.
struct ChannelScenario {
    GeometryConfig geometry;
    PathlossConfig pathloss;
    CorrelationConfig correlation;
    double unblocked_probability = 0.2;

    void validate() const;
};

// geometry, blocking and statistics from one seed; geometry and blocking use separate
// substreams so changing p-tilde leaves the positions untouched.
ChannelStatistics generate_statistics(const ChannelScenario &scenario, std::uint64_t seed,
                                      NetworkGeometry *geometry_out = nullptr);

struct ChannelRealization {
    std::size_t num_users = 0;
    std::vector<CVector> direct;   // g_mk
    std::vector<CMatrix> ap_ris;   // H_m
    std::vector<CVector> ris_user; // z_k

    const CVector &g(std::size_t m, std::size_t k) const { return direct[m * num_users + k]; }
};

// Draws realizations from fixed statistics. The covariance square roots are factored
// once at construction, so repeated draws are cheap.
class ChannelSampler {
public:
    explicit ChannelSampler(const ChannelStatistics &stats);

    ChannelRealization draw(Rng &rng) const;

    // Only the NLoS part of H_m, R_AP^1/2 X R_RIS^1/2 for a given X.
    CMatrix ap_ris_scatter(std::size_t m, const CMatrix &x) const;

private:
    ChannelStatistics stats_;
    std::vector<CMatrix> sqrt_direct_, sqrt_ap_, sqrt_ris_, sqrt_user_;
};

ChannelRealization sample_channel_realization(const ChannelStatistics &stats, Rng &rng);

// u_mk = g_mk + H_m diag(exp(i theta)) z_k
CVector aggregated_channel(const ChannelRealization &realization, const PhaseShiftVector &phase,
                           std::size_t m, std::size_t k);

} // namespace riscf

#endif
