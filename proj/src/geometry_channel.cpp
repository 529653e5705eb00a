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

#include "riscf/geometry_channel.hpp"
#include "riscf/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace riscf {

namespace {

Point3 unit_direction(const Point3 &from, const Point3 &to)
{
    const double d = distance(from, to);
    if (!(d > 0.0))
        throw ConfigError("co-located nodes: direction undefined");
    return {(to.x - from.x) / d, (to.y - from.y) / d, (to.z - from.z) / d};
}

double uniform_in(Rng &rng, double lo, double side)
{
    return lo + side * std::generate_canonical<double, 53>(rng);
}

void require_positive(double value, const char *name)
{
    if (!(value > 0.0) || !std::isfinite(value))
        throw ConfigError(std::string(name) + " must be positive and finite");
}

// LoS and NLoS power fractions for a Rician factor given in dB.
std::pair<double, double> rician_split(double factor_db)
{
    if (std::isinf(factor_db) && factor_db > 0)
        return {1.0, 0.0};
    const double kappa = std::pow(10.0, factor_db / 10.0);
    return {kappa / (1.0 + kappa), 1.0 / (1.0 + kappa)};
}

// Rotate a unit direction in azimuth by delta radians, keeping the elevation.
Point3 rotate_azimuth(const Point3 &u, double delta)
{
    const double c = std::cos(delta), s = std::sin(delta);
    return {c * u.x - s * u.y, s * u.x + c * u.y, u.z};
}

CMatrix local_scattering_correlation(const std::vector<Point3> &elements, const Point3 &direction,
                                     double spacing, double spread_rad)
{
    const auto n = static_cast<Eigen::Index>(elements.size());
    if (spread_rad <= 0.0) {
        const CVector a = steering_vector(elements, direction, spacing);
        return a * a.adjoint();
    }
    // Riemann sum of rank-one responses over a Gaussian azimuth density, +-4 sigma.
    constexpr int points = 81;
    CMatrix c = CMatrix::Zero(n, n);
    double total = 0.0;
    for (int q = 0; q < points; ++q) {
        const double delta = spread_rad * (-4.0 + 8.0 * q / (points - 1));
        const double w = std::exp(-0.5 * (delta / spread_rad) * (delta / spread_rad));
        const CVector a = steering_vector(elements, rotate_azimuth(direction, delta), spacing);
        c.noalias() += w * (a * a.adjoint());
        total += w;
    }
    return c / total;
}

void check_psd(const CMatrix &a, const std::string &what)
{
    if (!linalg::is_hermitian_psd(a))
        throw NumericalError(what + " is not Hermitian positive semi-definite");
}

} // namespace

double distance(const Point3 &a, const Point3 &b)
{
    const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

// ---------- GEOMETRY ----------

void GeometryConfig::validate() const
{
    if (num_aps < 1)
        throw ConfigError("geometry.aps must be at least 1");
    if (num_users < 1)
        throw ConfigError("geometry.users must be at least 1");
    require_positive(area_side_m, "geometry.area_side_m");
    if (!(ap_square_side_m >= 0.0 && ap_square_side_m <= area_side_m))
        throw ConfigError("geometry.ap_square_side_m must lie in [0, area_side_m]");
    if (!(user_square_side_m >= 0.0 && user_square_side_m <= area_side_m))
        throw ConfigError("geometry.user_square_side_m must lie in [0, area_side_m]");
    require_positive(ap_height_m, "geometry.ap_height_m");
    require_positive(user_height_m, "geometry.user_height_m");
    require_positive(ris_height_m, "geometry.ris_height_m");
}

NetworkGeometry generate_geometry(const GeometryConfig &config, Rng &rng)
{
    config.validate();
    NetworkGeometry g;
    g.area_side_m = config.area_side_m;
    g.ap_positions.reserve(config.num_aps);
    for (std::size_t m = 0; m < config.num_aps; ++m) {
        const double x = uniform_in(rng, 0.0, config.ap_square_side_m);
        const double y = uniform_in(rng, 0.0, config.ap_square_side_m);
        g.ap_positions.push_back({x, y, config.ap_height_m});
    }
    g.user_positions.reserve(config.num_users);
    const double user_x0 = config.area_side_m - config.user_square_side_m;
    for (std::size_t k = 0; k < config.num_users; ++k) {
        const double x = uniform_in(rng, user_x0, config.user_square_side_m);
        const double y = uniform_in(rng, 0.0, config.user_square_side_m);
        g.user_positions.push_back({x, y, config.user_height_m});
    }
    g.ris_position = {0.5 * config.area_side_m, 0.5 * config.area_side_m, config.ris_height_m};
    return g;
}

// ---------- LARGE-SCALE FADING ----------

void LogDistanceModel::validate() const
{
    if (!(exponent >= 0.0) || !std::isfinite(exponent))
        throw ConfigError("path-loss exponent must be nonnegative");
    require_positive(reference_distance_m, "path-loss reference distance");
    if (!std::isfinite(reference_gain_db))
        throw ConfigError("path-loss reference gain must be finite");
}

double log_distance_gain(const LogDistanceModel &model, double distance_m)
{
    model.validate();
    if (!(distance_m > 0.0))
        throw ConfigError("zero link distance (co-located nodes)");
    return std::pow(10.0, model.reference_gain_db / 10.0) *
           std::pow(distance_m / model.reference_distance_m, -model.exponent);
}

void PathlossConfig::validate() const
{
    direct.validate();
    ap_ris.validate();
    ris_user.validate();
    if (!std::isfinite(noise_power_dbm))
        throw ConfigError("pathloss.noise_power_dbm must be finite");
}

LargeScaleGains large_scale_fading(const NetworkGeometry &geometry, const PathlossConfig &config)
{
    config.validate();
    const double inv_noise = std::pow(10.0, -config.noise_power_dbm / 10.0);
    LargeScaleGains gains;
    gains.num_aps = geometry.num_aps();
    gains.num_users = geometry.num_users();
    gains.direct.reserve(gains.num_aps * gains.num_users);
    for (const auto &ap : geometry.ap_positions)
        for (const auto &user : geometry.user_positions)
            gains.direct.push_back(log_distance_gain(config.direct, distance(ap, user)) *
                                   inv_noise);
    for (const auto &ap : geometry.ap_positions)
        gains.ap_ris.push_back(
            log_distance_gain(config.ap_ris, distance(ap, geometry.ris_position)) * inv_noise);
    for (const auto &user : geometry.user_positions)
        gains.ris_user.push_back(
            log_distance_gain(config.ris_user, distance(geometry.ris_position, user)));
    return gains;
}

// ---------- SPATIAL CORRELATION ----------

void CorrelationConfig::validate() const
{
    if (antennas_per_ap < 1)
        throw ConfigError("antennas per AP must be at least 1");
    if (ris_elements < 1)
        throw ConfigError("RIS element count must be at least 1");
    if (!(ap_correlation >= 0.0 && ap_correlation <= 1.0))
        throw ConfigError("correlation.ap_correlation must lie in [0, 1]");
    if (!(ris_correlation >= 0.0 && ris_correlation <= 1.0))
        throw ConfigError("correlation.ris_correlation must lie in [0, 1]");
    if (!(angular_spread_deg >= 0.0) || !std::isfinite(angular_spread_deg))
        throw ConfigError("correlation.angular_spread_deg must be nonnegative");
    require_positive(element_spacing_wavelengths, "correlation.element_spacing_wavelengths");
    if (std::isnan(rician_factor_ap_ris_db) || std::isnan(rician_factor_ris_user_db))
        throw ConfigError("Rician factors must be numbers");
}

CMatrix exponential_correlation(const std::vector<Point3> &elements, double coefficient)
{
    if (!(coefficient >= 0.0 && coefficient <= 1.0))
        throw ConfigError("exponential correlation coefficient must lie in [0, 1]");
    const auto n = static_cast<Eigen::Index>(elements.size());
    CMatrix c(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            c(i, j) = std::pow(coefficient, distance(elements[i], elements[j]));
    return c;
}

std::vector<Point3> ap_array_layout(std::size_t antennas)
{
    std::vector<Point3> p(antennas);
    for (std::size_t i = 0; i < antennas; ++i)
        p[i] = {static_cast<double>(i), 0.0, 0.0};
    return p;
}

std::vector<Point3> ris_array_layout(std::size_t elements, std::size_t columns)
{
    if (columns == 0)
        columns = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(elements))));
    columns = std::max<std::size_t>(columns, 1);
    std::vector<Point3> p(elements);
    for (std::size_t n = 0; n < elements; ++n)
        p[n] = {static_cast<double>(n % columns), 0.0, static_cast<double>(n / columns)};
    return p;
}

CVector steering_vector(const std::vector<Point3> &elements, const Point3 &direction,
                        double spacing_wavelengths)
{
    CVector a(static_cast<Eigen::Index>(elements.size()));
    for (std::size_t n = 0; n < elements.size(); ++n) {
        const auto &p = elements[n];
        const double proj = p.x * direction.x + p.y * direction.y + p.z * direction.z;
        a(static_cast<Eigen::Index>(n)) = std::polar(1.0, 2.0 * pi * spacing_wavelengths * proj);
    }
    return a;
}

// ---------- STATISTICS ----------

void ChannelStatistics::validate(double abs_tol, double rel_tol) const
{
    const auto L = num_aps, K = num_users;
    const auto M = static_cast<Eigen::Index>(antennas), N = static_cast<Eigen::Index>(ris_elements);
    if (L < 1 || K < 1 || M < 1 || N < 1)
        throw ConfigError("channel statistics: empty dimensions");
    if (direct_cov.size() != L * K || blocking.size() != L * K || ap_side_cov.size() != L ||
        ris_side_cov.size() != L || ap_ris_los.size() != L || user_ris_cov.size() != K ||
        ris_user_los.size() != K)
        throw ConfigError("channel statistics: container sizes do not match (L, K)");

    auto psd = [&](const CMatrix &a, Eigen::Index dim, const std::string &what) {
        if (a.rows() != dim || a.cols() != dim)
            throw ConfigError(what + ": wrong dimensions");
        if (!linalg::is_hermitian_psd(a, abs_tol, rel_tol))
            throw NumericalError(what + " is not Hermitian positive semi-definite");
    };
    for (std::size_t m = 0; m < L; ++m) {
        for (std::size_t k = 0; k < K; ++k) {
            const auto &g = direct_cov[link(m, k)];
            psd(g, M, "G[" + std::to_string(m) + "," + std::to_string(k) + "]");
            if (blocking[link(m, k)] == 0 && g.cwiseAbs().maxCoeff() != 0.0)
                throw ContractError("blocked link has a nonzero direct covariance");
        }
        psd(ap_side_cov[m], M, "R_AP[" + std::to_string(m) + "]");
        psd(ris_side_cov[m], N, "R_RIS[" + std::to_string(m) + "]");
        if (ap_ris_los[m].rows() != M || ap_ris_los[m].cols() != N)
            throw ConfigError("H-bar: wrong dimensions");
    }
    for (std::size_t k = 0; k < K; ++k) {
        psd(user_ris_cov[k], N, "R_k[" + std::to_string(k) + "]");
        if (ris_user_los[k].size() != N)
            throw ConfigError("z-bar: wrong dimensions");
    }
}

ChannelStatistics ChannelStatistics::zeros(std::size_t L, std::size_t M, std::size_t N,
                                           std::size_t K)
{
    const auto Mi = static_cast<Eigen::Index>(M), Ni = static_cast<Eigen::Index>(N);
    ChannelStatistics s;
    s.num_aps = L;
    s.antennas = M;
    s.ris_elements = N;
    s.num_users = K;
    s.direct_cov.assign(L * K, CMatrix::Zero(Mi, Mi));
    s.blocking.assign(L * K, 1);
    s.ap_side_cov.assign(L, CMatrix::Zero(Mi, Mi));
    s.ris_side_cov.assign(L, CMatrix::Zero(Ni, Ni));
    s.ap_ris_los.assign(L, CMatrix::Zero(Mi, Ni));
    s.user_ris_cov.assign(K, CMatrix::Zero(Ni, Ni));
    s.ris_user_los.assign(K, CVector::Zero(Ni));
    return s;
}

ChannelStatistics build_correlation_matrices(const NetworkGeometry &geometry,
                                             const LargeScaleGains &gains,
                                             const CorrelationConfig &config,
                                             const std::vector<std::uint8_t> &blocking)
{
    config.validate();
    const auto L = geometry.num_aps(), K = geometry.num_users();
    if (gains.num_aps != L || gains.num_users != K || gains.direct.size() != L * K ||
        gains.ap_ris.size() != L || gains.ris_user.size() != K)
        throw ConfigError("large-scale gains do not match the geometry");
    if (blocking.size() != L * K)
        throw ConfigError("blocking mask does not match the geometry");
    auto positive = [](double g) { return g > 0.0 && std::isfinite(g); };
    if (!std::all_of(gains.direct.begin(), gains.direct.end(), positive) ||
        !std::all_of(gains.ap_ris.begin(), gains.ap_ris.end(), positive) ||
        !std::all_of(gains.ris_user.begin(), gains.ris_user.end(), positive))
        throw ConfigError("large-scale gains must be positive");

    const std::size_t M = config.antennas_per_ap, N = config.ris_elements;
    const auto ap_elems = ap_array_layout(M);
    const auto ris_elems = ris_array_layout(N, config.ris_columns);
    const double spacing = config.element_spacing_wavelengths;
    const double spread = config.angular_spread_deg * pi / 180.0;

    auto ap_corr = [&](const Point3 &dir) -> CMatrix {
        if (config.model == CorrelationModel::exponential)
            return exponential_correlation(ap_elems, config.ap_correlation);
        return local_scattering_correlation(ap_elems, dir, spacing, spread);
    };
    auto ris_corr = [&](const Point3 &dir) -> CMatrix {
        if (config.model == CorrelationModel::exponential)
            return exponential_correlation(ris_elems, config.ris_correlation);
        return local_scattering_correlation(ris_elems, dir, spacing, spread);
    };

    const auto [los_h, nlos_h] = rician_split(config.rician_factor_ap_ris_db);
    const auto [los_z, nlos_z] = rician_split(config.rician_factor_ris_user_db);

    ChannelStatistics s = ChannelStatistics::zeros(L, M, N, K);
    s.blocking = blocking;
    const Point3 &ris = geometry.ris_position;

    for (std::size_t m = 0; m < L; ++m) {
        const Point3 &ap = geometry.ap_positions[m];
        const Point3 to_ris = unit_direction(ap, ris);
        const Point3 to_ap = unit_direction(ris, ap);

        s.ap_side_cov[m] = linalg::hermitian_part(gains.ap_ris[m] * nlos_h * ap_corr(to_ris));
        s.ris_side_cov[m] = linalg::hermitian_part(ris_corr(to_ap));
        const CVector a_ap = steering_vector(ap_elems, to_ris, spacing);
        const CVector a_ris = steering_vector(ris_elems, to_ap, spacing);
        s.ap_ris_los[m] = std::sqrt(gains.ap_ris[m] * los_h) * (a_ap * a_ris.adjoint());

        check_psd(s.ap_side_cov[m], "R_AP[" + std::to_string(m) + "]");
        check_psd(s.ris_side_cov[m], "R_RIS[" + std::to_string(m) + "]");

        for (std::size_t k = 0; k < K; ++k) {
            if (blocking[s.link(m, k)] == 0)
                continue;
            const Point3 to_user = unit_direction(ap, geometry.user_positions[k]);
            CMatrix g = linalg::hermitian_part(gains.direct_gain(m, k) * ap_corr(to_user));
            check_psd(g, "G[" + std::to_string(m) + "," + std::to_string(k) + "]");
            s.direct_cov[s.link(m, k)] = std::move(g);
        }
    }
    for (std::size_t k = 0; k < K; ++k) {
        const Point3 to_user = unit_direction(ris, geometry.user_positions[k]);
        s.user_ris_cov[k] = linalg::hermitian_part(gains.ris_user[k] * nlos_z * ris_corr(to_user));
        check_psd(s.user_ris_cov[k], "R_k[" + std::to_string(k) + "]");
        s.ris_user_los[k] =
            std::sqrt(gains.ris_user[k] * los_z) * steering_vector(ris_elems, to_user, spacing);
    }
    return s;
}

std::vector<std::uint8_t> sample_blocking(double unblocked_probability, std::size_t num_aps,
                                          std::size_t num_users, Rng &rng)
{
    if (!(unblocked_probability >= 0.0 && unblocked_probability <= 1.0))
        throw ConfigError("unblocked probability must lie in [0, 1]");
    std::vector<std::uint8_t> mask(num_aps * num_users);
    for (auto &a : mask)
        a = std::generate_canonical<double, 53>(rng) < unblocked_probability ? 1 : 0;
    return mask;
}

void ChannelScenario::validate() const
{
    geometry.validate();
    pathloss.validate();
    correlation.validate();
    if (!(unblocked_probability >= 0.0 && unblocked_probability <= 1.0))
        throw ConfigError("unblocked probability must lie in [0, 1]");
}

ChannelStatistics generate_statistics(const ChannelScenario &scenario, std::uint64_t seed,
                                      NetworkGeometry *geometry_out)
{
    scenario.validate();
    Rng geometry_rng = make_stream(seed, 1);
    Rng blocking_rng = make_stream(seed, 2);
    NetworkGeometry geometry = generate_geometry(scenario.geometry, geometry_rng);
    const auto gains = large_scale_fading(geometry, scenario.pathloss);
    const auto mask = sample_blocking(scenario.unblocked_probability, geometry.num_aps(),
                                      geometry.num_users(), blocking_rng);
    ChannelStatistics stats = build_correlation_matrices(geometry, gains, scenario.correlation, mask);
    if (geometry_out)
        *geometry_out = std::move(geometry);
    return stats;
}

// ---------- REALIZATIONS ----------

ChannelSampler::ChannelSampler(const ChannelStatistics &stats) : stats_(stats)
{
    stats_.validate();
    sqrt_direct_.reserve(stats_.direct_cov.size());
    for (const auto &g : stats_.direct_cov)
        sqrt_direct_.push_back(linalg::hermitian_sqrt(g));
    for (std::size_t m = 0; m < stats_.num_aps; ++m) {
        sqrt_ap_.push_back(linalg::hermitian_sqrt(stats_.ap_side_cov[m]));
        sqrt_ris_.push_back(linalg::hermitian_sqrt(stats_.ris_side_cov[m]));
    }
    for (const auto &r : stats_.user_ris_cov)
        sqrt_user_.push_back(linalg::hermitian_sqrt(r));
}

CMatrix ChannelSampler::ap_ris_scatter(std::size_t m, const CMatrix &x) const
{
    return sqrt_ap_[m] * x * sqrt_ris_[m];
}

ChannelRealization ChannelSampler::draw(Rng &rng) const
{
    const auto M = static_cast<Eigen::Index>(stats_.antennas);
    const auto N = static_cast<Eigen::Index>(stats_.ris_elements);
    ChannelRealization r;
    r.num_users = stats_.num_users;
    r.direct.reserve(sqrt_direct_.size());
    for (const auto &s : sqrt_direct_)
        r.direct.push_back(s * complex_normal_vector(M, rng));
    r.ap_ris.reserve(stats_.num_aps);
    for (std::size_t m = 0; m < stats_.num_aps; ++m)
        r.ap_ris.push_back(stats_.ap_ris_los[m] + ap_ris_scatter(m, complex_normal_matrix(M, N, rng)));
    r.ris_user.reserve(stats_.num_users);
    for (std::size_t k = 0; k < stats_.num_users; ++k)
        r.ris_user.push_back(stats_.ris_user_los[k] + sqrt_user_[k] * complex_normal_vector(N, rng));
    return r;
}

ChannelRealization sample_channel_realization(const ChannelStatistics &stats, Rng &rng)
{
    return ChannelSampler(stats).draw(rng);
}

CVector aggregated_channel(const ChannelRealization &realization, const PhaseShiftVector &phase,
                           std::size_t m, std::size_t k)
{
    const CMatrix &h = realization.ap_ris.at(m);
    const CVector &z = realization.ris_user.at(k);
    const CVector &g = realization.g(m, k);
    if (static_cast<std::size_t>(h.cols()) != phase.size() || z.size() != h.cols() ||
        g.size() != h.rows())
        throw ConfigError("aggregated channel: dimension mismatch");
    return g + h * phase.diagonal().cwiseProduct(z);
}

} // namespace riscf
