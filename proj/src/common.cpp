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

#include "riscf/common.hpp"
#include "riscf/linalg.hpp"
#include "riscf/phase.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace riscf {

Rng make_stream(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      static_cast<std::uint32_t>(substream),
                      static_cast<std::uint32_t>(substream >> 32)};
    return Rng(seq);
}

cdouble complex_normal(Rng &rng)
{
    std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
    const double re = normal(rng);
    const double im = normal(rng);
    return {re, im};
}

CVector complex_normal_vector(Eigen::Index n, Rng &rng)
{
    std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
    CVector v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double re = normal(rng);
        const double im = normal(rng);
        v(i) = {re, im};
    }
    return v;
}

CMatrix complex_normal_matrix(Eigen::Index rows, Eigen::Index cols, Rng &rng)
{
    std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
    CMatrix a(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) {
            const double re = normal(rng);
            const double im = normal(rng);
            a(i, j) = {re, im};
        }
    return a;
}

// ---------- PhaseShiftVector ----------

PhaseShiftVector::PhaseShiftVector(std::vector<double> theta) : theta_(std::move(theta))
{
    for (std::size_t n = 0; n < theta_.size(); ++n)
        if (!(theta_[n] >= -pi && theta_[n] <= pi))
            throw ConfigError("phase shift " + std::to_string(n) + " outside [-pi, pi]");
}

PhaseShiftVector PhaseShiftVector::zeros(std::size_t n)
{
    return PhaseShiftVector(std::vector<double>(n, 0.0));
}

PhaseShiftVector PhaseShiftVector::from_normalized(std::span<const double> genes)
{
    std::vector<double> theta(genes.size());
    for (std::size_t n = 0; n < genes.size(); ++n)
        theta[n] = std::clamp(genes[n], -1.0, 1.0) * pi;
    return PhaseShiftVector(std::move(theta));
}

CVector PhaseShiftVector::diagonal() const
{
    CVector d(static_cast<Eigen::Index>(theta_.size()));
    for (std::size_t n = 0; n < theta_.size(); ++n)
        d(static_cast<Eigen::Index>(n)) = std::polar(1.0, theta_[n]);
    return d;
}

// ---------- linalg ----------

namespace linalg {

CMatrix hermitian_part(const CMatrix &a)
{
    return 0.5 * (a + a.adjoint());
}

double hermitian_defect(const CMatrix &a)
{
    if (a.size() == 0)
        return 0.0;
    return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

double min_eigenvalue(const CMatrix &a)
{
    if (a.size() == 0)
        return 0.0;
    Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(a), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

bool is_hermitian_psd(const CMatrix &a, double abs_tol, double rel_tol)
{
    if (a.rows() != a.cols())
        return false;
    if (a.size() == 0)
        return true;
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    if (hermitian_defect(a) > abs_tol * scale)
        return false;
    Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(a), Eigen::EigenvaluesOnly);
    const RVector &ev = es.eigenvalues();
    const double largest = std::max(1.0, ev.cwiseAbs().maxCoeff());
    return ev.minCoeff() >= -rel_tol * largest;
}

CMatrix hermitian_sqrt(const CMatrix &a, double rel_tol)
{
    if (a.rows() != a.cols())
        throw NumericalError("square root of a non-square matrix");
    if (a.size() == 0)
        return a;
    Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(a));
    if (es.info() != Eigen::Success)
        throw NumericalError("Hermitian eigendecomposition failed");
    RVector ev = es.eigenvalues();
    const double largest = ev.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (ev(i) < -rel_tol * std::max(largest, 1e-300))
            throw NumericalError("matrix square root: eigenvalue " + std::to_string(ev(i)) +
                                 " is negative beyond tolerance");
        ev(i) = std::sqrt(std::max(ev(i), 0.0));
    }
    const CMatrix &v = es.eigenvectors();
    return v * ev.cast<cdouble>().asDiagonal() * v.adjoint();
}

cdouble trace_of_product(const CMatrix &a, const CMatrix &b)
{
    // Tr(AB) = sum_ij A_ij B_ji
    return (a.array() * b.transpose().array()).sum();
}

double relative_frobenius_error(const CMatrix &estimate, const CMatrix &reference)
{
    const double ref = reference.norm();
    const double diff = (estimate - reference).norm();
    return ref > 0.0 ? diff / ref : diff;
}

} // namespace linalg
} // namespace riscf
