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

#ifndef RISCF_COMMON_HPP
#define RISCF_COMMON_HPP

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace riscf {

using cdouble = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

inline constexpr double pi = 3.14159265358979323846;

// Invalid user-supplied parameters.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Factorization or definiteness failures inside the linear algebra.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Operation called with inputs that break its precondition.
class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

using Rng = std::mt19937_64;

// Independent generator for (seed, stream): the same pair always yields the same sequence.
Rng make_stream(std::uint64_t seed, std::uint64_t stream = 0, std::uint64_t substream = 0);

// One circularly-symmetric CN(0,1) draw.
cdouble complex_normal(Rng &rng);

// Vector / matrix of i.i.d. CN(0,1) entries, filled column-major.
CVector complex_normal_vector(Eigen::Index n, Rng &rng);
CMatrix complex_normal_matrix(Eigen::Index rows, Eigen::Index cols, Rng &rng);

} // namespace riscf

#endif
