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

#ifndef RISCF_PHASE_HPP
#define RISCF_PHASE_HPP

#include "riscf/common.hpp"

#include <span>
#include <vector>

namespace riscf {

/// RIS phase configuration: one angle in [-pi, pi] per reflecting element.
class PhaseShiftVector {
public:
    PhaseShiftVector() = default;
    explicit PhaseShiftVector(std::vector<double> theta);

    /// All-zero phases (Phi = I).
    static PhaseShiftVector zeros(std::size_t n);

    /// theta_n = pi * gene_n for genes in [-1, 1].
    static PhaseShiftVector from_normalized(std::span<const double> genes);

    std::size_t size() const { return theta_.size(); }
    double operator[](std::size_t n) const { return theta_[n]; }
    const std::vector<double> &angles() const { return theta_; }

    /// Diagonal of Phi, i.e. exp(i theta_n).
    CVector diagonal() const;

private:
    std::vector<double> theta_;
};

} // namespace riscf

#endif
