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

#ifndef RISCF_LINALG_HPP
#define RISCF_LINALG_HPP

#include "riscf/common.hpp"

namespace riscf::linalg {

// (A + A^H) / 2
CMatrix hermitian_part(const CMatrix &a);

// max |A - A^H| over all entries
double hermitian_defect(const CMatrix &a);

// Smallest eigenvalue of the Hermitian part of A.
double min_eigenvalue(const CMatrix &a);

// True when A is Hermitian within abs_tol and its smallest eigenvalue is at least
// -rel_tol * max(1, largest |eigenvalue|).
bool is_hermitian_psd(const CMatrix &a, double abs_tol = 1e-12, double rel_tol = 1e-9);

// Hermitian square root S with S S = A. Eigenvalues in [-rel_tol * lambda_max, 0) are
// clamped to zero; anything more negative throws NumericalError.
CMatrix hermitian_sqrt(const CMatrix &a, double rel_tol = 1e-9);

// Tr(A B) without forming the product.
cdouble trace_of_product(const CMatrix &a, const CMatrix &b);

// ||A - B||_F / ||B||_F, or ||A||_F when B is zero.
double relative_frobenius_error(const CMatrix &estimate, const CMatrix &reference);

} // namespace riscf::linalg

#endif
