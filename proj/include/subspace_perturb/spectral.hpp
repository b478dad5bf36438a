#pragma once

#include "subspace_perturb/matrix.hpp"

#include <cstddef>
#include <string_view>

namespace subspace_perturb {

struct EigenPairs {
  Vector values;
  Matrix vectors;  // columns are unit eigenvectors
};

// ||A - A^T||_max <= rel_tol * max(1, ||A||_max)
bool is_symmetric(const Matrix& a, double rel_tol = 1e-12);
void require_symmetric(const Matrix& a, std::string_view what);

/// Full eigendecomposition of a symmetric matrix, eigenvalues in signed
/// non-increasing order (lambda_1 >= ... >= lambda_p).
EigenPairs symmetric_eigen(const Matrix& a);

// Above this dimension leading_eigenpairs switches to block subspace iteration.
inline constexpr Index kDenseEigenLimit = 1000;

struct SubspaceIterationOptions {
  Index oversample = 8;
  std::size_t max_iterations = 1000;
  // Converged once every returned pair has ||A q - theta q|| <= tolerance * |theta_1|.
  double tolerance = 1e-12;
};

/// The k eigenpairs of largest |lambda|, ordered by |lambda| non-increasing
/// (ties broken toward the positive eigenvalue). Uses a dense solver up to
/// kDenseEigenLimit and block subspace iteration with Rayleigh-Ritz beyond,
/// falling back to the dense solver if iteration fails to converge.
EigenPairs leading_eigenpairs(const Matrix& a, Index k);

/// Block subspace iteration only; throws ConvergenceError on budget exhaustion.
EigenPairs leading_eigenpairs_iterative(const Matrix& a, Index k,
                                        const SubspaceIterationOptions& options = {});

}  // namespace subspace_perturb
