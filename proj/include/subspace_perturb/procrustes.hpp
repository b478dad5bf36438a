#pragma once

#include "subspace_perturb/matrix.hpp"
#include "subspace_perturb/subspace.hpp"

#include <cstddef>

namespace subspace_perturb {

/// Frobenius-optimal orthogonal alignment of Uhat onto U:
/// w = argmin_{W orthogonal} ||Uhat - U W||_F = W1 W2^T where U^T Uhat = W1 S W2^T.
struct AlignmentResult {
  Matrix w;
  Matrix gram;  // U^T Uhat
  double residual_frobenius = 0.0;
  double residual_spectral = 0.0;
  double residual_two_to_inf = 0.0;
  // U^T Uhat has a zero singular value, so the minimizer is not unique; w is
  // still the SVD-induced W1 W2^T.
  bool non_unique = false;
};

AlignmentResult align(const OrthonormalFrame& u, const OrthonormalFrame& uhat);

/// Exhaustive oracle for r in {1, 2}: every sign (r = 1) or every rotation and
/// reflection on an angle grid of `grid_size` points, refined by successively
/// finer grids around the best cell. Residuals are evaluated directly on
/// Uhat - U W. Throws InvalidInput for r > 2.
AlignmentResult align_bruteforce(const OrthonormalFrame& u, const OrthonormalFrame& uhat,
                                 std::size_t grid_size);

struct ResidualSandwich {
  double lower = 0.0;  // 0.5 ||sin Theta||_2^2
  double mid = 0.0;    // ||U^T Uhat - W_U||_2
  double upper = 0.0;  // ||sin Theta||_2^2
};

ResidualSandwich residual_sandwich(const OrthonormalFrame& u, const OrthonormalFrame& uhat);

struct SpectralResidualBounds {
  double sin_theta = 0.0;  // ||sin Theta||_2
  double residual = 0.0;   // ||Uhat - U W_U||_2
  double upper = 0.0;      // min(1 + ||sin Theta||_2, sqrt 2) ||sin Theta||_2
};

SpectralResidualBounds spectral_residual_bounds(const OrthonormalFrame& u,
                                                const OrthonormalFrame& uhat);

}  // namespace subspace_perturb
