#pragma once

#include "subspace_perturb/matrix.hpp"
#include "subspace_perturb/random.hpp"

namespace subspace_perturb {

inline constexpr double kFrameTolerance = 1e-10;

/// A p x r matrix with orthonormal columns (a point on the Stiefel manifold).
/// Construction checks ||Q^T Q - I||_max <= kFrameTolerance.
class OrthonormalFrame {
 public:
  explicit OrthonormalFrame(Matrix q);

  const Matrix& matrix() const noexcept { return q_; }
  Index ambient_dim() const noexcept { return q_.rows(); }
  Index frame_dim() const noexcept { return q_.cols(); }

  // Q R for an r x r orthogonal R.
  OrthonormalFrame rotated(const Matrix& r) const;

 private:
  Matrix q_;
};

/// Thin orthonormal basis for the column span of a full-column-rank `m`,
/// by Householder QR (R with positive diagonal) followed by one
/// re-orthogonalization pass.
OrthonormalFrame orthonormalize(const Matrix& m);

/// Haar-distributed frame: orthonormalized p x r matrix of standard normals.
OrthonormalFrame random_orthonormal(Index p, Index r, SeededStream& stream);

/// Random r x r orthogonal matrix (Haar).
Matrix random_orthogonal(Index r, SeededStream& stream);

struct CanonicalAngles {
  Vector angles;  // radians in [0, pi/2], non-decreasing
};

/// arccos of the singular values of U^T Uhat, clamped into [0, 1] first.
CanonicalAngles canonical_angles(const OrthonormalFrame& u, const OrthonormalFrame& uhat);

struct SinThetaNorms {
  double spectral = 0.0;
  double frobenius = 0.0;
};

/// ||sin Theta(Uhat, U)|| in spectral and Frobenius norm. The spectral value is
/// cross-checked against ||(I - U U^T) Uhat Uhat^T||_2; a disagreement beyond
/// 1e-8 raises std::logic_error.
SinThetaNorms sin_theta_norms(const OrthonormalFrame& u, const OrthonormalFrame& uhat);

/// Spectral norm of (I - U U^T) Uhat Uhat^T, the complement-projection route.
double sin_theta_spectral_projection(const OrthonormalFrame& u, const OrthonormalFrame& uhat);

/// mu(U) = (p / r) ||U||_{2->inf}^2, always in [1, p/r].
double coherence(const OrthonormalFrame& u);

// (I - U U^T) M without forming the p x p projector.
Matrix project_out(const Matrix& u, const Matrix& m);

}  // namespace subspace_perturb
