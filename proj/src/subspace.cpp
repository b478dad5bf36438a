#include "subspace_perturb/subspace.hpp"

#include "subspace_perturb/errors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace subspace_perturb {

namespace {

void require_same_shape(const OrthonormalFrame& u, const OrthonormalFrame& uhat,
                        const char* op) {
  if (u.ambient_dim() != uhat.ambient_dim() || u.frame_dim() != uhat.frame_dim()) {
    throw DimensionMismatch(std::string(op) + ": frames are " +
                            std::to_string(u.ambient_dim()) + "x" +
                            std::to_string(u.frame_dim()) + " and " +
                            std::to_string(uhat.ambient_dim()) + "x" +
                            std::to_string(uhat.frame_dim()));
  }
}

// One Householder pass; flips column signs so that diag(R) >= 0.
Matrix householder_q(const Matrix& m) {
  Eigen::HouseholderQR<Matrix> qr(m);
  Matrix q = qr.householderQ() * Matrix::Identity(m.rows(), m.cols());
  const Matrix& packed = qr.matrixQR();
  for (Index c = 0; c < m.cols(); ++c) {
    if (packed(c, c) < 0.0) q.col(c) = -q.col(c);
  }
  return q;
}

}  // namespace

OrthonormalFrame::OrthonormalFrame(Matrix q) : q_(std::move(q)) {
  validate_matrix(q_, "orthonormal frame");
  if (q_.cols() > q_.rows()) {
    throw InvalidInput("orthonormal frame: more columns than rows");
  }
  const Matrix gram = q_.transpose() * q_;
  const double err = (gram - Matrix::Identity(q_.cols(), q_.cols())).cwiseAbs().maxCoeff();
  if (!(err <= kFrameTolerance)) {
    throw InvalidInput("orthonormal frame: ||Q^T Q - I||_max = " + format_double(err));
  }
}

OrthonormalFrame OrthonormalFrame::rotated(const Matrix& r) const {
  if (r.rows() != frame_dim() || r.cols() != frame_dim()) {
    throw DimensionMismatch("rotated: rotation must be r x r");
  }
  return OrthonormalFrame(q_ * r);
}

OrthonormalFrame orthonormalize(const Matrix& m) {
  validate_matrix(m, "orthonormalize input");
  if (m.cols() > m.rows()) throw InvalidInput("orthonormalize: more columns than rows");
  // The second pass sees R ~ I, so it preserves the signs fixed by the first.
  return OrthonormalFrame(householder_q(householder_q(m)));
}

OrthonormalFrame random_orthonormal(Index p, Index r, SeededStream& stream) {
  if (p < 1 || r < 1 || r > p) {
    throw InvalidInput("random_orthonormal: need 1 <= r <= p, got p=" +
                       std::to_string(p) + ", r=" + std::to_string(r));
  }
  Matrix g(p, r);
  for (Index i = 0; i < p; ++i) {
    for (Index j = 0; j < r; ++j) g(i, j) = stream.normal();
  }
  return orthonormalize(g);
}

Matrix random_orthogonal(Index r, SeededStream& stream) {
  return random_orthonormal(r, r, stream).matrix();
}

CanonicalAngles canonical_angles(const OrthonormalFrame& u, const OrthonormalFrame& uhat) {
  require_same_shape(u, uhat, "canonical_angles");
  // Cosines come from U^T Uhat, sines from (I - UU^T) Uhat; both descending,
  // so cosine i pairs with sine r-1-i. arccos is ill-conditioned near 0 and
  // arcsin near pi/2, so each angle is taken from whichever is accurate.
  const Vector cosines = singular_values(u.matrix().transpose() * uhat.matrix());
  const Vector sines = singular_values(project_out(u.matrix(), uhat.matrix()));
  const Index r = cosines.size();
  CanonicalAngles out{Vector(r)};
  for (Index i = 0; i < r; ++i) {
    const double c = std::clamp(cosines(i), 0.0, 1.0);
    const double s = std::clamp(sines(r - 1 - i), 0.0, 1.0);
    out.angles(i) = c * c >= 0.5 ? std::asin(s) : std::acos(c);
  }
  std::sort(out.angles.begin(), out.angles.end());
  return out;
}

double sin_theta_spectral_projection(const OrthonormalFrame& u,
                                     const OrthonormalFrame& uhat) {
  require_same_shape(u, uhat, "sin_theta_spectral_projection");
  // ||(I - UU^T) Uhat Uhat^T||_2 = ||(I - UU^T) Uhat||_2 since Uhat^T is a
  // co-isometry; the p x p product is never formed.
  return singular_values(project_out(u.matrix(), uhat.matrix()))(0);
}

SinThetaNorms sin_theta_norms(const OrthonormalFrame& u, const OrthonormalFrame& uhat) {
  const CanonicalAngles theta = canonical_angles(u, uhat);
  SinThetaNorms out;
  double sum_sq = 0.0;
  for (Index i = 0; i < theta.angles.size(); ++i) {
    const double s = std::sin(theta.angles(i));
    out.spectral = std::max(out.spectral, s);
    sum_sq += s * s;
  }
  out.frobenius = std::sqrt(sum_sq);

  const double projected = sin_theta_spectral_projection(u, uhat);
  if (std::abs(projected - out.spectral) > 1e-8) {
    throw std::logic_error("sin_theta_norms: angle route " + format_double(out.spectral) +
                           " disagrees with projection route " + format_double(projected));
  }
  return out;
}

double coherence(const OrthonormalFrame& u) {
  const double t = two_to_inf_norm(u.matrix());
  return static_cast<double>(u.ambient_dim()) / static_cast<double>(u.frame_dim()) * t * t;
}

Matrix project_out(const Matrix& u, const Matrix& m) {
  if (u.rows() != m.rows()) throw DimensionMismatch("project_out: row mismatch");
  return m - u * (u.transpose() * m);
}

}  // namespace subspace_perturb
