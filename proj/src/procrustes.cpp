#include "subspace_perturb/procrustes.hpp"

#include "subspace_perturb/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace subspace_perturb {

namespace {

void require_same_shape(const OrthonormalFrame& u, const OrthonormalFrame& uhat,
                        const char* op) {
  if (u.ambient_dim() != uhat.ambient_dim() || u.frame_dim() != uhat.frame_dim()) {
    throw DimensionMismatch(std::string(op) + ": frame shapes differ");
  }
}

AlignmentResult evaluate(const OrthonormalFrame& u, const OrthonormalFrame& uhat, Matrix w) {
  AlignmentResult out;
  out.gram = u.matrix().transpose() * uhat.matrix();
  const Matrix diff = uhat.matrix() - u.matrix() * w;
  out.residual_frobenius = diff.norm();
  out.residual_spectral = singular_values(diff)(0);
  out.residual_two_to_inf = two_to_inf_norm(diff);
  out.w = std::move(w);
  return out;
}

Matrix rotation(double theta, bool reflect) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  Matrix w(2, 2);
  if (reflect) {
    w << c, s, s, -c;
  } else {
    w << c, -s, s, c;
  }
  return w;
}

}  // namespace

AlignmentResult align(const OrthonormalFrame& u, const OrthonormalFrame& uhat) {
  require_same_shape(u, uhat, "align");
  const Matrix gram = u.matrix().transpose() * uhat.matrix();
  const SvdFactors f = svd(gram);
  AlignmentResult out = evaluate(u, uhat, f.left * f.right.transpose());
  out.non_unique = f.singular_values(f.singular_values.size() - 1) <= kRankTolerance;
  return out;
}

AlignmentResult align_bruteforce(const OrthonormalFrame& u, const OrthonormalFrame& uhat,
                                 std::size_t grid_size) {
  require_same_shape(u, uhat, "align_bruteforce");
  const Index r = u.frame_dim();
  if (r > 2) throw InvalidInput("align_bruteforce: only r <= 2 is supported");
  if (grid_size < 4) throw InvalidInput("align_bruteforce: grid_size must be >= 4");

  auto residual = [&](const Matrix& w) { return (uhat.matrix() - u.matrix() * w).norm(); };

  if (r == 1) {
    const Matrix plus = Matrix::Constant(1, 1, 1.0);
    const Matrix minus = Matrix::Constant(1, 1, -1.0);
    return evaluate(u, uhat, residual(minus) < residual(plus) ? minus : plus);
  }

  constexpr double two_pi = 2.0 * std::numbers::pi;
  double best_theta = 0.0;
  bool best_reflect = false;
  double best = residual(rotation(0.0, false));

  for (bool reflect : {false, true}) {
    double theta_k = 0.0;
    double value_k = residual(rotation(0.0, reflect));
    for (std::size_t k = 1; k < grid_size; ++k) {
      const double theta = two_pi * static_cast<double>(k) / static_cast<double>(grid_size);
      const double value = residual(rotation(theta, reflect));
      if (value < value_k) {
        value_k = value;
        theta_k = theta;
      }
    }
    // Zoom: each round searches +-half_width around the incumbent on a finer grid.
    constexpr int kRefinePoints = 200;
    double half_width = two_pi / static_cast<double>(grid_size);
    while (half_width > 1e-14) {
      const double center = theta_k;
      for (int k = 0; k <= kRefinePoints; ++k) {
        const double theta = center - half_width + 2.0 * half_width * k / kRefinePoints;
        const double value = residual(rotation(theta, reflect));
        if (value < value_k) {
          value_k = value;
          theta_k = theta;
        }
      }
      half_width *= 2.0 / kRefinePoints;
    }
    if (value_k < best) {
      best = value_k;
      best_theta = theta_k;
      best_reflect = reflect;
    }
  }
  return evaluate(u, uhat, rotation(best_theta, best_reflect));
}

ResidualSandwich residual_sandwich(const OrthonormalFrame& u, const OrthonormalFrame& uhat) {
  require_same_shape(u, uhat, "residual_sandwich");
  const AlignmentResult a = align(u, uhat);
  const double s = sin_theta_norms(u, uhat).spectral;
  return ResidualSandwich{0.5 * s * s, singular_values(a.gram - a.w)(0), s * s};
}

SpectralResidualBounds spectral_residual_bounds(const OrthonormalFrame& u,
                                                const OrthonormalFrame& uhat) {
  require_same_shape(u, uhat, "spectral_residual_bounds");
  const AlignmentResult a = align(u, uhat);
  const double s = sin_theta_norms(u, uhat).spectral;
  return SpectralResidualBounds{s, a.residual_spectral,
                                std::min(1.0 + s, std::numbers::sqrt2) * s};
}

}  // namespace subspace_perturb
