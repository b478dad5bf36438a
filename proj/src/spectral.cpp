#include "subspace_perturb/spectral.hpp"

#include "subspace_perturb/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace subspace_perturb {

bool is_symmetric(const Matrix& a, double rel_tol) {
  if (a.rows() != a.cols()) return false;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  return (a - a.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

void require_symmetric(const Matrix& a, std::string_view what) {
  if (a.rows() != a.cols()) {
    throw DimensionMismatch(std::string(what) + ": matrix is not square");
  }
  if (!is_symmetric(a)) {
    throw PreconditionError(std::string(what) + ": matrix is not symmetric");
  }
}

namespace {

// Permutation ordering eigenvalues by |lambda| descending, positive first on ties.
std::vector<Index> by_magnitude(const Vector& values) {
  std::vector<Index> order(static_cast<std::size_t>(values.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index i, Index j) {
    const double ai = std::abs(values(i));
    const double aj = std::abs(values(j));
    if (ai != aj) return ai > aj;
    return values(i) > values(j);
  });
  return order;
}

EigenPairs select(const Vector& values, const Matrix& vectors,
                  const std::vector<Index>& order, Index k) {
  EigenPairs out{Vector(k), Matrix(vectors.rows(), k)};
  for (Index c = 0; c < k; ++c) {
    out.values(c) = values(order[static_cast<std::size_t>(c)]);
    out.vectors.col(c) = vectors.col(order[static_cast<std::size_t>(c)]);
  }
  return out;
}

Matrix orthonormal_basis(const Matrix& z) {
  Eigen::HouseholderQR<Matrix> qr(z);
  return qr.householderQ() * Matrix::Identity(z.rows(), z.cols());
}

void check_k(const Matrix& a, Index k) {
  if (k < 1 || k > a.rows()) {
    throw InvalidInput("leading_eigenpairs: k = " + std::to_string(k) +
                       " outside [1, " + std::to_string(a.rows()) + "]");
  }
}

}  // namespace

EigenPairs symmetric_eigen(const Matrix& a) {
  validate_matrix(a, "symmetric_eigen input");
  require_symmetric(a, "symmetric_eigen");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a);
  if (solver.info() != Eigen::Success) {
    throw ConvergenceError("SelfAdjointEigenSolver",
                           static_cast<std::size_t>(
                               Eigen::SelfAdjointEigenSolver<Matrix>::m_maxIterations) *
                               static_cast<std::size_t>(a.rows()));
  }
  // Eigen returns ascending order.
  const Index p = a.rows();
  EigenPairs out{solver.eigenvalues().reverse(), Matrix(p, p)};
  for (Index c = 0; c < p; ++c) out.vectors.col(c) = solver.eigenvectors().col(p - 1 - c);
  return out;
}

EigenPairs leading_eigenpairs(const Matrix& a, Index k) {
  validate_matrix(a, "leading_eigenpairs input");
  check_k(a, k);
  if (a.rows() > kDenseEigenLimit) {
    require_symmetric(a, "leading_eigenpairs");
    try {
      return leading_eigenpairs_iterative(a, k);
    } catch (const ConvergenceError&) {
      // fall through to the dense solver
    }
  }
  const EigenPairs full = symmetric_eigen(a);
  return select(full.values, full.vectors, by_magnitude(full.values), k);
}

EigenPairs leading_eigenpairs_iterative(const Matrix& a, Index k,
                                        const SubspaceIterationOptions& options) {
  validate_matrix(a, "leading_eigenpairs_iterative input");
  check_k(a, k);
  const Index p = a.rows();
  const Index block = std::min(p, k + std::max<Index>(options.oversample, 0));

  // Fixed start so the result is a pure function of `a`.
  std::mt19937_64 engine(0x5eed5eed5eedULL);
  Matrix start(p, block);
  for (Index i = 0; i < p; ++i) {
    for (Index j = 0; j < block; ++j) {
      start(i, j) = static_cast<double>(engine() >> 11) * 0x1.0p-52 - 1.0;
    }
  }
  Matrix q = orthonormal_basis(start);

  for (std::size_t it = 0; it < options.max_iterations; ++it) {
    const Matrix z = a * q;
    Matrix t = q.transpose() * z;
    t = 0.5 * (t + t.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Matrix> small(t);
    const auto order = by_magnitude(small.eigenvalues());
    Matrix s(block, block);
    Vector theta(block);
    for (Index c = 0; c < block; ++c) {
      theta(c) = small.eigenvalues()(order[static_cast<std::size_t>(c)]);
      s.col(c) = small.eigenvectors().col(order[static_cast<std::size_t>(c)]);
    }
    const Matrix ritz = q * s;
    const Matrix image = z * s;

    const double scale = std::abs(theta(0));
    bool converged = true;
    for (Index c = 0; c < k && converged; ++c) {
      const double res = (image.col(c) - theta(c) * ritz.col(c)).norm();
      converged = res <= options.tolerance * scale;
    }
    if (converged) {
      return EigenPairs{theta.head(k), ritz.leftCols(k)};
    }
    q = orthonormal_basis(image);
  }
  throw ConvergenceError("block subspace iteration", options.max_iterations);
}

}  // namespace subspace_perturb
