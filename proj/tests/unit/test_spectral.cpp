#include "subspace_perturb/errors.hpp"
#include "subspace_perturb/models.hpp"
#include "subspace_perturb/spectral.hpp"
#include "subspace_perturb/subspace.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace subspace_perturb;

TEST(Symmetric, Detection) {
  Matrix a = (Matrix(2, 2) << 1, 2, 2, 3).finished();
  EXPECT_TRUE(is_symmetric(a));
  a(0, 1) += 1e-6;
  EXPECT_FALSE(is_symmetric(a));
  EXPECT_THROW(require_symmetric(a, "test"), PreconditionError);
  EXPECT_THROW(require_symmetric(Matrix::Ones(2, 3), "test"), DimensionMismatch);
}

TEST(SymmetricEigen, SignedDescendingOrder) {
  Matrix a = Matrix::Zero(3, 3);
  a.diagonal() << -5, 2, 1;
  const EigenPairs e = symmetric_eigen(a);
  EXPECT_NEAR(e.values(0), 2, 1e-14);
  EXPECT_NEAR(e.values(1), 1, 1e-14);
  EXPECT_NEAR(e.values(2), -5, 1e-14);
}

TEST(LeadingEigenpairs, OrderedByMagnitudeTiesPositive) {
  Matrix a = Matrix::Zero(4, 4);
  a.diagonal() << 1, -3, 3, 0.5;
  const EigenPairs e = leading_eigenpairs(a, 3);
  EXPECT_NEAR(e.values(0), 3, 1e-14);
  EXPECT_NEAR(e.values(1), -3, 1e-14);
  EXPECT_NEAR(e.values(2), 1, 1e-14);
  EXPECT_THROW(leading_eigenpairs(a, 0), InvalidInput);
  EXPECT_THROW(leading_eigenpairs(a, 5), InvalidInput);
}

TEST(LeadingEigenpairs, IterativeAgreesWithDense) {
  SeededStream s(42);
  Vector eig(3);
  eig << 40, -30, 20;
  const SymmetricLowRankSignal sig = gen_symmetric_low_rank(300, eig, s);
  const Matrix noise = gen_symmetric_gaussian_noise(300, s) * 0.05;
  const Matrix a = sig.x + noise;

  const EigenPairs dense = leading_eigenpairs(a, 3);
  const EigenPairs iter = leading_eigenpairs_iterative(a, 3);
  for (Index k = 0; k < 3; ++k) {
    EXPECT_NEAR(iter.values(k), dense.values(k), 1e-9 * 40);
    EXPECT_NEAR(std::abs(iter.vectors.col(k).dot(dense.vectors.col(k))), 1.0, 1e-9);
  }
}

TEST(LeadingEigenpairs, IterativeBudgetError) {
  SeededStream s(1);
  const Matrix a = gen_symmetric_gaussian_noise(60, s);
  SubspaceIterationOptions opts;
  opts.max_iterations = 1;
  opts.oversample = 0;
  try {
    leading_eigenpairs_iterative(a, 5, opts);
    FAIL() << "expected ConvergenceError";
  } catch (const ConvergenceError& e) {
    EXPECT_EQ(e.iteration_budget(), 1u);
  }
}
