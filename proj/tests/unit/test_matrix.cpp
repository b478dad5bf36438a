#include "subspace_perturb/errors.hpp"
#include "subspace_perturb/matrix.hpp"
#include "subspace_perturb/models.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

using namespace subspace_perturb;

namespace {

// independent row sweep
double row_norm_oracle(const Matrix& a) {
  double best = 0.0;
  for (Index i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (Index j = 0; j < a.cols(); ++j) s += a(i, j) * a(i, j);
    best = std::max(best, std::sqrt(s));
  }
  return best;
}

Matrix upper_ones() { return (Matrix(2, 2) << 1, 1, 0, 1).finished(); }

}  // namespace

TEST(TwoToInf, ConstantMatrixIsOne) {
  const Matrix a = Matrix::Constant(4, 9, 1.0 / 3.0);
  EXPECT_NEAR(two_to_inf_norm(a), 1.0, 1e-15);
}

TEST(TwoToInf, IdentityIsOne) { EXPECT_DOUBLE_EQ(two_to_inf_norm(Matrix::Identity(3, 3)), 1.0); }

TEST(TwoToInf, UpperOnes) { EXPECT_NEAR(two_to_inf_norm(upper_ones()), std::sqrt(2.0), 1e-15); }

TEST(TwoToInf, MatchesRowSweepAndSupremum) {
  SeededStream s(11);
  for (int t = 0; t < 50; ++t) {
    const Matrix a = gen_gaussian_noise(3, 2, s);
    const double v = two_to_inf_norm(a);
    EXPECT_NEAR(v, row_norm_oracle(a), 1e-14);
    // sup over unit x of ||Ax||_inf never exceeds it
    for (int k = 0; k < 20; ++k) {
      Vector x = gen_gaussian_noise(2, 1, s).col(0);
      x.normalize();
      EXPECT_LE((a * x).cwiseAbs().maxCoeff(), v + 1e-14);
    }
  }
}

TEST(TwoToInf, NotSubmultiplicative) {
  const Matrix a = upper_ones();
  EXPECT_NEAR(two_to_inf_norm(a * a), std::sqrt(5.0), 1e-12);
  EXPECT_GT(two_to_inf_norm(a * a), two_to_inf_norm(a) * two_to_inf_norm(a));
}

TEST(TwoToInf, LeftIsometryChangesIt) {
  const double h = 1.0 / std::sqrt(2.0);
  const Matrix u = (Matrix(2, 2) << h, h, h, -h).finished();
  EXPECT_NEAR(two_to_inf_norm(u * upper_ones()), std::sqrt(2.5), 1e-12);
  EXPECT_NEAR(two_to_inf_norm(upper_ones()), std::sqrt(2.0), 1e-12);
}

TEST(MatrixNorm, ConstantMatrixSpectral) {
  const Matrix a = Matrix::Constant(4, 7, 1.0 / std::sqrt(7.0));
  EXPECT_NEAR(matrix_norm(a, NormKind::spectral), 2.0, 1e-12);
  EXPECT_NEAR(matrix_norm(a, NormKind::frobenius), 2.0, 1e-12);
}

TEST(MatrixNorm, ZeroMatrix) {
  const Matrix z = Matrix::Zero(3, 4);
  for (auto k : {NormKind::spectral, NormKind::frobenius, NormKind::one, NormKind::infinity,
                 NormKind::max}) {
    EXPECT_EQ(matrix_norm(z, k), 0.0) << to_string(k);
  }
}

TEST(MatrixNorm, HandComputedSums) {
  const Matrix a = (Matrix(2, 2) << 1, 2, 0, 1).finished();
  EXPECT_DOUBLE_EQ(matrix_norm(a, NormKind::one), 3.0);
  EXPECT_DOUBLE_EQ(matrix_norm(a, NormKind::infinity), 3.0);
  EXPECT_DOUBLE_EQ(matrix_norm(a, NormKind::max), 2.0);
}

TEST(MatrixNorm, ParseRoundTrip) {
  for (auto k : {NormKind::spectral, NormKind::frobenius, NormKind::one, NormKind::infinity,
                 NormKind::max}) {
    EXPECT_EQ(parse_norm_kind(to_string(k)), k);
  }
  EXPECT_THROW(parse_norm_kind("nuclear"), InvalidInput);
}

TEST(Validate, RejectsNonFiniteAndEmpty) {
  Matrix a = Matrix::Ones(2, 2);
  a(1, 0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(two_to_inf_norm(a), InvalidInput);
  EXPECT_THROW(matrix_norm(Matrix(0, 3), NormKind::max), InvalidInput);
}

TEST(Svd, Diagonal) {
  const Matrix a = (Matrix(2, 2) << 3, 0, 0, 1).finished();
  const SvdFactors f = svd(a);
  EXPECT_NEAR(f.singular_values(0), 3.0, 1e-14);
  EXPECT_NEAR(f.singular_values(1), 1.0, 1e-14);
  EXPECT_NEAR(std::abs(f.left(0, 0)), 1.0, 1e-14);
  EXPECT_NEAR(std::abs(f.right(1, 1)), 1.0, 1e-14);
}

TEST(Svd, ClosedForm2x2) {
  const Matrix a = (Matrix(2, 2) << 0, 2, 1, 0).finished();
  const Vector s = singular_values(a);
  EXPECT_NEAR(s(0), 2.0, 1e-14);
  EXPECT_NEAR(s(1), 1.0, 1e-14);
}

TEST(Svd, ContractOnRandomMatrices) {
  SeededStream st(5);
  for (int t = 0; t < 20; ++t) {
    const Matrix a = gen_gaussian_noise(8, 5, st);
    const SvdFactors f = svd(a);
    ASSERT_EQ(f.singular_values.size(), 5);
    const Matrix rec = f.left * f.singular_values.asDiagonal() * f.right.transpose();
    EXPECT_LE((a - rec).norm(), 1e-8 * std::max(1.0, a.norm()));
    EXPECT_LE((f.left.transpose() * f.left - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LE((f.right.transpose() * f.right - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff(), 1e-10);
    for (Index i = 1; i < 5; ++i) EXPECT_LE(f.singular_values(i), f.singular_values(i - 1));
    EXPECT_GE(f.singular_values(4), 0.0);
  }
}

TEST(Svd, DeterministicForIdenticalInput) {
  SeededStream st(8);
  const Matrix a = gen_gaussian_noise(12, 7, st);
  const SvdFactors f1 = svd(a), f2 = svd(a);
  EXPECT_EQ(f1.left, f2.left);
  EXPECT_EQ(f1.singular_values, f2.singular_values);
}

TEST(Truncate, KeepsLeading) {
  Matrix a = Matrix::Zero(3, 3);
  a.diagonal() << 3, 2, 1;
  const Truncation t = truncate(svd(a), 2);
  EXPECT_EQ(t.sigma.size(), 2);
  EXPECT_NEAR(t.sigma(0), 3.0, 1e-14);
  EXPECT_NEAR(t.sigma(1), 2.0, 1e-14);
  EXPECT_EQ(truncate(svd(a), 3).sigma.size(), 3);
  EXPECT_THROW(truncate(svd(a), 0), InvalidInput);
  EXPECT_THROW(truncate(svd(a), 4), InvalidInput);
}

TEST(Truncate, RankOneOuterProduct) {
  Vector u(4), v(3);
  u << 1, 2, 2, 0;
  v << 0, 3, 4;
  u /= 3.0;
  v /= 5.0;
  const Matrix a = 5.0 * u * v.transpose();
  const Truncation t = truncate(svd(a), 1);
  EXPECT_NEAR(t.sigma(0), 5.0, 1e-13);
  EXPECT_NEAR(std::abs(t.u.col(0).dot(u)), 1.0, 1e-13);
  EXPECT_NEAR(std::abs(t.v.col(0).dot(v)), 1.0, 1e-13);
}

TEST(InverseDiagonal, RejectsTinyEntries) {
  Vector d(2);
  d << 2.0, 1e-14;
  EXPECT_THROW(inverse_diagonal(d, 2.0), RankDeficient);
  d(1) = 0.5;
  const Vector inv = inverse_diagonal(d, 2.0);
  EXPECT_DOUBLE_EQ(inv(1), 2.0);
}

TEST(MatrixText, RoundTripsBitExact) {
  SeededStream st(3);
  const Matrix a = gen_gaussian_noise(5, 4, st) * 1e-7;
  std::stringstream buf;
  write_matrix_text(buf, a);
  const Matrix b = read_matrix_text(buf);
  EXPECT_EQ(a, b);
}

TEST(MatrixText, RejectsBadHeaderAndShortData) {
  std::stringstream bad("x y\n1 2\n");
  EXPECT_THROW(read_matrix_text(bad), InvalidInput);
  std::stringstream short_data("2 2\n1 2 3\n");
  EXPECT_THROW(read_matrix_text(short_data), InvalidInput);
}

TEST(FormatDouble, SeventeenSignificantDigits) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(0.5), "0.5");
  const double x = std::sqrt(2.0);
  EXPECT_EQ(std::stod(format_double(x)), x);
}

// Norm relation chain as a property over random shapes.
TEST(NormRelations, RandomShapes) {
  SeededStream st(99);
  for (int t = 0; t < 200; ++t) {
    const Index p1 = 1 + static_cast<Index>(st.next_u64() % 12);
    const Index p2 = 1 + static_cast<Index>(st.next_u64() % 12);
    const Matrix a = gen_gaussian_noise(p1, p2, st);
    const double tti = two_to_inf_norm(a), mx = matrix_norm(a, NormKind::max);
    const double inf = matrix_norm(a, NormKind::infinity), spec = matrix_norm(a, NormKind::spectral);
    const double eps = 1e-12 * std::max(1.0, spec);
    EXPECT_LE(tti / std::sqrt(double(p2)), mx + eps);
    EXPECT_LE(mx, tti + eps);
    EXPECT_LE(tti, inf + eps);
    EXPECT_LE(inf, std::sqrt(double(p2)) * tti + eps);
    EXPECT_LE(tti, spec + eps);
    EXPECT_LE(spec, std::sqrt(double(p1)) * tti + eps);
    EXPECT_LE(spec, std::sqrt(double(p2)) * two_to_inf_norm(a.transpose()) + eps);
    EXPECT_LE(spec, a.norm() + eps);
  }
}
