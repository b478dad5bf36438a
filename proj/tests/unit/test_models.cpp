#include "subspace_perturb/errors.hpp"
#include "subspace_perturb/matrix.hpp"
#include "subspace_perturb/models.hpp"
#include "subspace_perturb/spectral.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

using namespace subspace_perturb;

TEST(SeededStream, Deterministic) {
  SeededStream a(123), b(123), c(124);
  for (int i = 0; i < 100; ++i) {
    const double x = a.normal();
    EXPECT_EQ(x, b.normal());
    EXPECT_NE(x, c.normal());
  }
  EXPECT_EQ(a.position(), b.position());
}

TEST(SeededStream, ChildIndependentOfParentPosition) {
  SeededStream a(5);
  const std::uint64_t before = a.child(3).seed();
  for (int i = 0; i < 10; ++i) a.next_u64();
  EXPECT_EQ(a.child(3).seed(), before);
}

TEST(SeededStream, ChildSeedsDistinct) {
  SeededStream a(42);
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 10000; ++i) seen.insert(a.child(i).seed());
  EXPECT_EQ(seen.size(), 10000u);
  EXPECT_NE(SeededStream(1).child(0).seed(), SeededStream(2).child(0).seed());
}

TEST(SeededStream, UniformRange) {
  SeededStream s(7);
  for (int i = 0; i < 10000; ++i) {
    const double u = s.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
  EXPECT_FALSE(s.bernoulli(0.0));
  EXPECT_TRUE(s.bernoulli(1.0));
}

TEST(SeededStream, NormalMoments) {
  SeededStream s(2024);
  const int n = 100000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = s.normal();
    sum += z;
    sq += z * z;
  }
  const double mean = sum / n;
  EXPECT_NEAR(mean, 0.0, 0.02);
  EXPECT_NEAR(sq / n - mean * mean, 1.0, 0.02);
}

TEST(Mix64, Bijective) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 5000; ++i) seen.insert(mix64(i));
  EXPECT_EQ(seen.size(), 5000u);
}

TEST(GaussianNoise, SpectralNormNearEdge) {
  SeededStream s(3);
  const Matrix g = gen_gaussian_noise(200, 100, s);
  // sqrt(200) + sqrt(100) ~ 24.1
  const double edge = std::sqrt(200.0) + std::sqrt(100.0);
  EXPECT_NEAR(matrix_norm(g, NormKind::spectral), edge, 0.15 * edge);
}

TEST(GaussianNoise, SymmetricVariant) {
  SeededStream s(4);
  const Matrix g = gen_symmetric_gaussian_noise(50, s);
  EXPECT_EQ(g, g.transpose());
}

TEST(LowRank, SingularValuesExact) {
  SeededStream s(5);
  Vector sig(3);
  sig << 9.0, 4.0, 1.5;
  const LowRankSignal l = gen_low_rank(30, 20, 3, sig, s);
  const Vector got = singular_values(l.x);
  EXPECT_LE((got.head(3) - sig).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE(got(3), 1e-12);
  EXPECT_LE((l.u.matrix().transpose() * l.x * l.v.matrix() - Matrix(sig.asDiagonal()))
                .cwiseAbs()
                .maxCoeff(),
            1e-12);
  Vector bad(2);
  bad << 1.0, 2.0;
  EXPECT_THROW(gen_low_rank(5, 5, 2, bad, s), InvalidInput);
}

TEST(LowRank, SymmetricExactlySymmetric) {
  SeededStream s(6);
  Vector eig(2);
  eig << 5.0, -3.0;
  const SymmetricLowRankSignal l = gen_symmetric_low_rank(20, eig, s);
  EXPECT_EQ(l.x, l.x.transpose());
  const EigenPairs e = leading_eigenpairs(l.x, 2);
  EXPECT_NEAR(e.values(0), 5.0, 1e-12);
  EXPECT_NEAR(e.values(1), -3.0, 1e-12);
  Vector zero(1);
  zero << 0.0;
  EXPECT_THROW(gen_symmetric_low_rank(5, zero, s), InvalidInput);
}

TEST(SpikedCovariance, SmallExample) {
  // d = 2, r = 1, lambda = 1, c = 1: spectrum (2, 1)
  SeededStream s(7);
  const CovarianceModel m = gen_spiked_covariance(2, 1, Vector::Constant(1, 1.0), 1.0, s);
  const Vector ev = symmetric_eigen(m.covariance()).values;
  EXPECT_NEAR(ev(0), 2.0, 1e-14);
  EXPECT_NEAR(ev(1), 1.0, 1e-14);
  EXPECT_NEAR(m.effective_rank(), 1.5, 1e-14);
  EXPECT_NEAR(m.gap(), 1.0, 1e-14);
  const Matrix root = m.covariance_sqrt();
  EXPECT_LE((root * root - m.covariance()).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_THROW(gen_spiked_covariance(3, 3, Vector::Ones(3), 1.0, s), InvalidInput);
}

TEST(SpikedCovariance, EmpiricalErrorSymmetric) {
  SeededStream s(8);
  const CovarianceModel m = gen_spiked_covariance(30, 2, Vector::Constant(2, 10.0), 1.0, s);
  const PerturbationInstance inst = sample_empirical_covariance(m, 200, s);
  EXPECT_EQ(inst.e(), inst.e().transpose());
  EXPECT_EQ(inst.x(), m.covariance());
  EXPECT_EQ(inst.r(), 2);
}

TEST(SpikedCovariance, ConcentratesForLargeN) {
  SeededStream s(9);
  CovarianceModel m = gen_spiked_covariance(5, 1, Vector::Constant(1, 1e-9), 1.0, s);
  const PerturbationInstance inst = sample_empirical_covariance(m, 100000, s);
  EXPECT_LE(matrix_norm(inst.e(), NormKind::spectral), 0.1);
}

TEST(Sbm, IdenticalGraphsAtFullCorrelation) {
  SeededStream s(10);
  const Matrix lambda = (Matrix(2, 2) << 0.5, 0.2, 0.2, 0.5).finished();
  const OmnibusPair pair = gen_rho_sbm_pair(SbmModel::balanced(60, lambda, 1.0), s);
  EXPECT_EQ(pair.a1, pair.a2);
  EXPECT_EQ(pair.a1, pair.a1.transpose());
  EXPECT_EQ(pair.a1.diagonal().cwiseAbs().sum(), 0.0);
}

TEST(Sbm, MarginalsAndCorrelation) {
  SeededStream s(11);
  const Matrix lambda = (Matrix(2, 2) << 0.5, 0.2, 0.2, 0.5).finished();
  for (double rho : {0.0, 0.5}) {
    const SbmModel model = SbmModel::balanced(300, lambda, rho);
    const OmnibusPair pair = gen_rho_sbm_pair(model, s);
    // Pearson correlation over j < l, each edge standardized by its own P_jl
    double cov = 0.0, count = 0.0, m1 = 0.0, m2 = 0.0, expected = 0.0;
    for (Index j = 0; j < 300; ++j) {
      for (Index l = j + 1; l < 300; ++l) {
        const double p = pair.p(j, l);
        const double sd = std::sqrt(p * (1 - p));
        cov += (pair.a1(j, l) - p) * (pair.a2(j, l) - p) / (sd * sd);
        m1 += pair.a1(j, l);
        m2 += pair.a2(j, l);
        expected += p;
        count += 1.0;
      }
    }
    EXPECT_NEAR(cov / count, rho, 0.02) << rho;
    EXPECT_NEAR(m1 / count, expected / count, 0.01);
    EXPECT_NEAR(m2 / count, expected / count, 0.01);
  }
}

TEST(Sbm, ModelValidation) {
  const Matrix lambda = (Matrix(2, 2) << 0.5, 0.2, 0.2, 0.5).finished();
  EXPECT_THROW(SbmModel({10, 10}, lambda, 1.5), InvalidInput);
  EXPECT_THROW(SbmModel({10}, lambda, 0.0), std::exception);
  const Matrix asym = (Matrix(2, 2) << 0.5, 0.2, 0.3, 0.5).finished();
  EXPECT_THROW(SbmModel({10, 10}, asym, 0.0), InvalidInput);
}

TEST(Sbm, MaxExpectedDegree) {
  const Matrix lambda = (Matrix(2, 2) << 0.5, 0.2, 0.2, 0.5).finished();
  const SbmModel m = SbmModel::balanced(500, lambda, 0.0);
  // 250 * 0.5 + 250 * 0.2
  EXPECT_NEAR(m.max_expected_degree(), 175.0, 1e-9);
  EXPECT_EQ(block_matrix_rank(m.p_matrix()), 2);
}

TEST(Omnibus, ModelSpectrum) {
  SeededStream s(12);
  const Matrix lambda = (Matrix(2, 2) << 0.5, 0.2, 0.2, 0.5).finished();
  const OmnibusPair pair = gen_rho_sbm_pair(SbmModel::balanced(40, lambda, 0.3), s);
  EXPECT_EQ(pair.omodel.rows(), 80);
  const EigenPairs po = leading_eigenpairs(pair.omodel, 2);
  const EigenPairs pp = leading_eigenpairs(pair.p, 2);
  EXPECT_NEAR(po.values(0), 2.0 * pp.values(0), 1e-10);
  EXPECT_NEAR(po.values(1), 2.0 * pp.values(1), 1e-10);
  EXPECT_EQ(pair.ohat.topRightCorner(40, 40), 0.5 * (pair.a1 + pair.a2));
  const PerturbationInstance inst = omnibus_instance(pair, 2);
  EXPECT_TRUE(inst.is_symmetric());
  EXPECT_THROW(omnibus_instance(pair, 3), InvalidInput);
}
