#include "subspace_perturb/decomposition.hpp"
#include "subspace_perturb/errors.hpp"
#include "subspace_perturb/models.hpp"
#include "subspace_perturb/subspace.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace subspace_perturb;

namespace {

PerturbationInstance rect_instance(std::uint64_t seed, Index p1, Index p2, Index r,
                                   double noise, double tail = 0.0) {
  SeededStream s(seed);
  Vector sig = Vector::LinSpaced(r, 20.0, 10.0);
  Matrix x = gen_low_rank(p1, p2, r, sig, s).x;
  if (tail > 0.0) x += tail * gen_gaussian_noise(p1, p2, s);
  Matrix e = noise * gen_gaussian_noise(p1, p2, s);
  return PerturbationInstance(std::move(x), std::move(e), r);
}

PerturbationInstance sym_instance(std::uint64_t seed, Index p, double noise) {
  SeededStream s(seed);
  Vector eig(2);
  eig << 12.0, -9.0;
  Matrix x = gen_symmetric_low_rank(p, eig, s).x;
  Matrix e = noise * gen_symmetric_gaussian_noise(p, s);
  return PerturbationInstance(std::move(x), std::move(e), 2);
}

const Variant kRectVariants[] = {Variant::rect4, Variant::rewritten3, Variant::expanded5};

}  // namespace

TEST(Instance, ValidatesShapesAndRank) {
  EXPECT_THROW(PerturbationInstance(Matrix::Ones(3, 2), Matrix::Ones(2, 3), 1), DimensionMismatch);
  EXPECT_THROW(PerturbationInstance(Matrix::Ones(3, 2), Matrix::Ones(3, 2), 3), InvalidInput);
  EXPECT_THROW(PerturbationInstance(Matrix::Ones(3, 2), Matrix::Ones(3, 2), 0), InvalidInput);
  const auto inst = PerturbationInstance::from_observation(Matrix::Ones(2, 2),
                                                           Matrix::Identity(2, 2), 1);
  EXPECT_EQ(inst.xhat(), inst.x() + inst.e());
}

TEST(VariantNames, RoundTrip) {
  for (auto v : {Variant::rect4, Variant::symmetric4, Variant::rewritten3, Variant::expanded5}) {
    EXPECT_EQ(parse_variant(to_string(v)), v);
  }
  EXPECT_EQ(parse_side(to_string(Side::right)), Side::right);
  EXPECT_THROW(parse_variant("rect5"), InvalidInput);
  EXPECT_THROW(parse_side("up"), InvalidInput);
}

TEST(Decompose, ReconstructsAllRectangularVariants) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto inst = rect_instance(seed, 30, 18, 3, 0.5, seed % 2 ? 0.2 : 0.0);
    for (Variant v : kRectVariants) {
      for (Side side : {Side::left, Side::right}) {
        const auto d = decompose(inst, v, side);
        EXPECT_LE(reconstruction_error(d), 1e-10) << to_string(v) << ' ' << to_string(side);
      }
    }
  }
}

TEST(Decompose, TermCounts) {
  const auto inst = rect_instance(1, 12, 10, 2, 0.3);
  EXPECT_EQ(decompose(inst, Variant::rect4, Side::left).terms.size(), 4u);
  EXPECT_EQ(decompose(inst, Variant::rewritten3, Side::left).terms.size(), 3u);
  EXPECT_EQ(decompose(inst, Variant::expanded5, Side::left).terms.size(), 5u);
  const auto d = decompose(inst, Variant::rect4, Side::right);
  EXPECT_EQ(d.lhs.rows(), 10);
  EXPECT_EQ(d.lhs.cols(), 2);
}

TEST(Decompose, SameLhsAcrossVariants) {
  const auto inst = rect_instance(3, 25, 20, 3, 0.4);
  const FactoredInstance f(inst, FactorKind::singular);
  const Matrix base = decompose(f, Variant::rect4, Side::left).lhs;
  EXPECT_EQ(decompose(f, Variant::rewritten3, Side::left).lhs, base);
  EXPECT_EQ(decompose(f, Variant::expanded5, Side::left).lhs, base);
}

TEST(Decompose, SignalResidualTermVanishesAtExactRank) {
  const auto inst = rect_instance(4, 20, 15, 3, 0.3);
  const auto d = decompose(inst, Variant::rect4, Side::left);
  EXPECT_LE(d.terms[2].value.cwiseAbs().maxCoeff(), 1e-12);
  const auto e = decompose(inst, Variant::expanded5, Side::left);
  EXPECT_LE(e.terms[3].value.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Decompose, ZeroNoiseGivesZeroTerms) {
  const auto inst = rect_instance(5, 14, 11, 2, 0.0);
  for (Variant v : kRectVariants) {
    const auto d = decompose(inst, v, Side::left);
    EXPECT_LE(d.lhs.cwiseAbs().maxCoeff(), 1e-12);
    for (const auto& t : d.terms) EXPECT_LE(t.value.cwiseAbs().maxCoeff(), 1e-12) << t.label;
  }
}

TEST(Decompose, IdentityHoldsForArbitraryOverride) {
  SeededStream s(77);
  const auto inst = rect_instance(6, 16, 12, 3, 0.5);
  AlignmentOverride o;
  o.t_u = gen_gaussian_noise(3, 3, s);
  o.t_v = gen_gaussian_noise(3, 3, s);
  for (Variant v : kRectVariants) {
    const auto d = decompose(inst, v, Side::left, o);
    EXPECT_EQ(d.w_u, *o.t_u);
    EXPECT_LE(reconstruction_error(d), 1e-10) << to_string(v);
  }
  AlignmentOverride bad;
  bad.t_u = Matrix::Identity(2, 2);
  EXPECT_THROW(decompose(inst, Variant::rect4, Side::left, bad), DimensionMismatch);
}

TEST(Decompose, SymmetricVariant) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto inst = sym_instance(seed, 25, 0.3);
    const auto d = decompose(inst, Variant::symmetric4, Side::left);
    EXPECT_LE(reconstruction_error(d), 1e-10);
    EXPECT_EQ(d.w_u, d.w_v);
  }
}

TEST(Decompose, SymmetricVariantRejectsNonSymmetricData) {
  const auto inst = rect_instance(8, 10, 10, 2, 0.3);
  EXPECT_THROW(decompose(inst, Variant::symmetric4, Side::left), PreconditionError);
  const auto rect = rect_instance(8, 10, 8, 2, 0.3);
  EXPECT_THROW(decompose(rect, Variant::symmetric4, Side::left), std::exception);
}

TEST(Decompose, FactorKindMismatchThrows) {
  const auto inst = sym_instance(2, 12, 0.2);
  const FactoredInstance f(inst, FactorKind::singular);
  EXPECT_THROW(decompose(f, Variant::symmetric4, Side::left), InvalidInput);
}

TEST(Decompose, DetectsCorruptedTerm) {
  const auto inst = rect_instance(9, 20, 16, 2, 0.5);
  auto d = decompose(inst, Variant::rect4, Side::left);
  d.terms[1].value(0, 0) += 1e-3;
  EXPECT_GE(reconstruction_error(d), 1e-4);
}

TEST(Decompose, RankDeficientObservation) {
  Matrix x = Matrix::Zero(6, 5);
  x(0, 0) = 1.0;
  const PerturbationInstance inst(x, Matrix::Zero(6, 5), 2);
  EXPECT_THROW(decompose(inst, Variant::rect4, Side::left), RankDeficient);
}

TEST(Decompose, TermNormsInvariantUnderSignalRotation) {
  // rotating the row space leaves left-side term norms unchanged
  SeededStream s(10);
  const auto inst = rect_instance(10, 18, 14, 3, 0.4);
  const Matrix q = random_orthogonal(14, s);
  const PerturbationInstance rot(inst.x() * q, inst.e() * q, 3);
  const auto a = term_norms(decompose(inst, Variant::rect4, Side::left));
  const auto b = term_norms(decompose(rot, Variant::rect4, Side::left));
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_NEAR(a[i].two_to_inf, b[i].two_to_inf, 1e-10) << a[i].label;
    EXPECT_NEAR(a[i].spectral, b[i].spectral, 1e-10) << a[i].label;
  }
}

TEST(TermNorms, CsvHeaderAndRows) {
  const auto inst = rect_instance(11, 10, 9, 2, 0.2);
  std::vector<DecompositionTerms> all{decompose(inst, Variant::rect4, Side::left),
                                      decompose(inst, Variant::rewritten3, Side::right)};
  std::ostringstream out;
  write_term_norms_csv(out, all);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "variant,side,term_label,two_to_inf,spectral,frobenius");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 7);
  EXPECT_NE(out.str().find("rect4,left,T1,"), std::string::npos);
}
