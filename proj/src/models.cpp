#include "subspace_perturb/models.hpp"

#include "subspace_perturb/errors.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace subspace_perturb {

std::uint64_t mix64(std::uint64_t x) noexcept {
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

SeededStream::SeededStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

std::uint64_t SeededStream::next_u64() {
  ++position_;
  return engine_();
}

double SeededStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SeededStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(theta);
  has_spare_ = true;
  return radius * std::cos(theta);
}

bool SeededStream::bernoulli(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput("bernoulli: p outside [0, 1]");
  return uniform() < p;
}

SeededStream SeededStream::child(std::uint64_t index) const {
  return SeededStream(mix64(seed_ ^ mix64(index * 0x9E3779B97F4A7C15ULL + 0xD1B54A32D192ED03ULL)));
}

Matrix gen_gaussian_noise(Index p1, Index p2, SeededStream& stream) {
  if (p1 < 1 || p2 < 1) throw InvalidInput("gen_gaussian_noise: dimensions must be >= 1");
  Matrix g(p1, p2);
  for (Index i = 0; i < p1; ++i) {
    for (Index j = 0; j < p2; ++j) g(i, j) = stream.normal();
  }
  return g;
}

Matrix gen_symmetric_gaussian_noise(Index p, SeededStream& stream) {
  const Matrix g = gen_gaussian_noise(p, p, stream);
  Matrix s = (g + g.transpose()) / std::sqrt(2.0);
  return s;
}

namespace {

void require_sorted_positive(const Vector& v, const char* what) {
  for (Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v(i)) || v(i) <= 0.0) {
      throw InvalidInput(std::string(what) + " must be positive and finite");
    }
    if (i > 0 && v(i) > v(i - 1)) {
      throw InvalidInput(std::string(what) + " must be non-increasing");
    }
  }
}

// (M + M^T) / 2 makes the result symmetric bit for bit.
Matrix symmetrized(const Matrix& m) { return (m + m.transpose()) * 0.5; }

}  // namespace

LowRankSignal gen_low_rank(Index p1, Index p2, Index r, const Vector& sigmas,
                           SeededStream& stream) {
  if (r < 1 || r > std::min(p1, p2)) throw InvalidInput("gen_low_rank: r outside [1, min(p1, p2)]");
  if (sigmas.size() != r) throw DimensionMismatch("gen_low_rank: sigmas must have length r");
  require_sorted_positive(sigmas, "gen_low_rank: sigmas");
  OrthonormalFrame u = random_orthonormal(p1, r, stream);
  OrthonormalFrame v = random_orthonormal(p2, r, stream);
  Matrix x = u.matrix() * sigmas.asDiagonal() * v.matrix().transpose();
  return {std::move(x), std::move(u), std::move(v)};
}

SymmetricLowRankSignal gen_symmetric_low_rank(Index p, const Vector& eigenvalues,
                                              SeededStream& stream) {
  const Index r = eigenvalues.size();
  if (r < 1 || r > p) throw InvalidInput("gen_symmetric_low_rank: need 1 <= r <= p");
  for (Index i = 0; i < r; ++i) {
    if (!std::isfinite(eigenvalues(i)) || eigenvalues(i) == 0.0) {
      throw InvalidInput("gen_symmetric_low_rank: eigenvalues must be finite and non-zero");
    }
    if (i > 0 && std::abs(eigenvalues(i)) > std::abs(eigenvalues(i - 1))) {
      throw InvalidInput("gen_symmetric_low_rank: |eigenvalues| must be non-increasing");
    }
  }
  OrthonormalFrame u = random_orthonormal(p, r, stream);
  Matrix x = symmetrized(u.matrix() * eigenvalues.asDiagonal() * u.matrix().transpose());
  return {std::move(x), std::move(u), eigenvalues};
}

double CovarianceModel::gap() const { return spike_values(r - 1) - bulk_value; }

double CovarianceModel::effective_rank() const {
  return (spike_values.sum() + static_cast<double>(d - r) * bulk_value) / spike_values(0);
}

double CovarianceModel::nu() const {
  // Gamma_ii = c^2 + sum_k U_ik^2 lambda_k
  const Vector lambda = spike_values.array() - bulk_value;
  const Vector diag = (u.array().square().matrix() * lambda).array() + bulk_value;
  return std::sqrt(diag.maxCoeff());
}

Matrix CovarianceModel::covariance() const {
  const Vector lambda = spike_values.array() - bulk_value;
  Matrix g = u * lambda.asDiagonal() * u.transpose();
  g.diagonal().array() += bulk_value;
  return symmetrized(g);
}

Matrix CovarianceModel::covariance_sqrt() const {
  const double c = std::sqrt(bulk_value);
  const Vector shift = spike_values.array().sqrt() - c;
  Matrix g = u * shift.asDiagonal() * u.transpose();
  g.diagonal().array() += c;
  return symmetrized(g);
}

CovarianceModel gen_spiked_covariance(Index d, Index r, const Vector& lambda_values, double c,
                                      SeededStream& stream) {
  if (r < 1 || r >= d) throw InvalidInput("gen_spiked_covariance: need 1 <= r < d");
  if (lambda_values.size() != r) {
    throw DimensionMismatch("gen_spiked_covariance: lambda_values must have length r");
  }
  require_sorted_positive(lambda_values, "gen_spiked_covariance: lambda_values");
  if (!std::isfinite(c) || c <= 0.0) throw InvalidInput("gen_spiked_covariance: c must be > 0");
  CovarianceModel m;
  m.d = d;
  m.r = r;
  m.u = random_orthonormal(d, r, stream).matrix();
  m.bulk_value = c * c;
  m.spike_values = lambda_values.array() + m.bulk_value;
  return m;
}

PerturbationInstance sample_empirical_covariance(const CovarianceModel& model, Index n,
                                                 SeededStream& stream) {
  if (n < 1) throw InvalidInput("sample_empirical_covariance: n must be >= 1");
  const Index d = model.d;
  constexpr Index kChunk = 256;

  // S = sum_k z_k z_k^T, lower triangle only.
  Matrix s = Matrix::Zero(d, d);
  Matrix z(d, kChunk);
  for (Index start = 0; start < n; start += kChunk) {
    const Index m = std::min(kChunk, n - start);
    for (Index k = 0; k < m; ++k) {
      for (Index i = 0; i < d; ++i) z(i, k) = stream.normal();
    }
    s.selfadjointView<Eigen::Lower>().rankUpdate(z.leftCols(m));
  }
  s = s.selfadjointView<Eigen::Lower>();

  // Gamma^{1/2} = c I + U D U^T, so G S G expands into low-rank corrections
  // of c^2 S and never needs a d x d x d product.
  const double c = std::sqrt(model.bulk_value);
  const Vector dvec = model.spike_values.array().sqrt() - c;
  const Matrix& u = model.u;
  const Matrix su = s * u;                            // d x r
  const Matrix m_mat = su * dvec.asDiagonal();        // S U D
  const Matrix core = dvec.asDiagonal() * (u.transpose() * su) * dvec.asDiagonal();
  Matrix gsg = (c * c) * s;
  gsg.noalias() += c * (m_mat * u.transpose());
  gsg.noalias() += c * (u * m_mat.transpose());
  gsg.noalias() += u * core * u.transpose();
  Matrix gamma_hat = symmetrized(gsg / static_cast<double>(n));

  Matrix gamma = model.covariance();
  Matrix e = gamma_hat - gamma;
  e = symmetrized(e);
  return PerturbationInstance(std::move(gamma), std::move(e), model.r);
}

SbmModel::SbmModel(std::vector<Index> sizes, Matrix lambda, double rho_)
    : block_sizes(std::move(sizes)), lambda_block(std::move(lambda)), rho(rho_) {
  const Index k = static_cast<Index>(block_sizes.size());
  if (k < 1) throw InvalidInput("sbm: at least one block required");
  if (lambda_block.rows() != k || lambda_block.cols() != k) {
    throw DimensionMismatch("sbm: lambda must be kappa x kappa");
  }
  for (Index i = 0; i < k; ++i) {
    for (Index j = 0; j < k; ++j) {
      const double v = lambda_block(i, j);
      if (!(v >= 0.0 && v <= 1.0)) throw InvalidInput("sbm: lambda entries must lie in [0, 1]");
      if (v != lambda_block(j, i)) throw InvalidInput("sbm: lambda must be symmetric");
    }
  }
  if (!(rho >= 0.0 && rho <= 1.0)) throw InvalidInput("sbm: rho must lie in [0, 1]");
  for (Index b = 0; b < k; ++b) {
    if (block_sizes[b] < 1) throw InvalidInput("sbm: block sizes must be >= 1");
    membership.insert(membership.end(), block_sizes[b], b);
  }
}

SbmModel SbmModel::balanced(Index n, const Matrix& lambda, double rho) {
  const Index k = lambda.rows();
  if (k < 1 || n < k) throw InvalidInput("sbm: need n >= kappa >= 1");
  std::vector<Index> sizes(k, n / k);
  for (Index b = 0; b < n % k; ++b) ++sizes[b];
  return SbmModel(std::move(sizes), lambda, rho);
}

Matrix SbmModel::p_matrix() const {
  const Index size = n();
  Matrix p(size, size);
  for (Index j = 0; j < size; ++j) {
    for (Index i = 0; i < size; ++i) p(i, j) = lambda_block(membership[i], membership[j]);
  }
  return p;
}

double SbmModel::max_expected_degree() const {
  double best = 0.0;
  for (Index a = 0; a < kappa(); ++a) {
    double row = 0.0;
    for (Index b = 0; b < kappa(); ++b) row += static_cast<double>(block_sizes[b]) * lambda_block(a, b);
    best = std::max(best, row);
  }
  return best;
}

OmnibusPair gen_rho_sbm_pair(const SbmModel& model, SeededStream& stream) {
  const Index n = model.n();
  OmnibusPair out;
  out.p = model.p_matrix();
  out.a1 = Matrix::Zero(n, n);
  out.a2 = Matrix::Zero(n, n);
  // Two uniforms per vertex pair, always, so the draw count depends only on n.
  for (Index j = 0; j < n; ++j) {
    for (Index l = j + 1; l < n; ++l) {
      const double p = out.p(j, l);
      const bool e1 = stream.uniform() < p;
      const double p2 = e1 ? p + model.rho * (1.0 - p) : p * (1.0 - model.rho);
      const bool e2 = stream.uniform() < p2;
      if (e1) out.a1(j, l) = out.a1(l, j) = 1.0;
      if (e2) out.a2(j, l) = out.a2(l, j) = 1.0;
    }
  }
  out.ohat.resize(2 * n, 2 * n);
  out.ohat.topLeftCorner(n, n) = out.a1;
  out.ohat.bottomRightCorner(n, n) = out.a2;
  out.ohat.topRightCorner(n, n) = (out.a1 + out.a2) * 0.5;
  out.ohat.bottomLeftCorner(n, n) = out.ohat.topRightCorner(n, n);
  out.omodel.resize(2 * n, 2 * n);
  for (Index bi = 0; bi < 2; ++bi) {
    for (Index bj = 0; bj < 2; ++bj) out.omodel.block(bi * n, bj * n, n, n) = out.p;
  }
  return out;
}

Index block_matrix_rank(const Matrix& p) {
  std::vector<Index> distinct;
  for (Index i = 0; i < p.rows(); ++i) {
    const bool seen = std::any_of(distinct.begin(), distinct.end(),
                                  [&](Index k) { return p.row(k) == p.row(i); });
    if (!seen) distinct.push_back(i);
    if (static_cast<Index>(distinct.size()) > 64) {
      return (Eigen::BDCSVD<Matrix>(p).setThreshold(kRankTolerance)).rank();
    }
  }
  Matrix rows(static_cast<Index>(distinct.size()), p.cols());
  for (std::size_t k = 0; k < distinct.size(); ++k) rows.row(static_cast<Index>(k)) = p.row(distinct[k]);
  const Vector sv = singular_values(rows);
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  return (sv.array() > kRankTolerance * sv(0)).count();
}

PerturbationInstance omnibus_instance(const OmnibusPair& pair, Index r) {
  const Index rank = block_matrix_rank(pair.p);
  if (rank != r) {
    throw InvalidInput("omnibus_instance: rank(O) = " + std::to_string(rank) +
                       " but r = " + std::to_string(r));
  }
  return PerturbationInstance(pair.omodel, pair.ohat - pair.omodel, r);
}

}  // namespace subspace_perturb
