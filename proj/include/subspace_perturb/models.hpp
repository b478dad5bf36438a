#pragma once

#include "subspace_perturb/decomposition.hpp"
#include "subspace_perturb/matrix.hpp"
#include "subspace_perturb/random.hpp"
#include "subspace_perturb/subspace.hpp"

#include <vector>

namespace subspace_perturb {

/// p1 x p2 matrix of i.i.d. standard normals, filled row by row.
Matrix gen_gaussian_noise(Index p1, Index p2, SeededStream& stream);

/// Symmetric p x p noise (G + G^T) / sqrt(2): off-diagonal entries N(0, 1),
/// diagonal N(0, 2).
Matrix gen_symmetric_gaussian_noise(Index p, SeededStream& stream);

struct LowRankSignal {
  Matrix x;
  OrthonormalFrame u;
  OrthonormalFrame v;
};

/// X = U diag(sigmas) V^T with Haar-random U (p1 x r) and V (p2 x r).
/// `sigmas` must be positive and non-increasing.
LowRankSignal gen_low_rank(Index p1, Index p2, Index r, const Vector& sigmas,
                           SeededStream& stream);

struct SymmetricLowRankSignal {
  Matrix x;
  OrthonormalFrame u;  // eigenvectors in the order of `eigenvalues`
  Vector eigenvalues;
};

/// X = U diag(eigenvalues) U^T, symmetric to the last bit. Eigenvalues must be
/// non-zero and sorted by |lambda| non-increasing.
SymmetricLowRankSignal gen_symmetric_low_rank(Index p, const Vector& eigenvalues,
                                              SeededStream& stream);

/// Spiked covariance Gamma = U (Lambda + c^2 I) U^T + c^2 U_perp U_perp^T.
struct CovarianceModel {
  Index d = 0;
  Index r = 0;
  Matrix u;             // d x r orthonormal
  Vector spike_values;  // sigma_i(Gamma) = lambda_i + c^2, non-increasing
  double bulk_value = 0.0;  // c^2

  double gap() const;             // sigma_r - sigma_{r+1}
  double effective_rank() const;  // trace(Gamma) / sigma_1(Gamma)
  double nu() const;              // max_i sqrt(Var(Y_i)) = max_i sqrt(Gamma_ii)
  Matrix covariance() const;      // dense Gamma, exactly symmetric
  Matrix covariance_sqrt() const; // dense Gamma^{1/2}
};

CovarianceModel gen_spiked_covariance(Index d, Index r, const Vector& lambda_values,
                                      double c, SeededStream& stream);

/// n i.i.d. N(0, Gamma) samples Y_k = Gamma^{1/2} z_k; returns the instance
/// x = Gamma, e = Gammahat_n - Gamma, with target rank model.r.
PerturbationInstance sample_empirical_covariance(const CovarianceModel& model, Index n,
                                                 SeededStream& stream);

struct SbmModel {
  std::vector<Index> block_sizes;
  Matrix lambda_block;         // kappa x kappa, symmetric, entries in [0, 1]
  std::vector<Index> membership;  // vertex -> block, contiguous blocks
  double rho = 0.0;

  SbmModel(std::vector<Index> sizes, Matrix lambda, double rho);
  static SbmModel balanced(Index n, const Matrix& lambda, double rho);

  Index kappa() const { return static_cast<Index>(block_sizes.size()); }
  Index n() const { return static_cast<Index>(membership.size()); }
  Matrix p_matrix() const;            // Z Lambda Z^T
  double max_expected_degree() const; // max row sum of P
};

struct OmnibusPair {
  Matrix a1;
  Matrix a2;
  Matrix ohat;    // [[A1, (A1+A2)/2], [(A1+A2)/2, A2]]
  Matrix omodel;  // [[1, 1], [1, 1]] kron P
  Matrix p;
};

/// rho-correlated pair: A1_jl ~ Bernoulli(P_jl); A2_jl ~ Bernoulli(P_jl + rho (1 - P_jl))
/// when A1_jl = 1 and Bernoulli(P_jl (1 - rho)) otherwise. Hollow and symmetric.
OmnibusPair gen_rho_sbm_pair(const SbmModel& model, SeededStream& stream);

/// x = omodel, e = ohat - omodel. Throws InvalidInput if rank(omodel) != r.
PerturbationInstance omnibus_instance(const OmnibusPair& pair, Index r);

/// Numerical rank of P computed from its distinct rows.
Index block_matrix_rank(const Matrix& p);

}  // namespace subspace_perturb
