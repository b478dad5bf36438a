#pragma once

#include "subspace_perturb/matrix.hpp"

#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace subspace_perturb {

/// Signal X, perturbation E and observation Xhat = X + E with target rank r.
/// Xhat is always formed as x + e at construction, so the identity holds
/// bit-for-bit on the stored values.
class PerturbationInstance {
 public:
  PerturbationInstance(Matrix x, Matrix e, Index r);

  // E := xhat - x, then Xhat := x + E.
  static PerturbationInstance from_observation(Matrix x, const Matrix& xhat, Index r);

  const Matrix& x() const noexcept { return x_; }
  const Matrix& e() const noexcept { return e_; }
  const Matrix& xhat() const noexcept { return xhat_; }
  Index r() const noexcept { return r_; }
  Index rows() const noexcept { return x_.rows(); }
  Index cols() const noexcept { return x_.cols(); }
  bool is_symmetric() const;

 private:
  Matrix x_;
  Matrix e_;
  Matrix xhat_;
  Index r_;
};

enum class FactorKind {
  singular,  // SVD; U, V left/right singular vectors
  symmetric  // eigendecomposition ordered by |lambda|; U = V, signed values
};

/// Leading rank-r factors of X and Xhat, computed once and shared by the
/// decomposition, the bound evaluators and the harness.
struct FactoredInstance {
  FactoredInstance(const PerturbationInstance& inst, FactorKind kind);

  const PerturbationInstance* instance;  // not owned; must outlive this object
  FactorKind kind;
  Matrix u, v;            // X
  Vector sigma;           // X, leading r (signed eigenvalues for symmetric)
  Matrix uhat, vhat;      // Xhat
  Vector sigma_hat;       // Xhat, leading r
  // sigma_{r+1}(X) (|lambda_{r+1}| for symmetric); 0 when r = min(p1, p2).
  double sigma_next = 0.0;
  // Full singular spectrum of X when available (singular kind), else leading r+1.
  Vector signal_spectrum;
};

enum class Variant { rect4, symmetric4, rewritten3, expanded5 };
enum class Side { left, right };

std::string_view to_string(Variant v);
std::string_view to_string(Side s);
Variant parse_variant(std::string_view name);
Side parse_side(std::string_view name);

struct LabeledTerm {
  std::string label;
  Matrix value;
};

struct DecompositionTerms {
  Variant variant;
  Side side;
  std::vector<LabeledTerm> terms;
  Matrix lhs;  // Uhat - U W_U (left) or Vhat - V W_V (right)
  Matrix w_u;
  Matrix w_v;
};

/// Optional replacement of the aligning matrices by arbitrary r x r matrices;
/// the identity holds for any choice.
struct AlignmentOverride {
  std::optional<Matrix> t_u;
  std::optional<Matrix> t_v;
};

/// Exact decomposition of Uhat - U W_U into labelled terms whose sum is the
/// left-hand side. Throws RankDeficient when sigma_r(Xhat) is below the rank
/// threshold and PreconditionError when symmetric4 is requested on
/// non-symmetric data.
DecompositionTerms decompose(const PerturbationInstance& inst, Variant variant, Side side,
                             const AlignmentOverride& override_with = {});
DecompositionTerms decompose(const FactoredInstance& factored, Variant variant, Side side,
                             const AlignmentOverride& override_with = {});

/// ||lhs - sum(terms)||_max / max(1, ||lhs||_max)
double reconstruction_error(const DecompositionTerms& terms);

struct TermNorm {
  std::string label;
  double two_to_inf = 0.0;
  double spectral = 0.0;
  double frobenius = 0.0;
};

std::vector<TermNorm> term_norms(const DecompositionTerms& terms);

/// CSV with header variant,side,term_label,two_to_inf,spectral,frobenius.
void write_term_norms_csv(std::ostream& out, const std::vector<DecompositionTerms>& all);

}  // namespace subspace_perturb
