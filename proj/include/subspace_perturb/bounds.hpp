#pragma once

#include "subspace_perturb/decomposition.hpp"
#include "subspace_perturb/matrix.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace subspace_perturb {

struct CovarianceModel;

// Slack below -kSlackTolerance on a precondition-satisfying instance counts as
// a violation; anything above is floating-point noise.
inline constexpr double kSlackTolerance = 1e-10;

/// One evaluated inequality lhs <= rhs.
struct BoundReport {
  std::string bound_id;
  double lhs = 0.0;
  double rhs = 0.0;
  std::vector<std::pair<std::string, double>> terms;
  std::vector<std::pair<std::string, bool>> preconditions;

  double slack() const { return rhs - lhs; }
  bool preconditions_met() const;
  // Name of the first failing precondition, if any.
  std::optional<std::string> failing_precondition() const;
  bool violated() const { return preconditions_met() && slack() < -kSlackTolerance; }
  double term(const std::string& label) const;
};

nlohmann::ordered_json to_json(const BoundReport& report);
BoundReport bound_report_from_json(const nlohmann::ordered_json& j);

/// Exact values of the constants the uniform theorems take as upper bounds:
/// C_{X,U} = ||(U_perp U_perp^T) X||_inf, C_{X,V} = ||(V_perp V_perp^T) X^T||_inf,
/// and the same for E.
struct InfinityConstants {
  double x_u = 0.0;
  double x_v = 0.0;
  double e_u = 0.0;
  double e_v = 0.0;
};

InfinityConstants infinity_constants(const FactoredInstance& f);

BoundReport bound_baseline(const PerturbationInstance& inst);
BoundReport bound_baseline(const FactoredInstance& f);

struct UniformParameters {
  double alpha = 0.5;
  double alpha_p = 0.5;
  double beta = 0.5;
  double beta_p = 0.5;
};

BoundReport bound_uniform_rect(const PerturbationInstance& inst, const UniformParameters& params);
BoundReport bound_uniform_rect(const FactoredInstance& f, const UniformParameters& params);

/// Smallest feasible parameters on the grid {step, 2 step, ...} below 1. Each
/// condition sigma_r >= (2/a) C constrains one parameter, so the per-parameter
/// minimum also minimizes delta. Returns nullopt when no grid point satisfies
/// the conditions with delta < 1.
std::optional<UniformParameters> search_uniform_parameters(const FactoredInstance& f,
                                                           double step = 0.05);

BoundReport bound_low_rank(const PerturbationInstance& inst, double alpha, double alpha_p);
BoundReport bound_low_rank(const FactoredInstance& f, double alpha, double alpha_p);

/// Entrywise eigenvector bound for symmetric rank-r X; |lambda_r| >= 4||E||_inf
/// is compared with relative tolerance 1e-12 so the exact boundary is admitted.
BoundReport bound_entrywise_symmetric(const PerturbationInstance& inst);
BoundReport bound_entrywise_symmetric(const FactoredInstance& f);

/// rhs = 2||Xhat - X||_2 / delta_gap for the eigenvector block r..s (1-based,
/// eigenvalues in signed non-increasing order, lambda_0 = +inf,
/// lambda_{p+1} = -inf). Throws PreconditionError on a non-positive gap.
double davis_kahan(const Matrix& x_sym, const Matrix& xhat_sym, Index r, Index s);

/// davis_kahan plus lhs = ||sin Theta(Vhat, V)||_2 for the same block.
BoundReport davis_kahan_report(const Matrix& x_sym, const Matrix& xhat_sym, Index r, Index s);

/// Right side of the covariance estimation bound with its unspecified
/// constant supplied as big_c. Only meaningful for scaling trends.
double covariance_rhs(const CovarianceModel& model, double n, double big_c = 1.0);

/// The simplified spiked-model form C sqrt(max(r_eff, log d) / n) sqrt(r^3 / d).
double covariance_rhs_spiked(const CovarianceModel& model, double n, double big_c = 1.0);

}  // namespace subspace_perturb
