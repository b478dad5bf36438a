#include "subspace_perturb/bounds.hpp"

#include "subspace_perturb/errors.hpp"
#include "subspace_perturb/models.hpp"
#include "subspace_perturb/procrustes.hpp"
#include "subspace_perturb/spectral.hpp"
#include "subspace_perturb/subspace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace subspace_perturb {

bool BoundReport::preconditions_met() const {
  return std::all_of(preconditions.begin(), preconditions.end(),
                     [](const auto& p) { return p.second; });
}

std::optional<std::string> BoundReport::failing_precondition() const {
  for (const auto& [name, ok] : preconditions) {
    if (!ok) return name;
  }
  return std::nullopt;
}

double BoundReport::term(const std::string& label) const {
  for (const auto& [name, value] : terms) {
    if (name == label) return value;
  }
  throw InvalidInput("bound report " + bound_id + " has no term " + label);
}

nlohmann::ordered_json to_json(const BoundReport& report) {
  nlohmann::ordered_json pre = nlohmann::ordered_json::object();
  for (const auto& [name, ok] : report.preconditions) pre[name] = ok;
  nlohmann::ordered_json terms = nlohmann::ordered_json::object();
  for (const auto& [name, value] : report.terms) terms[name] = value;
  return {{"bound_id", report.bound_id}, {"lhs", report.lhs},      {"rhs", report.rhs},
          {"slack", report.slack()},     {"preconditions", pre}, {"terms", terms}};
}

BoundReport bound_report_from_json(const nlohmann::ordered_json& j) {
  BoundReport r;
  try {
    r.bound_id = j.at("bound_id").get<std::string>();
    r.lhs = j.at("lhs").get<double>();
    r.rhs = j.at("rhs").get<double>();
    for (const auto& [name, ok] : j.at("preconditions").items()) {
      r.preconditions.emplace_back(name, ok.get<bool>());
    }
    for (const auto& [name, value] : j.at("terms").items()) {
      r.terms.emplace_back(name, value.get<double>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("bound report JSON: ") + e.what());
  }
  return r;
}

namespace {

void require_singular(const FactoredInstance& f, const char* who) {
  if (f.kind != FactorKind::singular) {
    throw InvalidInput(std::string(who) + ": needs singular (SVD) factors");
  }
}

// M (I - V V^T)
Matrix project_out_right(const Matrix& m, const Matrix& v) {
  return m - (m * v) * v.transpose();
}

bool has_rank_r(const FactoredInstance& f) {
  const double scale = std::abs(f.sigma(0));
  return f.sigma_next <= kRankTolerance * scale;
}

struct Geometry {
  double sin_u;
  double sin_v;
  double lhs;  // ||Uhat - U W_U||_{2->inf}
};

Geometry geometry(const FactoredInstance& f) {
  const OrthonormalFrame u(f.u), uhat(f.uhat), v(f.v), vhat(f.vhat);
  const AlignmentResult a = align(u, uhat);
  return {sin_theta_norms(u, uhat).spectral, sin_theta_norms(v, vhat).spectral,
          a.residual_two_to_inf};
}

// 2 ||(U_perp U_perp^T) E (V V^T)||_{2->inf} / sigma_r
double signal_noise_term(const Matrix& u, const Matrix& e, const Matrix& v, double sigma_r) {
  return 2.0 * two_to_inf_norm(project_out(u, e * v) * v.transpose()) / sigma_r;
}

}  // namespace

InfinityConstants infinity_constants(const FactoredInstance& f) {
  require_singular(f, "infinity_constants");
  const PerturbationInstance& inst = *f.instance;
  const Matrix xt = inst.x().transpose();
  const Matrix et = inst.e().transpose();
  return {matrix_norm(project_out(f.u, inst.x()), NormKind::infinity),
          matrix_norm(project_out(f.v, xt), NormKind::infinity),
          matrix_norm(project_out(f.u, inst.e()), NormKind::infinity),
          matrix_norm(project_out(f.v, et), NormKind::infinity)};
}

BoundReport bound_baseline(const PerturbationInstance& inst) {
  return bound_baseline(FactoredInstance(inst, FactorKind::singular));
}

BoundReport bound_baseline(const FactoredInstance& f) {
  require_singular(f, "bound_baseline");
  const PerturbationInstance& inst = *f.instance;
  const double sigma_r = f.sigma(inst.r() - 1);
  const double e_spec = matrix_norm(inst.e(), NormKind::spectral);
  const Geometry g = geometry(f);

  const Matrix e_off = project_out_right(project_out(f.u, inst.e()), f.v);
  const Matrix x_off = project_out_right(project_out(f.u, inst.x()), f.v);

  BoundReport r;
  r.bound_id = "baseline";
  r.lhs = g.lhs;
  r.terms = {
      {"noise_signal", signal_noise_term(f.u, inst.e(), f.v, sigma_r)},
      {"noise_residual", 2.0 * two_to_inf_norm(e_off) * g.sin_v / sigma_r},
      {"signal_residual", 2.0 * two_to_inf_norm(x_off) * g.sin_v / sigma_r},
      {"sin_theta_sq", g.sin_u * g.sin_u * two_to_inf_norm(f.u)},
  };
  for (const auto& t : r.terms) r.rhs += t.second;
  r.preconditions = {
      {"singular_gap", sigma_r > f.sigma_next},
      {"sigma_r_ge_2_e_spectral", sigma_r >= 2.0 * e_spec},
  };
  return r;
}

BoundReport bound_uniform_rect(const PerturbationInstance& inst, const UniformParameters& params) {
  return bound_uniform_rect(FactoredInstance(inst, FactorKind::singular), params);
}

BoundReport bound_uniform_rect(const FactoredInstance& f, const UniformParameters& p) {
  require_singular(f, "bound_uniform_rect");
  for (double a : {p.alpha, p.alpha_p, p.beta, p.beta_p}) {
    if (!(a > 0.0) || !std::isfinite(a)) {
      throw InvalidInput("bound_uniform_rect: parameters must be positive and finite");
    }
  }
  const PerturbationInstance& inst = *f.instance;
  const double sigma_r = f.sigma(inst.r() - 1);
  const double e_spec = matrix_norm(inst.e(), NormKind::spectral);
  const InfinityConstants c = infinity_constants(f);
  const bool rank_r = has_rank_r(f);
  const double delta =
      rank_r ? p.alpha * p.alpha_p : (p.alpha + p.beta) * (p.alpha_p + p.beta_p);
  const Geometry g = geometry(f);

  const Matrix et = inst.e().transpose();
  BoundReport r;
  r.bound_id = "uniform_rect";
  r.lhs = (1.0 - delta) * g.lhs;
  r.terms = {
      {"noise_signal_u", signal_noise_term(f.u, inst.e(), f.v, sigma_r)},
      {"noise_signal_v", signal_noise_term(f.v, et, f.u, sigma_r)},
      {"sin_theta_u_sq", g.sin_u * g.sin_u * two_to_inf_norm(f.u)},
      {"sin_theta_v_sq", g.sin_v * g.sin_v * two_to_inf_norm(f.v)},
      {"delta", delta},
  };
  for (std::size_t i = 0; i < 4; ++i) r.rhs += r.terms[i].second;
  r.preconditions = {
      {"sigma_r_ge_2_e_spectral", sigma_r >= 2.0 * e_spec},
      {"alpha", sigma_r >= 2.0 / p.alpha * c.e_u},
      {"alpha_p", sigma_r >= 2.0 / p.alpha_p * c.e_v},
  };
  if (!rank_r) {
    r.preconditions.emplace_back("beta", sigma_r >= 2.0 / p.beta * c.x_u);
    r.preconditions.emplace_back("beta_p", sigma_r >= 2.0 / p.beta_p * c.x_v);
  }
  r.preconditions.emplace_back("delta_below_one", delta < 1.0);
  return r;
}

std::optional<UniformParameters> search_uniform_parameters(const FactoredInstance& f,
                                                           double step) {
  require_singular(f, "search_uniform_parameters");
  if (!(step > 0.0 && step < 1.0)) throw InvalidInput("search_uniform_parameters: step in (0, 1)");
  const double sigma_r = f.sigma(f.instance->r() - 1);
  const InfinityConstants c = infinity_constants(f);
  const int count = static_cast<int>(std::ceil(1.0 / step)) - 1;

  auto smallest = [&](double constant) -> std::optional<double> {
    for (int k = 1; k <= count; ++k) {
      const double a = k * step;
      if (a >= 1.0) break;
      if (sigma_r >= 2.0 / a * constant) return a;
    }
    return std::nullopt;
  };

  const auto a = smallest(c.e_u);
  const auto ap = smallest(c.e_v);
  if (!a || !ap) return std::nullopt;
  UniformParameters out{*a, *ap, step, step};
  if (has_rank_r(f)) {
    // beta conditions do not apply; keep the smallest grid value as a placeholder
    if (*a * *ap >= 1.0) return std::nullopt;
    return out;
  }
  const auto b = smallest(c.x_u);
  const auto bp = smallest(c.x_v);
  if (!b || !bp) return std::nullopt;
  out.beta = *b;
  out.beta_p = *bp;
  if ((out.alpha + out.beta) * (out.alpha_p + out.beta_p) >= 1.0) return std::nullopt;
  return out;
}

BoundReport bound_low_rank(const PerturbationInstance& inst, double alpha, double alpha_p) {
  return bound_low_rank(FactoredInstance(inst, FactorKind::singular), alpha, alpha_p);
}

BoundReport bound_low_rank(const FactoredInstance& f, double alpha, double alpha_p) {
  require_singular(f, "bound_low_rank");
  if (!(alpha > 0.0) || !(alpha_p > 0.0)) {
    throw InvalidInput("bound_low_rank: alpha and alpha' must be positive");
  }
  const PerturbationInstance& inst = *f.instance;
  const double sigma_r = f.sigma(inst.r() - 1);
  const double e_spec = matrix_norm(inst.e(), NormKind::spectral);
  const double e_one = matrix_norm(inst.e(), NormKind::one);
  const double e_inf = matrix_norm(inst.e(), NormKind::infinity);
  const InfinityConstants c = infinity_constants(f);
  const double delta = alpha * alpha_p;
  const Geometry g = geometry(f);
  const double coh = std::max(two_to_inf_norm(f.u), two_to_inf_norm(f.v));

  BoundReport r;
  r.bound_id = "low_rank";
  r.lhs = (1.0 - delta) * g.lhs;
  r.rhs = 12.0 * std::max(e_one, e_inf) / sigma_r * coh;
  r.terms = {{"e_norm_ratio", std::max(e_one, e_inf) / sigma_r},
             {"max_two_to_inf", coh},
             {"delta", delta}};
  r.preconditions = {
      {"rank_r", has_rank_r(f)},
      {"sigma_r_ge_2_e_spectral", sigma_r >= 2.0 * e_spec},
      {"alpha", sigma_r >= 2.0 / alpha * c.e_u},
      {"alpha_p", sigma_r >= 2.0 / alpha_p * c.e_v},
      {"delta_below_one", delta < 1.0},
  };
  return r;
}

BoundReport bound_entrywise_symmetric(const PerturbationInstance& inst) {
  return bound_entrywise_symmetric(FactoredInstance(inst, FactorKind::symmetric));
}

BoundReport bound_entrywise_symmetric(const FactoredInstance& f) {
  if (f.kind != FactorKind::symmetric) {
    throw InvalidInput("bound_entrywise_symmetric: needs symmetric eigen factors");
  }
  const PerturbationInstance& inst = *f.instance;
  const double lambda_r = std::abs(f.sigma(inst.r() - 1));
  const double e_inf = matrix_norm(inst.e(), NormKind::infinity);
  const double u_2inf = two_to_inf_norm(f.u);
  const AlignmentResult a = align(OrthonormalFrame(f.u), OrthonormalFrame(f.uhat));

  BoundReport r;
  r.bound_id = "entrywise";
  r.lhs = a.residual_two_to_inf;
  r.rhs = 14.0 * e_inf / lambda_r * u_2inf;
  r.terms = {{"e_inf_over_lambda_r", e_inf / lambda_r}, {"u_two_to_inf", u_2inf}};
  r.preconditions = {
      {"rank_r", has_rank_r(f)},
      {"lambda_r_ge_4_e_inf", lambda_r >= 4.0 * e_inf * (1.0 - 1e-12)},
  };
  return r;
}

namespace {

struct BlockGap {
  EigenPairs x;
  double gap;
};

BlockGap block_gap(const Matrix& x_sym, const Matrix& xhat_sym, Index r, Index s) {
  require_symmetric(x_sym, "davis_kahan: X");
  require_symmetric(xhat_sym, "davis_kahan: Xhat");
  if (x_sym.rows() != xhat_sym.rows()) throw DimensionMismatch("davis_kahan: X and Xhat differ");
  const Index p = x_sym.rows();
  if (r < 1 || s < r || s > p) throw InvalidInput("davis_kahan: need 1 <= r <= s <= p");
  EigenPairs ex = symmetric_eigen(x_sym);
  const double inf = std::numeric_limits<double>::infinity();
  const Vector& lam = ex.values;  // signed, non-increasing
  const double above = r == 1 ? inf : lam(r - 2) - lam(r - 1);
  const double below = s == p ? inf : lam(s - 1) - lam(s);
  const double gap = std::min(above, below);
  const double scale = std::max(1.0, lam.cwiseAbs().maxCoeff());
  if (!(gap > kRankTolerance * scale)) {
    throw PreconditionError("davis_kahan: eigengap is zero");
  }
  return {std::move(ex), gap};
}

}  // namespace

double davis_kahan(const Matrix& x_sym, const Matrix& xhat_sym, Index r, Index s) {
  const BlockGap b = block_gap(x_sym, xhat_sym, r, s);
  if (std::isinf(b.gap)) return 0.0;
  return 2.0 * matrix_norm(xhat_sym - x_sym, NormKind::spectral) / b.gap;
}

BoundReport davis_kahan_report(const Matrix& x_sym, const Matrix& xhat_sym, Index r, Index s) {
  const BlockGap b = block_gap(x_sym, xhat_sym, r, s);
  const EigenPairs eh = symmetric_eigen(xhat_sym);
  const Index width = s - r + 1;
  const OrthonormalFrame v(b.x.vectors.middleCols(r - 1, width));
  const OrthonormalFrame vhat(eh.vectors.middleCols(r - 1, width));
  const double e_spec = matrix_norm(xhat_sym - x_sym, NormKind::spectral);

  BoundReport rep;
  rep.bound_id = "davis_kahan";
  rep.lhs = sin_theta_norms(v, vhat).spectral;
  rep.rhs = std::isinf(b.gap) ? 0.0 : 2.0 * e_spec / b.gap;
  rep.terms = {{"e_spectral", e_spec}, {"gap", b.gap}};
  rep.preconditions = {{"gap_positive", true}};
  return rep;
}

double covariance_rhs(const CovarianceModel& model, double n, double big_c) {
  if (!(n >= 1.0)) throw InvalidInput("covariance_rhs: n must be >= 1");
  const double d = static_cast<double>(model.d);
  const double r = static_cast<double>(model.r);
  const double m = std::max(model.effective_rank(), std::log(d)) / n;
  const double sigma_r = model.spike_values(model.r - 1);
  const double sigma_next = model.bulk_value;
  const double first = big_c * std::sqrt(m) *
                       (model.nu() * r / std::sqrt(sigma_r) + sigma_next / sigma_r);
  const double second = big_c * m * (std::sqrt(sigma_next / sigma_r) + std::sqrt(r / d));
  return first + second;
}

double covariance_rhs_spiked(const CovarianceModel& model, double n, double big_c) {
  if (!(n >= 1.0)) throw InvalidInput("covariance_rhs_spiked: n must be >= 1");
  const double d = static_cast<double>(model.d);
  const double r = static_cast<double>(model.r);
  const double m = std::max(model.effective_rank(), std::log(d)) / n;
  return big_c * std::sqrt(m) * std::sqrt(r * r * r / d);
}

}  // namespace subspace_perturb
