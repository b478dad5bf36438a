#include "subspace_perturb/decomposition.hpp"

#include "subspace_perturb/csv.hpp"
#include "subspace_perturb/errors.hpp"
#include "subspace_perturb/procrustes.hpp"
#include "subspace_perturb/spectral.hpp"
#include "subspace_perturb/subspace.hpp"

#include <algorithm>
#include <cmath>

namespace subspace_perturb {

PerturbationInstance::PerturbationInstance(Matrix x, Matrix e, Index r)
    : x_(std::move(x)), e_(std::move(e)), r_(r) {
  validate_matrix(x_, "signal X");
  validate_matrix(e_, "perturbation E");
  if (x_.rows() != e_.rows() || x_.cols() != e_.cols()) {
    throw DimensionMismatch("perturbation instance: X and E shapes differ");
  }
  if (r_ < 1 || r_ > std::min(x_.rows(), x_.cols())) {
    throw InvalidInput("perturbation instance: rank " + std::to_string(r_) +
                       " outside [1, min(p1, p2)]");
  }
  xhat_ = x_ + e_;
  validate_matrix(xhat_, "observation Xhat");
}

PerturbationInstance PerturbationInstance::from_observation(Matrix x, const Matrix& xhat,
                                                            Index r) {
  if (x.rows() != xhat.rows() || x.cols() != xhat.cols()) {
    throw DimensionMismatch("perturbation instance: X and Xhat shapes differ");
  }
  Matrix e = xhat - x;
  return PerturbationInstance(std::move(x), std::move(e), r);
}

bool PerturbationInstance::is_symmetric() const {
  return subspace_perturb::is_symmetric(x_) && subspace_perturb::is_symmetric(e_);
}

FactoredInstance::FactoredInstance(const PerturbationInstance& inst, FactorKind k)
    : instance(&inst), kind(k) {
  const Index r = inst.r();
  if (kind == FactorKind::singular) {
    const SvdFactors fx = svd(inst.x());
    const Truncation tx = truncate(fx, r);
    u = tx.u;
    v = tx.v;
    sigma = tx.sigma;
    signal_spectrum = fx.singular_values;
    sigma_next = r < fx.singular_values.size() ? fx.singular_values(r) : 0.0;

    const Truncation th = truncate(svd(inst.xhat()), r);
    uhat = th.u;
    vhat = th.v;
    sigma_hat = th.sigma;
    return;
  }

  if (!inst.is_symmetric()) {
    throw PreconditionError("symmetric factorization: X or E is not symmetric");
  }
  const Index p = inst.rows();
  const Index count = std::min(p, r + 1);
  const EigenPairs ex = leading_eigenpairs(inst.x(), count);
  u = ex.vectors.leftCols(r);
  v = u;
  sigma = ex.values.head(r);
  signal_spectrum = ex.values;
  sigma_next = count > r ? std::abs(ex.values(r)) : 0.0;

  const EigenPairs eh = leading_eigenpairs(inst.xhat(), r);
  uhat = eh.vectors;
  vhat = uhat;
  sigma_hat = eh.values;
}

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::rect4: return "rect4";
    case Variant::symmetric4: return "symmetric4";
    case Variant::rewritten3: return "rewritten3";
    case Variant::expanded5: return "expanded5";
  }
  return "unknown";
}

std::string_view to_string(Side s) { return s == Side::left ? "left" : "right"; }

Variant parse_variant(std::string_view name) {
  for (auto v : {Variant::rect4, Variant::symmetric4, Variant::rewritten3, Variant::expanded5}) {
    if (to_string(v) == name) return v;
  }
  throw InvalidInput("unknown decomposition variant: " + std::string(name));
}

Side parse_side(std::string_view name) {
  if (name == "left") return Side::left;
  if (name == "right") return Side::right;
  throw InvalidInput("unknown side: " + std::string(name));
}

namespace {

// The left-side formulas, written once. The right-side decomposition is the
// same computation with (U, Uhat, V, Vhat, E, X, W_U, W_V) replaced by
// (V, Vhat, U, Uhat, E^T, X^T, W_V, W_U).
struct Roles {
  const Matrix& u;
  const Matrix& uhat;
  const Matrix& v;
  const Matrix& vhat;
  const Matrix& e;
  const Matrix& x;
  const Matrix& xhat;
  const Matrix& w_u;
  const Matrix& w_v;
  const Vector& sigma_hat_inv;
};

Matrix scale_columns(Matrix m, const Vector& d) { return m * d.asDiagonal(); }

std::vector<LabeledTerm> rect4_terms(const Roles& g) {
  const Matrix vhat_minus_vw = g.vhat - g.v * g.w_v;
  const Matrix vhat_off_v = g.vhat - g.v * (g.v.transpose() * g.vhat);
  return {
      {"T1", scale_columns(project_out(g.u, g.e * g.v) * g.w_v, g.sigma_hat_inv)},
      {"T2", scale_columns(project_out(g.u, g.e * vhat_minus_vw), g.sigma_hat_inv)},
      {"T3", scale_columns(project_out(g.u, g.x * vhat_off_v), g.sigma_hat_inv)},
      {"T4", g.u * (g.u.transpose() * g.uhat - g.w_u)},
  };
}

std::vector<LabeledTerm> rewritten3_terms(const Roles& g) {
  // (V V^T) V evaluated as V (V^T V).
  const Matrix vvv = g.v * (g.v.transpose() * g.v);
  const Matrix vhat_minus_vw = g.vhat - g.v * g.w_v;
  return {
      {"T1", scale_columns(project_out(g.u, g.e * vvv) * g.w_v, g.sigma_hat_inv)},
      {"T2", scale_columns(project_out(g.u, g.xhat * vhat_minus_vw), g.sigma_hat_inv)},
      {"T3", g.u * (g.u.transpose() * g.uhat - g.w_u)},
  };
}

std::vector<LabeledTerm> expanded5_terms(const Roles& g) {
  const Matrix vvv = g.v * (g.v.transpose() * g.v);
  const Matrix vhat_off_v = g.vhat - g.v * (g.v.transpose() * g.vhat);
  const Matrix off_v_twice = project_out(g.v, vhat_off_v);  // (V_perp V_perp^T)(...)
  const Matrix e_vvv = project_out(g.u, g.e * vvv);
  return {
      {"T1", scale_columns(e_vvv * g.w_v, g.sigma_hat_inv)},
      {"T2", scale_columns(e_vvv * (g.v.transpose() * g.vhat - g.w_v), g.sigma_hat_inv)},
      {"T3", scale_columns(project_out(g.u, g.e * off_v_twice), g.sigma_hat_inv)},
      {"T4", scale_columns(project_out(g.u, g.x * off_v_twice), g.sigma_hat_inv)},
      {"T5", g.u * (g.u.transpose() * g.uhat - g.w_u)},
  };
}

std::vector<LabeledTerm> symmetric4_terms(const Roles& g) {
  const Matrix uhat_minus_uw = g.uhat - g.u * g.w_u;
  const Matrix uhat_off_u = g.uhat - g.u * (g.u.transpose() * g.uhat);
  return {
      {"T1", scale_columns(project_out(g.u, g.e * g.u) * g.w_u, g.sigma_hat_inv)},
      {"T2", scale_columns(project_out(g.u, g.e * uhat_minus_uw), g.sigma_hat_inv)},
      {"T3", scale_columns(project_out(g.u, g.x * uhat_off_u), g.sigma_hat_inv)},
      {"T4", g.u * (g.u.transpose() * g.uhat - g.w_u)},
  };
}

Matrix checked_override(const std::optional<Matrix>& t, Index r, const Matrix& fallback,
                        const char* name) {
  if (!t) return fallback;
  if (t->rows() != r || t->cols() != r) {
    throw DimensionMismatch(std::string("decompose: override ") + name + " must be r x r");
  }
  return *t;
}

}  // namespace

DecompositionTerms decompose(const PerturbationInstance& inst, Variant variant, Side side,
                             const AlignmentOverride& override_with) {
  const FactorKind kind =
      variant == Variant::symmetric4 ? FactorKind::symmetric : FactorKind::singular;
  return decompose(FactoredInstance(inst, kind), variant, side, override_with);
}

DecompositionTerms decompose(const FactoredInstance& f, Variant variant, Side side,
                             const AlignmentOverride& override_with) {
  const PerturbationInstance& inst = *f.instance;
  const bool symmetric = variant == Variant::symmetric4;
  if (symmetric != (f.kind == FactorKind::symmetric)) {
    throw InvalidInput(std::string("decompose: variant ") + std::string(to_string(variant)) +
                       " needs " + (symmetric ? "symmetric" : "singular") + " factors");
  }
  const Index r = inst.r();
  const Vector sigma_hat_inv = inverse_diagonal(f.sigma_hat, std::abs(f.sigma_hat(0)));

  const Matrix w_u_opt = align(OrthonormalFrame(f.u), OrthonormalFrame(f.uhat)).w;
  const Matrix w_v_opt =
      symmetric ? w_u_opt : align(OrthonormalFrame(f.v), OrthonormalFrame(f.vhat)).w;

  DecompositionTerms out{variant, side, {}, {}, {}, {}};
  out.w_u = checked_override(override_with.t_u, r, w_u_opt, "t_u");
  out.w_v = symmetric ? out.w_u : checked_override(override_with.t_v, r, w_v_opt, "t_v");

  if (symmetric || side == Side::left) {
    const Roles g{f.u, f.uhat, f.v, f.vhat, inst.e(), inst.x(), inst.xhat(),
                  out.w_u, out.w_v, sigma_hat_inv};
    out.lhs = f.uhat - f.u * out.w_u;
    switch (variant) {
      case Variant::rect4: out.terms = rect4_terms(g); break;
      case Variant::rewritten3: out.terms = rewritten3_terms(g); break;
      case Variant::expanded5: out.terms = expanded5_terms(g); break;
      case Variant::symmetric4: out.terms = symmetric4_terms(g); break;
    }
    return out;
  }

  const Matrix et = inst.e().transpose();
  const Matrix xt = inst.x().transpose();
  const Matrix xhat_t = inst.xhat().transpose();
  const Roles g{f.v, f.vhat, f.u, f.uhat, et, xt, xhat_t, out.w_v, out.w_u, sigma_hat_inv};
  out.lhs = f.vhat - f.v * out.w_v;
  switch (variant) {
    case Variant::rect4: out.terms = rect4_terms(g); break;
    case Variant::rewritten3: out.terms = rewritten3_terms(g); break;
    case Variant::expanded5: out.terms = expanded5_terms(g); break;
    case Variant::symmetric4: break;  // handled above
  }
  return out;
}

double reconstruction_error(const DecompositionTerms& terms) {
  Matrix residual = terms.lhs;
  for (const auto& t : terms.terms) residual -= t.value;
  const double scale = std::max(1.0, terms.lhs.cwiseAbs().maxCoeff());
  return residual.cwiseAbs().maxCoeff() / scale;
}

std::vector<TermNorm> term_norms(const DecompositionTerms& terms) {
  std::vector<TermNorm> out;
  out.reserve(terms.terms.size());
  for (const auto& t : terms.terms) {
    out.push_back(TermNorm{t.label, two_to_inf_norm(t.value),
                           singular_values(t.value)(0), t.value.norm()});
  }
  return out;
}

void write_term_norms_csv(std::ostream& out, const std::vector<DecompositionTerms>& all) {
  out << "variant,side,term_label,two_to_inf,spectral,frobenius\n";
  for (const auto& d : all) {
    for (const auto& n : term_norms(d)) {
      out << csv::join({std::string(to_string(d.variant)), std::string(to_string(d.side)),
                        n.label, format_double(n.two_to_inf), format_double(n.spectral),
                        format_double(n.frobenius)})
          << '\n';
    }
  }
}

}  // namespace subspace_perturb
