#include "subspace_perturb/bounds.hpp"
#include "subspace_perturb/decomposition.hpp"
#include "subspace_perturb/errors.hpp"
#include "subspace_perturb/harness.hpp"
#include "subspace_perturb/matrix.hpp"
#include "subspace_perturb/models.hpp"
#include "subspace_perturb/procrustes.hpp"
#include "subspace_perturb/subspace.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
namespace sp = subspace_perturb;

namespace {

py::dict bound_dict(const sp::BoundReport& b) {
  py::dict terms, pre;
  for (const auto& [k, v] : b.terms) terms[py::str(k)] = v;
  for (const auto& [k, v] : b.preconditions) pre[py::str(k)] = v;
  py::dict d;
  d["bound_id"] = b.bound_id;
  d["lhs"] = b.lhs;
  d["rhs"] = b.rhs;
  d["slack"] = b.slack();
  d["terms"] = terms;
  d["preconditions"] = pre;
  d["preconditions_met"] = b.preconditions_met();
  d["violated"] = b.violated();
  return d;
}

py::dict alignment_dict(const sp::AlignmentResult& a) {
  py::dict d;
  d["w"] = a.w;
  d["gram"] = a.gram;
  d["residual_frobenius"] = a.residual_frobenius;
  d["residual_spectral"] = a.residual_spectral;
  d["residual_two_to_inf"] = a.residual_two_to_inf;
  d["non_unique"] = a.non_unique;
  return d;
}

sp::PerturbationInstance instance(const sp::Matrix& x, const sp::Matrix& e, sp::Index r) {
  return sp::PerturbationInstance(x, e, r);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Two-to-infinity norm perturbation toolkit";

  py::register_exception<sp::InvalidInput>(m, "InvalidInput", PyExc_ValueError);
  py::register_exception<sp::RankDeficient>(m, "RankDeficient", PyExc_ArithmeticError);
  py::register_exception<sp::PreconditionError>(m, "PreconditionError", PyExc_RuntimeError);
  py::register_exception<sp::ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);
  py::register_exception<sp::ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def("two_to_inf_norm", &sp::two_to_inf_norm, py::arg("a"), "Maximum row Euclidean norm.");
  m.def(
      "matrix_norm",
      [](const sp::Matrix& a, const std::string& kind) {
        return sp::matrix_norm(a, sp::parse_norm_kind(kind));
      },
      py::arg("a"), py::arg("kind"), "kind: spectral, frobenius, one, infinity or max.");
  m.def("singular_values", &sp::singular_values, py::arg("a"));

  m.def(
      "canonical_angles",
      [](const sp::Matrix& u, const sp::Matrix& uhat) {
        return sp::canonical_angles(sp::OrthonormalFrame(u), sp::OrthonormalFrame(uhat)).angles;
      },
      py::arg("u"), py::arg("uhat"));
  m.def(
      "sin_theta_norms",
      [](const sp::Matrix& u, const sp::Matrix& uhat) {
        const auto s = sp::sin_theta_norms(sp::OrthonormalFrame(u), sp::OrthonormalFrame(uhat));
        return py::make_tuple(s.spectral, s.frobenius);
      },
      py::arg("u"), py::arg("uhat"), "Returns (spectral, frobenius).");
  m.def(
      "coherence", [](const sp::Matrix& u) { return sp::coherence(sp::OrthonormalFrame(u)); },
      py::arg("u"));
  m.def(
      "orthonormalize", [](const sp::Matrix& a) { return sp::orthonormalize(a).matrix(); },
      py::arg("a"));

  m.def(
      "align",
      [](const sp::Matrix& u, const sp::Matrix& uhat) {
        return alignment_dict(sp::align(sp::OrthonormalFrame(u), sp::OrthonormalFrame(uhat)));
      },
      py::arg("u"), py::arg("uhat"));
  m.def(
      "align_bruteforce",
      [](const sp::Matrix& u, const sp::Matrix& uhat, std::size_t grid_size) {
        return alignment_dict(
            sp::align_bruteforce(sp::OrthonormalFrame(u), sp::OrthonormalFrame(uhat), grid_size));
      },
      py::arg("u"), py::arg("uhat"), py::arg("grid_size") = 720);
  m.def(
      "residual_sandwich",
      [](const sp::Matrix& u, const sp::Matrix& uhat) {
        const auto s = sp::residual_sandwich(sp::OrthonormalFrame(u), sp::OrthonormalFrame(uhat));
        return py::make_tuple(s.lower, s.mid, s.upper);
      },
      py::arg("u"), py::arg("uhat"));

  m.def(
      "decompose",
      [](const sp::Matrix& x, const sp::Matrix& e, sp::Index r, const std::string& variant,
         const std::string& side) {
        const auto inst = instance(x, e, r);
        const auto d = sp::decompose(inst, sp::parse_variant(variant), sp::parse_side(side));
        py::list terms;
        for (const auto& t : d.terms) terms.append(py::make_tuple(t.label, t.value));
        py::dict out;
        out["terms"] = terms;
        out["lhs"] = d.lhs;
        out["w_u"] = d.w_u;
        out["w_v"] = d.w_v;
        out["reconstruction_error"] = sp::reconstruction_error(d);
        return out;
      },
      py::arg("x"), py::arg("e"), py::arg("r"), py::arg("variant") = "rect4",
      py::arg("side") = "left");

  m.def(
      "bound_baseline",
      [](const sp::Matrix& x, const sp::Matrix& e, sp::Index r) {
        return bound_dict(sp::bound_baseline(instance(x, e, r)));
      },
      py::arg("x"), py::arg("e"), py::arg("r"));
  m.def(
      "bound_uniform_rect",
      [](const sp::Matrix& x, const sp::Matrix& e, sp::Index r, double alpha, double alpha_p,
         double beta, double beta_p) {
        return bound_dict(
            sp::bound_uniform_rect(instance(x, e, r), {alpha, alpha_p, beta, beta_p}));
      },
      py::arg("x"), py::arg("e"), py::arg("r"), py::arg("alpha") = 0.5, py::arg("alpha_p") = 0.5,
      py::arg("beta") = 0.5, py::arg("beta_p") = 0.5);
  m.def(
      "bound_low_rank",
      [](const sp::Matrix& x, const sp::Matrix& e, sp::Index r, double alpha, double alpha_p) {
        return bound_dict(sp::bound_low_rank(instance(x, e, r), alpha, alpha_p));
      },
      py::arg("x"), py::arg("e"), py::arg("r"), py::arg("alpha") = 0.5, py::arg("alpha_p") = 0.5);
  m.def(
      "bound_entrywise_symmetric",
      [](const sp::Matrix& x, const sp::Matrix& e, sp::Index r) {
        return bound_dict(sp::bound_entrywise_symmetric(instance(x, e, r)));
      },
      py::arg("x"), py::arg("e"), py::arg("r"));
  m.def("davis_kahan", &sp::davis_kahan, py::arg("x"), py::arg("xhat"), py::arg("r"),
        py::arg("s"));

  m.def(
      "gaussian_noise",
      [](sp::Index p1, sp::Index p2, std::uint64_t seed) {
        sp::SeededStream s(seed);
        return sp::gen_gaussian_noise(p1, p2, s);
      },
      py::arg("p1"), py::arg("p2"), py::arg("seed"));
  m.def(
      "rho_sbm_pair",
      [](sp::Index n, const sp::Matrix& lambda, double rho, std::uint64_t seed) {
        sp::SeededStream s(seed);
        const auto model = sp::SbmModel::balanced(n, lambda, rho);
        const auto pair = sp::gen_rho_sbm_pair(model, s);
        py::dict out;
        out["a1"] = pair.a1;
        out["a2"] = pair.a2;
        out["p"] = pair.p;
        out["max_expected_degree"] = model.max_expected_degree();
        return out;
      },
      py::arg("n"), py::arg("lambda_block"), py::arg("rho"), py::arg("seed"));

  m.def(
      "run_experiment",
      [](const std::string& config_json, const std::string& format) {
        const auto config = sp::parse_config(nlohmann::json::parse(config_json));
        sp::ExperimentReport report;
        {
          py::gil_scoped_release release;
          report = sp::run_experiment(config);
        }
        std::ostringstream out;
        sp::write_report(report, sp::parse_output_format(format), out);
        return out.str();
      },
      py::arg("config_json"), py::arg("format") = "json",
      "Runs an experiment from a JSON config string; returns the report text.");
}
