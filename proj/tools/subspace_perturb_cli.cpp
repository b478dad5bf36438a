#include "subspace_perturb/errors.hpp"
#include "subspace_perturb/harness.hpp"
#include "subspace_perturb/matrix.hpp"
#include "subspace_perturb/procrustes.hpp"
#include "subspace_perturb/subspace.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

namespace sp = subspace_perturb;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitViolations = 2;

struct ExperimentOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<long long> replicates;
  std::optional<std::string> out;
  std::optional<std::string> format;
  std::optional<unsigned> threads;
};

int run_experiment_command(sp::ExperimentKind kind, const ExperimentOptions& o) {
  sp::ExperimentConfig config = o.config.empty() ? sp::ExperimentConfig::defaults(kind)
                                                 : sp::load_config(o.config, kind);
  if (o.seed) config.base_seed = *o.seed;
  if (o.replicates) config.replicates = *o.replicates;
  if (o.out) config.output_path = *o.out;
  if (o.format) config.output_format = sp::parse_output_format(*o.format);
  if (o.threads) config.threads = *o.threads;
  sp::validate_config(config);

  const sp::ExperimentReport report = sp::run_experiment(config);
  if (config.output_path) {
    sp::write_report(report, config.output_format, std::filesystem::path(*config.output_path));
  } else {
    sp::write_report(report, config.output_format, std::cout);
  }
  std::cerr << report.experiment << ": " << report.rows.size() << " rows, "
            << report.violation_count << " violations\n";
  return report.violation_count > 0 ? kExitViolations : kExitOk;
}

void print_pairs(const std::vector<std::pair<std::string, double>>& values, const std::string& format) {
  if (format == "json") {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [k, v] : values) j[k] = v;
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::cout << "quantity,value\n";
  for (const auto& [k, v] : values) std::cout << k << ',' << sp::format_double(v) << '\n';
}

int run_norms(const std::string& path, const std::string& format) {
  const sp::Matrix a = sp::read_matrix_text(std::filesystem::path(path));
  std::vector<std::pair<std::string, double>> values{
      {"rows", static_cast<double>(a.rows())},
      {"cols", static_cast<double>(a.cols())},
      {"two_to_inf", sp::two_to_inf_norm(a)},
      {"two_to_inf_transpose", sp::two_to_inf_norm(a.transpose())}};
  for (auto kind : {sp::NormKind::spectral, sp::NormKind::frobenius, sp::NormKind::one,
                    sp::NormKind::infinity, sp::NormKind::max}) {
    values.emplace_back(std::string(sp::to_string(kind)), sp::matrix_norm(a, kind));
  }
  print_pairs(values, format);
  return kExitOk;
}

int run_align(const std::string& u_path, const std::string& uhat_path, const std::string& format) {
  const sp::OrthonormalFrame u(sp::read_matrix_text(std::filesystem::path(u_path)));
  const sp::OrthonormalFrame uhat(sp::read_matrix_text(std::filesystem::path(uhat_path)));
  if (u.ambient_dim() != uhat.ambient_dim() || u.frame_dim() != uhat.frame_dim()) {
    throw sp::DimensionMismatch("align: U and Uhat shapes differ");
  }
  const sp::AlignmentResult a = sp::align(u, uhat);
  const sp::SinThetaNorms s = sp::sin_theta_norms(u, uhat);
  std::vector<std::pair<std::string, double>> values{
      {"residual_frobenius", a.residual_frobenius},
      {"residual_spectral", a.residual_spectral},
      {"residual_two_to_inf", a.residual_two_to_inf},
      {"sin_theta_spectral", s.spectral},
      {"sin_theta_frobenius", s.frobenius},
      {"non_unique", a.non_unique ? 1.0 : 0.0}};
  for (sp::Index i = 0; i < a.w.rows(); ++i) {
    for (sp::Index j = 0; j < a.w.cols(); ++j) {
      values.emplace_back("w[" + std::to_string(i) + "," + std::to_string(j) + "]", a.w(i, j));
    }
  }
  print_pairs(values, format);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Matrix perturbation experiments and single-shot subspace tools"};
  app.require_subcommand(1);

  ExperimentOptions opts;
  std::optional<sp::ExperimentKind> chosen;
  for (auto kind : {sp::ExperimentKind::covariance, sp::ExperimentKind::lowrank_recovery,
                    sp::ExperimentKind::omnibus, sp::ExperimentKind::entrywise,
                    sp::ExperimentKind::decomposition_suite, sp::ExperimentKind::norm_suite}) {
    auto* sub = app.add_subcommand(std::string(sp::to_string(kind)), "Run the experiment");
    sub->add_option("--config", opts.config, "JSON experiment config")->check(CLI::ExistingFile);
    sub->add_option("--seed", opts.seed, "Base seed (overrides config)");
    sub->add_option("--replicates", opts.replicates, "Replicate count (overrides config)");
    sub->add_option("--out", opts.out, "Report path; stdout when absent");
    sub->add_option("--format", opts.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--threads", opts.threads, "Worker threads; 0 = all cores");
    sub->callback([&chosen, kind] { chosen = kind; });
  }

  std::string matrix_path, u_path, uhat_path, format = "csv";
  auto* norms = app.add_subcommand("norms", "Print the norms of a matrix text file");
  norms->add_option("--matrix", matrix_path)->required()->check(CLI::ExistingFile);
  norms->add_option("--format", format)->check(CLI::IsMember({"csv", "json"}));
  auto* align = app.add_subcommand("align", "Procrustes-align two orthonormal frames");
  align->add_option("--u", u_path)->required()->check(CLI::ExistingFile);
  align->add_option("--uhat", uhat_path)->required()->check(CLI::ExistingFile);
  align->add_option("--format", format)->check(CLI::IsMember({"csv", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (chosen) return run_experiment_command(*chosen, opts);
    if (norms->parsed()) return run_norms(matrix_path, format);
    if (align->parsed()) return run_align(u_path, uhat_path, format);
  } catch (const sp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const sp::InvalidInput& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitUsage;
  } catch (const sp::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
