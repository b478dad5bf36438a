#include "subspace_perturb/harness.hpp"

#include "subspace_perturb/bounds.hpp"
#include "subspace_perturb/decomposition.hpp"
#include "subspace_perturb/errors.hpp"
#include "subspace_perturb/models.hpp"
#include "subspace_perturb/procrustes.hpp"
#include "subspace_perturb/subspace.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <thread>

namespace subspace_perturb {

namespace {

constexpr double kReconstructionTolerance = 1e-10;

std::string label_number(double v) {
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

std::string label_number(Index v) { return std::to_string(v); }

}  // namespace

std::string_view to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::covariance: return "covariance";
    case ExperimentKind::lowrank_recovery: return "lowrank_recovery";
    case ExperimentKind::omnibus: return "omnibus";
    case ExperimentKind::entrywise: return "entrywise";
    case ExperimentKind::decomposition_suite: return "decomposition_suite";
    case ExperimentKind::norm_suite: return "norm_suite";
  }
  return "unknown";
}

ExperimentKind parse_experiment(std::string_view name) {
  for (auto k : {ExperimentKind::covariance, ExperimentKind::lowrank_recovery,
                 ExperimentKind::omnibus, ExperimentKind::entrywise,
                 ExperimentKind::decomposition_suite, ExperimentKind::norm_suite}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown experiment: " + std::string(name));
}

std::string_view to_string(OutputFormat f) { return f == OutputFormat::csv ? "csv" : "json"; }

OutputFormat parse_output_format(std::string_view name) {
  if (name == "csv") return OutputFormat::csv;
  if (name == "json") return OutputFormat::json;
  throw ConfigError("unknown output format: " + std::string(name));
}

std::string_view to_string(RowStatus s) {
  return s == RowStatus::checked ? "checked" : "precondition_failed";
}

RowStatus parse_row_status(std::string_view name) {
  if (name == "checked") return RowStatus::checked;
  if (name == "precondition_failed") return RowStatus::precondition_failed;
  throw InvalidInput("unknown row status: " + std::string(name));
}

double ReplicateRow::metric(const std::string& name) const {
  for (const auto& [k, v] : metrics) {
    if (k == name) return v;
  }
  throw InvalidInput("row " + group + " has no metric " + name);
}

std::optional<double> ExperimentReport::aggregate(const std::string& group,
                                                  const std::string& metric) const {
  for (const auto& a : aggregates) {
    if (a.group == group && a.metric == metric) return a.value;
  }
  return std::nullopt;
}

std::vector<const ReplicateRow*> ExperimentReport::rows_in(const std::string& group) const {
  std::vector<const ReplicateRow*> out;
  for (const auto& r : rows) {
    if (r.group == group) out.push_back(&r);
  }
  return out;
}

// ---------------------------------------------------------------- config

Index ExperimentConfig::default_replicates(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::covariance: return 5;
    case ExperimentKind::lowrank_recovery: return 20;
    case ExperimentKind::omnibus: return 8;
    case ExperimentKind::entrywise: return 500;
    case ExperimentKind::decomposition_suite: return 200;
    case ExperimentKind::norm_suite: return 1000;
  }
  return 1;
}

ExperimentConfig ExperimentConfig::defaults(ExperimentKind kind) {
  ExperimentConfig c;
  c.experiment = kind;
  c.replicates = default_replicates(kind);
  return c;
}

namespace {

using Json = nlohmann::json;

void reject_unknown(const Json& obj, std::initializer_list<std::string_view> allowed,
                    const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected a JSON object");
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError(where + ": unknown key '" + key + "'");
    }
  }
}

Index get_index(const Json& v, const std::string& what) {
  if (!v.is_number_integer()) throw ConfigError(what + ": expected an integer");
  return v.get<Index>();
}

double get_double(const Json& v, const std::string& what) {
  if (!v.is_number()) throw ConfigError(what + ": expected a number");
  return v.get<double>();
}

std::vector<Index> get_index_list(const Json& v, const std::string& what) {
  if (!v.is_array()) throw ConfigError(what + ": expected an array");
  std::vector<Index> out;
  for (const auto& e : v) out.push_back(get_index(e, what));
  return out;
}

std::vector<double> get_double_list(const Json& v, const std::string& what) {
  if (!v.is_array()) throw ConfigError(what + ": expected an array");
  std::vector<double> out;
  for (const auto& e : v) out.push_back(get_double(e, what));
  return out;
}

std::vector<std::array<Index, 2>> get_shapes(const Json& v, const std::string& what) {
  if (!v.is_array()) throw ConfigError(what + ": expected an array of [p1, p2]");
  std::vector<std::array<Index, 2>> out;
  for (const auto& e : v) {
    if (!e.is_array() || e.size() != 2) throw ConfigError(what + ": expected [p1, p2] pairs");
    out.push_back({get_index(e[0], what), get_index(e[1], what)});
  }
  return out;
}

Matrix get_square_matrix(const Json& v, const std::string& what) {
  if (!v.is_array() || v.empty()) throw ConfigError(what + ": expected a non-empty 2D array");
  const Index k = static_cast<Index>(v.size());
  Matrix m(k, k);
  for (Index i = 0; i < k; ++i) {
    const auto& row = v[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != k) {
      throw ConfigError(what + ": expected a square matrix");
    }
    for (Index j = 0; j < k; ++j) m(i, j) = get_double(row[static_cast<std::size_t>(j)], what);
  }
  return m;
}

void parse_parameters(const Json& p, ExperimentConfig& c) {
  const std::string where = "parameters";
  switch (c.experiment) {
    case ExperimentKind::covariance: {
      reject_unknown(p, {"dims", "r", "spike_scale", "c", "n_factor"}, where);
      auto& q = c.covariance;
      if (p.contains("dims")) q.dims = get_index_list(p["dims"], "dims");
      if (p.contains("r")) q.r = get_index(p["r"], "r");
      if (p.contains("spike_scale")) q.spike_scale = get_double(p["spike_scale"], "spike_scale");
      if (p.contains("c")) q.c = get_double(p["c"], "c");
      if (p.contains("n_factor")) q.n_factor = get_double(p["n_factor"], "n_factor");
      break;
    }
    case ExperimentKind::lowrank_recovery: {
      reject_unknown(p, {"shapes", "r", "signal_scale", "noise_scale"}, where);
      auto& q = c.lowrank_recovery;
      if (p.contains("shapes")) q.shapes = get_shapes(p["shapes"], "shapes");
      if (p.contains("r")) q.r = get_index(p["r"], "r");
      if (p.contains("signal_scale")) q.signal_scale = get_double(p["signal_scale"], "signal_scale");
      if (p.contains("noise_scale")) q.noise_scale = get_double(p["noise_scale"], "noise_scale");
      break;
    }
    case ExperimentKind::omnibus: {
      reject_unknown(p, {"sizes", "lambda", "rho"}, where);
      auto& q = c.omnibus;
      if (p.contains("sizes")) q.sizes = get_index_list(p["sizes"], "sizes");
      if (p.contains("lambda")) q.lambda = get_square_matrix(p["lambda"], "lambda");
      if (p.contains("rho")) q.rho = get_double_list(p["rho"], "rho");
      break;
    }
    case ExperimentKind::entrywise: {
      reject_unknown(p, {"p", "eigenvalues", "noise_fractions"}, where);
      auto& q = c.entrywise;
      if (p.contains("p")) q.p = get_index(p["p"], "p");
      if (p.contains("eigenvalues")) q.eigenvalues = get_double_list(p["eigenvalues"], "eigenvalues");
      if (p.contains("noise_fractions")) {
        q.noise_fractions = get_double_list(p["noise_fractions"], "noise_fractions");
      }
      break;
    }
    case ExperimentKind::decomposition_suite: {
      reject_unknown(p, {"shapes", "r", "sigma_r", "noise_ratio", "tail_ratios",
                         "symmetric_noise_fraction", "grid_step"},
                     where);
      auto& q = c.decomposition_suite;
      if (p.contains("shapes")) q.shapes = get_shapes(p["shapes"], "shapes");
      if (p.contains("r")) q.r = get_index(p["r"], "r");
      if (p.contains("sigma_r")) q.sigma_r = get_double(p["sigma_r"], "sigma_r");
      if (p.contains("noise_ratio")) q.noise_ratio = get_double(p["noise_ratio"], "noise_ratio");
      if (p.contains("tail_ratios")) q.tail_ratios = get_double_list(p["tail_ratios"], "tail_ratios");
      if (p.contains("symmetric_noise_fraction")) {
        q.symmetric_noise_fraction =
            get_double(p["symmetric_noise_fraction"], "symmetric_noise_fraction");
      }
      if (p.contains("grid_step")) q.grid_step = get_double(p["grid_step"], "grid_step");
      break;
    }
    case ExperimentKind::norm_suite: {
      reject_unknown(p, {"max_dim", "max_frame_rank"}, where);
      auto& q = c.norm_suite;
      if (p.contains("max_dim")) q.max_dim = get_index(p["max_dim"], "max_dim");
      if (p.contains("max_frame_rank")) q.max_frame_rank = get_index(p["max_frame_rank"], "max_frame_rank");
      break;
    }
  }
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

}  // namespace

ExperimentConfig parse_config(const nlohmann::json& doc, std::optional<ExperimentKind> expected) {
  reject_unknown(doc, {"experiment", "base_seed", "replicates", "output_path", "output_format",
                       "threads", "parameters"},
                 "config");
  std::optional<ExperimentKind> kind = expected;
  if (doc.contains("experiment")) {
    if (!doc["experiment"].is_string()) throw ConfigError("experiment: expected a string");
    const ExperimentKind named = parse_experiment(doc["experiment"].get<std::string>());
    if (kind && *kind != named) {
      throw ConfigError("config is for experiment '" + std::string(to_string(named)) +
                        "' but '" + std::string(to_string(*kind)) + "' was requested");
    }
    kind = named;
  }
  if (!kind) throw ConfigError("config: experiment not specified");

  ExperimentConfig c = ExperimentConfig::defaults(*kind);
  if (doc.contains("base_seed")) {
    const auto& s = doc["base_seed"];
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0)) {
      throw ConfigError("base_seed: expected a non-negative integer");
    }
    c.base_seed = s.get<std::uint64_t>();
  }
  if (doc.contains("replicates")) c.replicates = get_index(doc["replicates"], "replicates");
  if (doc.contains("output_path")) {
    if (!doc["output_path"].is_string()) throw ConfigError("output_path: expected a string");
    c.output_path = doc["output_path"].get<std::string>();
  }
  if (doc.contains("output_format")) {
    if (!doc["output_format"].is_string()) throw ConfigError("output_format: expected a string");
    c.output_format = parse_output_format(doc["output_format"].get<std::string>());
  }
  if (doc.contains("threads")) {
    const Index t = get_index(doc["threads"], "threads");
    require(t >= 0, "threads must be >= 0");
    c.threads = static_cast<unsigned>(t);
  }
  if (doc.contains("parameters")) parse_parameters(doc["parameters"], c);
  validate_config(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path,
                             std::optional<ExperimentKind> expected) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return parse_config(doc, expected);
}

void validate_config(const ExperimentConfig& c) {
  require(c.replicates >= 1, "replicates must be >= 1");
  switch (c.experiment) {
    case ExperimentKind::covariance: {
      const auto& q = c.covariance;
      require(!q.dims.empty(), "dims must be non-empty");
      require(q.r >= 1, "r must be >= 1");
      for (Index d : q.dims) require(d > q.r, "every d must exceed r");
      require(q.spike_scale > 0 && q.c > 0 && q.n_factor > 0,
              "spike_scale, c and n_factor must be positive");
      break;
    }
    case ExperimentKind::lowrank_recovery: {
      const auto& q = c.lowrank_recovery;
      require(!q.shapes.empty(), "shapes must be non-empty");
      for (const auto& s : q.shapes) require(s[0] >= q.r && s[1] >= q.r, "shapes must be >= r");
      require(q.r >= 1, "r must be >= 1");
      require(q.signal_scale > 0 && q.noise_scale >= 0, "signal_scale > 0, noise_scale >= 0");
      break;
    }
    case ExperimentKind::omnibus: {
      const auto& q = c.omnibus;
      require(!q.sizes.empty() && !q.rho.empty(), "sizes and rho must be non-empty");
      for (Index n : q.sizes) require(n >= q.lambda.rows(), "every n must be >= kappa");
      for (double r : q.rho) require(r >= 0 && r <= 1, "rho must lie in [0, 1]");
      try {
        SbmModel(std::vector<Index>(static_cast<std::size_t>(q.lambda.rows()), 1), q.lambda, 0.0);
      } catch (const InvalidInput& e) {
        throw ConfigError(std::string("lambda: ") + e.what());
      }
      break;
    }
    case ExperimentKind::entrywise: {
      const auto& q = c.entrywise;
      require(!q.eigenvalues.empty() && !q.noise_fractions.empty(),
              "eigenvalues and noise_fractions must be non-empty");
      require(static_cast<Index>(q.eigenvalues.size()) < q.p, "need r < p");
      for (double f : q.noise_fractions) require(f >= 0, "noise_fractions must be >= 0");
      break;
    }
    case ExperimentKind::decomposition_suite: {
      const auto& q = c.decomposition_suite;
      require(!q.shapes.empty() && !q.tail_ratios.empty(), "shapes and tail_ratios must be non-empty");
      require(q.r >= 1, "r must be >= 1");
      for (const auto& s : q.shapes) require(std::min(s[0], s[1]) > q.r, "shapes must exceed r");
      require(q.sigma_r > 0 && q.noise_ratio >= 0, "sigma_r > 0, noise_ratio >= 0");
      for (double t : q.tail_ratios) require(t >= 0 && t < 1, "tail_ratios must lie in [0, 1)");
      require(q.grid_step > 0 && q.grid_step < 1, "grid_step must lie in (0, 1)");
      break;
    }
    case ExperimentKind::norm_suite: {
      require(c.norm_suite.max_dim >= 2, "max_dim must be >= 2");
      require(c.norm_suite.max_frame_rank >= 1, "max_frame_rank must be >= 1");
      break;
    }
  }
}

// ---------------------------------------------------------------- statistics

double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

double quantile(std::vector<double> values, double q) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw InvalidInput("log_log_slope: need at least two matching points");
  }
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0) || !(y[i] > 0)) throw InvalidInput("log_log_slope: values must be positive");
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  if (sxx == 0) throw InvalidInput("log_log_slope: x values are all equal");
  return sxy / sxx;
}

// ---------------------------------------------------------------- orchestration

namespace {

struct Task {
  std::string group;
  Index cell = 0;  // grid cell index
  Index replicate = 0;
};

using TaskFn = std::function<std::vector<ReplicateRow>(const Task&, SeededStream&)>;

// Results land in a slot per task index, so the output order never depends
// on which worker finished first.
std::vector<ReplicateRow> run_tasks(const ExperimentConfig& config, const std::vector<Task>& tasks,
                                    const TaskFn& fn) {
  const SeededStream root(config.base_seed);
  std::vector<std::vector<ReplicateRow>> slots(tasks.size());
  std::vector<std::exception_ptr> errors(tasks.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      const Task& t = tasks[i];
      SeededStream stream =
          root.child(static_cast<std::uint64_t>(t.replicate)).child(static_cast<std::uint64_t>(t.cell));
      try {
        slots[i] = fn(t, stream);
        for (auto& row : slots[i]) {
          row.replicate = t.replicate;
          row.seed = stream.seed();
        }
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };

  unsigned threads = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(1, tasks.size())));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned k = 0; k < threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<ReplicateRow> rows;
  for (auto& s : slots) {
    for (auto& r : s) rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<Task> grid_tasks(const std::vector<std::string>& groups, Index replicates) {
  std::vector<Task> tasks;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (Index r = 0; r < replicates; ++r) tasks.push_back({groups[g], static_cast<Index>(g), r});
  }
  return tasks;
}

// Per-group counts, medians of every metric and slack quantiles, then the
// overall violation count.
void summarize(ExperimentReport& report) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<const ReplicateRow*>> by_group;
  for (const auto& row : report.rows) {
    auto [it, inserted] = by_group.try_emplace(row.group);
    if (inserted) order.push_back(row.group);
    it->second.push_back(&row);
  }
  report.violation_count = 0;
  for (const auto& g : order) {
    const auto& rows = by_group[g];
    Index checked = 0, failed = 0, violations = 0;
    for (const auto* r : rows) {
      if (r->status == RowStatus::checked) {
        ++checked;
        if (r->violated) ++violations;
      } else {
        ++failed;
      }
    }
    report.violation_count += violations;
    report.aggregates.push_back({g, "checked", static_cast<double>(checked)});
    report.aggregates.push_back({g, "precondition_failed", static_cast<double>(failed)});
    report.aggregates.push_back({g, "violation_count", static_cast<double>(violations)});
    if (checked == 0) continue;
    for (const auto& [name, unused] : rows.front()->metrics) {
      std::vector<double> values;
      for (const auto* r : rows) {
        if (r->status != RowStatus::checked) continue;
        const double v = r->metric(name);
        if (std::isfinite(v)) values.push_back(v);
      }
      if (values.empty()) continue;
      report.aggregates.push_back({g, "median_" + name, median(values)});
      if (name == "slack") {
        report.aggregates.push_back({g, "min_slack", quantile(values, 0.0)});
        report.aggregates.push_back({g, "q05_slack", quantile(values, 0.05)});
      }
    }
  }
}

ExperimentReport make_report(const ExperimentConfig& config, std::vector<ReplicateRow> rows) {
  ExperimentReport report;
  report.experiment = std::string(to_string(config.experiment));
  report.base_seed = config.base_seed;
  report.replicates = config.replicates;
  report.rows = std::move(rows);
  summarize(report);
  return report;
}

void finish(ExperimentReport& report) {
  report.aggregates.push_back({"all", "violation_count", static_cast<double>(report.violation_count)});
}

double group_median(const ExperimentReport& report, const std::string& group,
                    const std::string& metric) {
  std::vector<double> values;
  for (const auto* r : report.rows_in(group)) {
    if (r->status == RowStatus::checked) values.push_back(r->metric(metric));
  }
  return median(values);
}

// a <= b up to relative floating error
bool leq(double a, double b, double rel = 1e-12) {
  return a <= b + rel * std::max({std::abs(a), std::abs(b), 1e-300});
}

ReplicateRow bound_row(const std::string& group, const BoundReport& b) {
  ReplicateRow row;
  row.group = group;
  row.status = b.preconditions_met() ? RowStatus::checked : RowStatus::precondition_failed;
  row.violated = b.violated();
  row.metrics = {{"lhs", b.lhs}, {"rhs", b.rhs}, {"slack", b.slack()}};
  for (const auto& [name, value] : b.terms) row.metrics.emplace_back("term_" + name, value);
  for (const auto& [name, ok] : b.preconditions) {
    row.metrics.emplace_back("pre_" + name, ok ? 1.0 : 0.0);
  }
  return row;
}

Matrix scaled_to(const Matrix& g, double current, double target) {
  if (target == 0.0) return Matrix::Zero(g.rows(), g.cols());
  return g * (target / current);
}

}  // namespace

// ---------------------------------------------------------------- experiments

ExperimentReport run_covariance(const ExperimentConfig& config) {
  const auto& q = config.covariance;
  std::vector<std::string> groups;
  for (Index d : q.dims) groups.push_back("d=" + label_number(d));

  auto fn = [&](const Task& t, SeededStream& stream) {
    const Index d = q.dims[static_cast<std::size_t>(t.cell)];
    const auto n = static_cast<Index>(std::llround(q.n_factor * static_cast<double>(d)));
    const Vector lambdas =
        Vector::Constant(q.r, q.spike_scale * static_cast<double>(d) / static_cast<double>(q.r));
    const CovarianceModel model = gen_spiked_covariance(d, q.r, lambdas, q.c, stream);
    const PerturbationInstance inst = sample_empirical_covariance(model, n, stream);
    const FactoredInstance f(inst, FactorKind::symmetric);
    const double recon = reconstruction_error(decompose(f, Variant::symmetric4, Side::left));
    const AlignmentResult a = align(OrthonormalFrame(f.u), OrthonormalFrame(f.uhat));

    ReplicateRow row;
    row.group = t.group;
    row.metrics = {{"d", static_cast<double>(d)},
                   {"n", static_cast<double>(n)},
                   {"effective_rank", model.effective_rank()},
                   {"lhs_2inf", a.residual_two_to_inf},
                   {"lhs_spec", a.residual_spectral},
                   {"ratio", a.residual_two_to_inf / a.residual_spectral},
                   {"rhs_general", covariance_rhs(model, static_cast<double>(n))},
                   {"rhs_spiked", covariance_rhs_spiked(model, static_cast<double>(n))},
                   {"reconstruction_error", recon}};
    row.violated = recon > kReconstructionTolerance ||
                   !leq(a.residual_two_to_inf, a.residual_spectral);
    return std::vector<ReplicateRow>{row};
  };

  ExperimentReport report = make_report(config, run_tasks(config, grid_tasks(groups, config.replicates), fn));
  if (q.dims.size() >= 2) {
    std::vector<double> xs, ys, ls;
    for (std::size_t i = 0; i < q.dims.size(); ++i) {
      xs.push_back(static_cast<double>(q.dims[i]));
      ys.push_back(group_median(report, groups[i], "ratio"));
      ls.push_back(group_median(report, groups[i], "lhs_2inf"));
    }
    report.aggregates.push_back({"trend", "slope_log_ratio_vs_log_d", log_log_slope(xs, ys)});
    report.aggregates.push_back({"trend", "slope_log_lhs_2inf_vs_log_d", log_log_slope(xs, ls)});
  }
  finish(report);
  return report;
}

ExperimentReport run_lowrank_recovery(const ExperimentConfig& config) {
  const auto& q = config.lowrank_recovery;
  std::vector<std::string> groups;
  for (const auto& s : q.shapes) groups.push_back("p=" + label_number(s[0]) + "x" + label_number(s[1]));

  auto fn = [&](const Task& t, SeededStream& stream) {
    const auto [p1, p2] = q.shapes[static_cast<std::size_t>(t.cell)];
    const double sigma =
        q.signal_scale * static_cast<double>(p2) / std::sqrt(static_cast<double>(p1));
    const LowRankSignal sig = gen_low_rank(p1, p2, q.r, Vector::Constant(q.r, sigma), stream);
    Matrix e = gen_gaussian_noise(p1, p2, stream) * q.noise_scale;
    const PerturbationInstance inst(sig.x, std::move(e), q.r);
    const FactoredInstance f(inst, FactorKind::singular);
    const double recon = reconstruction_error(decompose(f, Variant::rect4, Side::right));
    const OrthonormalFrame v(f.v), vhat(f.vhat);
    const AlignmentResult a = align(v, vhat);
    const double lower = sin_theta_norms(v, vhat).spectral / std::sqrt(static_cast<double>(p2));
    const double ratio = a.residual_spectral > 0 ? a.residual_two_to_inf / a.residual_spectral : 0.0;

    ReplicateRow row;
    row.group = t.group;
    row.metrics = {{"p1", static_cast<double>(p1)},
                   {"p2", static_cast<double>(p2)},
                   {"sigma_r", sigma},
                   {"lhs_2inf", a.residual_two_to_inf},
                   {"lhs_spec", a.residual_spectral},
                   {"lower", lower},
                   {"ratio", ratio},
                   {"reconstruction_error", recon}};
    row.violated = recon > kReconstructionTolerance || !leq(lower, a.residual_two_to_inf);
    return std::vector<ReplicateRow>{row};
  };

  ExperimentReport report = make_report(config, run_tasks(config, grid_tasks(groups, config.replicates), fn));
  for (const auto& g : groups) {
    const auto rows = report.rows_in(g);
    const auto hits = std::count_if(rows.begin(), rows.end(),
                                    [](const ReplicateRow* r) { return r->metric("ratio") <= 0.25; });
    report.aggregates.push_back(
        {g, "fraction_ratio_le_0.25", static_cast<double>(hits) / static_cast<double>(rows.size())});
  }
  finish(report);
  return report;
}

ExperimentReport run_omnibus(const ExperimentConfig& config) {
  const auto& q = config.omnibus;
  std::vector<std::string> groups;
  for (double rho : q.rho) {
    for (Index n : q.sizes) groups.push_back("rho=" + label_number(rho) + "/n=" + label_number(n));
  }
  const Vector lsv = singular_values(q.lambda);
  const Index r = (lsv.array() > kRankTolerance * lsv(0)).count();

  auto fn = [&](const Task& t, SeededStream& stream) {
    const auto cell = static_cast<std::size_t>(t.cell);
    const double rho = q.rho[cell / q.sizes.size()];
    const Index n = q.sizes[cell % q.sizes.size()];
    const SbmModel model = SbmModel::balanced(n, q.lambda, rho);
    std::optional<PerturbationInstance> inst;
    {
      const OmnibusPair pair = gen_rho_sbm_pair(model, stream);
      inst.emplace(omnibus_instance(pair, r));
    }
    const FactoredInstance f(*inst, FactorKind::symmetric);
    const double recon = reconstruction_error(decompose(f, Variant::symmetric4, Side::left));
    const AlignmentResult a = align(OrthonormalFrame(f.u), OrthonormalFrame(f.uhat));

    ReplicateRow row;
    row.group = t.group;
    row.metrics = {{"n", static_cast<double>(n)},
                   {"rho", rho},
                   {"max_expected_degree", model.max_expected_degree()},
                   {"lhs_2inf", a.residual_two_to_inf},
                   {"lhs_spec", a.residual_spectral},
                   {"reconstruction_error", recon}};
    row.violated = recon > kReconstructionTolerance ||
                   !leq(a.residual_two_to_inf, a.residual_spectral);
    return std::vector<ReplicateRow>{row};
  };

  ExperimentReport report = make_report(config, run_tasks(config, grid_tasks(groups, config.replicates), fn));
  if (q.sizes.size() >= 2) {
    for (std::size_t k = 0; k < q.rho.size(); ++k) {
      std::vector<double> xs, ys;
      for (std::size_t i = 0; i < q.sizes.size(); ++i) {
        const std::string& g = groups[k * q.sizes.size() + i];
        xs.push_back(SbmModel::balanced(q.sizes[i], q.lambda, q.rho[k]).max_expected_degree());
        ys.push_back(group_median(report, g, "lhs_2inf"));
      }
      report.aggregates.push_back({"rho=" + label_number(q.rho[k]), "slope_log_lhs_vs_log_delta",
                                   log_log_slope(xs, ys)});
    }
  }
  finish(report);
  return report;
}

ExperimentReport run_entrywise(const ExperimentConfig& config) {
  const auto& q = config.entrywise;
  std::vector<std::string> groups;
  for (double f : q.noise_fractions) groups.push_back("fraction=" + label_number(f));
  const Vector eig = Eigen::Map<const Vector>(q.eigenvalues.data(), static_cast<Index>(q.eigenvalues.size()));
  const double lambda_r = std::abs(eig(eig.size() - 1));

  auto fn = [&](const Task& t, SeededStream& stream) {
    const double fraction = q.noise_fractions[static_cast<std::size_t>(t.cell)];
    const SymmetricLowRankSignal sig = gen_symmetric_low_rank(q.p, eig, stream);
    const Matrix g = gen_symmetric_gaussian_noise(q.p, stream);
    Matrix e = scaled_to(g, matrix_norm(g, NormKind::infinity), fraction * lambda_r);
    const PerturbationInstance inst(sig.x, std::move(e), eig.size());
    const FactoredInstance f(inst, FactorKind::symmetric);
    const BoundReport b = bound_entrywise_symmetric(f);
    const double recon = reconstruction_error(decompose(f, Variant::symmetric4, Side::left));

    ReplicateRow row = bound_row(t.group, b);
    row.metrics.emplace_back("e_inf", matrix_norm(inst.e(), NormKind::infinity));
    row.metrics.emplace_back("reconstruction_error", recon);
    row.violated = row.violated || recon > kReconstructionTolerance;
    return std::vector<ReplicateRow>{row};
  };

  ExperimentReport report = make_report(config, run_tasks(config, grid_tasks(groups, config.replicates), fn));
  finish(report);
  return report;
}

ExperimentReport run_decomposition_suite(const ExperimentConfig& config) {
  const auto& q = config.decomposition_suite;
  std::vector<std::string> cells;
  for (const auto& s : q.shapes) {
    for (double tail : q.tail_ratios) {
      cells.push_back("p=" + label_number(s[0]) + "x" + label_number(s[1]) +
                      "/tail=" + label_number(tail));
    }
  }

  auto fn = [&](const Task& t, SeededStream& stream) {
    const auto cell = static_cast<std::size_t>(t.cell);
    const auto [p1, p2] = q.shapes[cell / q.tail_ratios.size()];
    const double tail = q.tail_ratios[cell % q.tail_ratios.size()];
    const Index r = q.r;
    const Index m = std::min(p1, p2);

    Vector sig(tail > 0 ? m : r);
    for (Index k = 0; k < sig.size(); ++k) {
      sig(k) = k < r ? q.sigma_r * static_cast<double>(r - k) : tail * q.sigma_r;
    }
    const LowRankSignal x = gen_low_rank(p1, p2, sig.size(), sig, stream);
    const Matrix g = gen_gaussian_noise(p1, p2, stream);
    const PerturbationInstance inst(
        x.x, scaled_to(g, matrix_norm(g, NormKind::spectral), q.noise_ratio * q.sigma_r), r);
    const FactoredInstance f(inst, FactorKind::singular);

    // symmetric companion: alternating signs, |lambda| decreasing
    Vector eig(r);
    for (Index k = 0; k < r; ++k) eig(k) = (k % 2 == 0 ? 1.0 : -1.0) * q.sigma_r * static_cast<double>(r - k);
    const SymmetricLowRankSignal xs = gen_symmetric_low_rank(p1, eig, stream);
    const Matrix gs = gen_symmetric_gaussian_noise(p1, stream);
    const PerturbationInstance sym(
        xs.x,
        scaled_to(gs, matrix_norm(gs, NormKind::infinity), q.symmetric_noise_fraction * q.sigma_r),
        r);
    const FactoredInstance fs(sym, FactorKind::symmetric);

    std::vector<ReplicateRow> rows;
    ReplicateRow dec;
    dec.group = t.group + "/decomposition";
    double worst = 0.0;
    for (Variant v : {Variant::rect4, Variant::rewritten3, Variant::expanded5}) {
      for (Side s : {Side::left, Side::right}) {
        const double err = reconstruction_error(decompose(f, v, s));
        worst = std::max(worst, err);
        dec.metrics.emplace_back(std::string(to_string(v)) + "_" + std::string(to_string(s)), err);
      }
    }
    const double sym_err = reconstruction_error(decompose(fs, Variant::symmetric4, Side::left));
    worst = std::max(worst, sym_err);
    dec.metrics.emplace_back("symmetric4_left", sym_err);
    dec.metrics.emplace_back("max_error", worst);
    dec.violated = worst > kReconstructionTolerance;
    rows.push_back(std::move(dec));

    rows.push_back(bound_row(t.group + "/baseline", bound_baseline(f)));

    const auto params = search_uniform_parameters(f, q.grid_step);
    const UniformParameters used = params.value_or(UniformParameters{});
    ReplicateRow uni = bound_row(t.group + "/uniform_rect", bound_uniform_rect(f, used));
    if (!params) {
      uni.status = RowStatus::precondition_failed;
      uni.violated = false;
    }
    uni.metrics.emplace_back("alpha", used.alpha);
    uni.metrics.emplace_back("alpha_p", used.alpha_p);
    uni.metrics.emplace_back("beta", used.beta);
    uni.metrics.emplace_back("beta_p", used.beta_p);
    rows.push_back(std::move(uni));

    ReplicateRow low = bound_row(t.group + "/low_rank", bound_low_rank(f, used.alpha, used.alpha_p));
    if (!params) {
      low.status = RowStatus::precondition_failed;
      low.violated = false;
    }
    rows.push_back(std::move(low));

    rows.push_back(bound_row(t.group + "/entrywise", bound_entrywise_symmetric(fs)));

    const Index positive = (eig.array() > 0).count();
    rows.push_back(bound_row(t.group + "/davis_kahan",
                             davis_kahan_report(sym.x(), sym.xhat(), 1, positive)));
    return rows;
  };

  ExperimentReport report = make_report(config, run_tasks(config, grid_tasks(cells, config.replicates), fn));
  finish(report);
  return report;
}

namespace {

struct RelationTally {
  Index checked = 0;
  Index failed = 0;
  double worst_excess = 0.0;  // max over relations of (lhs - rhs) / scale

  void le(double lhs, double rhs, double rel = 1e-12, double abs = 0.0) {
    ++checked;
    const double scale = std::max({std::abs(lhs), std::abs(rhs), 1e-300});
    const double excess = (lhs - rhs) / scale;
    worst_excess = std::max(worst_excess, excess);
    if (lhs > rhs + rel * scale + abs) ++failed;
  }
  void eq(double a, double b, double rel = 1e-12) {
    le(a, b, rel);
    le(b, a, rel);
  }
};

Matrix random_test_matrix(Index p1, Index p2, SeededStream& s) {
  Matrix a;
  switch (s.next_u64() % 3) {
    case 0:
      a = gen_gaussian_noise(p1, p2, s);
      break;
    case 1: {
      const Index k = 1 + static_cast<Index>(s.next_u64() % static_cast<std::uint64_t>(std::min(p1, p2)));
      a = gen_gaussian_noise(p1, k, s) * gen_gaussian_noise(k, p2, s);
      break;
    }
    default:
      a = gen_gaussian_noise(p1, p2, s);
      for (Index i = 0; i < p1; ++i) {
        for (Index j = 0; j < p2; ++j) {
          if (s.uniform() < 0.7) a(i, j) = 0.0;
        }
      }
      break;
  }
  return a * std::pow(10.0, 6.0 * s.uniform() - 3.0);
}

Index draw_dim(SeededStream& s, Index lo, Index hi) {
  return lo + static_cast<Index>(s.next_u64() % static_cast<std::uint64_t>(hi - lo + 1));
}

}  // namespace

ExperimentReport run_norm_suite(const ExperimentConfig& config) {
  const auto& q = config.norm_suite;

  auto fn = [&](const Task& t, SeededStream& s) {
    std::vector<ReplicateRow> rows;
    {
      const Index p1 = draw_dim(s, 1, q.max_dim), p2 = draw_dim(s, 1, q.max_dim);
      const Index p3 = draw_dim(s, 1, q.max_dim), p4 = draw_dim(s, 1, q.max_dim);
      const Matrix a = random_test_matrix(p1, p2, s);
      const Matrix b = random_test_matrix(p2, p3, s);
      const Matrix c = random_test_matrix(p4, p1, s);
      const double sp1 = std::sqrt(static_cast<double>(p1));
      const double sp2 = std::sqrt(static_cast<double>(p2));

      const double tti = two_to_inf_norm(a);
      const double mx = matrix_norm(a, NormKind::max);
      const double inf = matrix_norm(a, NormKind::infinity);
      const Vector sv = singular_values(a);
      const double spec = sv.size() ? sv(0) : 0.0;
      const double fro = a.norm();
      const Index rank = spec > 0 ? (sv.array() > kRankTolerance * spec).count() : 0;

      RelationTally tally;
      tally.le(tti / sp2, mx);
      tally.le(mx, tti);
      tally.le(tti, inf);
      tally.le(inf, sp2 * tti);
      tally.le(tti, spec);
      tally.le(spec, sp1 * tti);
      tally.le(spec, sp2 * two_to_inf_norm(a.transpose()));
      tally.le(spec, fro);
      tally.le(fro, std::sqrt(static_cast<double>(rank)) * spec);
      tally.le(two_to_inf_norm(a * b), tti * matrix_norm(b, NormKind::spectral));
      tally.le(two_to_inf_norm(c * a), matrix_norm(c, NormKind::infinity) * tti);

      // partial isometries on either side
      const Index extra1 = draw_dim(s, 0, 5), extra2 = draw_dim(s, 0, 5);
      const Matrix u = random_orthonormal(p1 + extra1, p1, s).matrix();
      const Matrix v = random_orthonormal(p2 + extra2, p2, s).matrix();
      tally.eq(matrix_norm(u * a, NormKind::spectral), spec);
      tally.eq(matrix_norm(a * v.transpose(), NormKind::spectral), spec);
      tally.eq(matrix_norm(u * a * v.transpose(), NormKind::spectral), spec);
      tally.eq(two_to_inf_norm(a * v.transpose()), tti);

      // ||A x||_inf <= ||A||_{2->inf} for unit x, attained at the largest row
      Vector x = gen_gaussian_noise(p2, 1, s).col(0);
      x.normalize();
      tally.le((a * x).cwiseAbs().maxCoeff(), tti);
      Index best = 0;
      a.rowwise().norm().maxCoeff(&best);
      if (tti > 0) {
        const Vector xs = a.row(best).transpose() / a.row(best).norm();
        tally.eq((a * xs).cwiseAbs().maxCoeff(), tti);
      }

      // the decomposition identity on A with a small perturbation
      const Matrix e = gen_gaussian_noise(p1, p2, s) * (1e-3 * std::max(spec, 1e-300));
      double recon = 0.0;
      if (spec > 0) {
        const PerturbationInstance inst(a, e, 1);
        recon = reconstruction_error(decompose(inst, Variant::rect4, Side::left));
      }

      ReplicateRow row;
      row.group = "norms";
      row.metrics = {{"p1", static_cast<double>(p1)},
                     {"p2", static_cast<double>(p2)},
                     {"relations_checked", static_cast<double>(tally.checked)},
                     {"relations_failed", static_cast<double>(tally.failed)},
                     {"worst_relative_excess", tally.worst_excess},
                     {"reconstruction_error", recon}};
      row.violated = tally.failed > 0 || recon > kReconstructionTolerance;
      rows.push_back(std::move(row));
    }
    {
      const Index p = draw_dim(s, 2, q.max_dim);
      const Index r = draw_dim(s, 1, std::min(q.max_frame_rank, p));
      const OrthonormalFrame u = random_orthonormal(p, r, s);
      Matrix uhat;
      switch (s.next_u64() % 3) {
        case 0:
          uhat = random_orthonormal(p, r, s).matrix();
          break;
        case 1: {
          const double scale = std::pow(10.0, 6.5 * s.uniform() - 6.0);
          uhat = orthonormalize(u.matrix() + scale * gen_gaussian_noise(p, r, s)).matrix();
          break;
        }
        default:
          uhat = u.matrix() * random_orthogonal(r, s);
          break;
      }
      const OrthonormalFrame uh(uhat);
      const ResidualSandwich sw = residual_sandwich(u, uh);
      const SpectralResidualBounds sb = spectral_residual_bounds(u, uh);

      // sin^2 terms near zero carry absolute rounding of order 1e-16
      RelationTally tally;
      tally.le(sw.lower, sw.mid, 1e-12, 1e-12);
      tally.le(sw.mid, sw.upper, 1e-12, 1e-12);
      tally.le(sb.sin_theta, sb.residual, 1e-12, 1e-12);
      tally.le(sb.residual, sb.upper, 1e-12, 1e-12);

      ReplicateRow row;
      row.group = "sandwich";
      row.metrics = {{"p", static_cast<double>(p)},
                     {"r", static_cast<double>(r)},
                     {"sin_theta", sb.sin_theta},
                     {"gram_residual", sw.mid},
                     {"residual_spectral", sb.residual},
                     {"relations_failed", static_cast<double>(tally.failed)}};
      row.violated = tally.failed > 0;
      rows.push_back(std::move(row));
    }
    (void)t;
    return rows;
  };

  ExperimentReport report =
      make_report(config, run_tasks(config, grid_tasks({"suite"}, config.replicates), fn));
  finish(report);
  return report;
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  validate_config(config);
  switch (config.experiment) {
    case ExperimentKind::covariance: return run_covariance(config);
    case ExperimentKind::lowrank_recovery: return run_lowrank_recovery(config);
    case ExperimentKind::omnibus: return run_omnibus(config);
    case ExperimentKind::entrywise: return run_entrywise(config);
    case ExperimentKind::decomposition_suite: return run_decomposition_suite(config);
    case ExperimentKind::norm_suite: return run_norm_suite(config);
  }
  throw ConfigError("unknown experiment");
}

}  // namespace subspace_perturb
