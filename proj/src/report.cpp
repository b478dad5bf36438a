#include "subspace_perturb/csv.hpp"
#include "subspace_perturb/errors.hpp"
#include "subspace_perturb/harness.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <system_error>

namespace subspace_perturb {

namespace csv {

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string join(const std::vector<std::string>& fields) {
  std::string line;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) line += ',';
    line += escape(fields[i]);
  }
  return line;
}

bool read_record(std::istream& in, std::vector<std::string>& fields) {
  fields.clear();
  if (in.peek() == std::char_traits<char>::eof()) return false;
  std::string field;
  bool quoted = false;
  char c;
  while (in.get(c)) {
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field += '"';
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      break;
    } else if (c == '\r') {
      if (in.peek() == '\n') in.get(c);
      break;
    } else {
      field += c;
    }
  }
  if (quoted) throw InvalidInput("csv: unterminated quoted field");
  fields.push_back(std::move(field));
  return true;
}

}  // namespace csv

namespace {

const std::vector<std::string> kCsvHeader{"section", "group", "replicate", "seed",
                                          "status",  "metric", "value"};

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    // from_chars rejects "inf"/"nan" spelled by other writers; accept them too
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    throw InvalidInput("csv: bad number '" + s + "'");
  }
  return v;
}

template <typename T>
T parse_integer(const std::string& s) {
  T v{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw InvalidInput("csv: bad integer '" + s + "'");
  }
  return v;
}

bool is_empty(const ExperimentReport& r) { return r.rows.empty() && r.aggregates.empty(); }

}  // namespace

void write_report_csv(std::ostream& out, const ExperimentReport& report) {
  out << csv::join(kCsvHeader) << '\n';
  if (is_empty(report)) return;
  out << csv::join({"meta", report.experiment, std::to_string(report.replicates),
                    std::to_string(report.base_seed), "", "violation_count",
                    std::to_string(report.violation_count)})
      << '\n';
  for (const auto& row : report.rows) {
    const std::string rep = std::to_string(row.replicate);
    const std::string seed = std::to_string(row.seed);
    const std::string status(to_string(row.status));
    out << csv::join({"replicate", row.group, rep, seed, status, "violated",
                      row.violated ? "1" : "0"})
        << '\n';
    for (const auto& [name, value] : row.metrics) {
      out << csv::join({"replicate", row.group, rep, seed, status, name, format_double(value)})
          << '\n';
    }
  }
  for (const auto& a : report.aggregates) {
    out << csv::join({"aggregate", a.group, "", "", "", a.metric, format_double(a.value)}) << '\n';
  }
}

ExperimentReport read_report_csv(std::istream& in) {
  std::vector<std::string> fields;
  if (!csv::read_record(in, fields) || fields != kCsvHeader) {
    throw InvalidInput("report csv: missing or unexpected header");
  }
  ExperimentReport report;
  while (csv::read_record(in, fields)) {
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (fields.size() != kCsvHeader.size()) throw InvalidInput("report csv: wrong field count");
    const std::string& section = fields[0];
    if (section == "meta") {
      report.experiment = fields[1];
      report.replicates = parse_integer<Index>(fields[2]);
      report.base_seed = parse_integer<std::uint64_t>(fields[3]);
      report.violation_count = parse_integer<Index>(fields[6]);
    } else if (section == "replicate") {
      if (fields[5] == "violated") {
        ReplicateRow row;
        row.group = fields[1];
        row.replicate = parse_integer<Index>(fields[2]);
        row.seed = parse_integer<std::uint64_t>(fields[3]);
        row.status = parse_row_status(fields[4]);
        row.violated = fields[6] == "1";
        report.rows.push_back(std::move(row));
      } else {
        if (report.rows.empty()) throw InvalidInput("report csv: metric before its row");
        report.rows.back().metrics.emplace_back(fields[5], parse_double(fields[6]));
      }
    } else if (section == "aggregate") {
      report.aggregates.push_back({fields[1], fields[5], parse_double(fields[6])});
    } else {
      throw InvalidInput("report csv: unknown section '" + section + "'");
    }
  }
  return report;
}

nlohmann::ordered_json report_to_json(const ExperimentReport& report) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& row : report.rows) {
    nlohmann::ordered_json metrics = nlohmann::ordered_json::object();
    for (const auto& [name, value] : row.metrics) metrics[name] = value;
    rows.push_back({{"group", row.group},
                    {"replicate", row.replicate},
                    {"seed", row.seed},
                    {"status", to_string(row.status)},
                    {"violated", row.violated},
                    {"metrics", std::move(metrics)}});
  }
  nlohmann::ordered_json aggregates = nlohmann::ordered_json::array();
  for (const auto& a : report.aggregates) {
    aggregates.push_back({{"group", a.group}, {"metric", a.metric}, {"value", a.value}});
  }
  nlohmann::ordered_json doc;
  doc["experiment"] = report.experiment;
  doc["base_seed"] = report.base_seed;
  doc["replicates"] = report.replicates;
  doc["rows"] = std::move(rows);
  doc["aggregates"] = std::move(aggregates);
  doc["violation_count"] = report.violation_count;
  return doc;
}

ExperimentReport report_from_json(const nlohmann::ordered_json& doc) {
  ExperimentReport report;
  try {
    report.experiment = doc.at("experiment").get<std::string>();
    report.base_seed = doc.at("base_seed").get<std::uint64_t>();
    report.replicates = doc.at("replicates").get<Index>();
    report.violation_count = doc.at("violation_count").get<Index>();
    for (const auto& r : doc.at("rows")) {
      ReplicateRow row;
      row.group = r.at("group").get<std::string>();
      row.replicate = r.at("replicate").get<Index>();
      row.seed = r.at("seed").get<std::uint64_t>();
      row.status = parse_row_status(r.at("status").get<std::string>());
      row.violated = r.at("violated").get<bool>();
      for (const auto& [name, value] : r.at("metrics").items()) {
        row.metrics.emplace_back(name, value.is_null() ? std::numeric_limits<double>::quiet_NaN()
                                                       : value.get<double>());
      }
      report.rows.push_back(std::move(row));
    }
    for (const auto& a : doc.at("aggregates")) {
      const auto& v = a.at("value");
      report.aggregates.push_back({a.at("group").get<std::string>(),
                                   a.at("metric").get<std::string>(),
                                   v.is_null() ? std::numeric_limits<double>::quiet_NaN()
                                               : v.get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("report json: ") + e.what());
  }
  return report;
}

void write_report(const ExperimentReport& report, OutputFormat format, std::ostream& out) {
  if (format == OutputFormat::csv) {
    write_report_csv(out, report);
  } else {
    out << report_to_json(report).dump(2) << '\n';
  }
}

void write_report(const ExperimentReport& report, OutputFormat format,
                  const std::filesystem::path& path) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    write_report(report, format, out);
    out.flush();
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move report into place at " + path.string());
  }
}

}  // namespace subspace_perturb
