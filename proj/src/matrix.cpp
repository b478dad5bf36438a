#include "subspace_perturb/matrix.hpp"

#include "subspace_perturb/errors.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

namespace subspace_perturb {

void validate_matrix(const Matrix& a, std::string_view what) {
  if (a.rows() < 1 || a.cols() < 1) {
    throw InvalidInput(std::string(what) + ": empty matrix");
  }
  if (!a.allFinite()) {
    throw InvalidInput(std::string(what) + ": non-finite entry");
  }
}

std::string_view to_string(NormKind kind) {
  switch (kind) {
    case NormKind::spectral: return "spectral";
    case NormKind::frobenius: return "frobenius";
    case NormKind::one: return "one";
    case NormKind::infinity: return "infinity";
    case NormKind::max: return "max";
  }
  return "unknown";
}

NormKind parse_norm_kind(std::string_view name) {
  for (auto kind : {NormKind::spectral, NormKind::frobenius, NormKind::one,
                    NormKind::infinity, NormKind::max}) {
    if (to_string(kind) == name) return kind;
  }
  throw InvalidInput("unknown norm kind: " + std::string(name));
}

double two_to_inf_norm(const Matrix& a) {
  validate_matrix(a);
  // Row norms are accumulated in a fixed left-to-right order.
  double best = 0.0;
  for (Index i = 0; i < a.rows(); ++i) {
    double sum = 0.0;
    for (Index j = 0; j < a.cols(); ++j) sum += a(i, j) * a(i, j);
    best = std::max(best, sum);
  }
  return std::sqrt(best);
}

double matrix_norm(const Matrix& a, NormKind kind) {
  validate_matrix(a);
  switch (kind) {
    case NormKind::spectral:
      return singular_values(a)(0);
    case NormKind::frobenius:
      return a.norm();
    case NormKind::one:
      return a.cwiseAbs().colwise().sum().maxCoeff();
    case NormKind::infinity:
      return a.cwiseAbs().rowwise().sum().maxCoeff();
    case NormKind::max:
      return a.cwiseAbs().maxCoeff();
  }
  throw InvalidInput("unknown norm kind");
}

namespace {

template <int Options>
Eigen::BDCSVD<Matrix> run_bdcsvd(const Matrix& a) {
  Eigen::BDCSVD<Matrix> dec(a, Options);
  if (dec.info() != Eigen::Success) {
    // Eigen manages its own sweep limits; there is no caller-visible budget.
    throw ConvergenceError("BDCSVD", 0);
  }
  return dec;
}

}  // namespace

Index SvdFactors::rank() const {
  if (singular_values.size() == 0 || singular_values(0) <= 0.0) return 0;
  const double cut = kRankTolerance * singular_values(0);
  Index count = 0;
  for (Index i = 0; i < singular_values.size(); ++i) {
    if (singular_values(i) > cut) ++count;
  }
  return count;
}

SvdFactors svd(const Matrix& a) {
  validate_matrix(a, "svd input");
  auto dec = run_bdcsvd<Eigen::ComputeThinU | Eigen::ComputeThinV>(a);
  return SvdFactors{dec.matrixU(), dec.singularValues(), dec.matrixV()};
}

Vector singular_values(const Matrix& a) {
  validate_matrix(a, "singular value input");
  return run_bdcsvd<0>(a).singularValues();
}

Truncation truncate(const SvdFactors& f, Index r) {
  const Index k = f.singular_values.size();
  if (r < 1 || r > k) {
    throw InvalidInput("truncate: rank " + std::to_string(r) +
                       " outside [1, " + std::to_string(k) + "]");
  }
  return Truncation{f.left.leftCols(r), f.singular_values.head(r),
                    f.right.leftCols(r)};
}

Vector inverse_diagonal(const Vector& d, double scale) {
  const double cut = kRankTolerance * std::abs(scale);
  Vector inv(d.size());
  for (Index i = 0; i < d.size(); ++i) {
    if (!(std::abs(d(i)) > cut)) {
      throw RankDeficient("diagonal entry " + std::to_string(i + 1) +
                          " is below the rank threshold; cannot invert");
    }
    inv(i) = 1.0 / d(i);
  }
  return inv;
}

std::string format_double(double value) {
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value,
                           std::chars_format::general, 17);
  return std::string(buf.data(), res.ptr);
}

Matrix read_matrix_text(std::istream& in) {
  long long rows = 0;
  long long cols = 0;
  if (!(in >> rows >> cols) || rows < 1 || cols < 1) {
    throw InvalidInput("matrix text: bad header, expected 'rows cols'");
  }
  Matrix a(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) {
      std::string token;
      if (!(in >> token)) {
        throw InvalidInput("matrix text: expected " + std::to_string(rows * cols) +
                           " entries");
      }
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
      if (ec != std::errc() || ptr != token.data() + token.size()) {
        throw InvalidInput("matrix text: bad entry '" + token + "'");
      }
      a(i, j) = v;
    }
  }
  std::string extra;
  if (in >> extra) throw InvalidInput("matrix text: trailing data '" + extra + "'");
  validate_matrix(a, "matrix text");
  return a;
}

Matrix read_matrix_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return read_matrix_text(in);
  } catch (const InvalidInput& e) {
    throw InvalidInput(path.string() + ": " + e.what());
  }
}

void write_matrix_text(std::ostream& out, const Matrix& a) {
  out << a.rows() << ' ' << a.cols() << '\n';
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      if (j) out << ' ';
      out << format_double(a(i, j));
    }
    out << '\n';
  }
}

void write_matrix_text(const std::filesystem::path& path, const Matrix& a) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_matrix_text(out, a);
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace subspace_perturb
