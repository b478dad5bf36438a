#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

namespace subspace_perturb {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Relative threshold for rank decisions: sigma_i counts when
// sigma_i > kRankTolerance * sigma_1.
inline constexpr double kRankTolerance = 1e-12;

// Throws InvalidInput unless `a` has at least one row and column and every
// entry is finite. `what` names the argument in the message.
void validate_matrix(const Matrix& a, std::string_view what = "matrix");

enum class NormKind { spectral, frobenius, one, infinity, max };

std::string_view to_string(NormKind kind);
NormKind parse_norm_kind(std::string_view name);

/// Maximum Euclidean row norm, i.e. sup over unit x of ||A x||_inf.
double two_to_inf_norm(const Matrix& a);

/// Standard matrix norms. The spectral norm is sigma_1 from the SVD.
double matrix_norm(const Matrix& a, NormKind kind);

/// Thin singular value decomposition A = left * diag(singular_values) * right^T
/// with k = min(rows, cols) triplets, singular values non-increasing.
///
/// Column signs and rotations inside repeated singular values are
/// implementation-defined; callers must not depend on them.
struct SvdFactors {
  Matrix left;
  Vector singular_values;
  Matrix right;

  Index rank() const;  // count of sigma_i > kRankTolerance * sigma_1
};

SvdFactors svd(const Matrix& a);

/// Singular values only, non-increasing.
Vector singular_values(const Matrix& a);

struct Truncation {
  Matrix u;
  Vector sigma;
  Matrix v;
};

/// Leading r singular triplets of `f`. Throws InvalidInput for r outside [1, k].
Truncation truncate(const SvdFactors& f, Index r);

/// Entrywise inverse of a diagonal given as a vector; throws RankDeficient when
/// any |d_i| <= kRankTolerance * scale.
Vector inverse_diagonal(const Vector& d, double scale);

// Fixture text format: "rows cols" followed by rows of whitespace separated
// decimals. Written with 17 significant digits so reading it back is exact.
Matrix read_matrix_text(std::istream& in);
Matrix read_matrix_text(const std::filesystem::path& path);
void write_matrix_text(std::ostream& out, const Matrix& a);
void write_matrix_text(const std::filesystem::path& path, const Matrix& a);

// 17 significant digits, the rendering used by every text writer here.
std::string format_double(double value);

}  // namespace subspace_perturb
