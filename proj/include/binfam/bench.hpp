#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "binfam/core.hpp"

namespace binfam {

enum class MatrixNorm { spectral, frobenius };

MatrixNorm parse_norm(std::string_view name);
std::string_view to_string(MatrixNorm norm);

/// tau = (|M - M*| - |M - Mq|) / |M - M*| with M* the independence matrix of
/// the same mean. Throws UndefinedMeritError when M = M*.
double figure_of_merit(const Matrix& m, const Matrix& mq, MatrixNorm norm = MatrixNorm::spectral);

/// Spectral norm of a symmetric matrix (largest absolute eigenvalue).
double spectral_norm(const Matrix& symmetric);

enum class FamilyKind { logistic, truncated_linear, gaussian_copula };

FamilyKind parse_family_kind(std::string_view name);
std::string_view to_string(FamilyKind kind);

struct ExperimentConfig {
  std::vector<int> dims{10, 25, 50};
  std::vector<double> rhos = equispaced(15);
  int matrices_per_cell = 200;
  std::vector<FamilyKind> families{FamilyKind::logistic, FamilyKind::truncated_linear, FamilyKind::gaussian_copula};
  std::size_t n_fit = 10000;
  std::size_t n_est = 1000000;
  MatrixNorm norm = MatrixNorm::spectral;
  std::uint64_t seed = 0;
  int workers = 1;
  /// Dimensions up to this use exact enumeration for fits and moments.
  int exact_max_dim = 10;
  /// Generator settings; 0 permutation steps selects 10 d.
  int permutation_steps = 0;
  int sweeps = 500;

  static std::vector<double> equispaced(int n);
  void validate() const;
};

struct ExperimentRecord {
  int d = 0;
  double rho = 0.0;
  FamilyKind family = FamilyKind::logistic;
  int matrix_index = 0;
  double tau = 0.0;
  /// Smallest homotopy lambda over the rows (conditionals families), NaN otherwise.
  double lambda_min = 0.0;
  bool repaired = false;
  /// Generator seed of the matrix; the whole record follows from it.
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;
  /// Empty on success.
  std::string error;
  /// Failures other than an undefined figure of merit.
  bool hard_failure = false;

  friend bool operator==(const ExperimentRecord&, const ExperimentRecord&) = default;
};

/// Per-matrix seed; a function of (base, d, rho index, matrix index) only.
std::uint64_t matrix_seed(std::uint64_t base, int d, int rho_index, int matrix_index);

/// Records sorted by (d, rho, family, matrix index) regardless of worker count.
std::vector<ExperimentRecord> run_experiment(const ExperimentConfig& cfg);

struct QuantileBand {
  FamilyKind family;
  int d;
  double rho;
  std::size_t n;
  double median;
  std::vector<double> omega;
  /// (tau_{floor((0.5 - w) n)}, tau_{ceil((0.5 + w) n)}), 1-based order statistics clamped to [1, n].
  std::vector<std::pair<double, double>> bounds;
};

/// One band per (family, d, rho) cell with at least one finite tau; empty
/// cells are skipped and named in `warnings`.
std::vector<QuantileBand> aggregate_quantiles(const std::vector<ExperimentRecord>& records, int n_omega = 20,
                                              std::vector<std::string>* warnings = nullptr);

inline constexpr std::string_view kCsvHeader = "d,rho,family,matrix_index,tau,lambda_min,repaired,seed";

void write_csv(std::ostream& out, const std::vector<ExperimentRecord>& records);
void write_csv_file(const std::filesystem::path& path, const std::vector<ExperimentRecord>& records);
/// Inverse of write_csv for the emitted columns.
std::vector<ExperimentRecord> read_csv(std::istream& in);

/// One SVG per (family, d) in `dir`, named tau_<family>_d<d>.svg; returns the paths.
std::vector<std::filesystem::path> write_svg_panels(const std::filesystem::path& dir,
                                                    const std::vector<QuantileBand>& bands);
std::string svg_panel(const std::vector<QuantileBand>& cell_bands, FamilyKind family, int d);

/// Spearman rank correlation of two equally long samples (average ranks for ties).
double rank_correlation(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace binfam
