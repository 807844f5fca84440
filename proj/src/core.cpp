#include "binfam/core.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "binfam/format.hpp"

namespace binfam {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

double parse_double(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (text == "inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  double value = 0.0;
  const char* first = text.data();
  if (!text.empty() && text.front() == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
    throw ArgumentError("not a number: '" + std::string(text) + "'");
  return value;
}

void require_enumerable(int dim, const char* what) {
  if (dim > kEnumerationCap)
    throw CapError(std::string(what) + ": dimension " + std::to_string(dim) + " exceeds enumeration cap " +
                   std::to_string(kEnumerationCap));
}

// ---------------------------------------------------------------------------

IndexSet::IndexSet(std::initializer_list<int> indices) {
  for (int i : indices) {
    if (i < 0 || i >= 64) throw ArgumentError("index out of range for IndexSet");
    mask_ |= 1ULL << i;
  }
}

std::vector<int> IndexSet::indices() const {
  std::vector<int> out;
  for (std::uint64_t m = mask_; m != 0; m &= m - 1) out.push_back(std::countr_zero(m));
  return out;
}

BinaryVector::BinaryVector(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
  if (bits_.empty()) throw ArgumentError("binary vector needs dimension >= 1");
  for (auto b : bits_)
    if (b > 1) throw ArgumentError("binary vector entries must be 0 or 1");
}

BinaryVector BinaryVector::from_index(std::uint64_t index, int dim) {
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(dim));
  for (int i = 0; i < dim; ++i) bits[static_cast<std::size_t>(i)] = (index >> i) & 1ULL;
  return BinaryVector(std::move(bits));
}

std::uint64_t BinaryVector::to_index() const {
  if (bits_.size() > 64) throw CapError("binary vector too long for an index");
  std::uint64_t idx = 0;
  for (std::size_t i = 0; i < bits_.size(); ++i) idx |= static_cast<std::uint64_t>(bits_[i]) << i;
  return idx;
}

FrechetInterval frechet_bounds(IndexSet set, std::span<const double> mean) {
  if (set.empty()) throw ArgumentError("frechet_bounds: empty index set");
  double sum = 0.0;
  double hi = 1.0;
  for (int i : set.indices()) {
    if (i >= static_cast<int>(mean.size())) throw ArgumentError("frechet_bounds: index beyond mean vector");
    const double mi = mean[static_cast<std::size_t>(i)];
    if (!(mi > 0.0 && mi < 1.0)) throw ArgumentError("frechet_bounds: means must lie in (0,1)");
    sum += mi;
    hi = std::min(hi, mi);
  }
  const double lo = std::max(sum - set.size() + 1.0, 0.0);
  return {lo, hi};
}

// ---------------------------------------------------------------------------

namespace {

void require_square_symmetric(const Matrix& m, double tol, const char* what) {
  if (m.rows() != m.cols() || m.rows() == 0) throw ArgumentError(std::string(what) + ": matrix must be square");
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < i; ++j)
      if (!(std::abs(m(i, j) - m(j, i)) <= tol))
        throw ArgumentError(std::string(what) + ": matrix is not symmetric");
}

Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

std::string FeasibilityReport::summary() const {
  if (valid()) return "valid";
  std::ostringstream os;
  for (std::size_t k = 0; k < violations.size(); ++k) {
    if (k) os << "; ";
    os << violations[k].message;
  }
  return os.str();
}

FeasibilityReport validate_cross_moments(const Matrix& raw) {
  require_square_symmetric(raw, 1e-12, "validate_cross_moments");
  const Matrix m = symmetrized(raw);
  const auto d = static_cast<int>(m.rows());
  FeasibilityReport report;

  auto add = [&](Violation::Kind kind, int i, int j, double value, double bound, std::string msg) {
    report.violations.push_back({kind, i, j, value, bound, std::move(msg)});
  };

  bool diag_ok = true;
  for (int i = 0; i < d; ++i) {
    if (!(m(i, i) > 0.0 && m(i, i) < 1.0)) {
      diag_ok = false;
      add(Violation::Kind::diagonal_range, i, i, m(i, i), 0.0,
          "m_" + std::to_string(i) + std::to_string(i) + " = " + format_double(m(i, i)) + " outside (0,1)");
    }
  }
  if (diag_ok) {
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < i; ++j) {
        const double lo = std::max(m(i, i) + m(j, j) - 1.0, 0.0);
        const double hi = std::min(m(i, i), m(j, j));
        const double v = m(i, j);
        if (!(v >= lo))
          add(Violation::Kind::pairwise_lower, i, j, v, lo,
              "m_" + std::to_string(i) + "," + std::to_string(j) + " = " + format_double(v) + " below lower bound " +
                  format_double(lo));
        if (!(v <= hi))
          add(Violation::Kind::pairwise_upper, i, j, v, hi,
              "m_" + std::to_string(i) + "," + std::to_string(j) + " = " + format_double(v) + " > min(m_i, m_j) = " +
                  format_double(hi));
      }
  }

  const Vector mean = m.diagonal();
  const Matrix cov = m - mean * mean.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov, Eigen::EigenvaluesOnly);
  report.min_eigenvalue = eig.eigenvalues().minCoeff();
  if (!(report.min_eigenvalue > kPositiveDefiniteTol))
    add(Violation::Kind::not_positive_definite, -1, -1, report.min_eigenvalue, kPositiveDefiniteTol,
        "covariance M - m m^T not positive definite (smallest eigenvalue " + format_double(report.min_eigenvalue) +
            ")");
  return report;
}

CrossMomentMatrix::CrossMomentMatrix(const Matrix& m) {
  const FeasibilityReport report = validate_cross_moments(m);
  if (!report.valid()) throw InfeasibleError("invalid cross-moment matrix: " + report.summary());
  m_ = symmetrized(m);
}

CrossMomentMatrix CrossMomentMatrix::independent(const Vector& mean) {
  Matrix m = mean * mean.transpose();
  m.diagonal() = mean;
  return CrossMomentMatrix(m);
}

Matrix CrossMomentMatrix::covariance() const {
  const Vector mean = m_.diagonal();
  return m_ - mean * mean.transpose();
}

Matrix CorrelationSpec::cross_moments() const {
  const auto d = mean.size();
  if (corr.rows() != d || corr.cols() != d) throw ArgumentError("correlation spec: shape mismatch");
  const Vector s = (mean.array() * (1.0 - mean.array())).sqrt().matrix();
  Matrix m = corr.cwiseProduct(s * s.transpose()) + mean * mean.transpose();
  m.diagonal() = mean;
  return m;
}

CorrelationSpec CorrelationSpec::from_cross_moments(const Matrix& m) {
  const Vector mean = m.diagonal();
  const Vector s = (mean.array() * (1.0 - mean.array())).sqrt().matrix();
  Matrix c = (m - mean * mean.transpose()).cwiseQuotient(s * s.transpose());
  c.diagonal().setOnes();
  return {mean, c};
}

// ---------------------------------------------------------------------------

namespace {

/// Neumaier-compensated sum.
double stable_sum(const std::vector<double>& v) {
  double sum = 0.0, comp = 0.0;
  for (double x : v) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      comp += (sum - t) + x;
    else
      comp += (x - t) + sum;
    sum = t;
  }
  return sum + comp;
}

}  // namespace

DensePmf::DensePmf(int dim, std::vector<double> probs) : dim_(dim), probs_(std::move(probs)) {
  if (dim < 1) throw ArgumentError("pmf dimension must be >= 1");
  require_enumerable(dim, "DensePmf");
  if (probs_.size() != (std::size_t{1} << dim)) throw ArgumentError("pmf table must have 2^d entries");
  for (double p : probs_)
    if (!(p >= 0.0)) throw InfeasibleError("pmf entries must be nonnegative");
  if (!(std::abs(stable_sum(probs_) - 1.0) <= 1e-12)) throw InfeasibleError("pmf entries must sum to 1");
}

DensePmf DensePmf::normalized(int dim, std::vector<double> weights) {
  const double total = stable_sum(weights);
  if (!(total > 0.0)) throw InfeasibleError("pmf weights must have positive total");
  for (double& w : weights) w /= total;
  return DensePmf(dim, std::move(weights));
}

DensePmf DensePmf::product(const Vector& mean) {
  const int d = static_cast<int>(mean.size());
  require_enumerable(d, "DensePmf::product");
  std::vector<double> probs(std::size_t{1} << d);
  for (std::uint64_t idx = 0; idx < probs.size(); ++idx) {
    double p = 1.0;
    for (int i = 0; i < d; ++i) p *= ((idx >> i) & 1ULL) ? mean[i] : 1.0 - mean[i];
    probs[idx] = p;
  }
  return normalized(d, std::move(probs));
}

Vector DensePmf::mean() const {
  Vector m = Vector::Zero(dim_);
  for (std::uint64_t idx = 0; idx < probs_.size(); ++idx)
    for (int i = 0; i < dim_; ++i)
      if ((idx >> i) & 1ULL) m[i] += probs_[idx];
  return m;
}

Matrix DensePmf::cross_moments() const {
  Matrix m = Matrix::Zero(dim_, dim_);
  for (std::uint64_t idx = 0; idx < probs_.size(); ++idx) {
    const double p = probs_[idx];
    if (p == 0.0) continue;
    for (int i = 0; i < dim_; ++i) {
      if (!((idx >> i) & 1ULL)) continue;
      for (int j = 0; j <= i; ++j)
        if ((idx >> j) & 1ULL) m(i, j) += p;
    }
  }
  return m.selfadjointView<Eigen::Lower>();
}

double oracle_moments(const DensePmf& pmf, IndexSet set) {
  if (set.empty()) return 1.0;
  const std::uint64_t mask = set.mask();
  if (mask >> pmf.dim()) throw ArgumentError("oracle_moments: index beyond dimension");
  double sum = 0.0;
  for (std::uint64_t idx = 0; idx < pmf.size(); ++idx)
    if ((idx & mask) == mask) sum += pmf[idx];
  return sum;
}

// ---------------------------------------------------------------------------
// Bahadur expansion. Both directions are tensor-product transforms done one
// coordinate at a time, O(d 2^d).

namespace {

struct Standardizer {
  Vector at0;  // u_i(0) = -m / s
  Vector at1;  // u_i(1) = (1 - m) / s
};

Standardizer standardizer(const Vector& mean) {
  Standardizer z{Vector(mean.size()), Vector(mean.size())};
  for (Eigen::Index i = 0; i < mean.size(); ++i) {
    const double m = mean[i];
    if (!(m > 0.0 && m < 1.0)) throw ArgumentError("Bahadur expansion needs means in (0,1)");
    const double s = std::sqrt(m * (1.0 - m));
    z.at0[i] = -m / s;
    z.at1[i] = (1.0 - m) / s;
  }
  return z;
}

}  // namespace

BahadurCoefficients bahadur_coefficients(const DensePmf& pmf) { return bahadur_coefficients(pmf, pmf.mean()); }

BahadurCoefficients bahadur_coefficients(const DensePmf& pmf, const Vector& mean) {
  const int d = pmf.dim();
  if (mean.size() != d) throw ArgumentError("bahadur_coefficients: mean dimension mismatch");
  const Standardizer z = standardizer(mean);
  std::vector<double> t = pmf.probs();
  for (int i = 0; i < d; ++i) {
    const std::uint64_t bit = 1ULL << i;
    for (std::uint64_t idx = 0; idx < t.size(); ++idx) {
      if (idx & bit) continue;
      const double p0 = t[idx], p1 = t[idx | bit];
      t[idx] = p0 + p1;
      t[idx | bit] = p0 * z.at0[i] + p1 * z.at1[i];
    }
  }
  BahadurCoefficients out;
  for (std::uint64_t set = 0; set < t.size(); ++set)
    if (std::popcount(set) >= 2) out[set] = t[set];
  return out;
}

DensePmf bahadur_pmf(const Vector& mean, const BahadurCoefficients& coeffs) {
  const int d = static_cast<int>(mean.size());
  if (d < 1) throw ArgumentError("bahadur_pmf: empty mean");
  require_enumerable(d, "bahadur_pmf");
  const Standardizer z = standardizer(mean);
  std::vector<double> t(std::size_t{1} << d, 0.0);
  t[0] = 1.0;
  for (const auto& [set, c] : coeffs) {
    if (set >> d) throw ArgumentError("bahadur_pmf: coefficient index beyond dimension");
    if (std::popcount(set) >= 2) t[set] = c;
  }
  for (int i = 0; i < d; ++i) {
    const std::uint64_t bit = 1ULL << i;
    for (std::uint64_t idx = 0; idx < t.size(); ++idx) {
      if (idx & bit) continue;
      const double without = t[idx], with = t[idx | bit];
      t[idx] = without + with * z.at0[i];
      t[idx | bit] = without + with * z.at1[i];
    }
  }
  const DensePmf base = DensePmf::product(mean);
  for (std::uint64_t idx = 0; idx < t.size(); ++idx) {
    double p = base[idx] * t[idx];
    if (p < -1e-12) throw InfeasibleError("bahadur_pmf: coefficients yield negative mass");
    t[idx] = std::max(p, 0.0);
  }
  return DensePmf::normalized(d, std::move(t));
}

LpCheck lp_distance_check(const DensePmf& pi, const DensePmf& omega, double p) {
  if (pi.dim() != omega.dim()) throw ArgumentError("lp_distance_check: dimension mismatch");
  if (!(p >= 1.0)) throw ArgumentError("lp_distance_check: p must be >= 1");
  const Vector mean = pi.mean();
  if ((mean - omega.mean()).cwiseAbs().maxCoeff() > 1e-10)
    throw PreconditionError("lp_distance_check: distributions must share the same mean");

  LpCheck out{0.0, 0.0};
  for (std::uint64_t idx = 0; idx < pi.size(); ++idx) out.lhs += std::pow(std::abs(pi[idx] - omega[idx]), p);

  const auto cp = bahadur_coefficients(pi, mean);
  const auto co = bahadur_coefficients(omega, mean);
  const double base = std::pow(2.0, 1.0 - std::min(p, 2.0));
  for (const auto& [set, c] : cp) {
    const double diff = std::abs(c - co.at(set));
    out.bound += std::pow(base, std::popcount(set)) * std::pow(diff, p);
  }
  return out;
}

// ---------------------------------------------------------------------------

Matrix read_matrix(std::istream& in) {
  long long d_read = 0;
  if (!(in >> d_read) || d_read < 1 || d_read > 100000) throw ArgumentError("matrix file: bad dimension line");
  const auto d = static_cast<Eigen::Index>(d_read);
  Matrix m(d, d);
  std::string token;
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) {
      if (!(in >> token)) throw ArgumentError("matrix file: expected " + std::to_string(d * d) + " entries");
      m(i, j) = parse_double(token);
    }
  if (in >> token) throw ArgumentError("matrix file: trailing content");
  require_square_symmetric(m, 1e-9, "matrix file");
  return symmetrized(m);
}

Matrix read_matrix_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open matrix file: " + path);
  return read_matrix(in);
}

void write_matrix(std::ostream& out, const Matrix& m) {
  out << m.rows() << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? " " : "") << format_double(m(i, j));
    out << '\n';
  }
}

void write_matrix_file(const std::string& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write matrix file: " + path);
  write_matrix(out, m);
  if (!out) throw Error("failed writing matrix file: " + path);
}

}  // namespace binfam
