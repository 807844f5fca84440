#include "binfam/momgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace binfam {

void GenConfig::validate() const {
  if (dim < 2) throw ArgumentError("genmatrix: dimension must be >= 2");
  if (!(rho >= 0.0 && rho <= 1.0)) throw ArgumentError("genmatrix: rho must lie in [0, 1]");
  if (permutation_steps < 0) throw ArgumentError("genmatrix: permutation steps must be >= 1 (0 for the default)");
  if (sweeps < 1) throw ArgumentError("genmatrix: sweeps must be >= 1");
  if (refresh_every < 1) throw ArgumentError("genmatrix: refresh interval must be >= 1");
}

double det_update(double det, double det_block, double n_ii, double r_i, double old_value, double new_value) {
  return det + det_block * (old_value - new_value) * ((old_value + new_value) * n_ii + 2.0 * r_i);
}

long double det_update(long double det, long double det_block, long double n_ii, long double r_i, long double old_value,
                       long double new_value) {
  return det + det_block * (old_value - new_value) * ((old_value + new_value) * n_ii + 2.0L * r_i);
}

Interval shrink(Interval iv, double rho) {
  return {0.5 * ((1.0 + rho) * iv.lo + (1.0 - rho) * iv.hi), 0.5 * ((1.0 - rho) * iv.lo + (1.0 + rho) * iv.hi)};
}

namespace {

/// Interval for m_id given the Schur data; `schur` is det S / det B.
std::optional<Interval> bounds_from(double m_i, double m_d, double s_i, double n_ii, double r_i, double schur) {
  const double q = schur + s_i * (s_i * n_ii + 2.0 * r_i);
  const double center = -r_i / n_ii;
  const double disc = center * center + q / n_ii;
  if (!(disc > 0.0)) return std::nullopt;
  const double c = std::sqrt(disc);
  const double base = m_i * m_d;
  const double lo = std::max({m_i + m_d - 1.0, 0.0, base + center - c});
  const double hi = std::min({m_i, m_d, base + center + c});
  if (!(lo < hi)) return std::nullopt;
  return Interval{lo, hi};
}

double full_det(const Matrix& s) { return s.partialPivLu().determinant(); }

class MomentChain {
 public:
  explicit MomentChain(Vector mean) : d_(static_cast<int>(mean.size())), mean_(std::move(mean)) {
    m_ = mean_ * mean_.transpose();
    m_.diagonal() = mean_;
    rebuild();
  }

  void permute(Rng& rng) {
    std::vector<int> sigma(static_cast<std::size_t>(d_));
    std::iota(sigma.begin(), sigma.end(), 0);
    rng.shuffle(sigma.begin(), sigma.end());
    Matrix next(d_, d_);
    Vector mean(d_);
    for (int i = 0; i < d_; ++i) {
      mean[i] = mean_[sigma[static_cast<std::size_t>(i)]];
      for (int j = 0; j < d_; ++j) next(i, j) = m_(sigma[static_cast<std::size_t>(i)], sigma[static_cast<std::size_t>(j)]);
    }
    m_ = std::move(next);
    mean_ = std::move(mean);
    rebuild();
  }

  void sweep(double rho, Rng& rng, GenStats& stats) {
    const int last = d_ - 1;
    std::vector<int> order(static_cast<std::size_t>(last));
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order.begin(), order.end());
    for (int i : order) {
      const double n_ii = n_(i, i);
      const double s_i = s_[i];
      const long double r_i = w_[i] - n_ii * static_cast<long double>(s_i);
      const auto iv = bounds_from(mean_[i], mean_[last], s_i, n_ii, static_cast<double>(r_i), static_cast<double>(schur_));
      if (!iv) {
        ++stats.skipped;
        continue;
      }
      const Interval shrunk = shrink(*iv, rho);
      const double x = rng.uniform(shrunk.lo, shrunk.hi);
      const double s_new = x - mean_[i] * mean_[last];
      schur_ = det_update(schur_, 1.0L, static_cast<long double>(n_ii), r_i, static_cast<long double>(s_i), static_cast<long double>(s_new));
      const long double delta = static_cast<long double>(s_new) - s_i;
      for (int j = 0; j < last; ++j) w_[j] += n_(j, i) * delta;
      s_[i] = s_new;
      m_(i, last) = m_(last, i) = x;
      ++stats.replacements;
    }
  }

  void refresh(GenStats& stats) {
    const double tracked = static_cast<double>(det_block_ * schur_);
    const double exact = full_det(covariance());
    const double drift = std::abs(tracked - exact) / std::abs(exact);
    stats.max_det_drift = std::max(stats.max_det_drift, drift);
    ++stats.refreshes;
    if (drift > 1e-8) ++stats.drift_signals;
    rebuild();
  }

  const Matrix& matrix() const { return m_; }

 private:
  Matrix covariance() const { return m_ - mean_ * mean_.transpose(); }

  void rebuild() {
    const int last = d_ - 1;
    const Matrix cov = covariance();
    const Matrix block = cov.topLeftCorner(last, last);
    Eigen::LLT<Matrix> llt(block);
    if (llt.info() != Eigen::Success) throw ContractError("genmatrix: leading covariance block lost definiteness");
    n_ = llt.solve(Matrix::Identity(last, last));
    const Vector diag = llt.matrixLLT().diagonal();
    det_block_ = diag.array().square().prod();
    s_ = cov.block(0, last, last, 1);
    w_ = n_.cast<long double>() * s_.cast<long double>();
    schur_ = cov(last, last) - s_.cast<long double>().dot(w_);
  }

  int d_;
  Vector mean_;
  Matrix m_;
  Matrix n_;
  Vector s_;
  // Running sums carry extended precision; the Schur complement is tiny next to its updates when S is ill conditioned.
  Eigen::Matrix<long double, Eigen::Dynamic, 1> w_;
  long double det_block_ = 1.0L;
  long double schur_ = 0.0L;
};

}  // namespace

std::optional<Interval> replacement_bounds(const Matrix& m, int i) {
  const auto d = static_cast<int>(m.rows());
  if (m.cols() != d || d < 2) throw ArgumentError("replacement_bounds: matrix must be square with d >= 2");
  if (i < 0 || i >= d - 1) throw ArgumentError("replacement_bounds: index must address the last column");
  const int last = d - 1;
  const Vector mean = m.diagonal();
  const Matrix cov = m - mean * mean.transpose();
  Eigen::LLT<Matrix> llt(cov.topLeftCorner(last, last));
  if (llt.info() != Eigen::Success) throw PreconditionError("replacement_bounds: leading block not invertible");
  const Matrix n = llt.solve(Matrix::Identity(last, last));
  const Vector s = cov.block(0, last, last, 1);
  const Vector w = n * s;
  const double schur = cov(last, last) - s.dot(w);
  return bounds_from(mean[i], mean[last], s[i], n(i, i), w[i] - n(i, i) * s[i], schur);
}

CrossMomentMatrix random_cross_moment_matrix(const GenConfig& cfg, Rng& rng, GenStats* stats) {
  cfg.validate();
  GenStats local;
  GenStats& st = stats ? *stats : local;
  st = {};

  Vector mean(cfg.dim);
  for (int i = 0; i < cfg.dim; ++i) mean[i] = rng.uniform_open();
  MomentChain chain(std::move(mean));

  const int perms = cfg.effective_permutation_steps();
  for (int p = 0; p < perms; ++p) {
    chain.permute(rng);
    for (int s = 1; s <= cfg.sweeps; ++s) {
      chain.sweep(cfg.rho, rng, st);
      if (s % cfg.refresh_every == 0 || s == cfg.sweeps) chain.refresh(st);
    }
  }
  return CrossMomentMatrix(chain.matrix());
}

CrossMomentMatrix random_cross_moment_matrix(const GenConfig& cfg, GenStats* stats) {
  Rng rng(cfg.seed);
  return random_cross_moment_matrix(cfg, rng, stats);
}

}  // namespace binfam
