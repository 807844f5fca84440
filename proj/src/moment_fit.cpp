#include "binfam/moment_fit.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace binfam {

void FitConfig::validate() const {
  if (mc_samples < 1) throw ArgumentError("fit config: Monte Carlo sample size must be >= 1");
  if (max_iterations < 1) throw ArgumentError("fit config: max_iterations must be >= 1");
  if (!(tolerance_exact > 0.0) || !(tolerance_mc > 0.0)) throw ArgumentError("fit config: tolerances must be > 0");
  if (homotopy_steps < 2) throw ArgumentError("fit config: homotopy grid needs at least two points");
  if (!(magnitude_cap > 0.0)) throw ArgumentError("fit config: magnitude cap must be > 0");
  if (max_halvings < 0) throw ArgumentError("fit config: max_halvings must be >= 0");
}

bool FitConfig::use_exact(int row_dim) const {
  switch (estimator) {
    case Estimator::exact: return true;
    case Estimator::monte_carlo: return false;
    case Estimator::automatic: return row_dim <= exact_max_dim;
  }
  return true;
}

std::string_view to_string(RowStatus status) {
  switch (status) {
    case RowStatus::converged: return "converged";
    case RowStatus::not_converged: return "not-converged";
    case RowStatus::singular_jacobian: return "singular-jacobian";
    case RowStatus::boundary: return "boundary";
  }
  return "?";
}

// ---------------------------------------------------------------------------

PrefixStates PrefixStates::enumerate(const ConditionalsFamily& prefix) {
  const int k = prefix.dim();
  const std::vector<double> table = prefix.prefix_table(k);
  std::size_t live = 0;
  for (double p : table) live += p > 0.0;

  PrefixStates s;
  s.exact = true;
  s.design.resize(static_cast<Eigen::Index>(live), k + 1);
  s.weights.resize(static_cast<Eigen::Index>(live));
  Eigen::Index row = 0;
  for (std::uint64_t idx = 0; idx < table.size(); ++idx) {
    if (!(table[idx] > 0.0)) continue;
    for (int j = 0; j < k; ++j) s.design(row, j) = static_cast<double>((idx >> j) & 1ULL);
    s.design(row, k) = 1.0;
    s.weights[row] = table[idx];
    ++row;
  }
  return s;
}

PrefixStates PrefixStates::sample(const ConditionalsFamily& prefix, std::size_t n, Rng& rng) {
  if (n < 1) throw ArgumentError("PrefixStates::sample: n must be >= 1");
  const int k = prefix.dim();
  PrefixStates s;
  s.exact = false;
  s.design.resize(static_cast<Eigen::Index>(n), k + 1);
  s.weights = Vector::Constant(static_cast<Eigen::Index>(n), 1.0 / static_cast<double>(n));
  for (std::size_t r = 0; r < n; ++r) {
    const auto draw = prefix.sample(rng);
    const auto row = static_cast<Eigen::Index>(r);
    for (int j = 0; j < k; ++j) s.design(row, j) = draw.x[j];
    s.design(row, k) = 1.0;
  }
  return s;
}

Vector row_moments(const PrefixStates& states, LinkFunction link, const Vector& a) {
  const Vector eta = states.design * a;
  Vector wmu(eta.size());
  for (Eigen::Index r = 0; r < eta.size(); ++r) wmu[r] = states.weights[r] * link.eval(eta[r]);
  return states.design.transpose() * wmu;
}

Matrix row_jacobian(const PrefixStates& states, LinkFunction link, const Vector& a) {
  const Vector eta = states.design * a;
  Vector wd(eta.size());
  for (Eigen::Index r = 0; r < eta.size(); ++r) wd[r] = states.weights[r] * link.derivative(eta[r]);
  const Matrix scaled = states.design.array().colwise() * wd.array();
  return states.design.transpose() * scaled;
}

RowFit newton_row(const PrefixStates& states, LinkFunction link, const Vector& target, const Vector& start,
                  const FitConfig& cfg) {
  const double tol = cfg.tolerance(states.exact);
  RowFit out;
  out.exact = states.exact;
  out.a = start;
  Vector residual = row_moments(states, link, out.a) - target;
  out.residual = residual.cwiseAbs().maxCoeff();
  if (out.residual <= tol) {
    out.status = RowStatus::converged;
    return out;
  }

  for (int it = 1; it <= cfg.max_iterations; ++it) {
    const Matrix jac = row_jacobian(states, link, out.a);
    Eigen::LLT<Matrix> llt(jac);
    if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-14)) {
      out.status = RowStatus::singular_jacobian;
      return out;
    }
    const Vector step = llt.solve(residual);
    if (!step.allFinite()) {
      out.status = RowStatus::singular_jacobian;
      return out;
    }

    const double merit = residual.squaredNorm();
    double t = 1.0;
    bool accepted = false;
    Vector candidate, cand_residual;
    for (int h = 0; h <= cfg.max_halvings; ++h, t *= 0.5) {
      candidate = out.a - t * step;
      cand_residual = row_moments(states, link, candidate) - target;
      if (cand_residual.squaredNorm() < merit) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      out.status = RowStatus::not_converged;
      return out;
    }

    out.a = candidate;
    residual = cand_residual;
    out.residual = residual.cwiseAbs().maxCoeff();
    out.iterations = it;
    if (out.a.cwiseAbs().maxCoeff() > cfg.magnitude_cap) {
      out.status = RowStatus::boundary;
      return out;
    }
    if (out.residual <= tol) {
      out.status = RowStatus::converged;
      return out;
    }
  }
  out.status = RowStatus::not_converged;
  return out;
}

namespace {

Vector independence_start(LinkFunction link, int row_dim, double mean) {
  Vector a = Vector::Zero(row_dim);
  a[row_dim - 1] = link.inverse(mean);
  return a;
}

}  // namespace

RowFit fit_row(const ConditionalsFamily& prefix, const Vector& target, const FitConfig& cfg, Rng& rng) {
  cfg.validate();
  const int row_dim = prefix.dim() + 1;
  if (target.size() != row_dim) throw ArgumentError("fit_row: target must have prefix dimension + 1 entries");
  if (!prefix.link().bijective()) throw ArgumentError("fit_row: Newton fitting needs a bijective link");
  const bool exact = cfg.use_exact(row_dim);
  const PrefixStates states =
      exact ? PrefixStates::enumerate(prefix) : PrefixStates::sample(prefix, cfg.mc_samples, rng);
  return newton_row(states, prefix.link(), target, independence_start(prefix.link(), row_dim, target[row_dim - 1]),
                    cfg);
}

Matrix bordered_moments(const Matrix& m) {
  const auto d = m.rows();
  Matrix b(d + 1, d + 1);
  b.topLeftCorner(d, d) = m;
  b.block(0, d, d, 1) = m.diagonal();
  b.block(d, 0, 1, d) = m.diagonal().transpose();
  b(d, d) = 1.0;
  return b;
}

Vector solve_linear_row(const Matrix& prefix_moments, const Vector& target) {
  if (prefix_moments.rows() != prefix_moments.cols()) throw ArgumentError("solve_linear_row: matrix must be square");
  if (target.size() != prefix_moments.rows() + 1) throw ArgumentError("solve_linear_row: target size mismatch");
  const Matrix b = bordered_moments(prefix_moments);
  Eigen::LLT<Matrix> llt(b);
  if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-15))
    throw PreconditionError("solve_linear_row: bordered moment matrix is not positive definite");
  return llt.solve(target);
}

// ---------------------------------------------------------------------------

Vector FitReport::lambdas() const {
  Vector out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out[static_cast<Eigen::Index>(i)] = rows[i].lambda;
  return out;
}

double FitReport::min_lambda() const {
  double lo = 1.0;
  for (const auto& r : rows) lo = std::min(lo, r.lambda);
  return lo;
}

namespace {

Vector row_target(const Matrix& m, int i, double lambda) {
  Vector t(i + 1);
  for (int j = 0; j < i; ++j) t[j] = lambda * m(i, j) + (1.0 - lambda) * m(i, i) * m(j, j);
  t[i] = m(i, i);
  return t;
}

}  // namespace

FitResult fit(const CrossMomentMatrix& cm, LinkFunction link, const FitConfig& cfg, Rng& rng) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const Matrix& m = cm.matrix();
  const int d = cm.dim();

  Matrix a = Matrix::Zero(d, d);
  FitReport report;
  report.rows.resize(static_cast<std::size_t>(d));

  a(0, 0) = link.inverse(m(0, 0));
  report.rows[0] = {RowStatus::converged, 0, std::abs(link.eval(a(0, 0)) - m(0, 0)), 1.0};

  for (int i = 1; i < d; ++i) {
    RowReport& rr = report.rows[static_cast<std::size_t>(i)];
    Vector row;
    if (!link.bijective()) {
      const Vector target = row_target(m, i, 1.0);
      row = solve_linear_row(m.topLeftCorner(i, i), target);
      rr = {RowStatus::converged, 1, (bordered_moments(m.topLeftCorner(i, i)) * row - target).cwiseAbs().maxCoeff(),
            1.0};
    } else {
      const ConditionalsFamily prefix(a.topLeftCorner(i, i), link);
      const bool exact = cfg.use_exact(i + 1);
      const PrefixStates states =
          exact ? PrefixStates::enumerate(prefix) : PrefixStates::sample(prefix, cfg.mc_samples, rng);
      const Vector start = independence_start(link, i + 1, m(i, i));

      RowFit direct = newton_row(states, link, row_target(m, i, 1.0), start, cfg);
      if (direct.status == RowStatus::converged) {
        row = direct.a;
        rr = {RowStatus::converged, direct.iterations, direct.residual, 1.0};
      } else {
        // Homotopy from independence; keep the last lambda that converged.
        RowFit best;
        best.a = start;
        double best_lambda = 0.0;
        bool any = false;
        RowStatus stop = direct.status;
        int iterations = direct.iterations;
        const int n = cfg.homotopy_steps;
        for (int k = 0; k < n; ++k) {
          const double lambda = static_cast<double>(k) / (n - 1);
          RowFit step = newton_row(states, link, row_target(m, i, lambda), best.a, cfg);
          iterations += step.iterations;
          if (step.status != RowStatus::converged) {
            stop = step.status;
            break;
          }
          best = std::move(step);
          best_lambda = lambda;
          any = true;
        }
        row = best.a;
        const bool full = any && best_lambda == 1.0;
        const double residual =
            any ? best.residual
                : (row_moments(states, link, row) - row_target(m, i, 0.0)).cwiseAbs().maxCoeff();
        rr = {full ? RowStatus::converged : stop, iterations, residual, best_lambda};
      }
    }
    a.block(i, 0, 1, i) = row.head(i).transpose();
    a(i, i) = row[i];
  }

  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {ConditionalsFamily(std::move(a), link), std::move(report)};
}

FitResult fit(const CrossMomentMatrix& m, LinkFunction link, const FitConfig& cfg) {
  Rng rng(cfg.seed);
  return fit(m, link, cfg, rng);
}

}  // namespace binfam
