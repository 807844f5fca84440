#include "binfam/gauss_copula.hpp"

#include <algorithm>
#include <cmath>

namespace binfam {

GaussianCopulaFamily::GaussianCopulaFamily(Vector thresholds, Matrix latent_corr)
    : thresholds_(std::move(thresholds)), sigma_(std::move(latent_corr)) {
  const auto d = thresholds_.size();
  if (d < 1 || sigma_.rows() != d || sigma_.cols() != d)
    throw ArgumentError("Gaussian copula: thresholds and correlation matrix disagree in size");
  for (Eigen::Index i = 0; i < d; ++i) {
    if (std::isnan(thresholds_[i])) throw ArgumentError("Gaussian copula: threshold is NaN");
    if (sigma_(i, i) != 1.0) throw ArgumentError("Gaussian copula: latent correlation needs unit diagonal");
    for (Eigen::Index j = 0; j < i; ++j)
      if (std::abs(sigma_(i, j) - sigma_(j, i)) > 1e-12)
        throw ArgumentError("Gaussian copula: latent correlation must be symmetric");
  }
  Eigen::LLT<Matrix> llt(sigma_);
  if (llt.info() != Eigen::Success) throw InfeasibleError("Gaussian copula: latent correlation not positive definite");
  factor_ = llt.matrixL();
}

PairFit fit_latent_correlation(double a_i, double a_j, double target, double start) {
  PairFit out;
  auto f = [&](double s) { return bvn_cdf(a_i, a_j, s) - target; };
  double lo = -kLatentCorrLimit, hi = kLatentCorrLimit;
  const double f_lo = f(lo), f_hi = f(hi);
  if (f_lo > 0.0) {
    out.sigma = lo;
    out.residual = f_lo;
    out.boundary = true;
    return out;
  }
  if (f_hi < 0.0) {
    out.sigma = hi;
    out.residual = -f_hi;
    out.boundary = true;
    return out;
  }

  double s = std::clamp(start, lo, hi);
  for (int it = 0; it < 200; ++it) {
    const double fv = f(s);
    out.iterations = it + 1;
    if (std::abs(fv) <= 1e-14) break;
    if (fv < 0.0)
      lo = s;
    else
      hi = s;
    double next = s - fv / bvn_pdf(a_i, a_j, s);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - s) < 1e-16 || hi - lo < 1e-16) {
      s = next;
      break;
    }
    s = next;
  }
  out.sigma = s;
  out.residual = std::abs(f(s));
  return out;
}

EigenRepair repair_correlation(const Matrix& sigma) {
  EigenRepair out{sigma, false, 0.0};
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma, Eigen::EigenvaluesOnly);
  const double smallest = eig.eigenvalues().minCoeff();
  if (smallest >= kPositiveDefiniteTol) return out;
  out.lambda = smallest - 1e-8;
  const double shift = std::abs(out.lambda);
  out.sigma = (sigma + shift * Matrix::Identity(sigma.rows(), sigma.cols())) / (1.0 + shift);
  out.sigma.diagonal().setOnes();
  out.repaired = true;
  return out;
}

CopulaFit fit_gc(const CrossMomentMatrix& cm) {
  const Matrix& m = cm.matrix();
  const int d = cm.dim();
  Vector a(d);
  for (int i = 0; i < d; ++i) a[i] = norm_quantile(m(i, i));

  const CorrelationSpec corr = CorrelationSpec::from_cross_moments(m);
  Matrix sigma = Matrix::Identity(d, d);
  std::vector<std::pair<int, int>> boundary;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < i; ++j) {
      const double start = std::clamp(corr.corr(i, j), -0.99, 0.99);
      const PairFit pf = fit_latent_correlation(a[i], a[j], m(i, j), start);
      if (pf.boundary) boundary.emplace_back(i, j);
      sigma(i, j) = sigma(j, i) = pf.sigma;
    }

  EigenRepair rep = repair_correlation(sigma);
  return {GaussianCopulaFamily(a, rep.sigma), rep.repaired, rep.lambda, std::move(sigma), std::move(boundary)};
}

BinaryVector sample_gc(const GaussianCopulaFamily& family, Rng& rng) {
  const int d = family.dim();
  Vector z(d);
  for (int i = 0; i < d; ++i) z[i] = rng.normal();
  const Vector x = family.factor().triangularView<Eigen::Lower>() * z;
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) bits[static_cast<std::size_t>(i)] = x[i] <= family.thresholds()[i] ? 1 : 0;
  return BinaryVector(std::move(bits));
}

Matrix gc_moments(const GaussianCopulaFamily& family) {
  const int d = family.dim();
  const Vector& a = family.thresholds();
  Matrix m(d, d);
  for (int i = 0; i < d; ++i) {
    m(i, i) = norm_cdf(a[i]);
    for (int j = 0; j < i; ++j) m(i, j) = m(j, i) = bvn_cdf(a[i], a[j], family.latent_corr()(i, j));
  }
  return m;
}

}  // namespace binfam
