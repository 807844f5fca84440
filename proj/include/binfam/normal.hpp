#pragma once

namespace binfam {

inline constexpr double kPi = 3.14159265358979323846;

double norm_pdf(double x);

/// Standard normal CDF, via the complementary error function.
double norm_cdf(double x);

/// Standard normal quantile (Wichura's AS 241, PPND16), accurate to about 1e-16.
/// Returns -inf / +inf at p = 0 / 1; NaN outside [0, 1].
double norm_quantile(double p);

/// Bivariate standard normal density with correlation rho, |rho| < 1.
double bvn_pdf(double h, double k, double rho);

/// P(X <= h, Y <= k) for a standard bivariate normal with correlation rho.
///
/// Drezner-Wesolowsky single-integral form evaluated by Gauss-Legendre
/// quadrature with 6, 12 or 20 nodes depending on |rho| (Genz's BVND
/// scheme). |rho| >= 1 uses the comonotone / countermonotone limits.
double bvn_cdf(double h, double k, double rho);

}  // namespace binfam
