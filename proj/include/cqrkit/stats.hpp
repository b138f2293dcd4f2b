#pragma once

namespace cqrkit {

/// Standard normal density.
double normal_pdf(double x);

/// Standard normal CDF, accurate to ~1e-15 over the full range.
double normal_cdf(double x);

/// Inverse of the standard normal CDF (Wichura's PPND16 rational
/// approximations, relative error below 1e-15 for p in (0,1)).
/// p <= 0 returns -inf, p >= 1 returns +inf.
double normal_quantile(double p);

}  // namespace cqrkit
