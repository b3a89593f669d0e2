#pragma once

// D'Agostino-Pearson K^2 omnibus normality test.
//
// Skewness and kurtosis are each mapped to an approximately standard normal
// deviate (D'Agostino 1970; Anscombe & Glynn 1983) and K^2 = Z_s^2 + Z_k^2 is
// referred to a chi-square distribution with two degrees of freedom.

#include <cmath>
#include <span>

#include "telemscan/error.hpp"

namespace telemscan {

struct NormalityResult {
  double k2 = 0.0;
  double p_value = 1.0;
  double z_skew = 0.0;
  double z_kurtosis = 0.0;
};

namespace detail {

struct CentralMoments {
  double m2 = 0.0;
  double m3 = 0.0;
  double m4 = 0.0;
};

inline CentralMoments central_moments(std::span<const double> x) {
  const double n = static_cast<double>(x.size());
  double sum = 0.0;
  for (double v : x) sum += v;
  const double mean = sum / n;
  CentralMoments m;
  for (double v : x) {
    const double d = v - mean;
    const double d2 = d * d;
    m.m2 += d2;
    m.m3 += d2 * d;
    m.m4 += d2 * d2;
  }
  m.m2 /= n;
  m.m3 /= n;
  m.m4 /= n;
  return m;
}

inline double skew_z(double b1, double n) {
  double y = b1 * std::sqrt((n + 1.0) * (n + 3.0) / (6.0 * (n - 2.0)));
  const double beta2 = 3.0 * (n * n + 27.0 * n - 70.0) * (n + 1.0) * (n + 3.0) /
                       ((n - 2.0) * (n + 5.0) * (n + 7.0) * (n + 9.0));
  const double w2 = -1.0 + std::sqrt(2.0 * (beta2 - 1.0));
  const double delta = 1.0 / std::sqrt(0.5 * std::log(w2));
  const double alpha = std::sqrt(2.0 / (w2 - 1.0));
  if (y == 0.0) y = 1.0;
  const double r = y / alpha;
  return delta * std::log(r + std::sqrt(r * r + 1.0));
}

inline double kurtosis_z(double b2, double n) {
  const double expected = 3.0 * (n - 1.0) / (n + 1.0);
  const double var_b2 = 24.0 * n * (n - 2.0) * (n - 3.0) / ((n + 1.0) * (n + 1.0) * (n + 3.0) * (n + 5.0));
  const double x = (b2 - expected) / std::sqrt(var_b2);
  const double sqrt_beta1 = 6.0 * (n * n - 5.0 * n + 2.0) / ((n + 7.0) * (n + 9.0)) *
                            std::sqrt(6.0 * (n + 3.0) * (n + 5.0) / (n * (n - 2.0) * (n - 3.0)));
  const double a = 6.0 + 8.0 / sqrt_beta1 * (2.0 / sqrt_beta1 + std::sqrt(1.0 + 4.0 / (sqrt_beta1 * sqrt_beta1)));
  const double term1 = 1.0 - 2.0 / (9.0 * a);
  const double denom = 1.0 + x * std::sqrt(2.0 / (a - 4.0));
  const double term2 = std::copysign(std::cbrt((1.0 - 2.0 / a) / std::abs(denom)), denom);
  return (term1 - term2) / std::sqrt(2.0 / (9.0 * a));
}

}  // namespace detail

inline constexpr std::size_t kNormalityMinSample = 20;

inline NormalityResult dagostino_pearson(std::span<const double> sample) {
  if (sample.size() < kNormalityMinSample) {
    throw Error(ErrorCode::SampleTooSmall, "need at least 20 values, got " + std::to_string(sample.size()));
  }
  const auto m = detail::central_moments(sample);
  if (!(m.m2 > 0.0)) throw Error(ErrorCode::DegenerateSample, "sample has zero variance");
  const double n = static_cast<double>(sample.size());
  NormalityResult r;
  r.z_skew = detail::skew_z(m.m3 / std::pow(m.m2, 1.5), n);
  r.z_kurtosis = detail::kurtosis_z(m.m4 / (m.m2 * m.m2), n);
  r.k2 = r.z_skew * r.z_skew + r.z_kurtosis * r.z_kurtosis;
  // chi-square survival function with 2 degrees of freedom
  r.p_value = std::exp(-0.5 * r.k2);
  return r;
}

}  // namespace telemscan
