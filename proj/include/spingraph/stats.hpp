#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "spingraph/core.hpp"

namespace spingraph {

enum class Ensemble { kGOE, kGSE };

/// Wigner-surmise level-spacing density (unit mean, normalized).
inline double rmt_reference(Ensemble ensemble, double s) {
  if (s < 0.0) throw std::invalid_argument("rmt_reference: s must be >= 0");
  if (ensemble == Ensemble::kGOE) {
    return 0.5 * kPi * s * std::exp(-0.25 * kPi * s * s);
  }
  const double a = 262144.0 / (729.0 * kPi * kPi * kPi);  // 2^18 / (3^6 pi^3)
  const double b = 64.0 / (9.0 * kPi);
  const double s2 = s * s;
  return a * s2 * s2 * std::exp(-b * s2);
}

/// Integrated Wigner surmise (closed form).
inline double rmt_cdf(Ensemble ensemble, double s) {
  if (s < 0.0) throw std::invalid_argument("rmt_cdf: s must be >= 0");
  if (ensemble == Ensemble::kGOE) {
    return 1.0 - std::exp(-0.25 * kPi * s * s);
  }
  const double a = 262144.0 / (729.0 * kPi * kPi * kPi);
  const double b = 64.0 / (9.0 * kPi);
  const double erf_term = 3.0 * std::sqrt(kPi) / (8.0 * std::pow(b, 2.5)) *
                          std::erf(std::sqrt(b) * s);
  const double poly = 3.0 * s / (4.0 * b * b) + s * s * s / (2.0 * b);
  return a * (erf_term - std::exp(-b * s * s) * poly);
}

/// Exact rational with normalized sign and lowest terms; just enough
/// arithmetic for the form-factor series coefficients.
struct Rational {
  long long num = 0;
  long long den = 1;

  Rational() = default;
  Rational(long long n, long long d) : num(n), den(d) {
    if (den == 0) throw std::invalid_argument("Rational: zero denominator");
    if (den < 0) {
      num = -num;
      den = -den;
    }
    const long long g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }

  Rational operator*(const Rational& o) const { return {num * o.num, den * o.den}; }
  Rational operator-() const { return {-num, den}; }
  bool operator==(const Rational& o) const { return num == o.num && den == o.den; }
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

/// Coefficient of tau^m in the small-tau form-factor series, m in 1..4:
/// GSE {1/2, 1/4, 1/8, 1/12}; GOE {2, -2, 2, -8/3}.
inline Rational rmt_series_coefficient(Ensemble ensemble, int m) {
  if (m < 1 || m > 4) throw std::invalid_argument("rmt_series_coefficient: m in 1..4");
  static const Rational gse[4] = {{1, 2}, {1, 4}, {1, 8}, {1, 12}};
  static const Rational goe[4] = {{2, 1}, {-2, 1}, {2, 1}, {-8, 3}};
  return ensemble == Ensemble::kGSE ? gse[m - 1] : goe[m - 1];
}

/// Partial sum of the series through tau^order (order <= 4), for 0 <= tau < 1.
inline double rmt_series(Ensemble ensemble, double tau, int order = 4) {
  if (!(tau >= 0.0 && tau < 1.0)) throw std::invalid_argument("rmt_series: tau in [0, 1)");
  if (order < 1 || order > 4) throw std::invalid_argument("rmt_series: order in 1..4");
  double sum = 0.0;
  double power = 1.0;
  for (int m = 1; m <= order; ++m) {
    power *= tau;
    sum += rmt_series_coefficient(ensemble, m).value() * power;
  }
  return sum;
}

/// Nearest-neighbor spacings of an unfolded spectrum with a histogram on
/// [0, 4] and the empirical integrated distribution at the bin centers.
struct SpacingSample {
  std::vector<double> spacings;     // sorted
  std::vector<double> bin_centers;  // histogram support [0, 4]
  std::vector<double> hist;         // density estimate: count / (n * ds)
  std::vector<double> cdf_emp;      // empirical CDF at the bin centers
  double mean_spacing = 0.0;
};

inline SpacingSample nns_statistics(const std::vector<double>& unfolded, int bins = 40) {
  if (unfolded.size() < 2) throw std::invalid_argument("nns_statistics: need >= 2 levels");
  if (bins < 1) throw std::invalid_argument("nns_statistics: need >= 1 bin");
  SpacingSample out;
  out.spacings.reserve(unfolded.size() - 1);
  for (std::size_t i = 1; i < unfolded.size(); ++i) {
    const double s = unfolded[i] - unfolded[i - 1];
    if (s < -1e-9) throw std::invalid_argument("nns_statistics: spectrum is not sorted");
    out.spacings.push_back(std::max(0.0, s));
  }
  std::sort(out.spacings.begin(), out.spacings.end());
  out.mean_spacing = std::accumulate(out.spacings.begin(), out.spacings.end(), 0.0) /
                     static_cast<double>(out.spacings.size());

  const double smax = 4.0;
  const double ds = smax / bins;
  out.bin_centers.resize(static_cast<std::size_t>(bins));
  out.hist.assign(static_cast<std::size_t>(bins), 0.0);
  for (int b = 0; b < bins; ++b) out.bin_centers[static_cast<std::size_t>(b)] = (b + 0.5) * ds;
  const double n = static_cast<double>(out.spacings.size());
  for (double s : out.spacings) {
    const int b = static_cast<int>(s / ds);
    if (b >= 0 && b < bins) out.hist[static_cast<std::size_t>(b)] += 1.0 / (n * ds);
  }
  out.cdf_emp.resize(out.bin_centers.size());
  for (std::size_t i = 0; i < out.bin_centers.size(); ++i) {
    const auto it = std::upper_bound(out.spacings.begin(), out.spacings.end(), out.bin_centers[i]);
    out.cdf_emp[i] = static_cast<double>(it - out.spacings.begin()) / n;
  }
  return out;
}

/// Kolmogorov-Smirnov distance between the empirical spacing distribution
/// and a Wigner surmise, evaluated at the jump points of the empirical CDF.
inline double ks_distance(const SpacingSample& sample, Ensemble ensemble) {
  if (sample.spacings.empty()) throw std::invalid_argument("ks_distance: empty sample");
  const double n = static_cast<double>(sample.spacings.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.spacings.size(); ++i) {
    const double f = rmt_cdf(ensemble, sample.spacings[i]);
    d = std::max(d, std::abs((i + 1.0) / n - f));
    d = std::max(d, std::abs(static_cast<double>(i) / n - f));
  }
  return d;
}

/// Two-sample KS distance (symmetric; zero for identical inputs).
inline double ks_distance(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_distance: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() -
                             static_cast<double>(j) / b.size()));
  }
  return d;
}

struct FormFactorEstimate {
  std::vector<double> tau;
  std::vector<double> value;  // K_emp, averaged over windows
  int window_count = 0;
  int levels_per_window = 0;
};

/// Windowed spectral form factor of an unfolded spectrum.  The spectrum is
/// split into equal-count windows; each window contributes
/// |sum_n w_n exp(2 pi i x_n tau)|^2 / sum_n w_n^2, with a Hann taper w over
/// the window's position span to suppress boundary leakage, and the windows
/// are averaged.  Normalization makes uncorrelated (Poisson) levels give
/// K = 1 for tau away from 0.
inline FormFactorEstimate form_factor_from_spectrum(const std::vector<double>& unfolded,
                                                    const std::vector<double>& tau_grid,
                                                    int window_count = 16) {
  if (window_count < 1) throw std::invalid_argument("form_factor_from_spectrum: windows >= 1");
  const int n = static_cast<int>(unfolded.size());
  if (n < 2 * window_count) {
    throw std::invalid_argument("form_factor_from_spectrum: too few levels");
  }
  FormFactorEstimate est;
  est.tau = tau_grid;
  est.value.assign(tau_grid.size(), 0.0);
  est.window_count = window_count;
  est.levels_per_window = n / window_count;

  for (int w = 0; w < window_count; ++w) {
    const int lo = static_cast<int>(static_cast<long long>(n) * w / window_count);
    const int hi = static_cast<int>(static_cast<long long>(n) * (w + 1) / window_count);
    const double x_lo = unfolded[static_cast<std::size_t>(lo)];
    const double x_hi = unfolded[static_cast<std::size_t>(hi - 1)];
    const double span = std::max(x_hi - x_lo, 1e-12);
    std::vector<double> taper(static_cast<std::size_t>(hi - lo));
    double norm = 0.0;
    for (int i = lo; i < hi; ++i) {
      const double u = (unfolded[static_cast<std::size_t>(i)] - x_lo) / span;
      const double t = 0.5 * (1.0 - std::cos(kTwoPi * u));
      taper[static_cast<std::size_t>(i - lo)] = t;
      norm += t * t;
    }
    if (norm < 1e-12) continue;
    for (std::size_t g = 0; g < tau_grid.size(); ++g) {
      Complex sum(0.0, 0.0);
      for (int i = lo; i < hi; ++i) {
        const double phase = kTwoPi * unfolded[static_cast<std::size_t>(i)] * tau_grid[g];
        sum += taper[static_cast<std::size_t>(i - lo)] * Complex(std::cos(phase), std::sin(phase));
      }
      est.value[g] += std::norm(sum) / norm;
    }
  }
  for (double& v : est.value) v /= window_count;
  return est;
}

/// Least-squares slope through the origin of value(tau) over a tau window.
inline double fit_slope_through_origin(const std::vector<double>& tau,
                                       const std::vector<double>& value,
                                       double tau_min, double tau_max) {
  if (tau.size() != value.size()) throw std::invalid_argument("fit_slope: size mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < tau.size(); ++i) {
    if (tau[i] < tau_min - 1e-12 || tau[i] > tau_max + 1e-12) continue;
    num += tau[i] * value[i];
    den += tau[i] * tau[i];
  }
  if (den <= 0.0) throw std::invalid_argument("fit_slope: no grid points in window");
  return num / den;
}

}  // namespace spingraph
