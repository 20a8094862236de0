#include "chameleon/stats.hpp"

#include <cmath>
#include <limits>

#include "chameleon/error.hpp"
#include "chameleon/parallel.hpp"
#include "chameleon/rng.hpp"

namespace chameleon::stats {

double mean(std::span<const double> values) {
  if (values.empty()) fail(ErrorCode::TooFewValues, "mean of empty sample");
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

double sample_stddev(std::span<const double> values) {
  if (values.size() < 2) fail(ErrorCode::TooFewValues, "stddev needs at least two values");
  double m = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

namespace {

/// Continued fraction for the incomplete beta function (modified Lentz).
double beta_cf(double a, double b, double x) {
  constexpr int kMaxIterations = 300;
  constexpr double kEps = std::numeric_limits<double>::epsilon();
  constexpr double kTiny = 1e-300;

  double qab = a + b;
  double qap = a + 1.0;
  double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) fail(ErrorCode::InvalidConfig, "incomplete_beta needs a, b > 0");
  if (std::isnan(x) || x < 0.0 || x > 1.0) {
    fail(ErrorCode::InvalidConfig, "incomplete_beta needs x in [0, 1]");
  }
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;

  double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                     a * std::log(x) + b * std::log1p(-x);
  double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_cf(a, b, x) / a;
  }
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double df) {
  if (!(df > 0.0)) fail(ErrorCode::InvalidConfig, "student_t_cdf needs df > 0");
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  if (t == 0.0) return 0.5;
  double x = df / (df + t * t);
  double tail = 0.5 * incomplete_beta(0.5 * df, 0.5, x);
  return t > 0.0 ? 1.0 - tail : tail;
}

double two_sided_p(double t, double df) {
  if (!(df > 0.0)) fail(ErrorCode::InvalidConfig, "two_sided_p needs df > 0");
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  double x = df / (df + t * t);
  return incomplete_beta(0.5 * df, 0.5, x);
}

TestResult paired_t_test(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    fail(ErrorCode::LengthMismatch, "paired test samples differ in length (" +
                                        std::to_string(x.size()) + " vs " +
                                        std::to_string(y.size()) + ")");
  }
  if (x.size() < 2) fail(ErrorCode::TooFewValues, "paired test needs at least two pairs");

  std::vector<double> diff(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) diff[i] = x[i] - y[i];
  double d_mean = mean(diff);
  double d_sd = sample_stddev(diff);
  if (d_sd == 0.0) {
    fail(ErrorCode::DegenerateVariance, "all paired differences are identical");
  }

  double n = static_cast<double>(x.size());
  TestResult result;
  result.statistic = d_mean / (d_sd / std::sqrt(n));
  result.df = n - 1.0;
  result.p_value = two_sided_p(result.statistic, result.df);
  result.mean_difference = d_mean;
  result.n = x.size();
  return result;
}

TestResult independent_t_test(std::span<const double> x, std::span<const double> y) {
  if (x.size() < 2 || y.size() < 2) {
    fail(ErrorCode::TooFewValues, "independent test needs at least two values per sample");
  }
  double mx = mean(x);
  double my = mean(y);
  double sx = sample_stddev(x);
  double sy = sample_stddev(y);
  double nx = static_cast<double>(x.size());
  double ny = static_cast<double>(y.size());
  double vx = sx * sx / nx;
  double vy = sy * sy / ny;
  if (vx + vy == 0.0) {
    fail(ErrorCode::DegenerateVariance, "both samples have zero variance");
  }

  TestResult result;
  result.statistic = (mx - my) / std::sqrt(vx + vy);
  result.df = (vx + vy) * (vx + vy) /
              (vx * vx / (nx - 1.0) + vy * vy / (ny - 1.0));
  result.p_value = two_sided_p(result.statistic, result.df);
  result.mean_difference = mx - my;
  result.n = x.size() + y.size();
  return result;
}

BootstrapEstimate bootstrap_se(std::span<const double> values, std::size_t n_resamples,
                               std::uint64_t seed, int threads) {
  if (values.size() < 2) fail(ErrorCode::TooFewValues, "bootstrap needs at least two values");
  if (n_resamples < 2) fail(ErrorCode::InvalidConfig, "bootstrap needs at least two resamples");

  std::vector<double> resample_means(n_resamples);
  parallel_for(n_resamples, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      rng::Stream stream(rng::derive(seed, r));
      double sum = 0.0;
      for (std::size_t k = 0; k < values.size(); ++k) {
        sum += values[stream.below(values.size())];
      }
      resample_means[r] = sum / static_cast<double>(values.size());
    }
  });

  BootstrapEstimate estimate;
  estimate.point = mean(values);
  estimate.se = sample_stddev(resample_means);
  estimate.n_resamples = n_resamples;
  estimate.seed = seed;
  return estimate;
}

}  // namespace chameleon::stats
