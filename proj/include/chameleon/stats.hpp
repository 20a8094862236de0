#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace chameleon::stats {

double mean(std::span<const double> values);

/// Sample standard deviation (divisor n-1). Needs at least two values.
double sample_stddev(std::span<const double> values);

/// Regularized incomplete beta function I_x(a, b) for a, b > 0, x in [0, 1].
/// Evaluated with the Lentz continued-fraction expansion, switching tails at
/// the usual (a+1)/(a+b+2) split so the fraction always converges fast.
double incomplete_beta(double a, double b, double x);

/// CDF of Student's t distribution with `df` degrees of freedom.
double student_t_cdf(double t, double df);

/// Two-sided p-value for a t statistic: P(|T| >= |t|).
double two_sided_p(double t, double df);

struct TestResult {
  double statistic = 0.0;
  double df = 0.0;
  double p_value = 1.0;
  bool two_sided = true;
  double mean_difference = 0.0;  // first sample minus second
  std::size_t n = 0;             // pairs for paired test, n1 + n2 otherwise
};

/// Paired Student's t test on per-element differences x[i] - y[i].
/// Throws LengthMismatch, TooFewValues (< 2 pairs) and DegenerateVariance
/// when every difference is identical.
TestResult paired_t_test(std::span<const double> x, std::span<const double> y);

/// Welch's unequal-variance t test; df from the Welch-Satterthwaite formula.
/// Throws TooFewValues (< 2 per side) and DegenerateVariance when both
/// sample variances vanish.
TestResult independent_t_test(std::span<const double> x, std::span<const double> y);

struct BootstrapEstimate {
  double point = 0.0;  // mean of the original sample
  double se = 0.0;     // stddev of resample means (divisor B-1)
  std::size_t n_resamples = 0;
  std::uint64_t seed = 0;
};

/// Bootstrap standard error of the mean: draws `n_resamples` resamples with
/// replacement. Each resample uses its own child generator derived from
/// (seed, resample index), so results do not depend on evaluation order or
/// thread count.
BootstrapEstimate bootstrap_se(std::span<const double> values, std::size_t n_resamples,
                               std::uint64_t seed, int threads = 1);

}  // namespace chameleon::stats
