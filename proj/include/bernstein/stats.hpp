#pragma once

// Monte Carlo summaries and the classical goodness-of-fit tests used by the
// verification harness.

#include <bernstein/error.hpp>

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

namespace bernstein {

/// Welford accumulator.
class RunningStats {
 public:
  void add(double x) {
    ++count_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta * (x - mean_);
  }

  std::size_t count() const { return count_; }
  double mean() const { return mean_; }
  double variance() const { return count_ > 1 ? m2_ / static_cast<double>(count_ - 1) : 0.0; }
  double std_error() const { return count_ > 0 ? std::sqrt(variance() / static_cast<double>(count_)) : 0.0; }

 private:
  std::size_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

struct TestOutcome {
  double statistic = 0.0;
  double critical = 0.0;
  int dof = 0;
  bool passed() const { return statistic <= critical; }
};

inline double chi_square_critical(int dof, double alpha) {
  boost::math::chi_squared dist(dof);
  return boost::math::quantile(boost::math::complement(dist, alpha));
}

/// Pearson test of observed counts against cell probabilities.
inline TestOutcome chi_square_test(const std::vector<double>& counts, const std::vector<double>& probabilities,
                                   double alpha = 0.01) {
  require(counts.size() == probabilities.size() && counts.size() >= 2, ErrorCode::precondition,
          "chi-square test needs matching bins");
  double n = 0.0;
  for (double c : counts) n += c;
  double statistic = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double expected = n * probabilities[i];
    require(expected > 0.0, ErrorCode::precondition, "chi-square cell with zero expected count");
    const double diff = counts[i] - expected;
    statistic += diff * diff / expected;
  }
  const int dof = static_cast<int>(counts.size()) - 1;
  return {statistic, chi_square_critical(dof, alpha), dof};
}

/// Test of independently estimated cell means against targets,
/// statistic sum (mean - target)^2 / se^2 with one degree of freedom per cell.
inline TestOutcome weighted_chi_square_test(const std::vector<double>& means, const std::vector<double>& std_errors,
                                            const std::vector<double>& targets, double alpha = 0.01) {
  require(means.size() == std_errors.size() && means.size() == targets.size(), ErrorCode::precondition,
          "weighted chi-square needs matching bins");
  double statistic = 0.0;
  for (std::size_t i = 0; i < means.size(); ++i) {
    require(std_errors[i] > 0.0, ErrorCode::precondition, "weighted chi-square cell with zero standard error");
    const double z = (means[i] - targets[i]) / std_errors[i];
    statistic += z * z;
  }
  const int dof = static_cast<int>(means.size());
  return {statistic, chi_square_critical(dof, alpha), dof};
}

/// Kolmogorov-Smirnov distance of a sample from a continuous CDF.
inline double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf) {
  require(!sample.empty(), ErrorCode::precondition, "KS statistic of an empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

/// Critical KS distance at level alpha, from the Kolmogorov limit law with
/// Stephens' finite-sample scaling sqrt(n) + 0.12 + 0.11/sqrt(n).
inline double ks_critical(std::size_t n, double alpha = 0.01) {
  auto survival = [](double lambda) {
    double sum = 0.0;
    for (int k = 1; k < 100; ++k) {
      const double term = std::exp(-2.0 * k * k * lambda * lambda);
      sum += (k % 2 == 1 ? 2.0 : -2.0) * term;
      if (term < 1e-18) break;
    }
    return sum;
  };
  double lo = 0.2;
  double hi = 5.0;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (survival(mid) > alpha) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double root_n = std::sqrt(static_cast<double>(n));
  return 0.5 * (lo + hi) / (root_n + 0.12 + 0.11 / root_n);
}

/// Index of the bin of x among equal-width bins on [lo, hi]; the top edge
/// belongs to the last bin.
inline std::size_t bin_index(double x, double lo, double hi, std::size_t bins) {
  const double f = (x - lo) / (hi - lo) * static_cast<double>(bins);
  if (f <= 0.0) return 0;
  const auto i = static_cast<std::size_t>(f);
  return std::min(i, bins - 1);
}

}  // namespace bernstein
