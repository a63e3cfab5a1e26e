#pragma once

// Bessel functions of the first kind, orders 0 and 1, on [0, 500], and the
// radial Neumann spectrum of the unit disk (squared roots of J1).

#include <bernstein/error.hpp>

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

namespace bernstein {

inline constexpr double kBesselMaxArgument = 500.0;
inline constexpr std::size_t kMaxNeumannRoots = 128;

namespace detail {

inline constexpr double kSeriesLimit = 8.0;
inline constexpr double kAsymptoticLimit = 25.0;

// Ascending series, used below kSeriesLimit. The largest term at x = 8 is
// about 1e2, so a few ulps of cancellation is the whole error budget.
inline double j0_series(double x) {
  const double q = 0.25 * x * x;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 25; ++k) {
    term *= -q / (static_cast<double>(k) * k);
    sum += term;
  }
  return sum;
}

inline double j1_series(double x) {
  const double q = 0.25 * x * x;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 25; ++k) {
    term *= -q / (static_cast<double>(k) * (k + 1));
    sum += term;
  }
  return 0.5 * x * sum;
}

// Miller's backward recurrence normalized by J0 + 2 sum J_2k = 1. Used on
// the middle band where neither the series nor the Hankel expansion reaches
// full double precision.
inline std::pair<double, double> j01_miller(double x) {
  const int top = 2 * static_cast<int>(std::ceil((x + 40.0) / 2.0));
  double above = 0.0;   // J_{k+1}
  double current = 1e-30;  // J_k
  double norm = 0.0;
  double j0 = 0.0;
  double j1 = 0.0;
  for (int k = top; k >= 1; --k) {
    const double below = (2.0 * k / x) * current - above;  // J_{k-1}
    above = current;
    current = below;
    if ((k - 1) % 2 == 0 && k - 1 > 0) norm += 2.0 * current;
    if (k - 1 == 1) j1 = current;
    if (std::abs(current) > 1e250) {
      current *= 1e-250;
      above *= 1e-250;
      norm *= 1e-250;
      j1 *= 1e-250;
    }
  }
  j0 = current;
  norm += j0;
  return {j0 / norm, j1 / norm};
}

// Hankel's asymptotic amplitude/phase form for order nu in {0, 1}.
inline double hankel_asymptotic(int nu, double x) {
  const double mu = 4.0 * nu * nu;
  double p = 0.0;
  double q = 0.0;
  double term = 1.0;
  double previous = 2.0;
  for (int k = 0; k < 60; ++k) {
    if (k > 0) term *= (mu - (2.0 * k - 1.0) * (2.0 * k - 1.0)) / (k * 8.0 * x);
    if (std::abs(term) > previous) break;  // past the smallest term
    previous = std::abs(term);
    const double signed_term = ((k / 2) % 2 == 0) ? term : -term;
    if (k % 2 == 0) {
      p += signed_term;
    } else {
      q += signed_term;
    }
    if (std::abs(term) < 1e-18) break;
  }
  const double c = std::cos(x);
  const double s = std::sin(x);
  const double r = std::numbers::sqrt2 / 2.0;
  // chi = x - pi/4 - nu*pi/2
  const double cos_chi = nu == 0 ? r * (c + s) : r * (s - c);
  const double sin_chi = nu == 0 ? r * (s - c) : -r * (c + s);
  return std::sqrt(2.0 / (std::numbers::pi * x)) * (p * cos_chi - q * sin_chi);
}

inline void check_bessel_argument(double x) {
  if (!(x >= 0.0 && x <= kBesselMaxArgument)) {
    fail(ErrorCode::domain, "Bessel argument " + std::to_string(x) + " outside [0, " +
                                std::to_string(kBesselMaxArgument) + "]");
  }
}

}  // namespace detail

/// J0(x) for 0 <= x <= 500, absolute error below 1e-13.
inline double bessel_j0(double x) {
  detail::check_bessel_argument(x);
  if (x < detail::kSeriesLimit) return detail::j0_series(x);
  if (x < detail::kAsymptoticLimit) return detail::j01_miller(x).first;
  return detail::hankel_asymptotic(0, x);
}

/// J1(x) = -J0'(x) for 0 <= x <= 500.
inline double bessel_j1(double x) {
  detail::check_bessel_argument(x);
  if (x < detail::kSeriesLimit) return detail::j1_series(x);
  if (x < detail::kAsymptoticLimit) return detail::j01_miller(x).second;
  return detail::hankel_asymptotic(1, x);
}

/// Radial Neumann eigenvalues of the unit disk: mu_1 = 0 and mu_n = j_{1,n-1}^2.
struct NeumannRoots {
  std::vector<double> values;     ///< mu_{n,0}, increasing, first entry 0
  std::vector<double> residuals;  ///< |J1(sqrt(mu_{n,0}))|

  std::size_t size() const { return values.size(); }
  double sqrt_value(std::size_t i) const { return std::sqrt(values[i]); }
};

namespace detail {

inline double refine_j1_root(double lo, double hi) {
  double f_lo = bessel_j1(lo);
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double f_mid = bessel_j1(mid);
    if (f_mid == 0.0) return mid;
    if ((f_mid < 0.0) == (f_lo < 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }
  double root = 0.5 * (lo + hi);
  // Newton polish with J1' = J0 - J1/x; keep only improving iterates.
  for (int it = 0; it < 3; ++it) {
    const double f = bessel_j1(root);
    const double df = bessel_j0(root) - f / root;
    const double candidate = root - f / df;
    if (!(std::abs(bessel_j1(candidate)) < std::abs(f))) break;
    root = candidate;
  }
  return root;
}

}  // namespace detail

/// First `count` radial Neumann eigenvalues of the unit disk. Brackets sign
/// changes of J1 on a 0.5 scan grid, then bisects and polishes.
inline NeumannRoots neumann_eigenvalues(std::size_t count) {
  require(count >= 1 && count <= kMaxNeumannRoots, ErrorCode::domain,
          "neumann_eigenvalues count must lie in [1, " + std::to_string(kMaxNeumannRoots) + "]");
  NeumannRoots roots;
  roots.values.reserve(count);
  roots.residuals.reserve(count);
  roots.values.push_back(0.0);
  roots.residuals.push_back(0.0);

  constexpr double step = 0.5;
  double a = step;
  double fa = bessel_j1(a);
  while (roots.values.size() < count) {
    const double b = a + step;
    if (b > kBesselMaxArgument) {
      fail(ErrorCode::root_isolation, "ran out of Bessel range while bracketing J1 roots");
    }
    const double fb = bessel_j1(b);
    if ((fa < 0.0) != (fb < 0.0)) {
      const double root = detail::refine_j1_root(a, b);
      const double residual = std::abs(bessel_j1(root));
      if (!(residual < 1e-12)) {
        fail(ErrorCode::root_isolation,
             "J1 root near " + std::to_string(root) + " has residual " + std::to_string(residual));
      }
      roots.values.push_back(root * root);
      roots.residuals.push_back(residual);
    }
    a = b;
    fa = fb;
  }
  return roots;
}

/// Process-wide table of the first kMaxNeumannRoots eigenvalues.
inline const NeumannRoots& disk_spectrum() {
  static const NeumannRoots roots = neumann_eigenvalues(kMaxNeumannRoots);
  return roots;
}

}  // namespace bernstein
