#include <bernstein/special_functions.hpp>

#include <boost/math/special_functions/bessel.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace bernstein;
using big = boost::multiprecision::cpp_bin_float_50;

namespace {

// Power series of J_nu (nu = 0, 1) summed in 50 digits.
double series_oracle(int nu, double xd) {
  const big x = xd;
  const big half = x / 2;
  const big q = -half * half;
  big term = nu == 0 ? big(1) : half;
  big sum = term;
  for (int k = 1; k < 400; ++k) {
    term *= q / (big(k) * big(k + nu));
    sum += term;
    if (abs(term) < big("1e-45")) break;
  }
  return static_cast<double>(sum);
}

double bisect(double (*f)(double), double lo, double hi) {
  double flo = f(lo);
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm < 0) == (flo < 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST(Bessel, MatchesHighPrecisionSeries) {
  double worst0 = 0.0;
  double worst1 = 0.0;
  for (double x = 0.0; x <= 50.0; x += 0.0625) {
    worst0 = std::max(worst0, std::abs(bessel_j0(x) - series_oracle(0, x)));
    worst1 = std::max(worst1, std::abs(bessel_j1(x) - series_oracle(1, x)));
  }
  EXPECT_LT(worst0, 1e-13);
  EXPECT_LT(worst1, 1e-13);
}

TEST(Bessel, MatchesBoostOverFullRange) {
  double worst = 0.0;
  for (double x = 0.0; x <= 500.0; x += 0.173) {
    worst = std::max(worst, std::abs(bessel_j0(x) - boost::math::cyl_bessel_j(0, x)));
    worst = std::max(worst, std::abs(bessel_j1(x) - boost::math::cyl_bessel_j(1, x)));
  }
  EXPECT_LT(worst, 1e-13);
}

TEST(Bessel, SpecialValues) {
  EXPECT_EQ(bessel_j0(0.0), 1.0);
  EXPECT_EQ(bessel_j1(0.0), 0.0);
  const double zero = bisect([](double x) { return series_oracle(0, x); }, 2.0, 3.0);
  EXPECT_NEAR(zero, 2.404825557695773, 1e-14);
  EXPECT_NEAR(bessel_j0(2.404825557695773), 0.0, 1e-12);
  EXPECT_NEAR(bessel_j1(1e-4) / 1e-4, 0.5, 1e-8);
}

TEST(Bessel, Bounded) {
  for (double x = 0.0; x <= 500.0; x += 0.37) {
    EXPECT_LE(std::abs(bessel_j0(x)), 1.0);
    EXPECT_LE(std::abs(bessel_j1(x)), 1.0);
  }
}

TEST(Bessel, DerivativeOfJ0IsMinusJ1) {
  const double h = 1e-6;
  EXPECT_NEAR((bessel_j0(1.3 + h) - bessel_j0(1.3 - h)) / (2 * h), -bessel_j1(1.3), 1e-8);
}

TEST(Bessel, RecurrenceForJ1Derivative) {
  // J1' = J0 - J1/x, derivative by a five-point stencil
  const double h = 1e-3;
  for (int i = 1; i <= 20; ++i) {
    const double x = 0.7 * i + 0.05;
    const double d = (-bessel_j1(x + 2 * h) + 8 * bessel_j1(x + h) - 8 * bessel_j1(x - h) + bessel_j1(x - 2 * h)) / (12 * h);
    EXPECT_NEAR(d, bessel_j0(x) - bessel_j1(x) / x, 1e-10) << "x=" << x;
  }
}

TEST(Bessel, OutOfRangeIsDomainError) {
  for (double x : {-1e-9, 500.5, std::nan("")}) {
    try {
      bessel_j0(x);
      FAIL() << "no error for x=" << x;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::domain);
    }
    EXPECT_THROW(bessel_j1(x), Error);
  }
}

TEST(NeumannRoots, FirstValuesAndResiduals) {
  const NeumannRoots roots = neumann_eigenvalues(64);
  ASSERT_EQ(roots.size(), 64u);
  EXPECT_EQ(roots.values[0], 0.0);
  const double oracle = bisect([](double x) { return boost::math::cyl_bessel_j(1, x); }, 3.0, 4.5);
  EXPECT_NEAR(roots.sqrt_value(1), oracle, 1e-10);
  EXPECT_NEAR(roots.sqrt_value(1), 3.8317059702075123, 1e-10);
  for (std::size_t n = 1; n < roots.size(); ++n) {
    EXPECT_GT(roots.values[n], roots.values[n - 1]);
    EXPECT_LT(roots.residuals[n], 1e-12);
    EXPECT_LT(std::abs(bessel_j1(roots.sqrt_value(n))), 1e-12);
  }
  for (std::size_t n = 10; n < roots.size(); ++n) {
    EXPECT_NEAR(roots.sqrt_value(n) - roots.sqrt_value(n - 1), std::numbers::pi, 0.02);
  }
}

TEST(NeumannRoots, InterlaceWithZerosOfJ0) {
  const NeumannRoots roots = neumann_eigenvalues(40);
  for (std::size_t n = 1; n + 1 < roots.size(); ++n) {
    const double a = roots.sqrt_value(n);
    const double b = roots.sqrt_value(n + 1);
    int changes = 0;
    const int samples = 2000;
    double prev = bessel_j0(a);
    for (int i = 1; i <= samples; ++i) {
      const double cur = bessel_j0(a + (b - a) * i / samples);
      if ((cur < 0) != (prev < 0)) ++changes;
      prev = cur;
    }
    EXPECT_EQ(changes, 1) << "between roots " << n << " and " << n + 1;
  }
}

TEST(NeumannRoots, CountLimits) {
  EXPECT_EQ(neumann_eigenvalues(1).size(), 1u);
  EXPECT_EQ(neumann_eigenvalues(kMaxNeumannRoots).size(), kMaxNeumannRoots);
  EXPECT_THROW(neumann_eigenvalues(0), Error);
  EXPECT_THROW(neumann_eigenvalues(kMaxNeumannRoots + 1), Error);
  EXPECT_EQ(&disk_spectrum(), &disk_spectrum());
}
