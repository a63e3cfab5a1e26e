#include <bernstein/quadrature.hpp>
#include <bernstein/spectral.hpp>

#include <boost/math/special_functions/bessel.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <numbers>

using namespace bernstein;

namespace {

constexpr double pi = std::numbers::pi;

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::precondition;
}

double sqrt_mu2() { return ModeBasis::of(Geometry::disk_radial).frequency(1); }

double dmu_mass(Geometry g, const std::function<double(double)>& f) {
  return gauss_legendre_rule(0.0, 1.0).integrate([&](double y) { return f(y) * measure_weight(g, y); });
}

}  // namespace

TEST(Modes, Eigenvalues) {
  const ModeBasis& line = ModeBasis::of(Geometry::interval);
  EXPECT_EQ(line.eigenvalue(0), 0.0);
  for (std::size_t n = 1; n < 64; ++n) {
    EXPECT_DOUBLE_EQ(line.eigenvalue(n), pi * pi * n * n / 2);
    EXPECT_GT(line.eigenvalue(n), line.eigenvalue(n - 1));
  }
  const ModeBasis& disk = ModeBasis::of(Geometry::disk_radial);
  EXPECT_EQ(disk.eigenvalue(0), 0.0);
  EXPECT_NEAR(disk.eigenvalue(1), 3.8317059702075123 * 3.8317059702075123 / 2, 1e-12);
  for (std::size_t n = 1; n < disk.capacity(); ++n) EXPECT_GT(disk.eigenvalue(n), disk.eigenvalue(n - 1));
}

TEST(Modes, NormalizersAreSquaredNorms) {
  for (Geometry g : {Geometry::interval, Geometry::disk_radial}) {
    const ModeBasis& basis = ModeBasis::of(g);
    for (std::size_t n : {0u, 1u, 2u, 7u, 30u}) {
      const double norm = dmu_mass(g, [&](double x) { return basis.value(n, x) * basis.value(n, x); });
      EXPECT_NEAR(norm, basis.normalizer(n), 1e-12) << to_string(g) << " n=" << n;
    }
  }
}

TEST(Projection, ExampleOneDatum) {
  const auto e = project_datum([](double x) { return 1 + 0.5 * std::cos(pi * x); }, Geometry::interval, 64);
  ASSERT_EQ(e.modes(), 64u);
  EXPECT_NEAR(e.coefficients()[0], 1.0, 1e-13);
  EXPECT_NEAR(e.coefficients()[1], 0.5, 1e-13);
  for (std::size_t n = 2; n < 64; ++n) EXPECT_NEAR(e.coefficients()[n], 0.0, 1e-13);
}

TEST(Projection, ConstantDatum) {
  const auto e = project_datum([](double) { return 1.0; }, Geometry::interval, 16);
  EXPECT_NEAR(e.coefficients()[0], 1.0, 1e-13);
  for (std::size_t n = 1; n < 16; ++n) EXPECT_NEAR(e.coefficients()[n], 0.0, 1e-14);
  EXPECT_TRUE(e.is_constant());
}

TEST(Projection, ExampleTwoDatum) {
  const double k = sqrt_mu2();
  const auto e = project_datum([k](double r) { return (1 + boost::math::cyl_bessel_j(0, k * r)) / pi; },
                               Geometry::disk_radial, 64);
  EXPECT_NEAR(e.coefficients()[0], 1 / pi, 1e-12);
  EXPECT_NEAR(e.coefficients()[1], 1 / pi, 1e-12);
  for (std::size_t n = 2; n < 64; ++n) EXPECT_LT(std::abs(e.coefficients()[n]), 1e-10) << "n=" << n;
}

TEST(Projection, RejectsNonFiniteDatum) {
  EXPECT_EQ(code_of([] { project_datum([](double x) { return x > 0.5 ? NAN : 1.0; }, Geometry::interval, 8); }),
            ErrorCode::invalid_datum);
}

TEST(Expansion, Evaluation) {
  const SpectralExpansion phi(Geometry::interval, Direction::forward, {1.0, 0.5});
  EXPECT_DOUBLE_EQ(evaluate_expansion(phi, 0.0, 0.0, 1.0), 1.5);
  for (double x : {0.0, 0.3, 1.0}) {
    for (double t : {0.0, 0.4, 1.0}) {
      EXPECT_NEAR(evaluate_expansion(phi, x, t, 1.0), 1 + 0.5 * std::cos(pi * x) * std::exp(-pi * pi * t / 2), 1e-14);
    }
  }
  const SpectralExpansion one(Geometry::disk_radial, Direction::backward, {1.0});
  EXPECT_EQ(evaluate_expansion(one, 0.7, 0.2, 1.0), 1.0);

  const SpectralExpansion phi2(Geometry::disk_radial, Direction::forward, {1 / pi, 1 / pi});
  EXPECT_NEAR(evaluate_expansion(phi2, 1.0, 0.0, 1.0), (1 + boost::math::cyl_bessel_j(0, sqrt_mu2())) / pi, 1e-14);
}

TEST(Expansion, BackwardRunsFromHorizon) {
  const SpectralExpansion psi(Geometry::interval, Direction::backward, {1.0, 0.25});
  EXPECT_NEAR(evaluate_expansion(psi, 0.0, 2.0, 2.0), 1.25, 1e-15);
  EXPECT_NEAR(evaluate_expansion(psi, 0.0, 1.5, 2.0), 1 + 0.25 * std::exp(-pi * pi * 0.25), 1e-15);
}

TEST(Expansion, Errors) {
  const SpectralExpansion phi(Geometry::interval, Direction::forward, {1.0, 0.5});
  EXPECT_EQ(code_of([&] { evaluate_expansion(phi, 0.5, 1.5, 1.0); }), ErrorCode::domain);
  EXPECT_EQ(code_of([&] { evaluate_expansion(phi, 0.5, -0.1, 1.0); }), ErrorCode::domain);
  EXPECT_EQ(code_of([] { SpectralExpansion(Geometry::interval, Direction::forward, {1.0, 2.0}); }), ErrorCode::positivity);
  EXPECT_EQ(code_of([] { SpectralExpansion(Geometry::interval, Direction::forward, {1.0, INFINITY}); }),
            ErrorCode::invalid_datum);
  EXPECT_EQ(code_of([] { SpectralExpansion(Geometry::interval, Direction::forward, {}); }), ErrorCode::invalid_datum);
}

TEST(Expansion, SlopeMatchesFiniteDifference) {
  const SpectralExpansion e(Geometry::disk_radial, Direction::forward, {1.0, 0.3, -0.1});
  const double h = 1e-6;
  for (double x : {0.2, 0.5, 0.8}) {
    EXPECT_NEAR(e.slope(x, 0.05), (e.value(x + h, 0.05) - e.value(x - h, 0.05)) / (2 * h), 1e-8);
  }
}

TEST(Green, KnownPartialSum) {
  double oracle = 1.0;
  for (int n = 1; n < 50; ++n) oracle += 2 * std::exp(-pi * pi * n * n / 2);
  EXPECT_NEAR(green_spectral(0.0, 1.0, 0.0, 0.0, Geometry::interval), oracle, 1e-12);
  EXPECT_NEAR(oracle, 1.0143838, 1e-7);
}

TEST(Green, MassConservation) {
  for (Geometry g : {Geometry::interval, Geometry::disk_radial}) {
    for (double gap : {0.01, 0.05, 0.3, 1.0, 3.0}) {
      for (double x : {0.0, 0.2, 0.5, 0.9, 1.0}) {
        const double m = dmu_mass(g, [&](double y) { return green(x, 1.0 + gap, y, 1.0, g); });
        EXPECT_NEAR(m, 1.0, 1e-8) << to_string(g) << " gap=" << gap << " x=" << x;
      }
    }
  }
  for (double gap : {1e-3, 3e-3}) {
    const double m = dmu_mass(Geometry::interval, [&](double y) { return green(0.4, gap, y, 0.0, Geometry::interval); });
    EXPECT_NEAR(m, 1.0, 1e-8);
  }
}

TEST(Green, Symmetry) {
  for (Geometry g : {Geometry::interval, Geometry::disk_radial}) {
    for (double gap : {0.01, 0.2}) {
      for (int i = 0; i <= 20; ++i) {
        for (int j = 0; j <= 20; ++j) {
          const double x = i / 20.0;
          const double y = j / 20.0;
          EXPECT_NEAR(green(x, gap, y, 0.0, g), green(y, gap, x, 0.0, g), 1e-10);
        }
      }
    }
  }
}

TEST(Green, SpectralMatchesImages) {
  for (double gap : {0.02, 0.1, 0.5}) {
    for (int i = 0; i <= 20; ++i) {
      for (int j = 0; j <= 20; ++j) {
        const double x = i / 20.0;
        const double y = j / 20.0;
        const double tol = gap == 0.1 ? 1e-10 : 1e-8;
        EXPECT_NEAR(green_spectral(x, gap, y, 0.0, Geometry::interval), green_images(x, gap, y, 0.0, 8), tol);
      }
    }
  }
}

TEST(Green, ImageFormProperties) {
  for (double x : {0.0, 0.3, 1.0}) {
    const double m = dmu_mass(Geometry::interval, [&](double y) { return green_images(x, 0.1, y, 0.0, 8); });
    EXPECT_NEAR(m, 1.0, 1e-10);
  }
  const double tau = 1e-4;
  EXPECT_NEAR(green_images(0.5, tau, 0.5, 0.0, 8) * std::sqrt(2 * pi * tau), 1.0, 1e-12);
  EXPECT_EQ(code_of([] { green_images(0.5, 0.1, 0.5, 0.0, 8, Geometry::disk_radial); }),
            ErrorCode::unsupported_geometry);
}

TEST(Green, HandoffAtMinGap) {
  const TruncationPolicy p;
  for (double x : {0.0, 0.25, 0.5}) {
    for (double y : {0.0, 0.6, 1.0}) {
      EXPECT_NEAR(green_spectral(x, p.min_gap, y, 0.0, Geometry::interval, p),
                  green_images(x, p.min_gap, y, 0.0, p.image_count), p.tail_tol);
    }
  }
}

TEST(Green, Composition) {
  const QuadratureRule rule = simpson_rule(0.0, 1.0, 201);
  for (Geometry g : {Geometry::interval, Geometry::disk_radial}) {
    for (double x : {0.0, 0.3, 0.8}) {
      for (double y : {0.1, 0.5, 1.0}) {
        const double lhs = rule.integrate(
            [&](double z) { return green(x, 0.5, z, 0.2, g) * green(z, 0.2, y, 0.0, g) * measure_weight(g, z); });
        EXPECT_NEAR(lhs, green(x, 0.5, y, 0.0, g), 1e-6);
      }
    }
  }
}

TEST(Green, RawValuesAreNearlyNonNegative) {
  for (Geometry g : {Geometry::interval, Geometry::disk_radial}) {
    for (double gap : {0.01, 0.02, 0.1}) {
      for (int i = 0; i <= 20; ++i) {
        for (int j = 0; j <= 20; ++j) {
          const GreenValue v = green_spectral_detail(i / 20.0, gap, j / 20.0, 0.0, g, {});
          EXPECT_GE(v.raw, -1e-12);
          EXPECT_GE(v.value, 0.0);
        }
      }
    }
  }
}

TEST(Green, Errors) {
  EXPECT_EQ(code_of([] { green_spectral(0.5, 0.1, 0.5, 0.1, Geometry::interval); }), ErrorCode::ordering);
  EXPECT_EQ(code_of([] { green_spectral(0.5, 0.005, 0.5, 0.0, Geometry::interval); }), ErrorCode::policy);
  EXPECT_EQ(code_of([] { green(0.5, 0.005, 0.5, 0.0, Geometry::disk_radial); }), ErrorCode::policy);
  EXPECT_EQ(code_of([] { green(1.5, 0.5, 0.5, 0.0, Geometry::interval); }), ErrorCode::domain);
  EXPECT_GT(green(0.5, 0.005, 0.5, 0.0, Geometry::interval), 0.0);  // image form below min_gap
}

TEST(Policy, TailBoundValidation) {
  EXPECT_NO_THROW(validate_policy({}, Geometry::interval));
  EXPECT_NO_THROW(validate_policy({}, Geometry::disk_radial));
  EXPECT_LE(spectral_tail_bound(Geometry::interval, 64, 0.01), 1e-10);
  EXPECT_EQ(code_of([] { validate_policy({4, 0.01, 1e-10, 8}, Geometry::interval); }), ErrorCode::policy);
  EXPECT_EQ(code_of([] { validate_policy({200, 0.01, 1e-10, 8}, Geometry::disk_radial); }), ErrorCode::policy);
  EXPECT_NO_THROW(validate_policy({128, 1e-3, 1e-10, 8}, Geometry::disk_radial));
}

TEST(Green, DiskSymmetryOnGrid) {
  for (double r : {0.0, 0.35, 1.0}) {
    for (double q : {0.1, 0.6, 0.95}) {
      EXPECT_NEAR(green(r, 0.3, q, 0.0, Geometry::disk_radial), green(q, 0.3, r, 0.0, Geometry::disk_radial), 1e-12);
    }
  }
}
