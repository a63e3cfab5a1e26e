#include <bernstein/quadrature.hpp>
#include <bernstein/rng.hpp>
#include <bernstein/sde.hpp>
#include <bernstein/stats.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

using namespace bernstein;

namespace {

constexpr double pi = std::numbers::pi;

BernsteinModel make(Geometry g, std::vector<double> a, std::vector<double> b, double horizon = 1.0) {
  return BernsteinModel(g, horizon, SpectralExpansion(g, Direction::forward, std::move(a)),
                        SpectralExpansion(g, Direction::backward, std::move(b)));
}

struct ConstantSource {
  double n = 0.0;
  double u = 0.25;
  double normal() { return n; }
  double uniform() { return u; }
};

double dmu(Geometry g, const std::function<double(double)>& f, double a = 0.0, double b = 1.0, std::size_t panels = 32) {
  return gauss_legendre_rule(a, b, panels).integrate([&](double y) { return f(y) * measure_weight(g, y); });
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::precondition;
}

// Sample mean of f(Z_h) over Euler paths from z0 that stop after `window` of the horizon.
RunningStats euler_moment(const BernsteinModel& m, Direction dir, double z, std::size_t steps, std::size_t taken,
                          std::size_t paths, const std::function<double(double)>& f) {
  SimConfig c;
  c.steps = steps;
  c.paths = paths;
  c.seed = 11;
  const auto values = run_paths(
      m, c, dir, [z](std::size_t, Rng&) { return z; },
      [&](std::size_t, const Path& p) { return f(dir == Direction::forward ? p.states[taken] : p.states[steps - taken]); });
  RunningStats s;
  for (double v : values) s.add(v);
  return s;
}

}  // namespace

TEST(Reflection, IntervalFold) {
  std::size_t count = 0;
  EXPECT_DOUBLE_EQ(reflect_interval(-0.2, count), 0.2);
  EXPECT_DOUBLE_EQ(reflect_interval(1.3, count), 0.7);
  EXPECT_EQ(count, 2u);
  count = 0;
  EXPECT_NEAR(reflect_interval(2.4, count), 0.4, 1e-15);
  EXPECT_EQ(count, 2u);
  EXPECT_EQ(reflect_interval(0.5, count), 0.5);
}

TEST(Reflection, DiskFold) {
  std::size_t count = 0;
  double x = 0.0;
  double y = 1.2;
  reflect_disk(x, y, count);
  EXPECT_NEAR(x, 0.0, 1e-15);
  EXPECT_NEAR(y, 0.8, 1e-15);
  x = 0.9;
  y = 0.9;
  reflect_disk(x, y, count);
  EXPECT_NEAR(std::hypot(x, y), 2.0 - std::sqrt(1.62), 1e-14);
  EXPECT_NEAR(x, y, 1e-15);
  EXPECT_EQ(count, 2u);
}

TEST(Euler, ZeroNoiseZeroDriftIsConstant) {
  ConstantSource src;
  for (Geometry g : {Geometry::interval, Geometry::disk_radial}) {
    const Path p = reflected_brownian_path(g, 0.37, 0.0, 1.0, 50, src);
    ASSERT_EQ(p.states.size(), 51u);
    for (double z : p.states) EXPECT_NEAR(z, 0.37, 1e-15);
    EXPECT_EQ(p.noise.size(), 50 * state_dim(g));
    EXPECT_EQ(p.reflections, 0u);
  }
  const auto m = make(Geometry::interval, {1.0, 0.5}, {1.0});
  SimConfig c;
  c.steps = 40;
  const Path f = simulate_forward(m, c, 0.2, src);
  for (double z : f.states) EXPECT_EQ(z, 0.2);
  EXPECT_DOUBLE_EQ(f.times.front(), 0.0);
  EXPECT_DOUBLE_EQ(f.times.back(), 1.0);
}

TEST(Euler, BackwardPathIsStoredInIncreasingTime) {
  ConstantSource src;
  const auto m = make(Geometry::interval, {1.0, 0.5}, {1.0});
  SimConfig c;
  c.steps = 100;
  const Path p = simulate_backward(m, c, 0.5, src);
  EXPECT_EQ(p.direction, Direction::backward);
  EXPECT_EQ(p.states.back(), 0.5);
  for (std::size_t i = 1; i < p.times.size(); ++i) EXPECT_GT(p.times[i], p.times[i - 1]);
  // phi is largest at 0, so without noise the state slides toward 0 as time runs back
  EXPECT_LT(p.states.front(), 0.5);
}

TEST(Euler, DiskPathsKeepPlanarRecord) {
  Rng rng(3, 0, stream::path);
  const Path p = reflected_brownian_path(Geometry::disk_radial, 0.9, 0.0, 1.0, 200, rng);
  ASSERT_EQ(p.planar.size(), 2 * 201u);
  for (std::size_t i = 0; i <= 200; ++i) {
    EXPECT_NEAR(std::hypot(p.planar[2 * i], p.planar[2 * i + 1]), p.states[i], 1e-14);
    EXPECT_LE(p.states[i], 1.0);
  }
}

TEST(Euler, NonFiniteNoiseIsBlowup) {
  ConstantSource nan_src{std::numeric_limits<double>::quiet_NaN(), 0.5};
  for (Geometry g : {Geometry::interval, Geometry::disk_radial}) {
    EXPECT_EQ(code_of([&] { reflected_brownian_path(g, 0.5, 0.0, 1.0, 10, nan_src); }), ErrorCode::numerical_blowup);
  }
  ConstantSource src;
  EXPECT_EQ(code_of([&] { reflected_brownian_path(Geometry::interval, 0.5, 0.3, 0.3, 10, src); }),
            ErrorCode::degenerate_horizon);
}

TEST(Euler, ConfigValidation) {
  const auto m = make(Geometry::interval, {1.0}, {1.0});
  ConstantSource src;
  SimConfig c;
  c.steps = 1;
  EXPECT_EQ(code_of([&] { simulate_forward(m, c, 0.5, src); }), ErrorCode::precondition);
  c.steps = 10;
  c.kernel_grid = 16;
  c.scheme = Scheme::exact_kernel;
  EXPECT_EQ(code_of([&] { simulate_forward(m, c, 0.5, src); }), ErrorCode::precondition);
}

TEST(Paths, DeterministicAcrossThreadCounts) {
  const auto m = make(Geometry::disk_radial, {1 / pi, 1 / pi}, {1.0, 0.2});
  const EndpointSampler sampler(m, 256);
  for (Scheme scheme : {Scheme::euler_reflected, Scheme::exact_kernel}) {
    SimConfig c;
    c.steps = 20;
    c.paths = 64;
    c.seed = 9;
    c.scheme = scheme;
    c.kernel_grid = 256;
    auto collect = [&](int threads) {
      c.threads = threads;
      return run_paths(m, c, Direction::forward, EndpointStart{&sampler, Direction::forward},
                       [](std::size_t, const Path& p) { return p.states; });
    };
    const auto one = collect(1);
    EXPECT_EQ(one, collect(3));
    EXPECT_EQ(one, collect(8));
    c.seed = 10;
    EXPECT_NE(one, collect(1));
  }
}

TEST(Endpoints, UnitDataAreUniform) {
  const auto m = make(Geometry::interval, {1.0}, {1.0});
  const EndpointSampler sampler(m, 512);
  EXPECT_NEAR(sampler.tabulated_mass(), 1.0, 1e-4);
  std::vector<double> xs;
  for (std::size_t i = 0; i < 5000; ++i) {
    Rng rng(5, i, stream::endpoints);
    xs.push_back(sampler.sample(rng).first);
  }
  EXPECT_LT(ks_statistic(xs, [](double x) { return x; }), ks_critical(xs.size()));
}

TEST(Endpoints, MomentsMatchQuadrature) {
  for (const auto& m : {make(Geometry::interval, {1.0, 0.5}, {1.0, -0.3}, 0.3),
                        make(Geometry::disk_radial, {1 / pi, 1 / pi}, {1.0, 0.5}, 0.2)}) {
    const Geometry g = m.geometry();
    auto moment = [&](const std::function<double(double, double)>& f) {
      return dmu(g, [&](double x) { return dmu(g, [&](double y) { return f(x, y) * m.endpoint_density(x, y); }); });
    };
    const double mx = moment([](double x, double) { return x; });
    const double my = moment([](double, double y) { return y; });
    const double cxy = moment([&](double x, double y) { return (x - mx) * (y - my); });
    const EndpointSampler sampler(m, 512);
    RunningStats sx;
    RunningStats sy;
    RunningStats sxy;
    const std::size_t n = 40000;
    for (std::size_t i = 0; i < n; ++i) {
      Rng rng(7, i, stream::endpoints);
      const auto [x, y] = sampler.sample(rng);
      sx.add(x);
      sy.add(y);
      sxy.add((x - mx) * (y - my));
    }
    EXPECT_LT(std::abs(sx.mean() - mx), 4 * sx.std_error()) << to_string(g);
    EXPECT_LT(std::abs(sy.mean() - my), 4 * sy.std_error()) << to_string(g);
    EXPECT_LT(std::abs(sxy.mean() - cxy), 4 * sxy.std_error()) << to_string(g);
    EXPECT_GT(cxy, 0.0);  // short horizon couples the endpoints
  }
}

TEST(Euler, ForwardIncrementMatchesKernel) {
  const auto m = make(Geometry::interval, {1.0}, {1.0, 0.6}, 0.2);
  const double z0 = 0.35;
  const double h = 0.02;  // 40 of 400 steps
  const double mean = dmu(Geometry::interval, [&](double y) { return y * m.forward_kernel(z0, 0.0, y, h); });
  const double second = dmu(Geometry::interval, [&](double y) { return (y - z0) * (y - z0) * m.forward_kernel(z0, 0.0, y, h); });
  const auto first = euler_moment(m, Direction::forward, z0, 400, 40, 40000, [](double z) { return z; });
  const auto sq = euler_moment(m, Direction::forward, z0, 400, 40, 40000, [z0](double z) { return (z - z0) * (z - z0); });
  EXPECT_LT(mean - z0, -0.01);  // the drift is clearly visible
  EXPECT_LT(std::abs(first.mean() - mean), 4 * first.std_error() + 2e-4);
  EXPECT_LT(std::abs(sq.mean() - second), 4 * sq.std_error() + 2e-4);
}

TEST(Euler, BackwardIncrementMatchesKernel) {
  const auto m = make(Geometry::interval, {1.0, 0.5}, {1.0}, 0.2);
  const double zT = 0.4;
  const double h = 0.02;
  const double mean = dmu(Geometry::interval, [&](double y) { return y * m.backward_kernel(zT, 0.2, y, 0.2 - h); });
  const auto s = euler_moment(m, Direction::backward, zT, 400, 40, 40000, [](double z) { return z; });
  EXPECT_LT(mean - zT, -0.01);
  EXPECT_LT(std::abs(s.mean() - mean), 4 * s.std_error() + 2e-4);
}

TEST(Euler, FlatDataHaveNoDrift) {
  const auto m = make(Geometry::interval, {1.0}, {1.0}, 0.5);
  const auto f = euler_moment(m, Direction::forward, 0.5, 200, 50, 20000, [](double z) { return z; });
  const auto b = euler_moment(m, Direction::backward, 0.5, 200, 50, 20000, [](double z) { return z; });
  EXPECT_LT(std::abs(f.mean() - 0.5), 4 * f.std_error());
  EXPECT_LT(std::abs(b.mean() - 0.5), 4 * b.std_error());
}

TEST(Euler, WeakErrorShrinksWithSteps) {
  // Strong drift near the wall; error of E[Z_T] against the exact marginal.
  const auto m = make(Geometry::interval, {1.0}, {1.0, 0.9}, 0.3);
  const double z0 = 0.15;
  const double target = dmu(Geometry::interval, [&](double y) { return y * m.forward_kernel(z0, 0.0, y, 0.3); });
  double err_coarse = 0.0;
  double err_fine = 0.0;
  double se_fine = 0.0;
  for (std::size_t steps : {10u, 50u, 800u}) {
    const auto s = euler_moment(m, Direction::forward, z0, steps, steps, 100000, [](double z) { return z; });
    const double err = std::abs(s.mean() - target);
    if (steps == 10) err_coarse = err;
    if (steps == 800) {
      err_fine = err;
      se_fine = s.std_error();
    }
  }
  EXPECT_GT(err_coarse, 4 * se_fine);
  EXPECT_LT(err_fine, err_coarse);
  EXPECT_LT(err_fine, 4 * se_fine + 1e-3);
}

TEST(ExactKernel, RowMatchesGreenCdf) {
  const auto m = make(Geometry::interval, {1.0}, {1.0});
  const ExactKernelSampler sampler(m, 512);
  const double x = 0.3;
  const double gap = 0.05;
  std::vector<double> ys;
  for (std::size_t i = 0; i < 5000; ++i) {
    Rng rng(2, i, stream::kernel);
    ys.push_back(sampler.forward_step(x, 0.4, 0.4 + gap, rng));
  }
  auto cdf = [&](double y) {
    if (y <= 0.0) return 0.0;
    return dmu(Geometry::interval, [&](double w) { return green(w, gap, x, 0.0, Geometry::interval); }, 0.0, y, 8);
  };
  EXPECT_LT(ks_statistic(ys, cdf), ks_critical(ys.size()));
}

TEST(ExactKernel, DiskStepMean) {
  const auto m = make(Geometry::disk_radial, {1 / pi, 1 / pi}, {1.0, 0.4}, 0.5);
  const ExactKernelSampler sampler(m, 512);
  const double mean = dmu(Geometry::disk_radial, [&](double y) { return y * m.forward_kernel(0.6, 0.1, y, 0.15); });
  const double back = dmu(Geometry::disk_radial, [&](double y) { return y * m.backward_kernel(0.6, 0.15, y, 0.1); });
  RunningStats f;
  RunningStats b;
  for (std::size_t i = 0; i < 20000; ++i) {
    Rng rng(4, i, stream::kernel);
    f.add(sampler.forward_step(0.6, 0.1, 0.15, rng));
    b.add(sampler.backward_step(0.6, 0.15, 0.1, rng));
  }
  EXPECT_LT(std::abs(f.mean() - mean), 4 * f.std_error());
  EXPECT_LT(std::abs(b.mean() - back), 4 * b.std_error());
}

TEST(ExactKernel, TwoTimeJointLaw) {
  const auto m = make(Geometry::interval, {1.0}, {1.0, 0.5}, 0.4);
  const double z0 = 0.3;
  const std::size_t bins = 5;
  std::vector<double> probs(bins * bins);
  for (std::size_t i = 0; i < bins; ++i) {
    for (std::size_t j = 0; j < bins; ++j) {
      const double a0 = static_cast<double>(i) / bins;
      const double b0 = static_cast<double>(j) / bins;
      probs[i * bins + j] = dmu(
          Geometry::interval,
          [&](double a) {
            return m.forward_kernel(z0, 0.0, a, 0.2) *
                   dmu(Geometry::interval, [&](double b) { return m.forward_kernel(a, 0.2, b, 0.4); }, b0, b0 + 0.2, 4);
          },
          a0, a0 + 0.2, 4);
    }
  }
  SimConfig c;
  c.steps = 2;
  c.paths = 20000;
  c.seed = 21;
  c.scheme = Scheme::exact_kernel;
  const auto cells = run_paths(m, c, Direction::forward, [z0](std::size_t, Rng&) { return z0; },
                               [&](std::size_t, const Path& p) {
                                 return bin_index(p.states[1], 0, 1, bins) * bins + bin_index(p.states[2], 0, 1, bins);
                               });
  std::vector<double> counts(bins * bins, 0.0);
  for (auto k : cells) counts[k] += 1;
  // merge cells with tiny expectation into their neighbour row-wise
  std::vector<double> oc;
  std::vector<double> op;
  double carry_c = 0.0;
  double carry_p = 0.0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    carry_c += counts[k];
    carry_p += probs[k];
    if (carry_p * c.paths >= 5.0) {
      oc.push_back(carry_c);
      op.push_back(carry_p);
      carry_c = carry_p = 0.0;
    }
  }
  oc.back() += carry_c;
  op.back() += carry_p;
  const TestOutcome t = chi_square_test(oc, op);
  EXPECT_TRUE(t.passed()) << t.statistic << " vs " << t.critical;
}

TEST(ExactKernel, UnresolvedSpikeIsKernelIntegrationError) {
  const auto m = make(Geometry::interval, {1.0}, {1.0});
  const ExactKernelSampler sampler(m, 64);
  ConstantSource src;
  EXPECT_EQ(code_of([&] { sampler.forward_step(0.5, 0.5, 0.5 + 1e-6, src); }), ErrorCode::kernel_integration);
  EXPECT_EQ(code_of([&] { sampler.forward_step(0.5, 0.5, 0.4, src); }), ErrorCode::ordering);
}

TEST(Girsanov, FlatPsiGivesUnitWeight) {
  const auto m = make(Geometry::disk_radial, {1 / pi, 1 / pi}, {1.0});
  Rng rng(1, 0, stream::path);
  SimConfig c;
  c.steps = 50;
  const WeightedPath w = girsanov_weight(m, simulate_forward(m, c, 0.4, rng));
  EXPECT_EQ(w.log_weight, 0.0);
  EXPECT_EQ(w.weight(), 1.0);
}

TEST(Girsanov, MeanWeightIsOne) {
  for (const auto& m : {make(Geometry::interval, {1.0}, {1.0, 0.7}, 0.3),
                        make(Geometry::disk_radial, {1.0}, {1.0, 0.6}, 0.3)}) {
    SimConfig c;
    c.steps = 200;
    c.paths = 40000;
    c.seed = 13;
    const auto weights = run_paths(m, c, Direction::forward, [](std::size_t, Rng&) { return 0.3; },
                                   [&](std::size_t, const Path& p) { return girsanov_weight(m, p).weight(); });
    RunningStats s;
    for (double w : weights) s.add(w);
    EXPECT_LT(std::abs(s.mean() - 1.0), 4 * s.std_error()) << to_string(m.geometry());
    EXPECT_GT(s.variance(), 0.0);
  }
}

TEST(Girsanov, RejectsPathsWithoutNoise) {
  const auto m = make(Geometry::interval, {1.0}, {1.0, 0.5});
  Rng rng(1, 0, stream::path);
  SimConfig c;
  c.steps = 20;
  EXPECT_EQ(code_of([&] { girsanov_weight(m, simulate_backward(m, c, 0.4, rng)); }), ErrorCode::insufficient_path_data);
  c.scheme = Scheme::exact_kernel;
  EXPECT_EQ(code_of([&] { girsanov_weight(m, simulate_forward(m, c, 0.4, rng)); }), ErrorCode::insufficient_path_data);
}
