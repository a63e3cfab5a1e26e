#pragma once

// Verification suite: deterministic quadrature checks of the kernel
// identities and Monte Carlo hypothesis tests of the simulated paths.

#include <bernstein/error.hpp>
#include <bernstein/model.hpp>
#include <bernstein/quadrature.hpp>
#include <bernstein/rng.hpp>
#include <bernstein/sde.hpp>
#include <bernstein/spectral.hpp>
#include <bernstein/stats.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <numeric>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace bernstein {

enum class CheckKind { quadrature, statistical };

inline std::string_view to_string(CheckKind k) { return k == CheckKind::quadrature ? "quadrature" : "statistical"; }

struct CheckResult {
  std::string name;
  CheckKind kind = CheckKind::quadrature;
  double metric = 0.0;
  double threshold = 0.0;
  bool passed = false;
  std::string detail;
};

inline CheckResult make_check(std::string name, CheckKind kind, double metric, double threshold,
                              std::string detail = {}) {
  const bool passed = metric <= threshold;  // NaN fails
  return {std::move(name), kind, metric, threshold, passed, std::move(detail)};
}

struct VerifyConfig {
  SimConfig sim{400, 100000, 1, Scheme::euler_reflected, 512, 0};
  std::size_t qv_paths = 10000;  ///< quadratic-variation and martingale checks
  bool strict = false;           ///< rerun failing statistical checks with 4x paths
  std::vector<std::string> only;
};

/// Gap sequence of the drift and diffusion limits.
inline const std::vector<double>& drift_gaps() {
  static const std::vector<double> gaps{0.04, 0.02, 0.01, 0.005};
  return gaps;
}

/// Gap sequence of the Lindeberg check, continued two halvings further.
inline const std::vector<double>& lindeberg_gaps() {
  static const std::vector<double> gaps{0.04, 0.02, 0.01, 0.005, 0.0025, 0.00125};
  return gaps;
}

namespace detail {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

/// Policy able to evaluate the spectral Green function down to `gap`. The
/// interval keeps its policy (the image form covers small gaps); the disk
/// switches to the full root table.
inline TruncationPolicy fine_policy(const BernsteinModel& model, double gap) {
  TruncationPolicy p = model.policy();
  if (model.geometry() == Geometry::disk_radial && gap < p.min_gap) {
    p.max_modes = kMaxNeumannRoots;
    p.min_gap = gap;
  }
  return p;
}

template <class F>
double integrate_dmu(Geometry g, F&& f, double a = 0.0, double b = 1.0, std::size_t nodes = kDefaultSimpsonNodes) {
  if (!(b > a)) return 0.0;
  return simpson_rule(a, b, nodes).integrate([&](double y) { return f(y) * measure_weight(g, y); });
}

/// Number of increases in a sequence of errors that should decrease. Errors
/// below `floor` count as converged, so round-off jitter is not a violation.
inline int monotone_violations(const std::vector<double>& errors, double floor = 1e-9) {
  int count = 0;
  for (std::size_t i = 1; i < errors.size(); ++i) {
    if (errors[i] > errors[i - 1] && errors[i] > floor) ++count;
  }
  return count;
}

inline std::string join(const std::vector<double>& values) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) s += (i ? " " : "") + num(values[i]);
  return s;
}

inline std::size_t time_index(const SimConfig& config, double fraction) {
  return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(config.steps)));
}

/// Bin masses of y -> density(y) dmu over equal-width bins of [0, 1].
template <class F>
std::vector<double> bin_masses(Geometry g, std::size_t bins, F&& density) {
  std::vector<double> masses(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    const double a = static_cast<double>(k) / bins;
    const double b = static_cast<double>(k + 1) / bins;
    masses[k] = integrate_dmu(g, density, a, b, 21);
  }
  return masses;
}

inline std::string power_note(std::size_t paths) {
  return paths < 10000 ? "; low power: " + std::to_string(paths) + " paths" : std::string();
}

}  // namespace detail

inline std::vector<CheckResult> check_green_identities(const BernsteinModel& model) {
  const Geometry g = model.geometry();
  const TruncationPolicy& policy = model.policy();
  const double horizon = model.horizon();
  std::vector<CheckResult> out;

  double symmetry = 0.0;
  for (double gap : {policy.min_gap, 0.1, 0.5}) {
    for (int i = 0; i <= 20; ++i) {
      for (int j = 0; j <= 20; ++j) {
        const double x = i / 20.0;
        const double y = j / 20.0;
        symmetry = std::max(symmetry, std::abs(green(x, gap, y, 0.0, g, policy) - green(y, gap, x, 0.0, g, policy)));
      }
    }
  }
  out.push_back(make_check("green_symmetry", CheckKind::quadrature, symmetry, 1e-10, "21x21 grid, 3 gaps"));

  const double s = 0.0;
  const double r = 0.1 * horizon;
  const double t = 0.3 * horizon;
  double composition = 0.0;
  for (int i = 0; i <= 10; ++i) {
    for (int j = 0; j <= 10; ++j) {
      const double x = i / 10.0;
      const double y = j / 10.0;
      const double lhs = detail::integrate_dmu(
          g, [&](double z) { return green(x, t, z, r, g, policy) * green(z, r, y, s, g, policy); });
      composition = std::max(composition, std::abs(lhs - green(x, t, y, s, g, policy)));
    }
  }
  out.push_back(make_check("green_composition", CheckKind::quadrature, composition, 1e-6,
                           "201-node Simpson, 11x11 grid, (s, r, t) = (0, 0.1T, 0.3T)"));

  // Gauss-Legendre here: at gap 1e-3 the disk integrand 2 pi y g(x, y) is too
  // sharp near the center for 201-node Simpson to resolve 1e-8.
  const QuadratureRule fine_rule = gauss_legendre_rule(0.0, 1.0);
  double mass = 0.0;
  for (double gap : {1e-3, 0.01, 0.1, 1.0}) {
    const TruncationPolicy p = detail::fine_policy(model, gap);
    for (int i = 0; i <= 10; ++i) {
      const double x = i / 10.0;
      const double m = fine_rule.integrate([&](double y) { return green(x, gap, y, 0.0, g, p) * measure_weight(g, y); });
      mass = std::max(mass, std::abs(m - 1.0));
    }
  }
  out.push_back(make_check("green_mass", CheckKind::quadrature, mass, 1e-8, "gaps 1e-3 .. 1, Gauss-Legendre"));

  if (g == Geometry::interval) {
    double images = 0.0;
    for (int i = 0; i <= 20; ++i) {
      for (int j = 0; j <= 20; ++j) {
        const double x = i / 20.0;
        const double y = j / 20.0;
        images = std::max(images, std::abs(green_spectral(x, 0.1, y, 0.0, g, policy) -
                                           green_images(x, 0.1, y, 0.0, policy.image_count, g)));
      }
    }
    out.push_back(make_check("green_images", CheckKind::quadrature, images, 1e-8, "t - s = 0.1, 21x21 grid"));
  }
  return out;
}

inline std::vector<CheckResult> check_kernel_laws(const BernsteinModel& model) {
  const Geometry g = model.geometry();
  const double horizon = model.horizon();
  std::vector<CheckResult> out;
  const std::vector<double> states{0.0, 0.25, 0.5, 0.75, 1.0};
  const std::vector<std::pair<double, double>> pairs{
      {0.0, 0.25}, {0.25, 0.5}, {0.0, 0.5}, {0.5, 1.0}, {0.1, 0.9}};

  double mass = 0.0;
  for (const auto& [fs, ft] : pairs) {
    const double s = fs * horizon;
    const double t = ft * horizon;
    const double r = 0.5 * (s + t);
    for (double x : states) {
      mass = std::max(mass, std::abs(detail::integrate_dmu(g, [&](double y) { return model.forward_kernel(x, s, y, t); }) - 1.0));
      mass = std::max(mass, std::abs(detail::integrate_dmu(g, [&](double y) { return model.backward_kernel(x, t, y, s); }) - 1.0));
      const double y = 1.0 - x;
      mass = std::max(mass, std::abs(detail::integrate_dmu(g, [&](double z) {
                                       return model.bernstein_transition(x, t, z, r, y, s);
                                     }) - 1.0));
    }
  }
  out.push_back(make_check("kernel_mass", CheckKind::quadrature, mass, 1e-8, "p, m*, m on a 5x5 grid"));

  double ck = 0.0;
  {
    const double s = 0.0;
    const double r = 0.2 * horizon;
    const double t = 0.5 * horizon;
    for (double x : states) {
      for (double y : states) {
        const double fwd = detail::integrate_dmu(
            g, [&](double z) { return model.forward_kernel(x, s, z, r) * model.forward_kernel(z, r, y, t); });
        ck = std::max(ck, std::abs(fwd - model.forward_kernel(x, s, y, t)));
        const double bwd = detail::integrate_dmu(
            g, [&](double z) { return model.backward_kernel(x, t, z, r) * model.backward_kernel(z, r, y, s); });
        ck = std::max(ck, std::abs(bwd - model.backward_kernel(x, t, y, s)));
      }
    }
  }
  out.push_back(make_check("chapman_kolmogorov", CheckKind::quadrature, ck, 1e-6, "m* and m, (s, r, t) = (0, 0.2T, 0.5T)"));

  double reciprocity = 0.0;
  for (const auto& [fs, ft] : {std::pair{0.0, 0.25}, std::pair{0.25, 0.75}, std::pair{0.5, 1.0}}) {
    const double s = fs * horizon;
    const double t = ft * horizon;
    for (int i = 0; i <= 10; ++i) {
      for (int j = 0; j <= 10; ++j) {
        const double x = i / 10.0;
        const double y = j / 10.0;
        const double lhs = model.backward_kernel(y, t, x, s) * model.occupation(y, t);
        const double rhs = model.occupation(x, s) * model.forward_kernel(x, s, y, t);
        reciprocity = std::max(reciprocity, std::abs(lhs - rhs));
      }
    }
  }
  out.push_back(make_check("reciprocity", CheckKind::quadrature, reciprocity, 1e-9, "11x11x3 grid"));

  const QuadratureRule rule = simpson_rule(0.0, 1.0);
  double total = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double x = rule.nodes[i];
    double row = 0.0;
    for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
      const double y = rule.nodes[j];
      row += rule.weights[j] * measure_weight(g, y) * model.endpoint_density(x, y);
    }
    total += rule.weights[i] * measure_weight(g, x) * row;
  }
  out.push_back(make_check("normalization", CheckKind::quadrature, std::abs(total - 1.0), 1e-8,
                           "endpoint mass " + detail::num(total)));

  const OccupationDensity rho(model, {0.0, 0.25 * horizon, 0.5 * horizon, 0.75 * horizon, horizon});
  double occ = 0.0;
  for (std::size_t j = 0; j < rho.times().size(); ++j) occ = std::max(occ, std::abs(rho.mass(j) - 1.0));
  out.push_back(make_check("occupation_mass", CheckKind::quadrature, occ, 1e-8, "t in {0, T/4, T/2, 3T/4, T}"));
  return out;
}

struct MomentSequence {
  std::vector<double> gaps;
  std::vector<double> first;   ///< first moment / gap
  std::vector<double> second;  ///< second moment / gap
  std::vector<double> target;  ///< drift limit at each conditioning point
};

/// Normalized first and second moments of the forward kernel m*(x,s; ., s+gap).
/// On the disk the radial drift target carries the 1/(2x) term of a planar
/// Brownian motion seen in polar coordinates.
inline MomentSequence forward_moments(const BernsteinModel& model, double x, double s,
                                      const std::vector<double>& gaps) {
  const Geometry g = model.geometry();
  const double bessel = g == Geometry::disk_radial ? 0.5 / x : 0.0;
  MomentSequence seq;
  for (double gap : gaps) {
    const BernsteinModel fine = model.with_policy(detail::fine_policy(model, gap));
    const double t = s + gap;
    seq.gaps.push_back(gap);
    seq.first.push_back(detail::integrate_dmu(g, [&](double y) { return (y - x) * fine.forward_kernel(x, s, y, t); }) / gap);
    seq.second.push_back(
        detail::integrate_dmu(g, [&](double y) { return (y - x) * (y - x) * fine.forward_kernel(x, s, y, t); }) / gap);
    seq.target.push_back(model.forward_drift(x, s) + bessel);
  }
  return seq;
}

/// Normalized moments of the backward kernel m(x, s+gap; ., s), conditioned at
/// (x, s+gap) and compared with the backward drift there.
inline MomentSequence backward_moments(const BernsteinModel& model, double x, double s,
                                       const std::vector<double>& gaps) {
  const Geometry g = model.geometry();
  const double bessel = g == Geometry::disk_radial ? 0.5 / x : 0.0;
  MomentSequence seq;
  for (double gap : gaps) {
    const BernsteinModel fine = model.with_policy(detail::fine_policy(model, gap));
    const double t = s + gap;
    seq.gaps.push_back(gap);
    seq.first.push_back(detail::integrate_dmu(g, [&](double y) { return (x - y) * fine.backward_kernel(x, t, y, s); }) / gap);
    seq.second.push_back(
        detail::integrate_dmu(g, [&](double y) { return (x - y) * (x - y) * fine.backward_kernel(x, t, y, s); }) / gap);
    seq.target.push_back(model.backward_drift(x, t) - bessel);
  }
  return seq;
}

inline std::vector<CheckResult> check_drift_limits(const BernsteinModel& model, double x, double s) {
  require(x > 0.0 && x < 1.0, ErrorCode::domain, "drift limits need an interior state");
  model.check_time(s);
  require(s + drift_gaps().front() <= model.horizon(), ErrorCode::domain, "drift limits need s + 0.04 <= T");
  std::vector<CheckResult> out;
  auto emit = [&](const std::string& side, const MomentSequence& seq) {
    std::vector<double> drift_err;
    std::vector<double> diff_err;
    for (std::size_t i = 0; i < seq.gaps.size(); ++i) {
      drift_err.push_back(std::abs(seq.first[i] - seq.target[i]) / std::max(1.0, std::abs(seq.target[i])));
      diff_err.push_back(std::abs(seq.second[i] - 1.0));
    }
    out.push_back(make_check("drift_" + side, CheckKind::quadrature, drift_err.back(), 0.02,
                             "first moment/gap " + detail::join(seq.first) + " vs " + detail::join(seq.target)));
    out.push_back(make_check("drift_" + side + "_monotone", CheckKind::quadrature,
                             detail::monotone_violations(drift_err), 0.0, "errors " + detail::join(drift_err)));
    out.push_back(make_check("diffusion_" + side, CheckKind::quadrature, diff_err.back(), 0.02,
                             "second moment/gap " + detail::join(seq.second)));
  };
  emit("forward", forward_moments(model, x, s, drift_gaps()));
  emit("backward", backward_moments(model, x, s, drift_gaps()));
  return out;
}

/// (t - s)^-1 times the kernel mass outside [x - eps, x + eps], per gap.
inline std::vector<double> lindeberg_sequence(const BernsteinModel& model, double x, double s, double eps,
                                              Direction direction, const std::vector<double>& gaps) {
  const Geometry g = model.geometry();
  std::vector<double> values;
  for (double gap : gaps) {
    const BernsteinModel fine = model.with_policy(detail::fine_policy(model, gap));
    const double t = s + gap;
    auto kernel = [&](double y) {
      return direction == Direction::forward ? fine.forward_kernel(x, s, y, t) : fine.backward_kernel(x, t, y, s);
    };
    const double tail = detail::integrate_dmu(g, kernel, 0.0, std::max(0.0, x - eps)) +
                        detail::integrate_dmu(g, kernel, std::min(1.0, x + eps), 1.0);
    values.push_back(tail / gap);
  }
  return values;
}

inline std::vector<CheckResult> check_lindeberg(const BernsteinModel& model, double x, double s, double eps) {
  require(eps > 0.0 && eps < 0.25, ErrorCode::domain, "eps must lie in (0, 1/4)");
  check_state(x, "x");
  model.check_time(s);
  require(s + lindeberg_gaps().front() <= model.horizon(), ErrorCode::domain, "Lindeberg check needs s + 0.04 <= T");
  std::vector<CheckResult> out;
  for (Direction d : {Direction::forward, Direction::backward}) {
    const auto values = lindeberg_sequence(model, x, s, eps, d, lindeberg_gaps());
    out.push_back(make_check(d == Direction::forward ? "lindeberg_forward" : "lindeberg_backward", CheckKind::quadrature,
                             values.back(), 1e-3, "tail/gap " + detail::join(values)));
  }
  return out;
}

namespace detail {

inline CheckResult occupation_chi_square(const BernsteinModel& model, const std::string& name,
                                         const std::vector<double>& states, double t, std::size_t bins) {
  const Geometry g = model.geometry();
  std::vector<double> counts(bins, 0.0);
  for (double z : states) counts[bin_index(z, 0.0, 1.0, bins)] += 1.0;
  const auto masses = bin_masses(g, bins, [&](double y) { return model.occupation(y, t); });
  const TestOutcome test = chi_square_test(counts, masses);
  return make_check(name, CheckKind::statistical, test.statistic, test.critical,
                    std::to_string(states.size()) + " paths, " + std::to_string(bins) + " bins, t=" + num(t) +
                        power_note(states.size()));
}

/// |Z_j - Z_i|, measured in the plane for disk Euler paths.
inline double displacement(const Path& p, std::size_t i, std::size_t j) {
  if (p.dim == 2 && !p.planar.empty()) {
    return std::hypot(p.planar[2 * j] - p.planar[2 * i], p.planar[2 * j + 1] - p.planar[2 * i + 1]);
  }
  return p.states[j] - p.states[i];
}

inline double start_sample(const EndpointSampler& sampler, Direction d, Rng& rng) {
  const auto [z0, zT] = sampler.sample(rng);
  return d == Direction::forward ? z0 : zT;
}

}  // namespace detail

/// Lag indices of the moment-scaling regression (a decade, 0.0025T .. 0.025T).
inline std::vector<std::size_t> moment_lags(const SimConfig& config) {
  std::vector<std::size_t> lags;
  for (double f : {0.0025, 0.005, 0.01, 0.025}) lags.push_back(std::max<std::size_t>(1, detail::time_index(config, f)));
  return lags;
}

inline std::vector<CheckResult> check_path_statistics(const BernsteinModel& model, const VerifyConfig& vc) {
  const SimConfig& config = vc.sim;
  config.validate();
  const Geometry g = model.geometry();
  const double horizon = model.horizon();
  const double dt = horizon / static_cast<double>(config.steps);
  std::vector<CheckResult> out;
  const EndpointSampler sampler(model, config.kernel_grid);
  const std::size_t bins = 20;

  const std::size_t iq = detail::time_index(config, 0.25);
  const std::size_t ih = detail::time_index(config, 0.5);
  const std::size_t moment_start = iq;
  const auto lags = moment_lags(config);

  // Forward paths from the endpoint law: occupation and moment scaling.
  struct ForwardRecord {
    double quarter = 0.0;
    double half = 0.0;
    bool interior = false;  ///< start of the moment window away from the reflecting boundary
    std::vector<double> increments;
  };
  const auto fwd = run_paths(
      model, config, Direction::forward,
      [&](std::size_t, Rng& rng) { return detail::start_sample(sampler, Direction::forward, rng); },
      [&](std::size_t, const Path& p) {
        const double z = p.states[moment_start];
        ForwardRecord r{p.states[iq], p.states[ih], g == Geometry::interval ? (z >= 0.25 && z <= 0.75) : z <= 0.75, {}};
        for (std::size_t lag : lags) r.increments.push_back(detail::displacement(p, moment_start, moment_start + lag));
        return r;
      });
  {
    std::vector<double> q;
    std::vector<double> h;
    for (const auto& r : fwd) {
      q.push_back(r.quarter);
      h.push_back(r.half);
    }
    out.push_back(detail::occupation_chi_square(model, "occupation_forward_quarter", q, iq * dt, bins));
    out.push_back(detail::occupation_chi_square(model, "occupation_forward_half", h, ih * dt, bins));

    std::vector<double> lx;
    std::vector<double> ly;
    std::size_t used = 0;
    for (std::size_t k = 0; k < lags.size(); ++k) {
      double sum = 0.0;
      used = 0;
      for (const auto& r : fwd) {
        if (!r.interior) continue;
        sum += std::pow(r.increments[k], 4);
        ++used;
      }
      lx.push_back(std::log(lags[k] * dt));
      ly.push_back(std::log(sum / static_cast<double>(used)));
    }
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / lx.size();
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / ly.size();
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t k = 0; k < lx.size(); ++k) {
      sxy += (lx[k] - mx) * (ly[k] - my);
      sxx += (lx[k] - mx) * (lx[k] - mx);
    }
    const double slope = sxy / sxx;
    out.push_back(make_check("moment_scaling", CheckKind::statistical, std::abs(slope - 2.0), 0.2,
                             "slope of log E|dZ|^4 vs log lag: " + detail::num(slope) + " over " + std::to_string(used) +
                                 " interior starts" + detail::power_note(used)));
  }

  // Backward paths from the endpoint law.
  {
    const auto bwd = run_paths(
        model, config, Direction::backward,
        [&](std::size_t, Rng& rng) { return detail::start_sample(sampler, Direction::backward, rng); },
        [&](std::size_t, const Path& p) { return std::pair{p.states[iq], p.states[ih]}; });
    std::vector<double> q;
    std::vector<double> h;
    for (const auto& [a, b] : bwd) {
      q.push_back(a);
      h.push_back(b);
    }
    out.push_back(detail::occupation_chi_square(model, "occupation_backward_quarter", q, iq * dt, bins));
    out.push_back(detail::occupation_chi_square(model, "occupation_backward_half", h, ih * dt, bins));
  }

  // Lebesgue invariance, meaningful when the forward drift vanishes.
  if (model.psi().is_constant()) {
    const std::vector<double> fractions{0.1, 0.5, 1.0};
    std::vector<std::size_t> idx;
    for (double f : fractions) idx.push_back(detail::time_index(config, f));
    const auto inv = run_paths(
        model, config, Direction::forward,
        [&](std::size_t, Rng& rng) {
          const double u = rng.uniform();
          return g == Geometry::interval ? u : std::sqrt(u);
        },
        [&](std::size_t, const Path& p) {
          std::vector<double> z;
          for (std::size_t i : idx) z.push_back(p.states[i]);
          return z;
        });
    for (std::size_t k = 0; k < idx.size(); ++k) {
      std::vector<double> sample;
      sample.reserve(inv.size());
      for (const auto& z : inv) sample.push_back(z[k]);
      const double d = ks_statistic(sample, [g](double z) { return g == Geometry::interval ? z : z * z; });
      out.push_back(make_check("invariant_uniform_t" + detail::num(fractions[k]), CheckKind::statistical, d,
                               ks_critical(sample.size()),
                               "KS distance, t=" + detail::num(idx[k] * dt) + detail::power_note(sample.size())));
    }
  }

  SimConfig small = config;
  small.paths = vc.qv_paths;
  small.scheme = Scheme::euler_reflected;  // the martingale check reads planar coordinates

  // Quadratic variation of the martingale part over a short window from 1/2.
  {
    const std::size_t window = std::max<std::size_t>(1, detail::time_index(config, 0.04));
    const auto qv = run_paths(
        model, small, Direction::forward, [](std::size_t, Rng&) { return 0.5; },
        [&](std::size_t, const Path& p) {
          double sum = 0.0;
          for (std::size_t i = 0; i < window; ++i) {
            const double drift = model.forward_drift(p.states[i], p.times[i]);
            if (g == Geometry::interval) {
              const double dz = p.states[i + 1] - p.states[i] - drift * dt;
              sum += dz * dz;
            } else {
              // per planar coordinate; the radius has a curvature bias of order dt / r^2
              const double r = p.states[i];
              for (std::size_t c = 0; c < 2; ++c) {
                const double xc = p.planar[2 * i + c];
                const double dz = p.planar[2 * (i + 1) + c] - xc - (r > 0.0 ? drift * xc / r : 0.0) * dt;
                sum += 0.5 * dz * dz;
              }
            }
          }
          return sum;
        });
    RunningStats stats;
    for (double v : qv) stats.add(v);
    const double t = window * dt;
    const double z = std::abs(stats.mean() - t) / stats.std_error();
    out.push_back(make_check("quadratic_variation", CheckKind::statistical, z, 3.0,
                             "mean QV " + detail::num(stats.mean()) + " vs t=" + detail::num(t) + detail::power_note(qv.size())));
  }

  // Martingale increments binned by the starting state.
  {
    const std::size_t lag = std::max<std::size_t>(1, detail::time_index(config, 0.01));
    const std::size_t start = ih;
    constexpr std::size_t kBins = 5;
    struct Record {
      double position;
      double increment;
      bool usable;
    };
    const auto mart = run_paths(
        model, small, Direction::forward,
        [&](std::size_t, Rng& rng) { return detail::start_sample(sampler, Direction::forward, rng); },
        [&](std::size_t, const Path& p) {
          if (g == Geometry::interval) {
            double m = p.states[start + lag] - p.states[start];
            for (std::size_t i = start; i < start + lag; ++i) m -= model.forward_drift(p.states[i], p.times[i]) * dt;
            return Record{p.states[start], m, true};
          }
          // planar first coordinate; the radius carries an Ito drift of its own
          auto x1 = [&](std::size_t i) { return p.planar[2 * i]; };
          double m = x1(start + lag) - x1(start);
          for (std::size_t i = start; i < start + lag; ++i) {
            const double r = p.states[i];
            if (r > 0.0) m -= model.forward_drift(r, p.times[i]) * x1(i) / r * dt;
          }
          return Record{x1(start), m, p.states[start] <= 0.75};
        });
    const double lo = g == Geometry::interval ? 0.25 : -0.5;
    const double hi = g == Geometry::interval ? 0.75 : 0.5;
    std::vector<RunningStats> stats(kBins);
    for (const auto& r : mart) {
      if (!r.usable || r.position < lo || r.position > hi) continue;
      stats[bin_index(r.position, lo, hi, kBins)].add(r.increment);
    }
    double worst = 0.0;
    std::string summary;
    for (const auto& s : stats) {
      const double z = s.std_error() > 0.0 ? std::abs(s.mean()) / s.std_error() : INFINITY;
      worst = std::max(worst, z);
      summary += detail::num(s.mean()) + "+-" + detail::num(s.std_error()) + " ";
    }
    out.push_back(make_check("martingale", CheckKind::statistical, worst, 3.0,
                             "bin means " + summary + detail::power_note(mart.size())));
  }

  // Girsanov reweighting from a fixed start.
  {
    const double z0 = 0.3;
    SimConfig euler = config;
    euler.scheme = Scheme::euler_reflected;
    const auto weighted = run_paths(
        model, euler, Direction::forward, [&](std::size_t, Rng&) { return z0; },
        [&](std::size_t, const Path& p) {
          const WeightedPath w = girsanov_weight(model, p);
          return std::pair{w.weight(), p.states.back()};
        });
    RunningStats mean_weight;
    std::vector<RunningStats> cells(bins);
    for (const auto& [w, z] : weighted) {
      mean_weight.add(w);
      const std::size_t k = bin_index(z, 0.0, 1.0, bins);
      for (std::size_t j = 0; j < bins; ++j) cells[j].add(j == k ? w : 0.0);
    }
    const double se = mean_weight.std_error();
    const double dev = std::abs(mean_weight.mean() - 1.0);
    out.push_back(make_check("girsanov_mean_weight", CheckKind::statistical, se > 0.0 ? dev / se : (dev == 0.0 ? 0.0 : INFINITY),
                             3.0, "mean weight " + detail::num(mean_weight.mean()) + " +- " + detail::num(se)));

    const auto targets = detail::bin_masses(g, bins, [&](double y) {
      return bernstein::green(y, horizon, z0, 0.0, g, model.policy());
    });
    std::vector<double> means;
    std::vector<double> ses;
    for (const auto& c : cells) {
      means.push_back(c.mean());
      ses.push_back(c.std_error());
    }
    const TestOutcome test = weighted_chi_square_test(means, ses, targets);
    out.push_back(make_check("girsanov_reweighted", CheckKind::statistical, test.statistic, test.critical,
                             "weighted Z_T histogram vs reflected Brownian law from z0=0.3"));
  }
  return out;
}

/// One runnable unit of the suite and the names of the results it produces.
struct CheckGroup {
  CheckKind kind;
  std::vector<std::string> names;
  std::function<std::vector<CheckResult>(const VerifyConfig&)> run;
};

inline std::vector<CheckGroup> check_groups(const BernsteinModel& model) {
  std::vector<CheckGroup> groups;
  std::vector<std::string> green{"green_symmetry", "green_composition", "green_mass"};
  if (model.geometry() == Geometry::interval) green.push_back("green_images");
  groups.push_back({CheckKind::quadrature, green, [&model](const VerifyConfig&) { return check_green_identities(model); }});
  groups.push_back({CheckKind::quadrature,
                    {"kernel_mass", "chapman_kolmogorov", "reciprocity", "normalization", "occupation_mass"},
                    [&model](const VerifyConfig&) { return check_kernel_laws(model); }});
  groups.push_back({CheckKind::quadrature,
                    {"drift_forward", "drift_forward_monotone", "diffusion_forward", "drift_backward",
                     "drift_backward_monotone", "diffusion_backward"},
                    [&model](const VerifyConfig&) { return check_drift_limits(model, 0.5, 0.0); }});
  groups.push_back({CheckKind::quadrature, {"lindeberg_forward", "lindeberg_backward"},
                    [&model](const VerifyConfig&) { return check_lindeberg(model, 0.5, 0.0, 0.2); }});
  std::vector<std::string> stats{"occupation_forward_quarter", "occupation_forward_half", "moment_scaling",
                                 "occupation_backward_quarter", "occupation_backward_half"};
  if (model.psi().is_constant()) {
    for (const char* n : {"invariant_uniform_t0.1", "invariant_uniform_t0.5", "invariant_uniform_t1"}) stats.push_back(n);
  }
  for (const char* n : {"quadratic_variation", "martingale", "girsanov_mean_weight", "girsanov_reweighted"}) {
    stats.push_back(n);
  }
  groups.push_back({CheckKind::statistical, stats,
                    [&model](const VerifyConfig& vc) { return check_path_statistics(model, vc); }});
  return groups;
}

/// Runs the suite (or the `only` subset) and returns the results sorted by
/// name. In strict mode every failing statistical check is rerun with four
/// times the paths and the rerun decides.
inline std::vector<CheckResult> run_all(const BernsteinModel& model, const VerifyConfig& vc) {
  const auto groups = check_groups(model);
  std::set<std::string> wanted(vc.only.begin(), vc.only.end());
  for (const auto& name : wanted) {
    const bool known = std::any_of(groups.begin(), groups.end(), [&](const CheckGroup& grp) {
      return std::find(grp.names.begin(), grp.names.end(), name) != grp.names.end();
    });
    if (!known) fail(ErrorCode::precondition, "unknown check '" + name + "'");
  }
  auto selected = [&](const std::string& name) { return wanted.empty() || wanted.count(name) > 0; };

  std::vector<CheckResult> results;
  for (const auto& grp : groups) {
    if (std::none_of(grp.names.begin(), grp.names.end(), selected)) continue;
    auto batch = grp.run(vc);
    std::vector<CheckResult> rerun;
    const bool any_failed = std::any_of(batch.begin(), batch.end(), [&](const CheckResult& r) {
      return selected(r.name) && !r.passed && r.kind == CheckKind::statistical;
    });
    if (vc.strict && any_failed) {
      VerifyConfig bigger = vc;
      bigger.sim.paths *= 4;
      bigger.qv_paths *= 4;
      rerun = grp.run(bigger);
    }
    for (auto& r : batch) {
      if (!selected(r.name)) continue;
      if (!r.passed && r.kind == CheckKind::statistical && !rerun.empty()) {
        for (auto& again : rerun) {
          if (again.name == r.name) {
            again.detail += " (strict rerun)";
            r = again;
          }
        }
      }
      results.push_back(std::move(r));
    }
  }
  std::sort(results.begin(), results.end(), [](const CheckResult& a, const CheckResult& b) { return a.name < b.name; });
  return results;
}

inline bool all_passed(const std::vector<CheckResult>& results) {
  return std::all_of(results.begin(), results.end(), [](const CheckResult& r) { return r.passed; });
}

}  // namespace bernstein
