#pragma once

// Sample paths of the Bernstein diffusion: reflected Euler-Maruyama for the
// forward and backward Ito equations, exact stepping through the Markov
// kernels, and Girsanov weights that remove the forward drift.
//
// On the disk the Euler scheme runs in planar Cartesian coordinates with the
// radial drift pointed along x/|x|; the recorded state is the radius.

#include <bernstein/error.hpp>
#include <bernstein/model.hpp>
#include <bernstein/parallel.hpp>
#include <bernstein/rng.hpp>
#include <bernstein/spectral.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace bernstein {

enum class Scheme { euler_reflected, exact_kernel };

struct SimConfig {
  std::size_t steps = 400;
  std::size_t paths = 1000;
  std::uint64_t seed = 1;
  Scheme scheme = Scheme::euler_reflected;
  std::size_t kernel_grid = 512;
  int threads = 0;  ///< 0: resolve_threads()

  void validate() const {
    require(steps >= 2, ErrorCode::precondition, "steps must be at least 2");
    require(paths >= 1, ErrorCode::precondition, "paths must be positive");
    require(kernel_grid >= 64, ErrorCode::precondition, "kernel_grid must be at least 64");
  }
};

struct Path {
  std::vector<double> times;   ///< increasing grid
  std::vector<double> states;  ///< position in [0, 1] (radius on the disk)
  std::vector<double> noise;   ///< Wiener increments per step, `dim` per step; empty for exact stepping
  std::vector<double> planar;  ///< disk Euler paths only: (x, y) per time index
  std::size_t dim = 1;
  Direction direction = Direction::forward;
  std::size_t reflections = 0;
};

struct WeightedPath {
  Path path;
  double log_weight = 0.0;
  double weight() const { return std::exp(log_weight); }
};

inline std::size_t state_dim(Geometry g) { return g == Geometry::interval ? 1 : 2; }

/// Folds a point back into [0, 1].
inline double reflect_interval(double z, std::size_t& reflections) {
  while (z < 0.0 || z > 1.0) {
    z = z < 0.0 ? -z : 2.0 - z;
    ++reflections;
  }
  return z;
}

/// Radial fold r -> 2 - r of a planar point back into the closed unit disk.
inline void reflect_disk(double& x, double& y, std::size_t& reflections) {
  double r = std::hypot(x, y);
  while (r > 1.0) {
    const double folded = 2.0 - r;
    x *= folded / r;
    y *= folded / r;
    r = std::abs(folded);
    ++reflections;
  }
}

namespace detail {

/// Reflected Euler-Maruyama from t_from to t_to (either order). Each step is
///   Z <- fold(Z + sign * (drift(Z, t) dt + dW)),  sign = +1 forward, -1 backward,
/// which is the forward equation for t_to > t_from and
/// Z_{t-dt} = Z_t - b(Z_t, t) dt - dW for t_to < t_from.
template <class DriftFn, class Source>
Path euler_reflected(Geometry g, double t_from, double t_to, std::size_t steps, double start, DriftFn&& drift,
                     Source& source) {
  check_state(start, "start state");
  const bool forward = t_to > t_from;
  const double sign = forward ? 1.0 : -1.0;
  const double dt = std::abs(t_to - t_from) / static_cast<double>(steps);
  const double root_dt = std::sqrt(dt);
  const std::size_t dim = state_dim(g);

  Path path;
  path.dim = dim;
  path.direction = forward ? Direction::forward : Direction::backward;
  path.times.resize(steps + 1);
  path.states.resize(steps + 1);
  path.noise.resize(steps * dim);
  if (dim == 2) path.planar.resize(2 * (steps + 1));

  auto time_at = [&](std::size_t i) {
    if (i == steps) return t_to;
    return t_from + (t_to - t_from) * static_cast<double>(i) / static_cast<double>(steps);
  };

  if (dim == 1) {
    double z = start;
    path.times[0] = t_from;
    path.states[0] = z;
    for (std::size_t i = 0; i < steps; ++i) {
      const double t = time_at(i);
      const double dw = root_dt * source.normal();
      path.noise[i] = dw;
      z += sign * (drift(z, t) * dt + dw);
      if (!std::isfinite(z)) fail(ErrorCode::numerical_blowup, "non-finite state at step " + std::to_string(i));
      z = reflect_interval(z, path.reflections);
      path.times[i + 1] = time_at(i + 1);
      path.states[i + 1] = z;
    }
  } else {
    const double angle = 2.0 * std::numbers::pi * source.uniform();
    double x = start * std::cos(angle);
    double y = start * std::sin(angle);
    path.times[0] = t_from;
    path.states[0] = start;
    path.planar[0] = x;
    path.planar[1] = y;
    for (std::size_t i = 0; i < steps; ++i) {
      const double t = time_at(i);
      const double r = std::hypot(x, y);
      const double radial = r > 0.0 ? drift(std::min(r, 1.0), t) / r : 0.0;
      const double dwx = root_dt * source.normal();
      const double dwy = root_dt * source.normal();
      path.noise[2 * i] = dwx;
      path.noise[2 * i + 1] = dwy;
      x += sign * (radial * x * dt + dwx);
      y += sign * (radial * y * dt + dwy);
      if (!std::isfinite(x) || !std::isfinite(y)) {
        fail(ErrorCode::numerical_blowup, "non-finite state at step " + std::to_string(i));
      }
      reflect_disk(x, y, path.reflections);
      path.times[i + 1] = time_at(i + 1);
      path.states[i + 1] = std::min(std::hypot(x, y), 1.0);
      path.planar[2 * (i + 1)] = x;
      path.planar[2 * (i + 1) + 1] = y;
    }
  }

  if (!forward) {
    std::reverse(path.times.begin(), path.times.end());
    std::reverse(path.states.begin(), path.states.end());
    // keep the per-step blocks of `dim` increments in order within a step
    for (std::size_t i = 0; i < steps / 2; ++i) {
      for (std::size_t d = 0; d < dim; ++d) std::swap(path.noise[i * dim + d], path.noise[(steps - 1 - i) * dim + d]);
    }
    for (std::size_t i = 0; i < (steps + 1) / 2 && dim == 2; ++i) {
      std::swap(path.planar[2 * i], path.planar[2 * (steps - i)]);
      std::swap(path.planar[2 * i + 1], path.planar[2 * (steps - i) + 1]);
    }
  }
  return path;
}

}  // namespace detail

/// Driftless reflected Brownian motion between two times, the reference
/// dynamics of the Feynman-Kac representations.
template <class Source>
Path reflected_brownian_path(Geometry g, double start, double t_from, double t_to, std::size_t steps,
                             Source& source) {
  require(steps >= 1, ErrorCode::precondition, "steps must be positive");
  require(t_from != t_to, ErrorCode::degenerate_horizon, "zero-length time window");
  return detail::euler_reflected(g, t_from, t_to, steps, start, [](double, double) { return 0.0; }, source);
}

/// Equispaced nodes on [0, 1] with geometry weights and a cached table of
/// mode values, shared by the inverse-CDF samplers.
class KernelGrid {
 public:
  KernelGrid(Geometry g, std::size_t nodes, std::size_t modes) : geometry_(g), nodes_(nodes) {
    require(nodes >= 2, ErrorCode::precondition, "kernel grid needs at least two nodes");
    const ModeBasis& basis = ModeBasis::of(g);
    modes_ = std::min(modes, basis.capacity());
    step_ = 1.0 / static_cast<double>(nodes - 1);
    points_.resize(nodes);
    weights_.resize(nodes);
    for (std::size_t j = 0; j < nodes; ++j) {
      points_[j] = j + 1 == nodes ? 1.0 : step_ * static_cast<double>(j);
      weights_[j] = measure_weight(g, points_[j]);
    }
    table_.resize(modes_ * nodes);
    for (std::size_t n = 0; n < modes_; ++n) {
      for (std::size_t j = 0; j < nodes; ++j) table_[n * nodes + j] = basis.value(n, points_[j]);
    }
  }

  std::size_t size() const { return nodes_; }
  double step() const { return step_; }
  double point(std::size_t j) const { return points_[j]; }
  double weight(std::size_t j) const { return weights_[j]; }

  /// g(x, s + gap; y_j, s) for all nodes (symmetric, so also g(y_j, s + gap; x, s)),
  /// without the potential factor.
  std::vector<double> green_row(double x, double gap, const TruncationPolicy& policy) const {
    std::vector<double> row(nodes_, 0.0);
    if (gap < policy.min_gap) {
      for (std::size_t j = 0; j < nodes_; ++j) row[j] = bernstein::green(x, gap, points_[j], 0.0, geometry_, policy);
      return row;
    }
    const ModeBasis& basis = ModeBasis::of(geometry_);
    const std::size_t modes = std::min(modes_, policy.max_modes);
    for (std::size_t n = 0; n < modes; ++n) {
      const double scale = std::exp(-basis.eigenvalue(n) * gap) / basis.normalizer(n);
      if (n > 0 && scale < 1e-18) break;
      const double factor = basis.value(n, x) * scale;
      const double* e = &table_[n * nodes_];
      for (std::size_t j = 0; j < nodes_; ++j) row[j] += factor * e[j];
    }
    for (double& g : row) g = std::max(g, 0.0);
    return row;
  }

  /// Trapezoid cumulative sums of a density given at the nodes.
  std::vector<double> cumulative(const std::vector<double>& density) const {
    std::vector<double> c(nodes_, 0.0);
    for (std::size_t j = 1; j < nodes_; ++j) c[j] = c[j - 1] + 0.5 * step_ * (density[j - 1] + density[j]);
    return c;
  }

  /// Inverse of a piecewise-linear CDF given by cumulative sums.
  double invert(const std::vector<double>& cdf, double u) const {
    const double target = u * cdf.back();
    auto it = std::upper_bound(cdf.begin(), cdf.end(), target);
    std::size_t j = it == cdf.begin() ? 0 : static_cast<std::size_t>(it - cdf.begin()) - 1;
    if (j + 1 >= nodes_) return points_.back();
    const double cell = cdf[j + 1] - cdf[j];
    const double frac = cell > 0.0 ? (target - cdf[j]) / cell : 0.5;
    return std::clamp(points_[j] + step_ * frac, 0.0, 1.0);
  }

 private:
  Geometry geometry_;
  std::size_t nodes_;
  std::size_t modes_ = 0;
  double step_ = 0.0;
  std::vector<double> points_;
  std::vector<double> weights_;
  std::vector<double> table_;
};

/// Samples one exact transition of the forward (m*) or backward (m) Markov
/// kernel by inverse CDF on the kernel grid.
class ExactKernelSampler {
 public:
  ExactKernelSampler(const BernsteinModel& model, std::size_t kernel_grid)
      : model_(&model), grid_(model.geometry(), kernel_grid, model.policy().max_modes) {}

  /// Density of y -> m*(x,s; y,t) w(y) on the grid.
  std::vector<double> forward_density(double x, double s, double t) const {
    check_order(s, t);
    std::vector<double> row = grid_.green_row(x, t - s, model_->policy());
    const double factor = std::exp(-model_->potential() * (t - s)) / model_->v(x, s);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] *= factor * model_->v(grid_.point(j), t) * grid_.weight(j);
    return row;
  }

  /// Density of y -> m(x,t; y,s) w(y) on the grid.
  std::vector<double> backward_density(double x, double t, double s) const {
    check_order(s, t);
    std::vector<double> row = grid_.green_row(x, t - s, model_->policy());
    const double factor = std::exp(-model_->potential() * (t - s)) / model_->u(x, t);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] *= factor * model_->u(grid_.point(j), s) * grid_.weight(j);
    return row;
  }

  template <class Source>
  double forward_step(double x, double s, double t, Source& source) const {
    return sample(forward_density(x, s, t), source.uniform());
  }

  template <class Source>
  double backward_step(double x, double t, double s, Source& source) const {
    return sample(backward_density(x, t, s), source.uniform());
  }

  const KernelGrid& grid() const { return grid_; }

 private:
  void check_order(double s, double t) const {
    model_->check_time(s);
    model_->check_time(t);
    if (!(s < t)) fail(ErrorCode::ordering, "exact kernel step needs s < t");
  }

  double sample(const std::vector<double>& density, double u) const {
    const std::vector<double> cdf = grid_.cumulative(density);
    if (!(cdf.back() >= 0.999)) {
      fail(ErrorCode::kernel_integration, "kernel mass " + std::to_string(cdf.back()) + " on the grid is below 0.999");
    }
    return grid_.invert(cdf, u);
  }

  const BernsteinModel* model_;
  KernelGrid grid_;
};

/// One exact forward transition y ~ m*(x,s; ., t).
template <class Source>
double exact_kernel_step(const BernsteinModel& model, double x, double s, double t, Source& source,
                         std::size_t kernel_grid = 512) {
  return ExactKernelSampler(model, kernel_grid).forward_step(x, s, t, source);
}

/// Draws (Z_0, Z_T) from the endpoint measure phi(x) g(y,T;x,0) psi(y):
/// first x from its marginal, then y from the conditional slice, both by
/// inverse CDF on a tabulated grid.
class EndpointSampler {
 public:
  EndpointSampler(const BernsteinModel& model, std::size_t kernel_grid)
      : grid_(model.geometry(), kernel_grid, model.policy().max_modes) {
    const std::size_t k = grid_.size();
    const double damping = std::exp(-model.potential() * model.horizon());
    std::vector<double> phi(k);
    std::vector<double> psi(k);
    for (std::size_t j = 0; j < k; ++j) {
      phi[j] = model.phi_datum(grid_.point(j)) * grid_.weight(j);
      psi[j] = model.psi_datum(grid_.point(j)) * grid_.weight(j);
    }
    rows_.resize(k);
    std::vector<double> row_mass(k);
    for (std::size_t i = 0; i < k; ++i) {
      std::vector<double> row = grid_.green_row(grid_.point(i), model.horizon(), model.policy());
      for (std::size_t j = 0; j < k; ++j) row[j] *= damping * phi[i] * psi[j];
      rows_[i] = grid_.cumulative(row);
      row_mass[i] = rows_[i].back();
    }
    marginal_ = grid_.cumulative(row_mass);
    row_mass_ = std::move(row_mass);
  }

  template <class Source>
  std::pair<double, double> sample(Source& source) const {
    const double x = grid_.invert(marginal_, source.uniform());
    const std::size_t k = grid_.size();
    std::size_t i = std::min(static_cast<std::size_t>(x / grid_.step()), k - 2);
    const double w = std::clamp((x - grid_.point(i)) / grid_.step(), 0.0, 1.0);
    const auto& lo = rows_[i];
    const auto& hi = rows_[i + 1];
    const double total = (1.0 - w) * lo.back() + w * hi.back();
    const double target = source.uniform() * total;
    std::size_t a = 0;
    std::size_t b = k - 1;
    while (b - a > 1) {
      const std::size_t mid = (a + b) / 2;
      if ((1.0 - w) * lo[mid] + w * hi[mid] <= target) {
        a = mid;
      } else {
        b = mid;
      }
    }
    const double ca = (1.0 - w) * lo[a] + w * hi[a];
    const double cb = (1.0 - w) * lo[b] + w * hi[b];
    const double frac = cb > ca ? (target - ca) / (cb - ca) : 0.5;
    const double y = std::clamp(grid_.point(a) + grid_.step() * frac, 0.0, 1.0);
    return {x, y};
  }

  /// Endpoint mass seen by the tabulation (close to 1 for a normalized model).
  double tabulated_mass() const { return marginal_.back(); }

 private:
  KernelGrid grid_;
  std::vector<std::vector<double>> rows_;
  std::vector<double> row_mass_;
  std::vector<double> marginal_;
};

template <class Source>
std::pair<double, double> sample_endpoints(const BernsteinModel& model, Source& source,
                                           std::size_t kernel_grid = 512) {
  return EndpointSampler(model, kernel_grid).sample(source);
}

namespace detail {

template <class Source>
Path exact_path(const BernsteinModel& model, const ExactKernelSampler& sampler, std::size_t steps, double start,
                Direction direction, Source& source) {
  check_state(start, "start state");
  const double horizon = model.horizon();
  Path path;
  path.direction = direction;
  path.times.resize(steps + 1);
  path.states.resize(steps + 1);
  for (std::size_t i = 0; i <= steps; ++i) {
    path.times[i] = i == steps ? horizon : horizon * static_cast<double>(i) / static_cast<double>(steps);
  }
  if (direction == Direction::forward) {
    path.states[0] = start;
    for (std::size_t i = 0; i < steps; ++i) {
      path.states[i + 1] = sampler.forward_step(path.states[i], path.times[i], path.times[i + 1], source);
    }
  } else {
    path.states[steps] = start;
    for (std::size_t i = steps; i > 0; --i) {
      path.states[i - 1] = sampler.backward_step(path.states[i], path.times[i], path.times[i - 1], source);
    }
  }
  return path;
}

}  // namespace detail

/// Forward path from Z_0 = z0 on [0, T].
template <class Source>
Path simulate_forward(const BernsteinModel& model, const SimConfig& config, double z0, Source& source) {
  config.validate();
  if (config.scheme == Scheme::exact_kernel) {
    ExactKernelSampler sampler(model, config.kernel_grid);
    return detail::exact_path(model, sampler, config.steps, z0, Direction::forward, source);
  }
  return detail::euler_reflected(
      model.geometry(), 0.0, model.horizon(), config.steps, z0,
      [&model](double z, double t) { return model.forward_drift(z, t); }, source);
}

/// Backward path from Z_T = zT down to time 0.
template <class Source>
Path simulate_backward(const BernsteinModel& model, const SimConfig& config, double zT, Source& source) {
  config.validate();
  if (config.scheme == Scheme::exact_kernel) {
    ExactKernelSampler sampler(model, config.kernel_grid);
    return detail::exact_path(model, sampler, config.steps, zT, Direction::backward, source);
  }
  return detail::euler_reflected(
      model.geometry(), model.horizon(), 0.0, config.steps, zT,
      [&model](double z, double t) { return model.backward_drift(z, t); }, source);
}

/// Girsanov log-density removing the forward drift X = grad ln v:
///   log w = -sum X(Z_i, t_i) . dW_i - 1/2 sum |X(Z_i, t_i)|^2 dt_i.
inline WeightedPath girsanov_weight(const BernsteinModel& model, Path path) {
  const std::size_t steps = path.times.size() > 0 ? path.times.size() - 1 : 0;
  if (path.direction != Direction::forward || steps == 0 || path.noise.size() != steps * path.dim) {
    fail(ErrorCode::insufficient_path_data, "Girsanov weight needs a forward Euler path with its noise record");
  }
  if (path.dim == 2 && path.planar.size() != 2 * (steps + 1)) {
    fail(ErrorCode::insufficient_path_data, "disk path lacks planar coordinates");
  }
  double log_weight = 0.0;
  for (std::size_t i = 0; i < steps; ++i) {
    const double dt = path.times[i + 1] - path.times[i];
    const double radial = model.forward_drift(path.states[i], path.times[i]);
    if (path.dim == 1) {
      log_weight -= radial * path.noise[i] + 0.5 * radial * radial * dt;
    } else {
      const double x = path.planar[2 * i];
      const double y = path.planar[2 * i + 1];
      const double r = std::hypot(x, y);
      const double xx = r > 0.0 ? radial * x / r : 0.0;
      const double xy = r > 0.0 ? radial * y / r : 0.0;
      log_weight -= xx * path.noise[2 * i] + xy * path.noise[2 * i + 1] + 0.5 * (xx * xx + xy * xy) * dt;
    }
  }
  if (!std::isfinite(log_weight)) fail(ErrorCode::numerical_blowup, "non-finite Girsanov log-weight");
  return {std::move(path), log_weight};
}

/// Runs config.paths independent paths in parallel. `start(path_id, rng)`
/// picks the initial (forward) or terminal (backward) state; `reduce(path_id, path)`
/// condenses each path so that full trajectories need not be kept.
template <class StartFn, class ReduceFn>
auto run_paths(const BernsteinModel& model, const SimConfig& config, Direction direction, StartFn&& start,
               ReduceFn&& reduce) {
  config.validate();
  std::optional<ExactKernelSampler> sampler;
  if (config.scheme == Scheme::exact_kernel) sampler.emplace(model, config.kernel_grid);
  return map_indices(config.paths, resolve_threads(config.threads), [&](std::size_t id) {
    Rng start_rng(config.seed, id, stream::start);
    const double z = start(id, start_rng);
    Rng rng(config.seed, id, stream::path);
    Path path;
    if (sampler) {
      path = detail::exact_path(model, *sampler, config.steps, z, direction, rng);
    } else if (direction == Direction::forward) {
      path = detail::euler_reflected(
          model.geometry(), 0.0, model.horizon(), config.steps, z,
          [&model](double zz, double t) { return model.forward_drift(zz, t); }, rng);
    } else {
      path = detail::euler_reflected(
          model.geometry(), model.horizon(), 0.0, config.steps, z,
          [&model](double zz, double t) { return model.backward_drift(zz, t); }, rng);
    }
    return reduce(id, path);
  });
}

/// Start rule drawing from the endpoint measure: Z_0 for forward paths, Z_T
/// for backward paths.
struct EndpointStart {
  const EndpointSampler* sampler;
  Direction direction;
  double operator()(std::size_t, Rng& rng) const {
    const auto [z0, zT] = sampler->sample(rng);
    return direction == Direction::forward ? z0 : zT;
  }
};

}  // namespace bernstein
