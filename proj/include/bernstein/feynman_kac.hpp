#pragma once

// Monte Carlo Feynman-Kac estimators of u_phi and v_psi under driftless
// reflected Brownian motion, with the spectral values as targets.

#include <bernstein/error.hpp>
#include <bernstein/model.hpp>
#include <bernstein/parallel.hpp>
#include <bernstein/quadrature.hpp>
#include <bernstein/rng.hpp>
#include <bernstein/sde.hpp>
#include <bernstein/stats.hpp>

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace bernstein {

struct EstimatorReport {
  double estimate = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
  std::optional<double> target;
  std::string label;  ///< where the target comes from

  /// (estimate - target) / std_error; 0 when both agree exactly.
  double z_score() const {
    if (!target) return 0.0;
    const double diff = estimate - *target;
    if (std_error > 0.0) return diff / std_error;
    return diff == 0.0 ? 0.0 : std::copysign(INFINITY, diff);
  }
};

namespace detail {

/// Terminal states of config.paths driftless reflected paths from (x, t_from).
inline std::vector<double> brownian_endpoints(Geometry g, double x, double t_from, double t_to,
                                              const SimConfig& config, std::uint64_t purpose) {
  config.validate();
  return map_indices(config.paths, resolve_threads(config.threads), [&](std::size_t id) {
    Rng rng(config.seed, id, purpose);
    const Path path = reflected_brownian_path(g, x, t_from, t_to, config.steps, rng);
    // states are stored on an increasing time grid
    return t_to > t_from ? path.states.back() : path.states.front();
  });
}

}  // namespace detail

inline EstimatorReport summarize(const std::vector<double>& values, std::optional<double> target, std::string label) {
  RunningStats stats;
  for (double v : values) stats.add(v);
  return {stats.mean(), stats.std_error(), stats.count(), target, std::move(label)};
}

/// u_phi(x, t) = E[exp(-V0 t) phi(Z_0) | Z_t = x] over backward reflected paths.
/// At t = 0 the value phi(x) is returned exactly.
inline EstimatorReport estimate_u(const BernsteinModel& model, double x, double t, const SimConfig& config) {
  check_state(x, "x");
  model.check_time(t);
  if (t == 0.0) return {model.phi_datum(x), 0.0, 0, model.u(x, 0.0), "datum at t = 0"};
  const auto ends = detail::brownian_endpoints(model.geometry(), x, t, 0.0, config, stream::fk_u);
  const double damping = std::exp(-model.potential() * t);
  std::vector<double> values(ends.size());
  for (std::size_t i = 0; i < ends.size(); ++i) values[i] = damping * model.phi_datum(ends[i]);
  return summarize(values, model.u(x, t), "spectral u");
}

/// v_psi(x, t) = E[exp(-V0 (T - t)) psi(Z_T) | Z_t = x] over forward reflected
/// paths. At t = T the value psi(x) is returned exactly.
inline EstimatorReport estimate_v(const BernsteinModel& model, double x, double t, const SimConfig& config) {
  check_state(x, "x");
  model.check_time(t);
  const double horizon = model.horizon();
  if (t == horizon) return {model.psi_datum(x), 0.0, 0, model.v(x, horizon), "datum at t = T"};
  const auto ends = detail::brownian_endpoints(model.geometry(), x, t, horizon, config, stream::fk_v);
  const double damping = std::exp(-model.potential() * (horizon - t));
  std::vector<double> values(ends.size());
  for (std::size_t i = 0; i < ends.size(); ++i) values[i] = damping * model.psi_datum(ends[i]);
  return summarize(values, model.v(x, t), "spectral v");
}

struct KernelConsistency {
  EstimatorReport backward;  ///< E[phi(Z_0) | Z_t = x] against int g(x,t;y,0) phi(y) dmu(y)
  EstimatorReport forward;   ///< E[psi(Z_T) | Z_t = x] against int g(y,T;x,t) psi(y) dmu(y)
};

/// Monte Carlo expectations paired with the Green-kernel integrals they
/// represent, for models without potential.
inline KernelConsistency kernel_consistency(const BernsteinModel& model, double x, double t, const SimConfig& config) {
  if (model.potential() != 0.0) fail(ErrorCode::precondition, "kernel_consistency needs V0 = 0");
  check_state(x, "x");
  const double horizon = model.horizon();
  require(t > 0.0 && t < horizon, ErrorCode::domain, "kernel_consistency needs 0 < t < T");
  const QuadratureRule rule = simpson_rule(0.0, 1.0);
  const Geometry g = model.geometry();
  const double back = rule.integrate(
      [&](double y) { return model.green(x, t, y, 0.0) * model.phi_datum(y) * measure_weight(g, y); });
  const double fwd = rule.integrate(
      [&](double y) { return model.green(y, horizon, x, t) * model.psi_datum(y) * measure_weight(g, y); });

  KernelConsistency out;
  auto ends = detail::brownian_endpoints(g, x, t, 0.0, config, stream::fk_u);
  for (double& z : ends) z = model.phi_datum(z);
  out.backward = summarize(ends, back, "Green quadrature");
  ends = detail::brownian_endpoints(g, x, t, horizon, config, stream::fk_v);
  for (double& z : ends) z = model.psi_datum(z);
  out.forward = summarize(ends, fwd, "Green quadrature");
  return out;
}

}  // namespace bernstein
