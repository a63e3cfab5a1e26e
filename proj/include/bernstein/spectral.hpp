#pragma once

// Neumann eigenfunction expansions and parabolic Green functions for the
// unit interval and the radial unit disk.
//
// Conventions. Every density in this library is taken with respect to the
// geometry measure dmu: Lebesgue measure dy on [0, 1], and the area measure
// 2*pi*r dr on the disk written in the radial coordinate. Mode n has
//
//   interval:  e_n(x) = cos(pi n x),     lambda_n = pi^2 n^2 / 2
//   disk:      e_n(r) = J0(sqrt(mu_n) r), lambda_n = mu_n / 2
//
// with normalizer ||e_n||^2 in L2(dmu), and the Green function is
//
//   g(x,t;y,s) = sum_n e_n(x) e_n(y) exp(-lambda_n (t-s)) / ||e_n||^2.

#include <bernstein/error.hpp>
#include <bernstein/quadrature.hpp>
#include <bernstein/special_functions.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

namespace bernstein {

enum class Geometry { interval, disk_radial };

inline std::string_view to_string(Geometry g) { return g == Geometry::interval ? "interval" : "disk"; }

/// Density of the geometry measure with respect to dr on [0, 1].
inline double measure_weight(Geometry g, double y) {
  return g == Geometry::interval ? 1.0 : 2.0 * std::numbers::pi * y;
}

inline void check_state(double x, std::string_view what = "state") {
  if (!(x >= 0.0 && x <= 1.0)) {
    fail(ErrorCode::domain, std::string(what) + " " + std::to_string(x) + " outside [0, 1]");
  }
}

struct EigenMode {
  std::size_t index = 0;
  double eigenvalue = 0.0;  ///< lambda_n, units 1/time
  double normalizer = 1.0;  ///< ||e_n||^2 in L2(dmu)
};

/// Tabulated eigen-data for one geometry.
class ModeBasis {
 public:
  static const ModeBasis& of(Geometry g) {
    static const ModeBasis interval(Geometry::interval);
    static const ModeBasis disk(Geometry::disk_radial);
    return g == Geometry::interval ? interval : disk;
  }

  Geometry geometry() const { return geometry_; }
  std::size_t capacity() const { return frequency_.size(); }
  double frequency(std::size_t n) const { return frequency_[n]; }
  double eigenvalue(std::size_t n) const { return eigenvalue_[n]; }
  double normalizer(std::size_t n) const { return normalizer_[n]; }
  EigenMode mode(std::size_t n) const { return {n, eigenvalue_[n], normalizer_[n]}; }

  double value(std::size_t n, double x) const {
    if (n == 0) return 1.0;
    const double arg = frequency_[n] * x;
    return geometry_ == Geometry::interval ? std::cos(arg) : bessel_j0(arg);
  }

  /// d e_n / dx
  double slope(std::size_t n, double x) const {
    if (n == 0) return 0.0;
    const double arg = frequency_[n] * x;
    return geometry_ == Geometry::interval ? -frequency_[n] * std::sin(arg)
                                           : -frequency_[n] * bessel_j1(arg);
  }

 private:
  explicit ModeBasis(Geometry g) : geometry_(g) {
    if (g == Geometry::interval) {
      constexpr std::size_t kIntervalCapacity = 1024;
      for (std::size_t n = 0; n < kIntervalCapacity; ++n) {
        const double k = std::numbers::pi * static_cast<double>(n);
        frequency_.push_back(k);
        eigenvalue_.push_back(0.5 * k * k);
        normalizer_.push_back(n == 0 ? 1.0 : 0.5);
      }
    } else {
      const NeumannRoots& roots = disk_spectrum();
      for (std::size_t n = 0; n < roots.size(); ++n) {
        const double k = roots.sqrt_value(n);
        const double j0 = bessel_j0(k);
        frequency_.push_back(k);
        eigenvalue_.push_back(0.5 * roots.values[n]);
        normalizer_.push_back(std::numbers::pi * j0 * j0);
      }
    }
  }

  Geometry geometry_;
  std::vector<double> frequency_;
  std::vector<double> eigenvalue_;
  std::vector<double> normalizer_;
};

/// Series length and the smallest time gap at which the spectral Green
/// function is trusted.
struct TruncationPolicy {
  std::size_t max_modes = 64;
  double min_gap = 0.01;
  double tail_tol = 1e-10;
  int image_count = 8;
};

/// Upper bound on sum_{n >= modes} sup|e_n(x) e_n(y)| / ||e_n||^2 exp(-lambda_n gap).
/// Disk amplitudes use 1/(pi J0(j)^2) <= (n+1) pi / 2 + 1 and j_{1,n} >= n pi.
inline double spectral_tail_bound(Geometry g, std::size_t modes, double gap) {
  double bound = 0.0;
  for (std::size_t n = modes; n < modes + 100000; ++n) {
    const double k = std::numbers::pi * static_cast<double>(n);
    const double decay = std::exp(-0.5 * k * k * gap);
    const double amplitude = g == Geometry::interval ? 2.0 : 0.5 * std::numbers::pi * (n + 1.0) + 1.0;
    const double term = amplitude * decay;
    bound += term;
    if (term < 1e-30 || decay == 0.0) break;
  }
  return bound;
}

inline void validate_policy(const TruncationPolicy& policy, Geometry g) {
  const ModeBasis& basis = ModeBasis::of(g);
  require(policy.max_modes >= 1 && policy.max_modes <= basis.capacity(), ErrorCode::policy,
          "max_modes must lie in [1, " + std::to_string(basis.capacity()) + "] for the " +
              std::string(to_string(g)));
  require(policy.min_gap > 0.0 && policy.tail_tol > 0.0 && policy.image_count >= 0, ErrorCode::policy,
          "min_gap and tail_tol must be positive, image_count non-negative");
  const double tail = spectral_tail_bound(g, policy.max_modes, policy.min_gap);
  if (!(tail <= policy.tail_tol)) {
    fail(ErrorCode::policy, "spectral tail bound " + std::to_string(tail) + " exceeds tail_tol with " +
                                std::to_string(policy.max_modes) + " modes at gap " +
                                std::to_string(policy.min_gap));
  }
}

/// Raw spectral sum and how much was removed by clamping at zero.
struct GreenValue {
  double value = 0.0;
  double raw = 0.0;
  double clamped = 0.0;
};

namespace detail {

inline void check_gap(double t, double s) {
  if (!(t > s)) {
    fail(ErrorCode::ordering, "Green function needs t > s (got t=" + std::to_string(t) +
                                  ", s=" + std::to_string(s) + ")");
  }
}

}  // namespace detail

inline GreenValue green_spectral_detail(double x, double t, double y, double s, Geometry g,
                                        const TruncationPolicy& policy) {
  check_state(x, "x");
  check_state(y, "y");
  detail::check_gap(t, s);
  const double gap = t - s;
  if (gap < policy.min_gap) {
    fail(ErrorCode::policy, "gap " + std::to_string(gap) + " below min_gap " +
                                std::to_string(policy.min_gap) +
                                (g == Geometry::interval ? "; use green_images" : ""));
  }
  const ModeBasis& basis = ModeBasis::of(g);
  const std::size_t modes = std::min(policy.max_modes, basis.capacity());
  double sum = 0.0;
  for (std::size_t n = 0; n < modes; ++n) {
    const double decay = std::exp(-basis.eigenvalue(n) * gap);
    const double scale = decay / basis.normalizer(n);
    if (n > 0 && scale < 1e-18) break;  // terms only shrink from here on
    sum += basis.value(n, x) * basis.value(n, y) * scale;
  }
  GreenValue out;
  out.raw = sum;
  out.value = sum < 0.0 ? 0.0 : sum;
  out.clamped = sum < 0.0 ? -sum : 0.0;
  return out;
}

/// Spectral Green function, density in y with respect to dmu.
inline double green_spectral(double x, double t, double y, double s, Geometry g,
                             const TruncationPolicy& policy = {}) {
  return green_spectral_detail(x, t, y, s, g, policy).value;
}

/// Method-of-images form of the interval Neumann heat kernel; accurate for
/// small gaps where the spectral sum needs many modes.
inline double green_images(double x, double t, double y, double s, int image_count,
                           Geometry g = Geometry::interval) {
  if (g != Geometry::interval) fail(ErrorCode::unsupported_geometry, "image sum exists only on the interval");
  check_state(x, "x");
  check_state(y, "y");
  detail::check_gap(t, s);
  const double gap = t - s;
  double sum = 0.0;
  for (int n = -image_count; n <= image_count; ++n) {
    const double a = x + y + 2.0 * n;
    const double b = x - y - 2.0 * n;
    sum += std::exp(-a * a / (2.0 * gap)) + std::exp(-b * b / (2.0 * gap));
  }
  return sum / std::sqrt(2.0 * std::numbers::pi * gap);
}

/// Green function dispatcher: spectral above policy.min_gap, images below
/// (interval only).
inline double green(double x, double t, double y, double s, Geometry g, const TruncationPolicy& policy = {}) {
  detail::check_gap(t, s);
  if (t - s >= policy.min_gap) return green_spectral(x, t, y, s, g, policy);
  if (g == Geometry::interval) return green_images(x, t, y, s, policy.image_count);
  fail(ErrorCode::policy, "gap " + std::to_string(t - s) + " below min_gap " + std::to_string(policy.min_gap) +
                              " and the disk has no image form");
}

enum class Direction { forward, backward };

/// Coefficients of u_phi (forward, evolves from t = 0) or v_psi (backward,
/// evolves toward t = T) in the Neumann basis.
class SpectralExpansion {
 public:
  SpectralExpansion(Geometry g, Direction direction, std::vector<double> coefficients)
      : geometry_(g), direction_(direction), coefficients_(std::move(coefficients)) {
    const ModeBasis& basis = ModeBasis::of(g);
    require(!coefficients_.empty() && coefficients_.size() <= basis.capacity(), ErrorCode::invalid_datum,
            "coefficient count must lie in [1, " + std::to_string(basis.capacity()) + "]");
    double largest = 0.0;
    for (double c : coefficients_) {
      require(std::isfinite(c), ErrorCode::invalid_datum, "non-finite expansion coefficient");
      largest = std::max(largest, std::abs(c));
    }
    // Modes far below round-off of the leading coefficient are skipped
    // during evaluation; they stay in coefficients().
    for (std::size_t n = 0; n < coefficients_.size(); ++n) {
      if (std::abs(coefficients_[n]) > kPruneRelative * largest) active_.push_back(n);
    }
    constexpr int kGrid = 201;
    for (int i = 0; i < kGrid; ++i) {
      const double x = static_cast<double>(i) / (kGrid - 1);
      const double value = this->value(x, 0.0);
      if (!(value > 0.0)) {
        fail(ErrorCode::positivity, "expansion is not positive at x=" + std::to_string(x));
      }
    }
  }

  Geometry geometry() const { return geometry_; }
  Direction direction() const { return direction_; }
  const std::vector<double>& coefficients() const { return coefficients_; }
  std::size_t modes() const { return coefficients_.size(); }

  /// sum_n a_n e_n(x) exp(-lambda_n * elapsed), elapsed measured from the
  /// datum time (t for forward, T - t for backward).
  double value(double x, double elapsed) const {
    const ModeBasis& basis = ModeBasis::of(geometry_);
    double sum = 0.0;
    for (std::size_t n : active_) {
      sum += coefficients_[n] * basis.value(n, x) * std::exp(-basis.eigenvalue(n) * elapsed);
    }
    return sum;
  }

  /// d/dx of value(x, elapsed), differentiated term by term.
  double slope(double x, double elapsed) const {
    const ModeBasis& basis = ModeBasis::of(geometry_);
    double sum = 0.0;
    for (std::size_t n : active_) {
      if (n == 0) continue;
      sum += coefficients_[n] * basis.slope(n, x) * std::exp(-basis.eigenvalue(n) * elapsed);
    }
    return sum;
  }

  /// True when only the constant mode is active.
  bool is_constant() const { return active_.size() == 1 && active_.front() == 0; }

  SpectralExpansion scaled(double factor) const {
    std::vector<double> c = coefficients_;
    for (double& v : c) v *= factor;
    return SpectralExpansion(geometry_, direction_, std::move(c));
  }

 private:
  static constexpr double kPruneRelative = 1e-14;

  Geometry geometry_;
  Direction direction_;
  std::vector<double> coefficients_;
  std::vector<std::size_t> active_;
};

/// Value of the expansion at (x, t) on the horizon [0, T].
inline double evaluate_expansion(const SpectralExpansion& e, double x, double t, double horizon) {
  check_state(x);
  if (!(t >= 0.0 && t <= horizon)) {
    fail(ErrorCode::domain, "time " + std::to_string(t) + " outside [0, " + std::to_string(horizon) + "]");
  }
  const double elapsed = e.direction() == Direction::forward ? t : horizon - t;
  return e.value(x, elapsed);
}

/// Coefficients a_n = <datum, e_n>_dmu / ||e_n||^2 by composite Gauss-Legendre
/// quadrature. On the interval this is a_0 = int phi, a_n = 2 int phi cos(pi n x);
/// on the disk a_n = 2 J0(sqrt(mu_n))^-2 int r phi(r) J0(sqrt(mu_n) r) dr.
inline SpectralExpansion project_datum(const std::function<double(double)>& datum, Geometry g, std::size_t modes,
                                       Direction direction = Direction::forward) {
  const ModeBasis& basis = ModeBasis::of(g);
  require(modes >= 1 && modes <= basis.capacity(), ErrorCode::domain,
          "mode count must lie in [1, " + std::to_string(basis.capacity()) + "]");
  const QuadratureRule rule = gauss_legendre_rule(0.0, 1.0, 64);
  std::vector<double> weighted(rule.nodes.size());
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double x = rule.nodes[i];
    const double f = datum(x);
    if (!std::isfinite(f)) fail(ErrorCode::invalid_datum, "datum is not finite at x=" + std::to_string(x));
    weighted[i] = rule.weights[i] * f * measure_weight(g, x);
  }
  std::vector<double> coefficients(modes);
  for (std::size_t n = 0; n < modes; ++n) {
    double sum = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) sum += weighted[i] * basis.value(n, rule.nodes[i]);
    coefficients[n] = sum / basis.normalizer(n);
  }
  return SpectralExpansion(g, direction, std::move(coefficients));
}

}  // namespace bernstein
