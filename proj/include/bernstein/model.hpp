#pragma once

// A reversible Bernstein diffusion built from a forward datum phi, a final
// datum psi and a constant potential V0 on one of the supported geometries.
// Kernels, drifts and densities all refer to the geometry measure dmu.

#include <bernstein/error.hpp>
#include <bernstein/quadrature.hpp>
#include <bernstein/spectral.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace bernstein {

enum class Normalization {
  rescale_psi,  ///< divide psi by the endpoint mass so that it integrates to one
  keep,         ///< take the data as given (negative controls)
};

class BernsteinModel {
 public:
  BernsteinModel(Geometry geometry, double horizon, SpectralExpansion phi, SpectralExpansion psi,
                 double potential = 0.0, TruncationPolicy policy = {},
                 Normalization normalization = Normalization::rescale_psi)
      : geometry_(geometry),
        horizon_(horizon),
        potential_(potential),
        policy_(policy),
        phi_(std::move(phi)),
        psi_(std::move(psi)) {
    require(horizon_ > 0.0 && std::isfinite(horizon_), ErrorCode::domain, "horizon must be positive");
    require(std::isfinite(potential_), ErrorCode::domain, "potential must be finite");
    require(phi_.geometry() == geometry_ && psi_.geometry() == geometry_, ErrorCode::unsupported_geometry,
            "phi and psi must be expanded on the model geometry");
    require(phi_.direction() == Direction::forward && psi_.direction() == Direction::backward,
            ErrorCode::invalid_datum, "phi must be a forward expansion and psi a backward one");
    validate_policy(policy_, geometry_);

    raw_mass_ = spectral_mass();
    require(raw_mass_ > 0.0 && std::isfinite(raw_mass_), ErrorCode::positivity,
            "endpoint measure has non-positive total mass");
    if (normalization == Normalization::rescale_psi) {
      psi_scale_ = 1.0 / raw_mass_;
      psi_ = psi_.scaled(psi_scale_);
    }
    check_positivity();
  }

  Geometry geometry() const { return geometry_; }
  double horizon() const { return horizon_; }
  double potential() const { return potential_; }
  const TruncationPolicy& policy() const { return policy_; }
  const SpectralExpansion& phi() const { return phi_; }
  /// psi after normalization.
  const SpectralExpansion& psi() const { return psi_; }
  /// Factor applied to the supplied psi (1 when Normalization::keep).
  double psi_scale() const { return psi_scale_; }
  /// Endpoint mass of the data as supplied, before rescaling.
  double raw_mass() const { return raw_mass_; }
  /// Endpoint mass of the data in force, computed from the spectral coefficients.
  double endpoint_mass() const { return spectral_mass(); }

  double phi_datum(double x) const { return phi_.value(x, 0.0); }
  double psi_datum(double y) const { return psi_.value(y, 0.0); }

  /// u_phi(x, t), forward solution with the potential factor exp(-V0 t).
  double u(double x, double t) const {
    check_time(t);
    return std::exp(-potential_ * t) * phi_.value(x, t);
  }

  /// v_psi(x, t), backward solution with the potential factor exp(-V0 (T - t)).
  double v(double x, double t) const {
    check_time(t);
    return std::exp(-potential_ * (horizon_ - t)) * psi_.value(x, horizon_ - t);
  }

  /// Green function of the problem with potential, density in y.
  double green(double x, double t, double y, double s) const {
    return std::exp(-potential_ * (t - s)) * bernstein::green(x, t, y, s, geometry_, policy_);
  }

  /// mu(x, y) = phi(x) g(y, T; x, 0) psi(y).
  double endpoint_density(double x, double y) const {
    check_state(x, "x");
    check_state(y, "y");
    return phi_datum(x) * green(y, horizon_, x, 0.0) * psi_datum(y);
  }

  /// p(x,t; z,r; y,s) = g(x,t;z,r) g(z,r;y,s) / g(x,t;y,s) for s < r < t.
  double bernstein_transition(double x, double t, double z, double r, double y, double s) const {
    check_time(t);
    check_time(s);
    if (!(s < r && r < t)) {
      fail(ErrorCode::ordering, "bernstein_transition needs s < r < t");
    }
    const double denominator = green(x, t, y, s);
    if (!(denominator >= 1e-300)) fail(ErrorCode::underflow, "pinning Green function underflows");
    return green(x, t, z, r) * green(z, r, y, s) / denominator;
  }

  /// m*(x,s; y,t) = g(y,t;x,s) v(y,t) / v(x,s), forward transition density in y.
  double forward_kernel(double x, double s, double y, double t) const {
    check_order(s, t);
    return green(y, t, x, s) * v(y, t) / v(x, s);
  }

  /// m(x,t; y,s) = g(x,t;y,s) u(y,s) / u(x,t), backward transition density in y.
  double backward_kernel(double x, double t, double y, double s) const {
    check_order(s, t);
    return green(x, t, y, s) * u(y, s) / u(x, t);
  }

  /// rho(x, t) = u(x, t) v(x, t).
  double occupation(double x, double t) const {
    check_state(x);
    return u(x, t) * v(x, t);
  }

  /// b*(x, t) = d/dx ln v(x, t).
  double forward_drift(double x, double t) const {
    check_state(x);
    check_time(t);
    const double elapsed = horizon_ - t;
    return psi_.slope(x, elapsed) / psi_.value(x, elapsed);
  }

  /// b(x, t) = -d/dx ln u(x, t); vanishes at the disk center.
  double backward_drift(double x, double t) const {
    check_state(x);
    check_time(t);
    return -backward_sign_ * phi_.slope(x, t) / phi_.value(x, t);
  }

  double marginal_initial(double x) const {
    check_state(x);
    return phi_datum(x) * v(x, 0.0);
  }

  double marginal_final(double y) const {
    check_state(y);
    return psi_datum(y) * u(y, horizon_);
  }

  /// Copy whose backward drift has the wrong sign; used as a negative control.
  BernsteinModel with_flipped_backward_drift() const {
    BernsteinModel copy = *this;
    copy.backward_sign_ = -backward_sign_;
    return copy;
  }

  /// Same model with a different truncation policy (e.g. for small-gap checks).
  BernsteinModel with_policy(const TruncationPolicy& policy) const {
    validate_policy(policy, geometry_);
    BernsteinModel copy = *this;
    copy.policy_ = policy;
    return copy;
  }

  void check_time(double t) const {
    if (!(t >= 0.0 && t <= horizon_)) {
      fail(ErrorCode::domain, "time " + std::to_string(t) + " outside [0, " + std::to_string(horizon_) + "]");
    }
  }

 private:
  void check_order(double s, double t) const {
    check_time(s);
    check_time(t);
    if (!(s < t)) fail(ErrorCode::ordering, "kernel needs s < t");
  }

  // int phi(x) v(x, 0) dmu = exp(-V0 T) sum_n a_n b_n exp(-lambda_n T) ||e_n||^2
  double spectral_mass() const {
    const ModeBasis& basis = ModeBasis::of(geometry_);
    const auto& a = phi_.coefficients();
    const auto& b = psi_.coefficients();
    const std::size_t n_common = std::min(a.size(), b.size());
    double sum = 0.0;
    for (std::size_t n = 0; n < n_common; ++n) {
      sum += a[n] * b[n] * std::exp(-basis.eigenvalue(n) * horizon_) * basis.normalizer(n);
    }
    return std::exp(-potential_ * horizon_) * sum;
  }

  void check_positivity() const {
    constexpr int kStates = 101;
    constexpr int kTimes = 11;
    for (int j = 0; j < kTimes; ++j) {
      const double t = horizon_ * j / (kTimes - 1);
      for (int i = 0; i < kStates; ++i) {
        const double x = static_cast<double>(i) / (kStates - 1);
        const double uu = u(x, t);
        const double vv = v(x, t);
        if (!(uu >= 1e-9 && vv >= 1e-9)) {
          fail(ErrorCode::positivity, "u or v below 1e-9 at x=" + std::to_string(x) + ", t=" + std::to_string(t));
        }
      }
    }
  }

  Geometry geometry_;
  double horizon_;
  double potential_;
  TruncationPolicy policy_;
  SpectralExpansion phi_;
  SpectralExpansion psi_;
  double psi_scale_ = 1.0;
  double raw_mass_ = 1.0;
  double backward_sign_ = 1.0;
};

/// rho tabulated on an (x, t) grid, with the per-time mass in dmu.
class OccupationDensity {
 public:
  OccupationDensity(const BernsteinModel& model, std::vector<double> times, std::size_t nodes = kDefaultSimpsonNodes)
      : times_(std::move(times)), rule_(simpson_rule(0.0, 1.0, nodes)) {
    values_.reserve(times_.size() * rule_.nodes.size());
    for (double t : times_) {
      for (double x : rule_.nodes) values_.push_back(model.occupation(x, t));
    }
    for (std::size_t j = 0; j < times_.size(); ++j) {
      double mass = 0.0;
      for (std::size_t i = 0; i < rule_.nodes.size(); ++i) {
        mass += rule_.weights[i] * measure_weight(model.geometry(), rule_.nodes[i]) * at(i, j);
      }
      masses_.push_back(mass);
    }
  }

  const std::vector<double>& times() const { return times_; }
  const std::vector<double>& states() const { return rule_.nodes; }
  double at(std::size_t state_index, std::size_t time_index) const {
    return values_[time_index * rule_.nodes.size() + state_index];
  }
  double mass(std::size_t time_index) const { return masses_[time_index]; }

 private:
  std::vector<double> times_;
  QuadratureRule rule_;
  std::vector<double> values_;
  std::vector<double> masses_;
};

}  // namespace bernstein
