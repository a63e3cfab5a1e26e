#pragma once

#include <bernstein/error.hpp>

#include <boost/math/quadrature/gauss.hpp>

#include <cstddef>
#include <vector>

namespace bernstein {

/// Nodes and weights of a fixed quadrature rule on [a, b].
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  template <class F>
  double integrate(F&& f) const {
    double sum = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) sum += weights[i] * f(nodes[i]);
    return sum;
  }
};

inline constexpr std::size_t kDefaultSimpsonNodes = 201;

/// Composite Simpson rule with an odd number of equispaced nodes.
inline QuadratureRule simpson_rule(double a, double b, std::size_t nodes = kDefaultSimpsonNodes) {
  require(nodes >= 3 && nodes % 2 == 1, ErrorCode::domain, "Simpson rule needs an odd node count >= 3");
  require(b > a, ErrorCode::domain, "Simpson rule needs a < b");
  QuadratureRule rule;
  rule.nodes.resize(nodes);
  rule.weights.resize(nodes);
  const double h = (b - a) / static_cast<double>(nodes - 1);
  for (std::size_t i = 0; i < nodes; ++i) {
    rule.nodes[i] = (i + 1 == nodes) ? b : a + h * static_cast<double>(i);
    double w = (i == 0 || i + 1 == nodes) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    rule.weights[i] = w * h / 3.0;
  }
  return rule;
}

template <class F>
double simpson(F&& f, double a, double b, std::size_t nodes = kDefaultSimpsonNodes) {
  return simpson_rule(a, b, nodes).integrate(f);
}

/// Composite 20-point Gauss-Legendre on equal panels; used where the
/// integrand oscillates (projection onto high Bessel modes).
inline QuadratureRule gauss_legendre_rule(double a, double b, std::size_t panels = 64) {
  using Gauss = boost::math::quadrature::gauss<double, 20>;
  const auto& abscissa = Gauss::abscissa();
  const auto& weights = Gauss::weights();
  QuadratureRule rule;
  const double width = (b - a) / static_cast<double>(panels);
  for (std::size_t p = 0; p < panels; ++p) {
    const double mid = a + width * (static_cast<double>(p) + 0.5);
    const double half = 0.5 * width;
    // boost stores the non-negative half of a symmetric rule
    for (std::size_t i = 0; i < abscissa.size(); ++i) {
      if (abscissa[i] == 0.0) {
        rule.nodes.push_back(mid);
        rule.weights.push_back(half * weights[i]);
        continue;
      }
      rule.nodes.push_back(mid - half * abscissa[i]);
      rule.weights.push_back(half * weights[i]);
      rule.nodes.push_back(mid + half * abscissa[i]);
      rule.weights.push_back(half * weights[i]);
    }
  }
  return rule;
}

}  // namespace bernstein
