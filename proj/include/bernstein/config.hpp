#pragma once

// Flat key=value model files:
//
//   # Example 1
//   geometry=interval
//   phi=example1_phi
//   psi=unit
//
// Data are a preset name or a comma-separated coefficient list in the
// Neumann basis of the geometry.

#include <bernstein/error.hpp>
#include <bernstein/model.hpp>
#include <bernstein/spectral.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace bernstein {

struct ModelConfig {
  Geometry geometry = Geometry::interval;
  double horizon = 1.0;
  std::string phi = "unit";
  std::string psi = "unit";
  double potential = 0.0;
  TruncationPolicy policy{};
  Normalization normalization = Normalization::rescale_psi;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline std::string config_where(std::size_t line, std::string_view key) {
  return "line " + std::to_string(line) + ", key '" + std::string(key) + "': ";
}

inline std::optional<double> parse_real(std::string_view text) {
  text = trim(text);
  double value = 0.0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size() || text.empty()) return std::nullopt;
  return value;
}

inline std::optional<std::size_t> parse_count(std::string_view text) {
  text = trim(text);
  std::size_t value = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size() || text.empty()) return std::nullopt;
  return value;
}

inline std::optional<std::vector<double>> parse_list(std::string_view text) {
  std::vector<double> out;
  while (true) {
    const auto comma = text.find(',');
    const auto value = parse_real(text.substr(0, comma));
    if (!value) return std::nullopt;
    out.push_back(*value);
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return out;
}

/// Coefficients of a datum preset, or nullopt for an unknown name.
inline std::optional<std::vector<double>> preset_coefficients(std::string_view name, Geometry g) {
  if (name == "unit") return std::vector<double>{1.0};
  if (name == "example1_phi" && g == Geometry::interval) return std::vector<double>{1.0, 0.5};
  if (name == "example2_phi" && g == Geometry::disk_radial) {
    return std::vector<double>{1.0 / std::numbers::pi, 1.0 / std::numbers::pi};
  }
  return std::nullopt;
}

inline bool is_datum(std::string_view spec, Geometry g) {
  return preset_coefficients(spec, g).has_value() || parse_list(spec).has_value();
}

}  // namespace detail

/// Coefficients for a datum specification on a geometry.
inline std::vector<double> datum_coefficients(std::string_view spec, Geometry g) {
  if (auto preset = detail::preset_coefficients(spec, g)) return *preset;
  if (auto list = detail::parse_list(spec)) return *list;
  fail(ErrorCode::parse, "datum '" + std::string(spec) + "' is neither a preset for " + std::string(to_string(g)) +
                             " nor a coefficient list");
}

inline ModelConfig parse_config(std::string_view text) {
  ModelConfig config;
  bool have_geometry = false;
  std::set<std::string, std::less<>> seen;
  struct Pending {
    std::size_t line;
    std::string key;
    std::string value;
  };
  std::vector<Pending> data;  // checked once the geometry is known

  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto newline = text.find('\n');
    std::string_view line = text.substr(0, newline);
    text.remove_prefix(newline == std::string_view::npos ? text.size() : newline + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      fail(ErrorCode::parse, "line " + std::to_string(line_no) + ": expected key=value, got '" + std::string(line) + "'");
    }
    const std::string_view key = detail::trim(line.substr(0, eq));
    const std::string_view value = detail::trim(line.substr(eq + 1));
    const std::string where = detail::config_where(line_no, key);
    if (!seen.insert(std::string(key)).second) fail(ErrorCode::parse, where + "duplicate key");

    auto real = [&](double lo, bool open_lo) {
      const auto v = detail::parse_real(value);
      if (!v || !std::isfinite(*v)) fail(ErrorCode::parse, where + "cannot parse '" + std::string(value) + "' as a number");
      if (open_lo ? !(*v > lo) : !(*v >= lo)) {
        fail(ErrorCode::parse, where + "value " + std::string(value) + " out of range");
      }
      return *v;
    };

    if (key == "geometry") {
      if (value == "interval") {
        config.geometry = Geometry::interval;
      } else if (value == "disk") {
        config.geometry = Geometry::disk_radial;
      } else {
        fail(ErrorCode::parse, where + "expected interval or disk, got '" + std::string(value) + "'");
      }
      have_geometry = true;
    } else if (key == "horizon") {
      config.horizon = real(0.0, true);
    } else if (key == "potential") {
      config.potential = real(-std::numeric_limits<double>::infinity(), false);
    } else if (key == "phi" || key == "psi") {
      (key == "phi" ? config.phi : config.psi) = std::string(value);
      data.push_back({line_no, std::string(key), std::string(value)});
    } else if (key == "max_modes" || key == "image_count") {
      const auto v = detail::parse_count(value);
      if (!v || *v == 0) fail(ErrorCode::parse, where + "expected a positive integer, got '" + std::string(value) + "'");
      if (key == "max_modes") {
        config.policy.max_modes = *v;
      } else {
        config.policy.image_count = static_cast<int>(*v);
      }
    } else if (key == "min_gap") {
      config.policy.min_gap = real(0.0, true);
    } else if (key == "tail_tol") {
      config.policy.tail_tol = real(0.0, true);
    } else if (key == "normalize") {
      if (value == "true") {
        config.normalization = Normalization::rescale_psi;
      } else if (value == "false") {
        config.normalization = Normalization::keep;
      } else {
        fail(ErrorCode::parse, where + "expected true or false, got '" + std::string(value) + "'");
      }
    } else {
      fail(ErrorCode::parse, where + "unknown key");
    }
  }
  if (!have_geometry) fail(ErrorCode::parse, "missing required key 'geometry'");
  for (const auto& d : data) {
    if (!detail::is_datum(d.value, config.geometry)) {
      fail(ErrorCode::parse, detail::config_where(d.line, d.key) + "'" + d.value + "' is neither a preset for " +
                                 std::string(to_string(config.geometry)) + " nor a coefficient list");
    }
  }
  return config;
}

inline ModelConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::parse, "cannot read config file '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

inline BernsteinModel build_model(const ModelConfig& config) {
  SpectralExpansion phi(config.geometry, Direction::forward, datum_coefficients(config.phi, config.geometry));
  SpectralExpansion psi(config.geometry, Direction::backward, datum_coefficients(config.psi, config.geometry));
  return BernsteinModel(config.geometry, config.horizon, std::move(phi), std::move(psi), config.potential,
                        config.policy, config.normalization);
}

}  // namespace bernstein
