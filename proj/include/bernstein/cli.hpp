#pragma once

// Command-line front end: roots | density | simulate | fk | verify.
// Data go to stdout (or --out), diagnostics to stderr.

#include <bernstein/config.hpp>
#include <bernstein/error.hpp>
#include <bernstein/feynman_kac.hpp>
#include <bernstein/model.hpp>
#include <bernstein/sde.hpp>
#include <bernstein/special_functions.hpp>
#include <bernstein/verify.hpp>

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace bernstein::cli {

/// Shortest round-trip decimal form used in every CSV column.
inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Common {
  std::string out;
  int threads = 0;
};

inline void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--out", c.out, "write CSV to this file instead of stdout");
  sub->add_option("--threads", c.threads, "worker threads (default: BERNSTEIN_LAB_THREADS or all cores)")
      ->check(CLI::NonNegativeNumber);
}

inline void emit(const Common& c, const std::string& text, std::ostream& out) {
  if (c.out.empty()) {
    out << text;
    out.flush();
    return;
  }
  std::ofstream file(c.out, std::ios::binary);
  if (!file) fail(ErrorCode::precondition, "cannot open '" + c.out + "' for writing");
  file << text;
}

inline std::vector<double> parse_times(const std::string& text) {
  std::vector<double> times;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::string item = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    const auto value = detail::parse_real(item);
    if (!value) fail(ErrorCode::parse, "cannot parse time '" + item + "'");
    times.push_back(*value);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return times;
}

inline std::string run_roots(std::size_t count) {
  const NeumannRoots roots = neumann_eigenvalues(count);
  std::string csv = "n,mu,sqrt_mu,residual\n";
  for (std::size_t i = 0; i < roots.size(); ++i) {
    csv += std::to_string(i + 1) + "," + num(roots.values[i]) + "," + num(roots.sqrt_value(i)) + "," +
           num(roots.residuals[i]) + "\n";
  }
  return csv;
}

inline std::string run_density(const BernsteinModel& model, const std::vector<double>& times, std::size_t grid) {
  require(grid >= 2, ErrorCode::precondition, "--grid must be at least 2");
  std::string csv = "t,x,u,v,rho,b_star,b\n";
  for (double t : times) {
    model.check_time(t);
    for (std::size_t i = 0; i < grid; ++i) {
      const double x = i + 1 == grid ? 1.0 : static_cast<double>(i) / static_cast<double>(grid - 1);
      csv += num(t) + "," + num(x) + "," + num(model.u(x, t)) + "," + num(model.v(x, t)) + "," +
             num(model.occupation(x, t)) + "," + num(model.forward_drift(x, t)) + "," +
             num(model.backward_drift(x, t)) + "\n";
    }
  }
  return csv;
}

inline std::string run_simulate(const BernsteinModel& model, const SimConfig& config, Direction direction,
                                std::size_t record_every) {
  require(record_every >= 1, ErrorCode::precondition, "--record-every must be positive");
  const EndpointSampler sampler(model, config.kernel_grid);
  const auto rows = run_paths(
      model, config, direction, EndpointStart{&sampler, direction}, [&](std::size_t id, const Path& p) {
        std::string text;
        const std::string prefix = std::to_string(id) + ",";
        for (std::size_t i = 0; i < p.times.size(); ++i) {
          if (i % record_every != 0 && i + 1 != p.times.size()) continue;
          text += prefix + num(p.times[i]) + "," + num(p.states[i]) + "\n";
        }
        return text;
      });
  std::string csv = "path_id,t,z\n";
  for (const auto& r : rows) csv += r;
  return csv;
}

inline std::string fk_row(const std::string& which, double x, double t, const EstimatorReport& r) {
  return which + "," + num(x) + "," + num(t) + "," + num(r.estimate) + "," + num(r.std_error) + "," +
         (r.target ? num(*r.target) : std::string()) + "," + num(r.z_score()) + "\n";
}

inline std::string run_fk(const BernsteinModel& model, double x, double t, const SimConfig& config,
                          const std::string& which) {
  std::string csv = "which,x,t,estimate,std_error,target,z_score\n";
  if (which == "u" || which == "both") csv += fk_row("u", x, t, estimate_u(model, x, t, config));
  if (which == "v" || which == "both") csv += fk_row("v", x, t, estimate_v(model, x, t, config));
  return csv;
}

inline std::string run_verify(const BernsteinModel& model, const VerifyConfig& vc, bool& all_ok, std::ostream& log) {
  const auto results = run_all(model, vc);
  all_ok = all_passed(results);
  std::string csv = "name,kind,metric,threshold,passed\n";
  for (const auto& r : results) {
    csv += r.name + "," + std::string(to_string(r.kind)) + "," + num(r.metric) + "," + num(r.threshold) + "," +
           (r.passed ? "true" : "false") + "\n";
    log << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
  }
  return csv;
}

/// Entry point; args exclude the program name. Returns the process exit code.
inline int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Reversible Bernstein diffusions on the interval and the disk", "bernstein_lab"};
  app.require_subcommand(1);

  Common common;

  auto* roots = app.add_subcommand("roots", "Neumann eigenvalues of the unit disk");
  std::size_t count = 5;
  roots->add_option("--count", count, "number of eigenvalues (<= 128)")->check(CLI::Range(1, 128));
  add_common(roots, common);

  std::string model_path;
  auto* density = app.add_subcommand("density", "u, v, rho and drifts on a grid");
  std::string times_text;
  std::size_t grid = 21;
  density->add_option("--model", model_path, "model config file")->required();
  density->add_option("--times", times_text, "comma-separated times")->required();
  density->add_option("--grid", grid, "grid points on [0, 1]");
  add_common(density, common);

  SimConfig sim;
  std::string scheme = "euler";
  std::string direction = "forward";
  std::size_t record_every = 1;
  auto* simulate = app.add_subcommand("simulate", "sample paths from the endpoint law");
  simulate->add_option("--model", model_path, "model config file")->required();
  simulate->add_option("--paths", sim.paths, "number of paths");
  simulate->add_option("--steps", sim.steps, "time steps on [0, T]");
  simulate->add_option("--seed", sim.seed, "random seed");
  simulate->add_option("--scheme", scheme, "euler | exact")->check(CLI::IsMember({"euler", "exact"}));
  simulate->add_option("--direction", direction, "forward | backward")->check(CLI::IsMember({"forward", "backward"}));
  simulate->add_option("--record-every", record_every, "keep every k-th time point");
  simulate->add_option("--kernel-grid", sim.kernel_grid, "grid of the inverse-CDF samplers");
  add_common(simulate, common);

  double fk_x = 0.0;
  double fk_t = 0.0;
  std::string which = "both";
  SimConfig fk_sim;
  fk_sim.paths = 10000;
  auto* fk = app.add_subcommand("fk", "Feynman-Kac estimates of u and v");
  fk->add_option("--model", model_path, "model config file")->required();
  fk->add_option("--x", fk_x, "state")->required();
  fk->add_option("--t", fk_t, "time")->required();
  fk->add_option("--paths", fk_sim.paths, "number of paths");
  fk->add_option("--steps", fk_sim.steps, "time steps per path");
  fk->add_option("--seed", fk_sim.seed, "random seed");
  fk->add_option("--which", which, "u | v | both")->check(CLI::IsMember({"u", "v", "both"}));
  add_common(fk, common);

  VerifyConfig vc;
  auto* verify = app.add_subcommand("verify", "run the verification suite");
  verify->add_option("--model", model_path, "model config file")->required();
  verify->add_flag("--strict", vc.strict, "rerun failing statistical checks with 4x paths");
  verify->add_option("--only", vc.only, "comma-separated check names")->delimiter(',');
  verify->add_option("--seed", vc.sim.seed, "random seed");
  verify->add_option("--paths", vc.sim.paths, "paths per statistical check");
  verify->add_option("--qv-paths", vc.qv_paths, "paths for quadratic variation and martingale checks");
  verify->add_option("--steps", vc.sim.steps, "time steps on [0, T]");
  add_common(verify, common);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n" << "run with --help for usage\n";
    return 2;
  }

  try {
    if (*roots) {
      emit(common, run_roots(count), out);
      return 0;
    }
    const BernsteinModel model = build_model(load_config(model_path));
    if (*density) {
      emit(common, run_density(model, parse_times(times_text), grid), out);
      return 0;
    }
    if (*simulate) {
      sim.threads = common.threads;
      sim.scheme = scheme == "exact" ? Scheme::exact_kernel : Scheme::euler_reflected;
      emit(common, run_simulate(model, sim, direction == "forward" ? Direction::forward : Direction::backward, record_every),
           out);
      return 0;
    }
    if (*fk) {
      fk_sim.threads = common.threads;
      emit(common, run_fk(model, fk_x, fk_t, fk_sim, which), out);
      return 0;
    }
    if (*verify) {
      vc.sim.threads = common.threads;
      bool ok = false;
      emit(common, run_verify(model, vc, ok, err), out);
      return ok ? 0 : 1;
    }
  } catch (const Error& e) {
    err << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace bernstein::cli
