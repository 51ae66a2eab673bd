#pragma once

// Command-line front end: check | simulate | equilibria | sweep.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "flownet/io.hpp"

namespace flownet::cli {

enum ExitCode : int {
  kOk = 0,
  kInvalidScenario = 2,
  kNumericalFailure = 3,
  kPrecondition = 4,
};

namespace detail {

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidSpec("cannot read scenario file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return io::parse_scenario(buf.str());
}

inline Vector parse_csv_vector(const std::string& text, Eigen::Index n, const std::string& what) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InvalidSpec(what + ": cannot parse \"" + item + "\" as a number");
    }
  }
  if (static_cast<Eigen::Index>(values.size()) != n)
    throw InvalidSpec(what + " must have " + std::to_string(n) + " entries");
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = values[static_cast<std::size_t>(i)];
  if (!v.allFinite()) throw InvalidSpec(what + " must be finite");
  return v;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidSpec("cannot write " + path);
  return out;
}

}  // namespace detail

/// Runs the CLI with `args` (program name excluded). Returns the exit code.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Equilibria and phase transitions of lossy flow networks with finite capacities",
               "flownet"};
  app.require_subcommand(1);

  std::string scenario_path;

  auto* check = app.add_subcommand("check", "Validate a scenario and classify its routing matrix");
  check->add_option("scenario", scenario_path, "Scenario JSON file")->required();

  std::string x0_text = "zero";
  std::optional<double> t_end, dt;
  std::optional<int> sample_every;
  std::string out_path;
  auto* simulate = app.add_subcommand("simulate", "Integrate the flow dynamics and write a trajectory CSV");
  simulate->add_option("scenario", scenario_path, "Scenario JSON file")->required();
  simulate->add_option("--x0", x0_text, "Initial state: zero, cap, or comma-separated values");
  simulate->add_option("--t-end", t_end, "Time horizon");
  simulate->add_option("--dt", dt, "Step size");
  simulate->add_option("--sample-every", sample_every, "Record every k-th step");
  simulate->add_option("--out", out_path, "Trajectory CSV path (stdout if omitted)");

  bool analytic = false;
  auto* equilibria = app.add_subcommand("equilibria", "Compute the equilibrium set");
  equilibria->add_option("scenario", scenario_path, "Scenario JSON file")->required();
  equilibria->add_flag("--analytic", analytic,
                       "Require the closed-form analysis (stochastic irreducible routing)");

  std::string c_start_text, c_end_text, sidecar_path;
  int samples = 101;
  auto* sweep_cmd = app.add_subcommand("sweep", "Sweep the demand along an affine path");
  sweep_cmd->add_option("scenario", scenario_path, "Scenario JSON file")->required();
  sweep_cmd->add_option("--c-start", c_start_text, "Path start, comma-separated")->required();
  sweep_cmd->add_option("--c-end", c_end_text, "Path end, comma-separated")->required();
  sweep_cmd->add_option("--samples", samples, "Number of grid points (>= 2)");
  sweep_cmd->add_option("--out", out_path, "Sweep CSV path (stdout if omitted)");
  sweep_cmd->add_option("--sidecar", sidecar_path,
                        "Critical-point JSON path (default: <out>.critical.json)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kInvalidScenario;
  }

  try {
    const Scenario sc = detail::load_scenario(scenario_path);
    const NetworkSpec& spec = sc.spec;
    const Eigen::Index n = spec.size();

    if (check->parsed()) {
      auto report = io::check_report(spec);
      if (!sc.name.empty()) report["name"] = sc.name;
      out << report.dump(2) << '\n';
      return kOk;
    }

    if (simulate->parsed()) {
      IntegratorConfig cfg = sc.integrator;
      if (t_end) cfg.t_end = *t_end;
      if (dt) cfg.dt = *dt;
      if (sample_every) cfg.sample_every = *sample_every;
      Vector x0;
      if (x0_text == "zero") x0 = Vector::Zero(n);
      else if (x0_text == "cap") x0 = spec.capacity;
      else x0 = detail::parse_csv_vector(x0_text, n, "--x0");

      const Trajectory traj = integrate(spec, x0, cfg);
      const io::json summary{{"converged", traj.converged},
                             {"final_residual", traj.final_residual},
                             {"final_time", traj.times.back()},
                             {"samples", traj.times.size()}};
      if (out_path.empty()) {
        io::write_trajectory_csv(out, spec, traj);
        err << summary.dump() << '\n';
      } else {
        auto file = detail::open_output(out_path);
        io::write_trajectory_csv(file, spec, traj);
        out << summary.dump() << '\n';
      }
      return traj.converged ? kOk : kNumericalFailure;
    }

    if (equilibria->parsed()) {
      if (analytic) flownet::detail::require_stochastic_irreducible(spec.routing, "--analytic");
      out << io::to_json(equilibrium_set(spec)).dump(2) << '\n';
      return kOk;
    }

    if (sweep_cmd->parsed()) {
      DemandPath path{detail::parse_csv_vector(c_start_text, n, "--c-start"),
                      detail::parse_csv_vector(c_end_text, n, "--c-end"), samples};
      const SweepResult result = sweep(spec.routing, spec.capacity, path);
      const auto sidecar = io::sweep_sidecar(result);
      if (out_path.empty()) {
        io::write_sweep_csv(out, result, n);
      } else {
        auto file = detail::open_output(out_path);
        io::write_sweep_csv(file, result, n);
        out << sidecar.dump(2) << '\n';
      }
      if (sidecar_path.empty() && !out_path.empty()) sidecar_path = out_path + ".critical.json";
      if (!sidecar_path.empty()) {
        auto file = detail::open_output(sidecar_path);
        file << sidecar.dump(2) << '\n';
      }
      return kOk;
    }
  } catch (const InvalidSpec& e) {
    err << "error: " << e.what() << '\n';
    return kInvalidScenario;
  } catch (const PreconditionViolation& e) {
    err << "error: " << e.what() << '\n';
    return kPrecondition;
  } catch (const NumericalFailure& e) {
    err << "error: " << e.what() << '\n';
    return kNumericalFailure;
  }
  return kInvalidScenario;
}

}  // namespace flownet::cli
