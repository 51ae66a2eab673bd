#pragma once

// Scenario files and machine-readable outputs (JSON reports, CSV tables).

#include <cstdio>
#include <optional>
#include <ostream>
#include <set>
#include <string>

#include "json.hpp"

#include "flownet/dynamics.hpp"
#include "flownet/equilibria.hpp"
#include "flownet/netmodel.hpp"
#include "flownet/transitions.hpp"

namespace flownet {

struct Scenario {
  std::string name;
  NetworkSpec spec;
  IntegratorConfig integrator;
};

namespace io {

using json = nlohmann::json;

/// 17 significant digits; CSV outputs are byte-identical across runs.
inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline Vector to_vector(const json& j, const std::string& key) {
  if (!j.is_array()) throw InvalidSpec("\"" + key + "\" must be an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw InvalidSpec("\"" + key + "\" must contain only numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

inline json to_json(const Vector& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

inline Matrix to_matrix(const json& j) {
  if (!j.is_array() || j.empty()) throw InvalidSpec("\"routing\" must be a non-empty array of rows");
  const auto n = static_cast<Eigen::Index>(j.size());
  Matrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector row = to_vector(j[static_cast<std::size_t>(i)], "routing");
    if (row.size() != n) throw InvalidSpec("\"routing\" must be square");
    m.row(i) = row.transpose();
  }
  return m;
}

inline IntegratorConfig parse_integrator(const json& j, IntegratorConfig cfg) {
  if (!j.is_object()) throw InvalidSpec("\"integrator\" must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!value.is_number()) throw InvalidSpec("integrator." + key + " must be a number");
    if (key == "dt") cfg.dt = value.get<double>();
    else if (key == "t_end") cfg.t_end = value.get<double>();
    else if (key == "residual_tol") cfg.residual_tol = value.get<double>();
    else if (key == "sample_every") {
      if (!value.is_number_integer()) throw InvalidSpec("integrator.sample_every must be an integer");
      cfg.sample_every = value.get<int>();
    } else {
      throw InvalidSpec("unknown integrator key \"" + key + "\"");
    }
  }
  try {
    cfg.validate();
  } catch (const PreconditionViolation& e) {
    throw InvalidSpec(e.what());
  }
  return cfg;
}

/// Parses and validates a scenario document. Unknown keys are rejected.
inline Scenario parse_scenario(const json& doc) {
  static const std::set<std::string> known{"name",   "routing", "capacity",  "demand",
                                           "inflow", "outflow", "integrator"};
  if (!doc.is_object()) throw InvalidSpec("scenario must be a JSON object");
  for (const auto& [key, value] : doc.items())
    if (!known.count(key)) throw InvalidSpec("unknown scenario key \"" + key + "\"");
  for (const char* key : {"routing", "capacity", "demand"})
    if (!doc.contains(key)) throw InvalidSpec(std::string("missing key \"") + key + "\"");

  Scenario sc;
  if (doc.contains("name")) {
    if (!doc["name"].is_string()) throw InvalidSpec("\"name\" must be a string");
    sc.name = doc["name"].get<std::string>();
  }
  NetworkSpec spec;
  spec.routing = to_matrix(doc["routing"]);
  spec.capacity = to_vector(doc["capacity"], "capacity");
  spec.demand = to_vector(doc["demand"], "demand");
  if (doc.contains("inflow")) spec.inflow = to_vector(doc["inflow"], "inflow");
  if (doc.contains("outflow")) spec.outflow = to_vector(doc["outflow"], "outflow");
  sc.spec = validate(std::move(spec));
  if (doc.contains("integrator")) sc.integrator = parse_integrator(doc["integrator"], sc.integrator);
  return sc;
}

inline Scenario parse_scenario(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidSpec(std::string("malformed JSON: ") + e.what());
  }
  return parse_scenario(doc);
}

inline json scenario_to_json(const Scenario& sc) {
  json doc;
  if (!sc.name.empty()) doc["name"] = sc.name;
  json routing = json::array();
  for (Eigen::Index i = 0; i < sc.spec.routing.rows(); ++i)
    routing.push_back(to_json(sc.spec.routing.row(i).transpose()));
  doc["routing"] = routing;
  doc["capacity"] = to_json(sc.spec.capacity);
  doc["demand"] = to_json(sc.spec.demand);
  if (sc.spec.inflow) doc["inflow"] = to_json(*sc.spec.inflow);
  if (sc.spec.outflow) doc["outflow"] = to_json(*sc.spec.outflow);
  return doc;
}

/// Classification report: class, row sums, and pi or the leaking rows.
inline json check_report(const NetworkSpec& spec) {
  const auto cls = classify_routing(spec.routing);
  json doc;
  doc["class"] = to_string(cls.tag);
  doc["detail"] = cls.detail;
  doc["row_sums"] = to_json(spec.routing.rowwise().sum());
  if (cls.tag == RoutingTag::StochasticIrreducible) doc["pi"] = to_json(invariant_vector(spec.routing));
  const auto leaky = detail::leaky_rows(spec.routing);
  if (!leaky.empty()) {
    json nodes = json::array();
    for (auto i : leaky) nodes.push_back(i + 1);
    doc["leaky_nodes"] = nodes;
  }
  return doc;
}

inline json to_json(const EquilibriumSet& eq) {
  json doc;
  doc["kind"] = to_string(eq.kind);
  doc["x_min"] = to_json(eq.x_min);
  doc["x_max"] = to_json(eq.x_max);
  if (eq.segment) {
    doc["alpha_min"] = eq.segment->alpha_min;
    doc["alpha_max"] = eq.segment->alpha_max;
    doc["hc"] = to_json(eq.segment->hc);
    doc["pi"] = to_json(eq.segment->pi);
  }
  if (eq.condition_value) doc["condition_value"] = *eq.condition_value;
  return doc;
}

/// Header "t,x1,...,xn,residual_l1"; one row per sample.
inline void write_trajectory_csv(std::ostream& os, const NetworkSpec& spec, const Trajectory& traj) {
  const Eigen::Index n = spec.size();
  os << 't';
  for (Eigen::Index i = 1; i <= n; ++i) os << ",x" << i;
  os << ",residual_l1\n";
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    os << format_number(traj.times[k]);
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << format_number(traj.states[k][i]);
    os << ',' << format_number(net_flow(spec, traj.states[k]).lpNorm<1>()) << '\n';
  }
}

/// Header "s,c1..cn,kind,cond_value,xmin1..xminn,xmax1..xmaxn,on_manifold".
/// cond_value is empty when undefined.
inline void write_sweep_csv(std::ostream& os, const SweepResult& result, Eigen::Index n) {
  os << 's';
  for (Eigen::Index i = 1; i <= n; ++i) os << ",c" << i;
  os << ",kind,cond_value";
  for (Eigen::Index i = 1; i <= n; ++i) os << ",xmin" << i;
  for (Eigen::Index i = 1; i <= n; ++i) os << ",xmax" << i;
  os << ",on_manifold\n";
  for (const auto& row : result.rows) {
    os << format_number(row.s);
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << format_number(row.c[i]);
    os << ',' << to_string(row.kind) << ',';
    if (row.condition_value) os << format_number(*row.condition_value);
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << format_number(row.x_min[i]);
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << format_number(row.x_max[i]);
    os << ',' << (row.on_manifold ? "true" : "false") << '\n';
  }
}

/// Sidecar {"critical":[{"s","jump",...}], "brackets":[{"s_lo","s_hi","resolved",...}]}.
inline json sweep_sidecar(const SweepResult& result) {
  json critical = json::array();
  for (const auto& jump : result.jumps) {
    critical.push_back({{"s", jump.s},
                        {"jump", jump.magnitude},
                        {"condition_value", jump.condition_value},
                        {"x_min", to_json(jump.x_min)},
                        {"x_max", to_json(jump.x_max)}});
  }
  json brackets = json::array();
  for (const auto& cp : result.critical_points) {
    json b{{"s_lo", cp.s_lo}, {"s_hi", cp.s_hi}, {"resolved", cp.resolved}};
    if (cp.s_star) b["s_star"] = *cp.s_star;
    brackets.push_back(b);
  }
  return json{{"critical", critical}, {"brackets", brackets}};
}

}  // namespace io
}  // namespace flownet
