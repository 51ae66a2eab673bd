#pragma once

// Demand-path sweeps and the jump discontinuities of the equilibrium map.
//
// For stochastic irreducible routing the set of demands with multiple
// equilibria is contained in the hyperplane 1'c = 0; crossing it along a
// path makes the equilibrium jump from the minimal to the maximal one.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "flownet/equilibria.hpp"

namespace flownet {

/// Affine demand path c(s) = c_start + s (c_end - c_start), s in [0, 1],
/// sampled on a uniform grid of `samples` points.
struct DemandPath {
  Vector c_start;
  Vector c_end;
  int samples = 2;

  [[nodiscard]] Vector at(double s) const { return c_start + s * (c_end - c_start); }
  [[nodiscard]] double grid(int k) const {
    return static_cast<double>(k) / static_cast<double>(samples - 1);
  }
};

/// True iff c is zero-sum and the equilibrium segment at c has positive
/// length (condition value beyond the marginal band).
inline bool on_critical_manifold(const Matrix& routing, const Vector& capacity, const Vector& demand,
                                 double zero_sum_tol = 1e-12) {
  detail::require_stochastic_irreducible(routing, "on_critical_manifold");
  if (!is_zero_sum(demand, zero_sum_tol)) return false;
  NetworkSpec spec{routing, capacity, demand, std::nullopt, std::nullopt};
  const auto g = detail::segment_geometry(spec);
  return g.alpha_max - g.alpha_min > kMarginalBand;
}

struct SweepRow {
  double s = 0.0;
  Vector c;
  EquilibriumKind kind = EquilibriumKind::Point;
  Vector x_min;
  Vector x_max;
  std::optional<double> condition_value;
  bool on_manifold = false;
};

/// A grid interval across which the equilibrium kind or manifold membership
/// changes. `s_star` is set when the crossing was isolated.
struct CriticalPoint {
  double s_lo = 0.0;
  double s_hi = 0.0;
  std::optional<double> s_star;
  bool resolved = false;
};

struct Jump {
  double s = 0.0;
  double magnitude = 0.0;  // ||x_max(c*) - x_min(c*)||_1
  double condition_value = 0.0;
  Vector x_min;
  Vector x_max;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<CriticalPoint> critical_points;
  std::vector<Jump> jumps;
};

inline constexpr double kCrossingTol = 1e-9;

namespace detail {

inline bool manifold_flag(const NetworkSpec& spec, const RoutingClass& cls) {
  return cls.tag == RoutingTag::StochasticIrreducible &&
         on_critical_manifold(spec.routing, spec.capacity, spec.demand);
}

inline Jump make_jump(double s, const EquilibriumSet& eq) {
  return Jump{s, (eq.x_max - eq.x_min).lpNorm<1>(), eq.condition_value.value_or(0.0), eq.x_min,
              eq.x_max};
}

// Locates s in [lo, hi] where 1'c(s) = 0. The sum is affine in s, so the
// root is exact; bisection on the sign covers paths where that fails.
inline std::optional<double> zero_sum_crossing(const DemandPath& path, double lo, double hi) {
  const double sum0 = path.c_start.sum();
  const double slope = path.c_end.sum() - sum0;
  if (slope != 0.0) {
    const double s = -sum0 / slope;
    if (s >= lo - kCrossingTol && s <= hi + kCrossingTol) return std::clamp(s, lo, hi);
  }
  auto f = [&](double s) { return path.at(s).sum(); };
  double flo = f(lo), fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo < 0.0) == (fhi < 0.0)) return std::nullopt;
  while (hi - lo >= kCrossingTol) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// Evaluates the equilibrium set along the path, brackets every grid
/// interval where the kind or manifold membership changes (or where 1'c
/// changes sign with a critical demand in between), locates the zero-sum
/// crossing inside each bracket and reports the jump there.
///
/// Brackets that isolate the same crossing are merged. A bracket without a
/// zero-sum crossing is kept with resolved = false. When the whole path lies
/// on the zero-sum hyperplane, a jump is reported at the start of every run
/// of on-manifold rows.
inline SweepResult sweep(const Matrix& routing, const Vector& capacity, const DemandPath& path) {
  const Eigen::Index n = capacity.size();
  if (path.samples < 2) throw InvalidSpec("sweep needs at least 2 samples");
  if (path.c_start.size() != n || path.c_end.size() != n)
    throw InvalidSpec("demand path vectors must have " + std::to_string(n) + " entries");

  const NetworkSpec base = validate(NetworkSpec{routing, capacity, path.c_start, std::nullopt, std::nullopt});
  const RoutingClass cls = classify_routing(routing);

  SweepResult out;
  out.rows.reserve(static_cast<std::size_t>(path.samples));
  for (int k = 0; k < path.samples; ++k) {
    NetworkSpec spec = base;
    spec.demand = path.at(path.grid(k));
    const auto eq = equilibrium_set(spec);
    out.rows.push_back(SweepRow{path.grid(k), spec.demand, eq.kind, eq.x_min, eq.x_max,
                                eq.condition_value, detail::manifold_flag(spec, cls)});
  }

  auto equilibrium_at = [&](double s) {
    NetworkSpec spec = base;
    spec.demand = path.at(s);
    return std::pair{equilibrium_set(spec), detail::manifold_flag(spec, cls)};
  };

  const bool in_hyperplane = is_zero_sum(path.c_start) && is_zero_sum(path.c_end);
  if (in_hyperplane) {
    for (std::size_t k = 0; k < out.rows.size(); ++k) {
      const auto& row = out.rows[k];
      if (row.on_manifold && (k == 0 || !out.rows[k - 1].on_manifold)) {
        out.jumps.push_back(detail::make_jump(row.s, equilibrium_at(row.s).first));
      }
    }
  }

  const bool stochastic_irreducible = cls.tag == RoutingTag::StochasticIrreducible;
  for (std::size_t k = 0; k + 1 < out.rows.size(); ++k) {
    const auto& a = out.rows[k];
    const auto& b = out.rows[k + 1];
    const bool flips = a.kind != b.kind || a.on_manifold != b.on_manifold;
    // A crossing strictly between grid points leaves both rows unchanged.
    const bool sign_change = stochastic_irreducible && !in_hyperplane &&
                             !is_zero_sum(a.c) && !is_zero_sum(b.c) &&
                             (a.c.sum() < 0.0) != (b.c.sum() < 0.0);
    if (!flips && !sign_change) continue;

    CriticalPoint cp{a.s, b.s, std::nullopt, false};
    if (!in_hyperplane) cp.s_star = detail::zero_sum_crossing(path, a.s, b.s);
    cp.resolved = cp.s_star.has_value();
    if (!flips && !(cp.resolved && equilibrium_at(*cp.s_star).second)) continue;

    if (cp.resolved && !out.critical_points.empty()) {
      auto& prev = out.critical_points.back();
      if (prev.resolved && std::abs(*prev.s_star - *cp.s_star) < kCrossingTol) {
        prev.s_hi = cp.s_hi;
        continue;
      }
    }
    if (cp.resolved) {
      auto [eq, on_manifold] = equilibrium_at(*cp.s_star);
      if (on_manifold) out.jumps.push_back(detail::make_jump(*cp.s_star, eq));
    }
    out.critical_points.push_back(cp);
  }
  return out;
}

struct LimitSample {
  double epsilon = 0.0;
  Vector below;  // x*(c* - eps d)
  Vector above;  // x*(c* + eps d)
};

struct DirectionalLimits {
  Vector from_below;
  Vector from_above;
  std::vector<LimitSample> table;
};

/// Unique equilibria at c* -/+ eps d for each eps (largest first). Near a
/// critical demand they approach the minimal and maximal equilibrium at c*.
inline DirectionalLimits directional_limits(const Matrix& routing, const Vector& capacity,
                                            const Vector& c_star, const Vector& direction,
                                            const std::vector<double>& epsilons = {1e-2, 1e-3, 1e-4}) {
  if (!on_critical_manifold(routing, capacity, c_star))
    throw PreconditionViolation("directional_limits: c* is not on the critical manifold");
  if (direction.size() != c_star.size() || !(direction.sum() > 0.0))
    throw PreconditionViolation("directional_limits: direction must have positive total");
  if (epsilons.empty()) throw PreconditionViolation("directional_limits: no epsilons given");
  for (std::size_t k = 0; k < epsilons.size(); ++k) {
    if (!(epsilons[k] > 0.0) || (k > 0 && !(epsilons[k] < epsilons[k - 1])))
      throw PreconditionViolation("directional_limits: epsilons must be positive and decreasing");
  }

  auto unique_equilibrium = [&](const Vector& c) {
    const auto eq = equilibrium_set(NetworkSpec{routing, capacity, c, std::nullopt, std::nullopt});
    if (eq.kind != EquilibriumKind::Point)
      throw NumericalFailure("directional_limits: perturbed demand has multiple equilibria");
    return eq.x_min;
  };

  DirectionalLimits out;
  for (double eps : epsilons) {
    out.table.push_back(LimitSample{eps, unique_equilibrium(c_star - eps * direction),
                                    unique_equilibrium(c_star + eps * direction)});
  }
  out.from_below = out.table.back().below;
  out.from_above = out.table.back().above;
  return out;
}

}  // namespace flownet
