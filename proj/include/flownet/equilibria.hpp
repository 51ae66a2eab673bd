#pragma once

// Equilibrium sets of the saturated flow network: monotone fixed-point
// iteration for the extremal equilibria, the closed-form segment
// {Hc + a pi} for stochastic irreducible routing, and the multiplicity test.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "flownet/dynamics.hpp"
#include "flownet/netmodel.hpp"

namespace flownet {

/// Condition values within this band of zero are reported as marginal and
/// never classified as multiple.
inline constexpr double kMarginalBand = 1e-10;

struct PicardResult {
  Vector x;
  bool converged = false;
  long iterations = 0;
  double residual = 0.0;  // ||T(x) - x||_1
};

struct PicardOptions {
  long max_iterations = 1'000'000;
  double step_tol = 1e-12;
  double residual_tol = 1e-10;
};

namespace detail {

inline PicardResult picard_from(const NetworkSpec& spec, Vector x, const PicardOptions& opts) {
  PicardResult out;
  for (long it = 1; it <= opts.max_iterations; ++it) {
    Vector next = saturated_inflow(spec, x);
    const double step = (next - x).lpNorm<1>();
    x = std::move(next);
    out.iterations = it;
    if (step < opts.step_tol) break;
  }
  out.residual = (saturated_inflow(spec, x) - x).lpNorm<1>();
  out.converged = out.residual < opts.residual_tol;
  out.x = std::move(x);
  return out;
}

}  // namespace detail

/// Minimal equilibrium: limit of the nondecreasing iterates x <- T(x) from 0.
inline PicardResult picard_min(const NetworkSpec& spec, const PicardOptions& opts = {}) {
  return detail::picard_from(spec, Vector::Zero(spec.size()), opts);
}

/// Maximal equilibrium: limit of the nonincreasing iterates x <- T(x) from w.
inline PicardResult picard_max(const NetworkSpec& spec, const PicardOptions& opts = {}) {
  return detail::picard_from(spec, spec.capacity, opts);
}

struct MultiplicityResult {
  std::optional<double> value;  // min_i (Hc)_i/pi_i + min_i (w_i - (Hc)_i)/pi_i
  bool multiple = false;
  bool marginal = false;  // |value| <= kMarginalBand
};

namespace detail {

struct SegmentGeometry {
  Vector hc;
  Vector pi;
  double alpha_min = 0.0;
  double alpha_max = 0.0;
};

// Caller guarantees stochastic irreducible routing and zero-sum demand.
inline SegmentGeometry segment_geometry(const NetworkSpec& spec) {
  SegmentGeometry g;
  g.pi = invariant_vector(spec.routing);
  g.hc = h_operator(spec.routing, spec.demand);
  g.alpha_min = -(g.hc.array() / g.pi.array()).minCoeff();
  g.alpha_max = ((spec.capacity - g.hc).array() / g.pi.array()).minCoeff();
  return g;
}

}  // namespace detail

/// Tests whether the equilibrium set has positive length. Defined only for
/// stochastic irreducible routing; non-zero-sum demand yields no value and
/// a unique equilibrium.
inline MultiplicityResult multiplicity_test(const NetworkSpec& spec) {
  detail::require_stochastic_irreducible(spec.routing, "multiplicity_test");
  MultiplicityResult out;
  if (!is_zero_sum(spec.demand)) return out;
  const auto g = detail::segment_geometry(spec);
  const double value = g.alpha_max - g.alpha_min;
  out.value = value;
  out.marginal = std::abs(value) <= kMarginalBand;
  out.multiple = value > kMarginalBand;
  return out;
}

enum class EquilibriumKind { Point, Segment, MinMaxOnly };

inline const char* to_string(EquilibriumKind kind) {
  switch (kind) {
    case EquilibriumKind::Point:
      return "Point";
    case EquilibriumKind::Segment:
      return "Segment";
    case EquilibriumKind::MinMaxOnly:
      return "MinMaxOnly";
  }
  return "Point";
}

struct SegmentData {
  Vector hc;
  Vector pi;
  double alpha_min = 0.0;
  double alpha_max = 0.0;
};

struct EquilibriumSet {
  EquilibriumKind kind = EquilibriumKind::Point;
  Vector x_min;
  Vector x_max;
  std::optional<SegmentData> segment;
  std::optional<double> condition_value;
  RoutingClass routing_class;
};

/// Tolerances used when certifying an equilibrium set.
inline constexpr double kPointAgreementTol = 1e-6;
inline constexpr double kBoundaryTol = 1e-9;

namespace detail {

inline bool touches_boundary(const Vector& x, const Vector& w, double tol) {
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (std::abs(x[i]) <= tol || std::abs(w[i] - x[i]) <= tol) return true;
  return false;
}

inline std::pair<PicardResult, PicardResult> picard_pair(const NetworkSpec& spec) {
  auto lo = picard_min(spec);
  auto hi = picard_max(spec);
  if (!lo.converged || !hi.converged)
    throw NumericalFailure("fixed-point iteration did not reach residual 1e-10");
  return {std::move(lo), std::move(hi)};
}

}  // namespace detail

/// Full equilibrium set of the network.
///
/// Stochastic irreducible routing with zero-sum demand and a positive
/// condition value gives a Segment computed in closed form; the extremal
/// Picard limits are used as a cross-check. Out-connected routing, and
/// stochastic irreducible routing otherwise, give a Point certified by
/// agreement of both Picard limits. Any other routing gives MinMaxOnly.
inline EquilibriumSet equilibrium_set(const NetworkSpec& spec) {
  EquilibriumSet out;
  out.routing_class = classify_routing(spec.routing);

  if (out.routing_class.tag == RoutingTag::Other) {
    auto [lo, hi] = detail::picard_pair(spec);
    out.kind = EquilibriumKind::MinMaxOnly;
    out.x_min = std::move(lo.x);
    out.x_max = std::move(hi.x);
    return out;
  }

  if (out.routing_class.tag == RoutingTag::StochasticIrreducible && is_zero_sum(spec.demand)) {
    auto g = detail::segment_geometry(spec);
    out.condition_value = g.alpha_max - g.alpha_min;
    if (*out.condition_value > kMarginalBand) {
      out.kind = EquilibriumKind::Segment;
      // Snap rounding residue onto the box; endpoints lie on its boundary.
      const Vector zero = Vector::Zero(spec.size());
      out.x_min = saturate(g.hc + g.alpha_min * g.pi, zero, spec.capacity);
      out.x_max = saturate(g.hc + g.alpha_max * g.pi, zero, spec.capacity);
      if (!detail::touches_boundary(out.x_min, spec.capacity, kBoundaryTol) ||
          !detail::touches_boundary(out.x_max, spec.capacity, kBoundaryTol))
        throw NumericalFailure("segment endpoints do not lie on the lattice boundary");

      auto lo = picard_min(spec);
      auto hi = picard_max(spec);
      if (lo.converged && (lo.x - out.x_min).lpNorm<1>() > kPointAgreementTol)
        throw NumericalFailure("closed-form minimal equilibrium disagrees with fixed-point limit");
      if (hi.converged && (hi.x - out.x_max).lpNorm<1>() > kPointAgreementTol)
        throw NumericalFailure("closed-form maximal equilibrium disagrees with fixed-point limit");

      out.segment = SegmentData{std::move(g.hc), std::move(g.pi), g.alpha_min, g.alpha_max};
      return out;
    }
  }

  auto [lo, hi] = detail::picard_pair(spec);
  if ((hi.x - lo.x).lpNorm<1>() > kPointAgreementTol)
    throw NumericalFailure("extremal equilibria disagree where uniqueness is expected");
  out.kind = EquilibriumKind::Point;
  out.x_min = std::move(lo.x);
  out.x_max = std::move(hi.x);
  return out;
}

/// l1 distance from x to the segment [a, b] (or to the point when a == b).
inline double l1_distance_to_segment(const Vector& x, const Vector& a, const Vector& b) {
  // sum_i |x_i - a_i - t d_i| is convex piecewise linear in t: its minimiser
  // over [0, 1] is a weighted median of the breakpoints, clamped.
  const Vector d = b - a;
  std::vector<std::pair<double, double>> breaks;  // (t_i, |d_i|)
  double total = 0.0;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (d[i] != 0.0) {
      breaks.emplace_back((x[i] - a[i]) / d[i], std::abs(d[i]));
      total += std::abs(d[i]);
    }
  }
  double t = 0.0;
  if (!breaks.empty()) {
    std::sort(breaks.begin(), breaks.end());
    double acc = 0.0;
    for (const auto& [ti, weight] : breaks) {
      acc += weight;
      if (acc >= 0.5 * total) {
        t = ti;
        break;
      }
    }
    t = std::clamp(t, 0.0, 1.0);
  }
  return (x - a - t * d).lpNorm<1>();
}

}  // namespace flownet
