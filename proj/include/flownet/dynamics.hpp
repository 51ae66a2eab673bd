#pragma once

// Saturated flow vector field  x' = S_0^w(R'x + c) - x  and a fixed-step
// integrator over the box 0 <= x <= w.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <vector>

#include "flownet/netmodel.hpp"

namespace flownet {

/// Tolerance for lattice membership checks on integrated states.
inline constexpr double kLatticeTol = 1e-9;

/// Entrywise clamp of y to [lo, hi].
inline Vector saturate(const Vector& y, const Vector& lo, const Vector& hi) {
  if (y.size() != lo.size() || y.size() != hi.size())
    throw PreconditionViolation("saturate: dimension mismatch");
  Vector out(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (lo[i] > hi[i]) throw PreconditionViolation("saturate: lower bound exceeds upper bound");
    out[i] = std::max(lo[i], std::min(y[i], hi[i]));
  }
  return out;
}

/// The map T(x) = S_0^w(R'x + c); its fixed points are the equilibria.
inline Vector saturated_inflow(const NetworkSpec& spec, const Vector& x) {
  Vector y = spec.routing.transpose() * x + spec.demand;
  for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = std::max(0.0, std::min(y[i], spec.capacity[i]));
  return y;
}

inline bool in_lattice(const NetworkSpec& spec, const Vector& x, double tol = kLatticeTol) {
  if (x.size() != spec.size() || !x.allFinite()) return false;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (x[i] < -tol || x[i] > spec.capacity[i] + tol) return false;
  return true;
}

/// Net flow f(x) = S_0^w(R'x + c) - x. On the lattice it satisfies
/// -x <= f(x) <= w - x.
inline Vector net_flow(const NetworkSpec& spec, const Vector& x) {
  Vector f = saturated_inflow(spec, x) - x;
#ifndef NDEBUG
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    assert(f[i] >= -x[i]);
    assert(f[i] <= spec.capacity[i] - x[i]);
  }
#endif
  return f;
}

/// Unsaturated right-hand side (R' - I)x + c. Bit-identical to net_flow
/// wherever 0 < R'x + c < w.
inline Vector linear_rhs(const NetworkSpec& spec, const Vector& x) {
  Vector y = spec.routing.transpose() * x + spec.demand;
  return y - x;
}

struct IntegratorConfig {
  double dt = 0.01;
  double t_end = 200.0;
  int sample_every = 10;
  double residual_tol = 1e-10;

  void validate() const {
    if (!(dt > 0.0) || !(t_end > 0.0) || sample_every <= 0 || !(residual_tol > 0.0) ||
        !std::isfinite(dt) || !std::isfinite(t_end))
      throw PreconditionViolation("integrator: dt, t_end, sample_every, residual_tol must be positive");
    if (dt > t_end) throw PreconditionViolation("integrator: dt must not exceed t_end");
  }
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> states;
  bool converged = false;
  double final_residual = 0.0;
};

/// Classical RK4 with a fixed step. After every step the state is clamped
/// back onto the lattice; a clamp larger than 10 dt^2 max|f| means the step
/// itself is wrong and raises NumericalFailure. Integration stops at the
/// first sample whose residual ||f(x)||_1 falls below cfg.residual_tol.
inline Trajectory integrate(const NetworkSpec& spec, const Vector& x0, const IntegratorConfig& cfg) {
  cfg.validate();
  if (!in_lattice(spec, x0, 0.0)) throw PreconditionViolation("initial state outside the lattice");

  const Vector zero = Vector::Zero(spec.size());
  const auto steps = static_cast<long long>(std::ceil(cfg.t_end / cfg.dt - 1e-9));

  Trajectory traj;
  Vector x = x0;
  double t = 0.0;
  auto record = [&](double time, const Vector& state) {
    const double r = net_flow(spec, state).lpNorm<1>();
    traj.times.push_back(time);
    traj.states.push_back(state);
    traj.final_residual = r;
    if (r < cfg.residual_tol) traj.converged = true;
  };

  record(t, x);
  for (long long k = 1; k <= steps && !traj.converged; ++k) {
    const double h = (k == steps) ? cfg.t_end - t : cfg.dt;
    const Vector k1 = net_flow(spec, x);
    const Vector k2 = net_flow(spec, x + 0.5 * h * k1);
    const Vector k3 = net_flow(spec, x + 0.5 * h * k2);
    const Vector k4 = net_flow(spec, x + h * k3);
    const Vector stepped = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!stepped.allFinite()) throw NumericalFailure("integrate: non-finite state");

    const double max_rate = std::max({k1.lpNorm<Eigen::Infinity>(), k2.lpNorm<Eigen::Infinity>(),
                                      k3.lpNorm<Eigen::Infinity>(), k4.lpNorm<Eigen::Infinity>()});
    Vector clamped = saturate(stepped, zero, spec.capacity);
    const double clamp = (clamped - stepped).lpNorm<Eigen::Infinity>();
    if (clamp > 10.0 * h * h * max_rate)
      throw NumericalFailure("integrate: lattice clamp exceeded 10 dt^2 max|f|");

    x = std::move(clamped);
    t = (k == steps) ? cfg.t_end : static_cast<double>(k) * cfg.dt;
    if (k % cfg.sample_every == 0 || k == steps) record(t, x);
  }
  return traj;
}

}  // namespace flownet
