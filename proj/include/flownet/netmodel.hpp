#pragma once

// Model instance, validation and structural analysis of the routing matrix.

#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "flownet/errors.hpp"

namespace flownet {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Band around 1 inside which a row sum counts as exactly stochastic.
inline constexpr double kStochasticTol = 1e-12;

/// A lossy flow network with finite buffers.
///
/// `routing(i, j)` is the fraction of the content of cell i routed to cell j;
/// whatever is not routed leaves the network. `demand` is the exogenous net
/// demand, i.e. inflow minus outflow.
struct NetworkSpec {
  Matrix routing;
  Vector capacity;
  Vector demand;
  std::optional<Vector> inflow;
  std::optional<Vector> outflow;

  [[nodiscard]] Eigen::Index size() const { return capacity.size(); }
};

enum class RoutingTag { SubStochasticOutConnected, StochasticIrreducible, Other };

struct RoutingClass {
  RoutingTag tag = RoutingTag::Other;
  std::string detail;
};

inline const char* to_string(RoutingTag tag) {
  switch (tag) {
    case RoutingTag::SubStochasticOutConnected:
      return "SubStochasticOutConnected";
    case RoutingTag::StochasticIrreducible:
      return "StochasticIrreducible";
    case RoutingTag::Other:
      return "Other";
  }
  return "Other";
}

/// Zero-sum test shared by every operation that needs 1'v = 0.
inline bool is_zero_sum(const Vector& v, double rel_tol = 1e-12) {
  return std::abs(v.sum()) <= rel_tol * (1.0 + v.lpNorm<1>());
}

namespace detail {

inline std::string format_set(const std::vector<Eigen::Index>& nodes) {
  std::ostringstream os;
  os << '{';
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    if (k) os << ',';
    os << nodes[k] + 1;
  }
  os << '}';
  return os.str();
}

// Nodes reachable from `start` along edges i -> j with R(i, j) > 0
// (or j -> i when `reverse`).
inline std::vector<bool> reachable(const Matrix& r, const std::vector<Eigen::Index>& start,
                                   bool reverse) {
  const Eigen::Index n = r.rows();
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  std::vector<Eigen::Index> stack;
  for (auto s : start) {
    if (!seen[s]) {
      seen[s] = true;
      stack.push_back(s);
    }
  }
  while (!stack.empty()) {
    const Eigen::Index u = stack.back();
    stack.pop_back();
    for (Eigen::Index v = 0; v < n; ++v) {
      const double weight = reverse ? r(v, u) : r(u, v);
      if (weight > 0.0 && !seen[v]) {
        seen[v] = true;
        stack.push_back(v);
      }
    }
  }
  return seen;
}

inline bool all_of(const std::vector<bool>& flags) {
  for (bool f : flags)
    if (!f) return false;
  return true;
}

inline bool is_stochastic(const Matrix& r) {
  for (Eigen::Index i = 0; i < r.rows(); ++i)
    if (std::abs(r.row(i).sum() - 1.0) > kStochasticTol) return false;
  return true;
}

// A proper nonempty subset that keeps all of its routed mass, if any.
// Precondition: r is stochastic.
inline std::optional<std::vector<Eigen::Index>> closed_subset(const Matrix& r) {
  const Eigen::Index n = r.rows();
  auto collect = [n](const std::vector<bool>& flags) {
    std::vector<Eigen::Index> out;
    for (Eigen::Index i = 0; i < n; ++i)
      if (flags[i]) out.push_back(i);
    return out;
  };
  const auto forward = reachable(r, {0}, false);
  if (!all_of(forward)) return collect(forward);
  const auto backward = reachable(r, {0}, true);
  for (Eigen::Index j = 0; j < n; ++j) {
    if (!backward[j]) return collect(reachable(r, {j}, false));
  }
  return std::nullopt;
}

inline std::vector<Eigen::Index> leaky_rows(const Matrix& r) {
  std::vector<Eigen::Index> out;
  for (Eigen::Index i = 0; i < r.rows(); ++i)
    if (r.row(i).sum() < 1.0 - kStochasticTol) out.push_back(i);
  return out;
}

}  // namespace detail

/// Checks every structural assumption of the model and returns the spec
/// unchanged when they hold. Throws InvalidSpec otherwise; messages use
/// 1-based cell indices.
inline NetworkSpec validate(NetworkSpec spec) {
  const Eigen::Index n = spec.capacity.size();
  auto fail = [](const std::string& msg) { throw InvalidSpec(msg); };
  if (n <= 0) fail("network must have at least one cell");
  if (spec.routing.rows() != n || spec.routing.cols() != n)
    fail("routing must be " + std::to_string(n) + "x" + std::to_string(n));
  if (spec.demand.size() != n) fail("demand must have " + std::to_string(n) + " entries");
  if (!spec.routing.allFinite() || !spec.capacity.allFinite() || !spec.demand.allFinite())
    fail("all numbers must be finite");

  for (Eigen::Index i = 0; i < n; ++i) {
    const std::string row = std::to_string(i + 1);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (spec.routing(i, j) < 0.0)
        fail("routing entry (" + row + "," + std::to_string(j + 1) + ") is negative");
    }
    if (spec.routing(i, i) != 0.0) fail("routing diagonal entry " + row + " must be zero");
    if (spec.routing.row(i).sum() > 1.0 + kStochasticTol) fail("row " + row + " sum exceeds 1");
    if (!(spec.capacity[i] > 0.0)) fail("capacity must be positive (cell " + row + ")");
  }

  if (spec.inflow || spec.outflow) {
    const Vector lambda = spec.inflow.value_or(Vector::Zero(n));
    const Vector mu = spec.outflow.value_or(Vector::Zero(n));
    if (lambda.size() != n || mu.size() != n)
      fail("inflow/outflow must have " + std::to_string(n) + " entries");
    if (!lambda.allFinite() || !mu.allFinite()) fail("all numbers must be finite");
    for (Eigen::Index i = 0; i < n; ++i) {
      const std::string cell = std::to_string(i + 1);
      if (lambda[i] < 0.0) fail("inflow must be nonnegative (cell " + cell + ")");
      if (mu[i] < 0.0) fail("outflow must be nonnegative (cell " + cell + ")");
      if (spec.demand[i] != lambda[i] - mu[i])
        fail("demand must equal inflow - outflow (cell " + cell + ")");
    }
  }
  return spec;
}

/// True iff every cell reaches, through the support digraph of R (in zero or
/// more hops), a cell whose row sum is strictly below one.
inline bool is_out_connected(const Matrix& routing) {
  const auto leaky = detail::leaky_rows(routing);
  if (leaky.empty()) return false;
  return detail::all_of(detail::reachable(routing, leaky, /*reverse=*/true));
}

/// For stochastic R: true iff no proper nonempty subset of cells keeps all
/// of its routed mass. Equivalent to strong connectivity of the support
/// digraph. Throws PreconditionViolation when R is not stochastic.
inline bool is_irreducible(const Matrix& routing) {
  if (!detail::is_stochastic(routing))
    throw PreconditionViolation("irreducibility is only defined for stochastic routing");
  return !detail::closed_subset(routing).has_value();
}

inline RoutingClass classify_routing(const Matrix& routing) {
  if (detail::is_stochastic(routing)) {
    if (auto closed = detail::closed_subset(routing))
      return {RoutingTag::Other, "closed subset " + detail::format_set(*closed)};
    return {RoutingTag::StochasticIrreducible, "stochastic and irreducible"};
  }
  const auto leaky = detail::leaky_rows(routing);
  if (leaky.empty()) {
    // Some row sum lies in the tolerance band without all rows doing so.
    return {RoutingTag::Other, "neither stochastic nor leaking"};
  }
  const auto reached = detail::reachable(routing, leaky, /*reverse=*/true);
  std::vector<Eigen::Index> stuck;
  for (Eigen::Index i = 0; i < routing.rows(); ++i)
    if (!reached[i]) stuck.push_back(i);
  if (stuck.empty())
    return {RoutingTag::SubStochasticOutConnected,
            "leaking rows " + detail::format_set(leaky) + " reachable from every cell"};
  return {RoutingTag::Other, "cells " + detail::format_set(stuck) + " cannot reach a leaking row"};
}

namespace detail {

inline void require_stochastic_irreducible(const Matrix& routing, const char* what) {
  const auto cls = classify_routing(routing);
  if (cls.tag != RoutingTag::StochasticIrreducible)
    throw PreconditionViolation(std::string(what) +
                                " requires stochastic irreducible routing (" + cls.detail + ")");
}

}  // namespace detail

/// Unique positive probability vector with pi = R' pi.
///
/// Power iteration on the lazy matrix (I + R')/2, which is aperiodic even
/// when R is periodic; falls back to a direct solve of the stacked system
/// [I - R'; 1'] pi = [0; 1] if the iteration budget is exhausted.
inline Vector invariant_vector(const Matrix& routing) {
  detail::require_stochastic_irreducible(routing, "invariant_vector");
  const Eigen::Index n = routing.rows();
  const Matrix lazy = 0.5 * (Matrix::Identity(n, n) + routing.transpose());

  Vector pi = Vector::Constant(n, 1.0 / static_cast<double>(n));
  bool settled = false;
  for (int it = 0; it < 100000; ++it) {
    Vector next = lazy * pi;
    next /= next.sum();
    const double step = (next - pi).lpNorm<1>();
    pi = std::move(next);
    if (step < 1e-14) {
      settled = true;
      break;
    }
  }

  auto residual = [&](const Vector& p) { return (p - routing.transpose() * p).lpNorm<1>(); };
  if (!settled || residual(pi) >= 1e-10) {
    Matrix stacked(n + 1, n);
    stacked.topRows(n) = Matrix::Identity(n, n) - routing.transpose();
    stacked.row(n).setOnes();
    Vector rhs = Vector::Zero(n + 1);
    rhs[n] = 1.0;
    pi = stacked.colPivHouseholderQr().solve(rhs);
    pi /= pi.sum();
  }
  if (residual(pi) >= 1e-10 || pi.minCoeff() <= 0.0)
    throw NumericalFailure("invariant vector residual not attained");
  return pi;
}

/// Zero-sum solution h of h = R'h + v for a zero-sum v.
///
/// Solved directly from [I - R'; 1'] h = [v; 0]; the defining series
/// (1/2) sum_k ((I + R')/2)^k v converges to the same vector.
inline Vector h_operator(const Matrix& routing, const Vector& v) {
  detail::require_stochastic_irreducible(routing, "h_operator");
  const Eigen::Index n = routing.rows();
  if (v.size() != n) throw PreconditionViolation("h_operator: dimension mismatch");
  if (!is_zero_sum(v)) throw PreconditionViolation("h_operator requires a zero-sum vector");

  Matrix stacked(n + 1, n);
  stacked.topRows(n) = Matrix::Identity(n, n) - routing.transpose();
  stacked.row(n).setOnes();
  Vector rhs(n + 1);
  rhs.head(n) = v;
  rhs[n] = 0.0;
  Vector h = stacked.colPivHouseholderQr().solve(rhs);

  const double residual = (h - routing.transpose() * h - v).lpNorm<Eigen::Infinity>();
  if (!h.allFinite() || residual >= 1e-10 || std::abs(h.sum()) >= 1e-10)
    throw NumericalFailure("h_operator: linear solve did not reach residual 1e-10");
  return h;
}

}  // namespace flownet
