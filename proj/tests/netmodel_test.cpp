#include <gtest/gtest.h>

#include "flownet/netmodel.hpp"
#include "oracles.hpp"

namespace flownet {
namespace {

using testing::example1;
using testing::example1_routing;

Matrix two_disjoint_cycles() {
  Matrix r = Matrix::Zero(4, 4);
  r(0, 1) = r(1, 0) = 1.0;
  r(2, 3) = r(3, 2) = 1.0;
  return r;
}

Matrix cyclic_shift() {
  Matrix r = Matrix::Zero(3, 3);
  r(0, 1) = r(1, 2) = r(2, 0) = 1.0;
  return r;
}

void expect_invalid(const NetworkSpec& spec, const std::string& fragment) {
  try {
    validate(spec);
    FAIL() << "expected InvalidSpec containing \"" << fragment << "\"";
  } catch (const InvalidSpec& e) {
    EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
  }
}

TEST(Validate, AcceptsExample1) { EXPECT_NO_THROW(validate(example1())); }

TEST(Validate, RejectsRowSumAboveOne) {
  NetworkSpec spec = testing::two_cell_leaky();
  spec.routing(0, 1) = 1.2;
  expect_invalid(spec, "row 1 sum exceeds 1");
}

TEST(Validate, RejectsNonPositiveCapacity) {
  NetworkSpec spec = testing::two_cell_leaky();
  spec.capacity = Vector{{0.0, 1.0}};
  expect_invalid(spec, "capacity must be positive");
}

TEST(Validate, RejectsShapeSignAndDiagonalErrors) {
  NetworkSpec spec = example1();
  spec.demand = Vector{{1.0, 2.0}};
  expect_invalid(spec, "demand must have 3 entries");

  spec = example1();
  spec.routing = Matrix::Zero(2, 3);
  expect_invalid(spec, "routing must be 3x3");

  spec = example1();
  spec.routing(1, 0) = -0.1;
  expect_invalid(spec, "negative");

  spec = example1();
  spec.routing(2, 2) = 0.1;
  spec.routing(2, 1) = 0.6;
  expect_invalid(spec, "diagonal");

  spec = example1();
  spec.capacity[1] = std::nan("");
  expect_invalid(spec, "finite");
}

TEST(Validate, InflowOutflowMustMatchDemand) {
  NetworkSpec spec = example1();
  spec.inflow = Vector{{0.0, 0.0, 1.0}};
  spec.outflow = Vector{{0.0, 1.0, 0.0}};
  EXPECT_NO_THROW(validate(spec));

  spec.outflow = Vector{{0.0, 0.5, 0.0}};
  expect_invalid(spec, "demand must equal inflow - outflow (cell 2)");

  spec.inflow = Vector{{0.0, -1.0, 1.0}};
  spec.outflow = Vector{{0.0, 0.0, 0.0}};
  expect_invalid(spec, "inflow must be nonnegative");
}

TEST(OutConnected, Examples) {
  EXPECT_TRUE(is_out_connected(Matrix::Zero(2, 2)));
  EXPECT_FALSE(is_out_connected(example1_routing()));
  Matrix r(2, 2);
  r << 0.0, 0.5, 0.0, 0.0;
  EXPECT_TRUE(is_out_connected(r));
}

TEST(OutConnected, AgreesWithMatrixPowers) {
  testing::Rng rng(11);
  int positives = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const int n = testing::uniform_int(rng, 1, 7);
    const Matrix r = testing::random_substochastic(rng, n, 0.4, 0.6);
    const bool expected = testing::out_connected_by_powers(r);
    positives += expected;
    EXPECT_EQ(is_out_connected(r), expected) << r;
  }
  EXPECT_GT(positives, 50);
  EXPECT_LT(positives, 490);
}

TEST(Irreducible, Examples) {
  EXPECT_TRUE(is_irreducible(example1_routing()));
  EXPECT_FALSE(is_irreducible(two_disjoint_cycles()));
  EXPECT_TRUE(is_irreducible(cyclic_shift()));
}

TEST(Irreducible, RejectsNonStochastic) {
  EXPECT_THROW(is_irreducible(testing::two_cell_leaky().routing), PreconditionViolation);
}

TEST(Irreducible, AgreesWithSubsetEnumeration) {
  testing::Rng rng(12);
  int positives = 0;
  for (int trial = 0; trial < 400; ++trial) {
    const int n = testing::uniform_int(rng, 2, 7);
    // Sparse random stochastic matrices: every row gets one or two targets.
    Matrix r = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      const int targets = testing::uniform_int(rng, 1, 2);
      for (int t = 0; t < targets; ++t) {
        int j = testing::uniform_int(rng, 0, n - 2);
        if (j >= i) ++j;
        r(i, j) += testing::uniform(rng, 0.1, 1.0);
      }
      r.row(i) /= r.row(i).sum();
    }
    const bool expected = testing::irreducible_by_subsets(r);
    positives += expected;
    EXPECT_EQ(is_irreducible(r), expected) << r;
  }
  EXPECT_GT(positives, 20);
  EXPECT_LT(positives, 380);
}

TEST(Classify, Examples) {
  EXPECT_EQ(classify_routing(example1_routing()).tag, RoutingTag::StochasticIrreducible);
  EXPECT_EQ(classify_routing(testing::two_cell_leaky().routing).tag,
            RoutingTag::SubStochasticOutConnected);
  const auto other = classify_routing(two_disjoint_cycles());
  EXPECT_EQ(other.tag, RoutingTag::Other);
  EXPECT_EQ(other.detail, "closed subset {1,2}");
}

TEST(Classify, SubStochasticWithTrappedCells) {
  // Cells 1 and 2 exchange everything; cell 3 leaks but is unreachable.
  Matrix r = Matrix::Zero(3, 3);
  r(0, 1) = r(1, 0) = 1.0;
  r(2, 0) = 0.5;
  const auto cls = classify_routing(r);
  EXPECT_EQ(cls.tag, RoutingTag::Other);
  EXPECT_EQ(cls.detail, "cells {1,2} cannot reach a leaking row");
}

TEST(Classify, StableUnderPermutation) {
  testing::Rng rng(13);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = testing::uniform_int(rng, 2, 7);
    const Matrix r = trial % 3 == 0 ? testing::random_stochastic_irreducible(rng, n)
                     : trial % 3 == 1 ? testing::random_substochastic(rng, n, 0.3, 0.7)
                                      : two_disjoint_cycles();
    std::vector<int> perm(static_cast<std::size_t>(r.rows()));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    EXPECT_EQ(classify_routing(r).tag, classify_routing(testing::permute(r, perm)).tag);
  }
}

TEST(InvariantVector, Examples) {
  const Vector pi = invariant_vector(example1_routing());
  EXPECT_LT((pi - testing::example1_pi()).lpNorm<Eigen::Infinity>(), 1e-10);

  Matrix swap(2, 2);
  swap << 0.0, 1.0, 1.0, 0.0;
  EXPECT_LT((invariant_vector(swap) - Vector::Constant(2, 0.5)).norm(), 1e-12);
  EXPECT_LT((invariant_vector(cyclic_shift()) - Vector::Constant(3, 1.0 / 3)).norm(), 1e-12);
}

TEST(InvariantVector, RequiresStochasticIrreducible) {
  EXPECT_THROW(invariant_vector(two_disjoint_cycles()), PreconditionViolation);
  EXPECT_THROW(invariant_vector(testing::two_cell_leaky().routing), PreconditionViolation);
}

TEST(InvariantVector, ResidualAndPositivityOnRandomInstances) {
  testing::Rng rng(14);
  for (int trial = 0; trial < 200; ++trial) {
    const Matrix r = testing::random_stochastic_irreducible(rng, testing::uniform_int(rng, 2, 8));
    const Vector pi = invariant_vector(r);
    EXPECT_LT((pi - r.transpose() * pi).lpNorm<1>(), 1e-10);
    EXPECT_GT(pi.minCoeff(), 0.0);
    EXPECT_NEAR(pi.sum(), 1.0, 1e-14);
    EXPECT_LT((pi - testing::pi_by_eigensolver(r)).lpNorm<1>(), 1e-9);
  }
}

TEST(HOperator, Examples) {
  const Matrix r = example1_routing();
  EXPECT_EQ(h_operator(r, Vector::Zero(3)).lpNorm<1>(), 0.0);
  EXPECT_LT((h_operator(r, Vector{{0.0, -1.0, 1.0}}) - testing::example1_hc()).lpNorm<Eigen::Infinity>(),
            1e-12);

  Matrix swap(2, 2);
  swap << 0.0, 1.0, 1.0, 0.0;
  EXPECT_LT((h_operator(swap, Vector{{1.0, -1.0}}) - Vector{{0.5, -0.5}}).norm(), 1e-14);
}

TEST(HOperator, SeriesOracleOnExample1) {
  const Vector series = testing::series_h(example1_routing(), Vector{{0.0, -1.0, 1.0}});
  EXPECT_LT((series - testing::example1_hc()).lpNorm<Eigen::Infinity>(), 1e-12);
}

TEST(HOperator, Preconditions) {
  EXPECT_THROW(h_operator(example1_routing(), Vector{{0.0, -1.0, 0.0}}), PreconditionViolation);
  EXPECT_THROW(h_operator(two_disjoint_cycles(), Vector::Zero(4)), PreconditionViolation);
}

TEST(HOperator, ResidualAndZeroSumOnRandomInstances) {
  testing::Rng rng(15);
  for (int k = 0; k < 100; ++k) {
    const Matrix r = testing::random_stochastic_irreducible(rng, testing::uniform_int(rng, 2, 8));
    const auto n = static_cast<int>(r.rows());
    for (int m = 0; m < 100; ++m) {
      const Vector v = testing::random_zero_sum(rng, n, 3.0);
      const Vector h = h_operator(r, v);
      ASSERT_LT((h - r.transpose() * h - v).lpNorm<Eigen::Infinity>(), 1e-10);
      ASSERT_LT(std::abs(h.sum()), 1e-10);
    }
  }
}

TEST(HOperator, AgreesWithTruncatedSeries) {
  testing::Rng rng(16);
  for (int k = 0; k < 100; ++k) {
    const Matrix r = testing::random_stochastic_irreducible(rng, testing::uniform_int(rng, 2, 8));
    const Vector v = testing::random_zero_sum(rng, static_cast<int>(r.rows()), 3.0);
    EXPECT_LT((h_operator(r, v) - testing::series_h(r, v)).lpNorm<Eigen::Infinity>(), 1e-8);
  }
}

}  // namespace
}  // namespace flownet
