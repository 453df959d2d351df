#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "rwspatial/errors.hpp"
#include "rwspatial/graph.hpp"

using namespace rwspatial;

namespace {

Edge edge(NodeIndex a, NodeIndex b, double d = 1.0, int u = 0, int v = 0) {
  return {a, b, {d, u, v, {}}};
}

}  // namespace

TEST_CASE("log-linear rates follow the formula") {
  auto g = SpatialGraph::from_edges(2, {edge(0, 1), edge(1, 0, 2.0, 1, 0)});
  auto r0 = edge_rates_loglinear(g, RateParams{{0.0, 0.0, 0.0}});
  CHECK(r0[0] == 1.0);
  auto r = edge_rates_loglinear(g, RateParams{{std::log(2.0), std::log(3.0), 0.0}});
  CHECK(r[1] == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("log-linear rates match a per-edge scalar evaluation") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t m = 6;
    std::vector<Edge> edges;
    for (NodeIndex i = 0; i < m; ++i) {
      for (NodeIndex j = 0; j < m; ++j) {
        if (i != j && coin(rng)) {
          Edge e = edge(i, j, 0.5 + u(rng) * 0.4 + 0.5, coin(rng), coin(rng));
          e.covariates.extras = {u(rng)};
          edges.push_back(e);
        }
      }
    }
    auto g = SpatialGraph::from_edges(m, edges, {"x"});
    RateParams p{{u(rng), u(rng), u(rng), u(rng)}};
    auto rates = edge_rates_loglinear(g, p);
    REQUIRE(rates.size() == g.edges().size());
    for (std::size_t k = 0; k < rates.size(); ++k) {
      const auto& c = g.edges()[k].covariates;
      double lin = p.beta[0];
      if (c.downstream) lin += p.beta[1];
      if (c.barrier) lin += p.beta[2];
      lin += p.beta[3] * c.extras[0];
      CHECK(rates[k] == doctest::Approx(std::exp(lin) / c.distance).epsilon(1e-14));
    }
  }
}

TEST_CASE("rate errors: missing covariate and overflow") {
  Edge e = edge(0, 1);
  e.covariates.extras = {std::nan("")};
  auto g = SpatialGraph::from_edges(2, {e, edge(1, 0)}, {"flow"});
  CHECK_THROWS_AS(edge_rates_loglinear(g, RateParams{{0, 0, 0, 1.0}}), ConfigError);
  auto plain = SpatialGraph::from_edges(2, {edge(0, 1), edge(1, 0)});
  CHECK_THROWS_AS(edge_rates_loglinear(plain, RateParams{{800.0, 0, 0}}), NumericalError);
  CHECK_THROWS_AS(edge_rates_loglinear(plain, RateParams{{0, 0, 0, 1.0}}), ConfigError);
}

TEST_CASE("rates are monotone in beta0 and ignore u, v when beta1 = beta2 = 0") {
  auto g = SpatialGraph::from_edges(3, {edge(0, 1, 1, 1, 0), edge(1, 2, 2, 0, 1), edge(2, 0, 1, 1, 1)});
  auto a = edge_rates_loglinear(g, RateParams{{0.1, 0, 0}});
  auto b = edge_rates_loglinear(g, RateParams{{0.2, 0, 0}});
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(b[k] > a[k]);
  CHECK(a[0] == a[2]);
}

TEST_CASE("graph validation") {
  CHECK_THROWS_AS(SpatialGraph::from_edges(2, {edge(0, 0)}), DataError);
  CHECK_THROWS_AS(SpatialGraph::from_edges(2, {edge(0, 2)}), DataError);
  CHECK_THROWS_AS(SpatialGraph::from_edges(2, {edge(0, 1), edge(0, 1)}), DataError);
  CHECK_THROWS_AS(SpatialGraph::from_edges(2, {edge(0, 1, 0.0)}), DataError);
  CHECK_THROWS_AS(SpatialGraph::from_edges(2, {edge(0, 1, 1.0, 2)}), DataError);
}

TEST_CASE("generator examples") {
  GeneratorMatrix q(2, {{0, 1, 2.0}, {1, 0, 3.0}});
  Eigen::Matrix2d expect;
  expect << 2, -2, -3, 3;
  CHECK(q.dense() == expect);

  GeneratorMatrix c(3, {{0, 1, 1.0}, {1, 2, 1.0}, {2, 0, 1.0}});
  Eigen::Matrix3d cyc;
  cyc << 1, -1, 0, 0, 1, -1, -1, 0, 1;
  CHECK(c.dense() == cyc);
  CHECK_THROWS_AS(GeneratorMatrix(2, {{0, 1, -1.0}}), DataError);
}

TEST_CASE("generator rows sum to zero and off-diagonals are nonpositive") {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 50; ++rep) {
    auto rg = oracle::random_generator(7, 0.4, rng, rep % 2 == 0);
    const Eigen::MatrixXd d = rg.q.dense();
    const double tol = 8.0 * 2.2e-16 * d.diagonal().maxCoeff();
    CHECK((d * Eigen::VectorXd::Ones(7)).cwiseAbs().maxCoeff() <= tol);
    for (Eigen::Index i = 0; i < 7; ++i) {
      for (Eigen::Index j = 0; j < 7; ++j) {
        if (i != j) CHECK(d(i, j) <= 0.0);
      }
    }
    CHECK((d - rg.dense).cwiseAbs().maxCoeff() <= 1e-15);
  }
}

TEST_CASE("build_generator drops zero rates with a warning and is deterministic") {
  auto g = SpatialGraph::from_edges(3, {edge(0, 1), edge(1, 2), edge(2, 0), edge(1, 0)});
  // Edges are ordered (0,1), (1,0), (1,2), (2,0); dropping 1->2 cuts node 2 off.
  std::vector<double> rates{1.0, 1.0, 0.0, 1.0};
  auto q = build_generator(g, rates);
  CHECK(q.rates().size() == 3);
  CHECK(q.warnings().size() >= 1);
  CHECK_FALSE(check_irreducible(q));
  auto q2 = build_generator(g, rates);
  CHECK(q == q2);
}

TEST_CASE("irreducibility matches the matrix-power oracle") {
  CHECK(check_irreducible(GeneratorMatrix(2, {{0, 1, 1.0}, {1, 0, 1.0}})));
  CHECK_FALSE(check_irreducible(GeneratorMatrix(2, {{0, 1, 1.0}})));
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> size(2, 8);
  int agree_true = 0;
  for (int rep = 0; rep < 300; ++rep) {
    auto rg = oracle::random_generator(static_cast<std::size_t>(size(rng)), 0.25, rng, false);
    const bool expect = oracle::reachable_by_powers(rg.dense);
    CHECK(check_irreducible(rg.q) == expect);
    agree_true += expect ? 1 : 0;
  }
  CHECK(agree_true > 10);  // both outcomes exercised
}

TEST_CASE("SAR factors") {
  auto s = to_sar(GeneratorMatrix(2, {{0, 1, 1.0}, {1, 0, 1.0}}));
  Eigen::Matrix2d b1;
  b1 << 0, 1, 1, 0;
  CHECK(Eigen::MatrixXd(s.b) == b1);
  CHECK(s.lambda_diag == Eigen::Vector2d(1, 1));

  auto t = to_sar(GeneratorMatrix(2, {{0, 1, 2.0}, {1, 0, 3.0}}));
  CHECK(Eigen::MatrixXd(t.b)(0, 1) == doctest::Approx(1.5));
  CHECK(Eigen::MatrixXd(t.b)(1, 0) == doctest::Approx(2.0 / 3.0));
  CHECK(t.lambda_diag[0] == doctest::Approx(0.25));
  CHECK(t.lambda_diag[1] == doctest::Approx(1.0 / 9.0));

  CHECK_THROWS_AS(to_sar(GeneratorMatrix(2, {{0, 1, 1.0}})), DataError);

  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 50; ++rep) {
    auto rg = oracle::random_generator(8, 0.3, rng, true);
    const Eigen::MatrixXd p = Eigen::MatrixXd(sar_precision(to_sar(rg.q)));
    CHECK((p - rg.dense * rg.dense.transpose()).cwiseAbs().maxCoeff() <= 1e-10);
  }
}
