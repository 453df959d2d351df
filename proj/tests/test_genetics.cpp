#include <doctest.h>

#include <cmath>

#include "rwspatial/errors.hpp"
#include "rwspatial/genetics_model.hpp"
#include "rwspatial/probit.hpp"

using namespace rwspatial;

namespace {

SpatialGraph ring(std::size_t m) {
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t j = (i + 1) % m;
    edges.push_back({i, j, {1.0, 1, 0, {}}});
    edges.push_back({j, i, {1.0, 0, 0, {}}});
  }
  return SpatialGraph::from_edges(m, std::move(edges));
}

GeneticsData small_data() {
  GeneticsData d;
  d.individual_node = {0, 1, 2, 3};
  d.categories = {2, 3};
  d.alleles = {{0, 1, 1, 1, 0, 0, 1, 0}, {2, 1, 0, 0, 1, 2, 2, 2}};
  return d;
}

}  // namespace

TEST_CASE("genetics data validation") {
  auto d = small_data();
  CHECK_NOTHROW(d.validate(4));
  CHECK_THROWS_AS(d.validate(3), DataError);
  auto one = small_data();
  one.categories[0] = 1;
  CHECK_THROWS_AS(one.validate(4), DataError);
  auto out = small_data();
  out.alleles[1][3] = 3;
  CHECK_THROWS_AS(out.validate(4), DataError);
  auto missing = small_data();
  missing.alleles[0].pop_back();
  CHECK_THROWS_AS(missing.validate(4), DataError);
}

TEST_CASE("parameter layout and likelihood") {
  GeneticsModel model({ring(4), small_data(), 3, {}});
  const auto& names = model.parameter_names();
  CHECK(names[0] == "beta0");
  CHECK(names[3] == "mu_l1_k2");
  CHECK(names[4] == "mu_l2_k2");
  CHECK(names[5] == "mu_l2_k3");
  CHECK(names.size() == 3 + 3 + (2 + 3) * 4);
  CHECK(model.copies_per_node() == Eigen::Vector4d::Constant(2.0));

  // All-zero parameters: every allele has probability 1/K_l.
  Eigen::VectorXd p = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(names.size()));
  CHECK(model.log_likelihood(p) == doctest::Approx(8.0 * std::log(0.5) + 8.0 * std::log(1.0 / 3.0)).epsilon(1e-10));

  // Locus 1 with mu_l1_k2 = delta: closed-form two-category probabilities.
  const double delta = 0.8;
  p[3] = delta;
  const double p2 = normal_cdf(delta / std::sqrt(2.0));
  const double expect = 4.0 * std::log(1.0 - p2) + 4.0 * std::log(p2) + 8.0 * std::log(1.0 / 3.0);
  CHECK(model.log_likelihood(p) == doctest::Approx(expect).epsilon(1e-10));
}

TEST_CASE("generator follows the rate model") {
  GeneticsModel model({ring(5), small_data(), 3, {}});
  auto q = model.generator({0.0, std::log(2.0), 0.0});
  // Downstream edges i -> i+1 have rate 2, upstream 1.
  CHECK(q.exit_rate(0) == doctest::Approx(3.0));
  CHECK(q.dense()(0, 1) == doctest::Approx(-2.0));
  CHECK(q.dense()(1, 0) == doctest::Approx(-1.0));
}

TEST_CASE("synthetic network and simulation") {
  const auto g = synthetic_stream_network();
  CHECK(g.node_count() == 30);
  int barriers = 0;
  for (const auto& e : g.edges()) barriers += e.covariates.barrier;
  CHECK(barriers == 4);  // two barriers, both directions
  auto sim = simulate_genetics(g, {}, 5);
  CHECK_NOTHROW(sim.data.validate(30));
  CHECK(sim.data.individual_count() == 300);
  CHECK(sim.data.locus_count() == 3);
  for (const auto& locus : sim.fields) {
    for (const auto& f : locus) CHECK(std::abs(f.sum()) <= 1e-10);
  }
  auto again = simulate_genetics(g, {}, 5);
  CHECK(again.data.alleles == sim.data.alleles);
}

TEST_CASE("sampler: constraint, reproducibility, serial == parallel") {
  const auto g = synthetic_stream_network();
  SyntheticGeneticsOptions opts;
  opts.loci = 1;
  opts.individuals_per_node = 4;
  auto sim = simulate_genetics(g, opts, 2);
  GeneticsModel model({g, sim.data, 3, {}});
  McmcConfig cfg;
  cfg.iterations = 150;
  cfg.burn_in = 50;
  cfg.seed = 4;
  auto serial = fit_probit_genetics_chains(model, cfg, 2, {}, Execution::Serial);
  auto parallel = fit_probit_genetics_chains(model, cfg, 2, {}, Execution::Parallel);
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(serial[k].draws() == parallel[k].draws());
    CHECK(serial[k].log_likelihood() == parallel[k].log_likelihood());
  }
  const auto& s = serial[0];
  CHECK(s.draw_count() == 100);
  for (int k = 0; k < 3; ++k) {
    const Eigen::Index off = model.eta_offset(0, k);
    for (Eigen::Index r = 0; r < s.draw_count(); ++r) {
      CHECK(std::abs(s.draws().row(r).segment(off, 30).sum()) <= 1e-8);
    }
  }
  for (Eigen::Index r = 0; r < s.draw_count(); ++r) {
    CHECK(s.log_likelihood()[r] == doctest::Approx(model.log_likelihood(s.draws().row(r).transpose())).epsilon(1e-12));
  }
}
