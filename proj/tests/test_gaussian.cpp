#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "rwspatial/errors.hpp"
#include "rwspatial/gaussian_model.hpp"

using namespace rwspatial;

namespace {

GeneratorMatrix pair_unit() { return GeneratorMatrix(2, {{0, 1, 1.0}, {1, 0, 1.0}}); }

// Lag-1 roughness: sum over undirected edges of squared differences.
double roughness(const SpatialGraph& g, const Eigen::VectorXd& x) {
  double r = 0.0;
  for (const auto& e : g.edges()) {
    if (e.from < e.to) {
      const double d = x[static_cast<Eigen::Index>(e.from)] - x[static_cast<Eigen::Index>(e.to)];
      r += d * d;
    }
  }
  return r;
}

}  // namespace

TEST_CASE("smooth_covariate examples") {
  CHECK(smooth_covariate(pair_unit(), Eigen::Vector2d(3.0, 3.0)).cwiseAbs().maxCoeff() <= 1e-15);
  const Eigen::VectorXd s = smooth_covariate(pair_unit(), Eigen::Vector2d(1.0, -1.0));
  CHECK(s[0] == doctest::Approx(0.5));
  CHECK(s[1] == doctest::Approx(-0.5));

  const auto g = fixture::lattice(7, 7);
  const auto q = build_generator(g, edge_rates_loglinear(g, RateParams{}));
  Rng rng(4);
  Eigen::VectorXd h(49);
  for (auto& v : h) v = rng.normal();
  const Eigen::VectorXd sm = smooth_covariate(q, h);
  CHECK(std::abs(sm.sum()) <= 1e-10);
  const Eigen::VectorXd hc = h.array() - h.mean();
  // Compare shapes at equal scale.
  CHECK(roughness(g, sm / sm.norm()) < roughness(g, hc / hc.norm()));
}

TEST_CASE("model validation") {
  const auto g = fixture::lattice(3, 3);
  GaussianModelSpec spec{Eigen::VectorXd::Zero(9), Eigen::VectorXd::Zero(8),
                         GaussianVariant::SpatialRandomEffect, g, {}, true, {}};
  CHECK_THROWS_AS(GaussianModel{spec}, DataError);
  spec.covariate = Eigen::VectorXd::Ones(9);
  CHECK_THROWS_AS(GaussianModel{spec}, DataError);  // constant covariate cannot be standardized
  CHECK_THROWS_AS(parse_gaussian_variant("sar"), ConfigError);
  McmcConfig bad;
  bad.burn_in = bad.iterations;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("diffusion equals spatial with the smoothed covariate substituted") {
  const auto g = fixture::lattice(4, 5);
  Rng rng(8);
  Eigen::VectorXd c(20);
  Eigen::VectorXd h(20);
  for (Eigen::Index i = 0; i < 20; ++i) {
    h[i] = rng.normal();
    c[i] = 2.0 - h[i] + rng.normal();
  }
  GaussianModel diffusion({c, h, GaussianVariant::GraphDiffusion, g, {}, true, {}});
  GaussianModel manual({c, diffusion.design(), GaussianVariant::SpatialRandomEffect, g, {}, false, {}});
  McmcConfig cfg;
  cfg.iterations = 600;
  cfg.burn_in = 100;
  cfg.seed = 21;
  auto a = fit_gaussian(diffusion, cfg);
  auto b = fit_gaussian(manual, cfg);
  CHECK(a.draws() == b.draws());
  CHECK(a.log_likelihood() == b.log_likelihood());
  CHECK(a.names()[1] == "beta_tilde");
  CHECK(b.names()[1] == "beta");
}

TEST_CASE("eta draws sum to zero and chains are reproducible") {
  const auto g = fixture::lattice(3, 4);
  Rng rng(9);
  Eigen::VectorXd c(12);
  Eigen::VectorXd h(12);
  for (Eigen::Index i = 0; i < 12; ++i) {
    h[i] = rng.normal();
    c[i] = rng.normal();
  }
  GaussianModel model({c, h, GaussianVariant::SpatialRandomEffect, g, {}, true, {}});
  McmcConfig cfg;
  cfg.iterations = 400;
  cfg.burn_in = 100;
  cfg.seed = 3;
  auto s = fit_gaussian(model, cfg);
  CHECK(s.draw_count() == 300);
  const auto first_eta = *s.index_of("eta_0");
  for (Eigen::Index r = 0; r < s.draw_count(); ++r) {
    CHECK(std::abs(s.draws().row(r).segment(first_eta, 12).sum()) <= 1e-8);
  }
  auto serial = fit_gaussian_chains(model, cfg, 3, Execution::Serial);
  auto parallel = fit_gaussian_chains(model, cfg, 3, Execution::Parallel);
  for (std::size_t k = 0; k < 3; ++k) CHECK(serial[k].draws() == parallel[k].draws());
  CHECK_FALSE(serial[0].draws() == serial[1].draws());
}

TEST_CASE("posterior recovery on a 7x7 lattice") {
  const auto g = fixture::lattice(7, 7);
  const auto q = build_generator(g, edge_rates_loglinear(g, RateParams{}));
  const double mu = 3.0;
  const double beta = -2.0;
  const double sigma = 1.5;
  const double tau = 0.7;
  IntrinsicField field(q, 1.0);
  Rng rng(314);
  const Eigen::VectorXd eta = sample_field(field, rng);
  Eigen::VectorXd h(49);
  Eigen::VectorXd c(49);
  for (Eigen::Index i = 0; i < 49; ++i) {
    h[i] = rng.normal();
    c[i] = mu + beta * h[i] + sigma * eta[i] + tau * rng.normal();
  }
  GaussianModel model({c, h, GaussianVariant::SpatialRandomEffect, g, {}, false, {}});
  McmcConfig cfg;
  cfg.iterations = 25000;
  cfg.burn_in = 5000;
  cfg.seed = 2718;
  auto s = fit_gaussian(model, cfg);
  const std::vector<std::pair<std::string, double>> truth{
      {"mu", mu}, {"beta", beta}, {"sigma", sigma}, {"tau", tau}};
  for (const auto& [name, value] : truth) {
    const Eigen::VectorXd col = s.column(name);
    INFO(name);
    CHECK(quantile(col, 0.025) <= value);
    CHECK(quantile(col, 0.975) >= value);
  }
}
