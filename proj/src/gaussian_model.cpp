#include "rwspatial/gaussian_model.hpp"

#include <cmath>
#include <exception>
#include <numbers>

#include "rwspatial/errors.hpp"
#include "rwspatial/rng.hpp"

namespace rwspatial {

void PriorSpec::validate() const {
  for (double v : {regression_sd, re_sd_scale, tau2_shape, tau2_scale, rate_beta_sd, mu_lk_sd}) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("prior hyperparameters must be positive");
  }
}

void McmcConfig::validate() const {
  if (iterations <= 0) throw ConfigError("iterations must be positive");
  if (burn_in < 0 || burn_in >= iterations) throw ConfigError("burn_in must lie in [0, iterations)");
  if (thin <= 0) throw ConfigError("thin must be positive");
}

std::string to_string(GaussianVariant v) {
  return v == GaussianVariant::SpatialRandomEffect ? "spatial" : "diffusion";
}

GaussianVariant parse_gaussian_variant(const std::string& s) {
  if (s == "spatial") return GaussianVariant::SpatialRandomEffect;
  if (s == "diffusion") return GaussianVariant::GraphDiffusion;
  throw ConfigError("unknown Gaussian model variant '" + s + "' (expected spatial or diffusion)");
}

Eigen::VectorXd smooth_covariate(const GeneratorMatrix& q, const Eigen::VectorXd& h) {
  return constrained_solve(q, h);
}

namespace {

GeneratorMatrix generator_for(const GaussianModelSpec& spec) {
  if (!spec.graph.is_symmetric()) {
    throw DataError("the Gaussian models expect a symmetric adjacency graph");
  }
  return build_generator(spec.graph, edge_rates_loglinear(spec.graph, spec.rates));
}

Eigen::VectorXd standardized(const Eigen::VectorXd& h) {
  const double m = h.mean();
  const double sd = std::sqrt((h.array() - m).square().sum() / static_cast<double>(h.size() - 1));
  if (!(sd > 0.0)) throw DataError("covariate is constant; cannot standardize");
  return (h.array() - m) / sd;
}

enum Column : Eigen::Index { kMu = 0, kBeta = 1, kSigma = 2, kTau2 = 3, kTau = 4, kEta = 5 };

}  // namespace

GaussianModel::GaussianModel(GaussianModelSpec spec)
    : spec_(std::move(spec)), field_(generator_for(spec_), 1.0) {
  spec_.priors.validate();
  const auto m = static_cast<Eigen::Index>(field_.dimension());
  if (spec_.response.size() != m || spec_.covariate.size() != m) {
    throw DataError("response and covariate need one value per node");
  }
  if (!spec_.response.allFinite() || !spec_.covariate.allFinite()) {
    throw DataError("response and covariate must be finite");
  }
  if (!check_irreducible(field_.generator())) throw DataError("graph is not connected");

  Eigen::VectorXd h = spec_.standardize_covariate ? standardized(spec_.covariate) : spec_.covariate;
  design_ = spec_.variant == GaussianVariant::GraphDiffusion ? field_.solver().solve(h) : h;

  const bool diffusion = spec_.variant == GaussianVariant::GraphDiffusion;
  names_ = {"mu", diffusion ? "beta_tilde" : "beta", diffusion ? "sigma_tilde" : "sigma", "tau2",
            "tau"};
  for (Eigen::Index i = 0; i < m; ++i) names_.push_back("eta_" + std::to_string(i));
}

double GaussianModel::log_likelihood(const Eigen::VectorXd& params) const {
  const auto m = static_cast<Eigen::Index>(node_count());
  const double tau2 = params[kTau2];
  const Eigen::VectorXd resid = spec_.response - Eigen::VectorXd::Constant(m, params[kMu]) -
                                params[kBeta] * design_ - params[kSigma] * params.segment(kEta, m);
  return -0.5 * static_cast<double>(m) * std::log(2.0 * std::numbers::pi * tau2) -
         resid.squaredNorm() / (2.0 * tau2);
}

PosteriorSamples fit_gaussian(const GaussianModel& model, const McmcConfig& config) {
  config.validate();
  const auto& priors = model.spec().priors;
  const Eigen::VectorXd& c = model.spec().response;
  const Eigen::VectorXd& x = model.design();
  const auto m = static_cast<Eigen::Index>(model.node_count());
  const double dm = static_cast<double>(m);
  const bool lik = config.likelihood_enabled;

  Rng rng(config.seed);
  ConstrainedGaussianSampler eta_sampler(model.field().precision());

  // Least-squares start.
  Eigen::MatrixXd design(m, 2);
  design.col(0).setOnes();
  design.col(1) = x;
  const Eigen::Matrix2d xtx = design.transpose() * design;
  Eigen::Vector2d coef = xtx.ldlt().solve(design.transpose() * c);
  double mu = coef[0];
  double beta = coef[1];
  double tau2 = std::max((c - design * coef).squaredNorm() / dm, 1e-8);
  double sigma = 1.0;
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(m);

  double log_step = std::log(0.5);
  long accepted = 0;
  long proposed = 0;
  long accepted_burn = 0;

  const long kept = (config.iterations - config.burn_in + config.thin - 1) / config.thin;
  Eigen::MatrixXd draws(kept, kEta + m);
  Eigen::VectorXd loglik(kept);
  long row = 0;

  const double prior_prec = 1.0 / (priors.regression_sd * priors.regression_sd);
  const double s_scale2 = priors.re_sd_scale * priors.re_sd_scale;

  for (long it = 0; it < config.iterations; ++it) {
    // (mu, beta)
    {
      Eigen::Matrix2d prec = prior_prec * Eigen::Matrix2d::Identity();
      Eigen::Vector2d lin = Eigen::Vector2d::Zero();
      if (lik) {
        const Eigen::VectorXd y = c - sigma * eta;
        prec += xtx / tau2;
        lin += design.transpose() * y / tau2;
      }
      Eigen::LLT<Eigen::Matrix2d> llt(prec);
      const Eigen::Vector2d mean = llt.solve(lin);
      const Eigen::Vector2d z(rng.normal(), rng.normal());
      const Eigen::Vector2d draw = mean + llt.matrixU().solve(z);
      mu = draw[0];
      beta = draw[1];
    }
    const Eigen::VectorXd r = c - Eigen::VectorXd::Constant(m, mu) - beta * x;
    // tau^2
    {
      double shape = priors.tau2_shape;
      double rate = priors.tau2_scale;
      if (lik) {
        shape += 0.5 * dm;
        rate += 0.5 * (r - sigma * eta).squaredNorm();
      }
      tau2 = 1.0 / rng.gamma(shape, rate);
    }
    // eta
    if (lik) {
      const Eigen::VectorXd diag = Eigen::VectorXd::Constant(m, sigma * sigma / tau2);
      eta = eta_sampler.draw(diag, (sigma / tau2) * r, rng);
    } else {
      eta = sample_field(model.field(), rng);
    }
    // log sigma
    {
      auto log_target = [&](double s) {
        double v = -0.5 * s * s / s_scale2 + std::log(s);  // half-normal prior + Jacobian
        if (lik) v -= (r - s * eta).squaredNorm() / (2.0 * tau2);
        return v;
      };
      const double proposal = std::exp(std::log(sigma) + std::exp(log_step) * rng.normal());
      const double log_ratio = log_target(proposal) - log_target(sigma);
      const bool accept = std::log(rng.uniform_open()) < log_ratio;
      if (accept) sigma = proposal;
      if (it < config.burn_in) {
        accepted_burn += accept ? 1 : 0;
        log_step += (static_cast<double>(accept) - 0.44) / std::pow(static_cast<double>(it + 1), 0.6);
      } else {
        accepted += accept ? 1 : 0;
        ++proposed;
      }
    }

    if (it >= config.burn_in && (it - config.burn_in) % config.thin == 0) {
      draws(row, kMu) = mu;
      draws(row, kBeta) = beta;
      draws(row, kSigma) = sigma;
      draws(row, kTau2) = tau2;
      draws(row, kTau) = std::sqrt(tau2);
      draws.row(row).segment(kEta, m) = eta.transpose();
      const Eigen::VectorXd resid = r - sigma * eta;
      loglik[row] = -0.5 * dm * std::log(2.0 * std::numbers::pi * tau2) -
                    resid.squaredNorm() / (2.0 * tau2);
      ++row;
    }
  }

  SamplerMetadata meta;
  meta.model = to_string(model.spec().variant);
  meta.seed = config.seed;
  meta.iterations = config.iterations;
  meta.burn_in = config.burn_in;
  meta.thin = config.thin;
  meta.acceptance_rates["sigma"] =
      proposed > 0 ? static_cast<double>(accepted) / static_cast<double>(proposed) : 0.0;
  meta.proposal_scales["log_sigma_step"] = std::exp(log_step);
  return PosteriorSamples(model.parameter_names(), std::move(draws), std::move(loglik),
                          std::move(meta));
}

std::vector<PosteriorSamples> fit_gaussian_chains(const GaussianModel& model,
                                                  const McmcConfig& config, int chains,
                                                  Execution execution) {
  if (chains <= 0) throw ConfigError("chains must be positive");
  std::vector<PosteriorSamples> out(static_cast<std::size_t>(chains));
  auto run = [&](int k) {
    McmcConfig cfg = config;
    cfg.seed = derive_seed(config.seed, static_cast<std::uint64_t>(k));
    out[static_cast<std::size_t>(k)] = fit_gaussian(model, cfg);
  };
  if (execution == Execution::Parallel) {
    std::exception_ptr failure;
#pragma omp parallel for schedule(static)
    for (int k = 0; k < chains; ++k) {
      try {
        run(k);
      } catch (...) {
#pragma omp critical
        if (!failure) failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
  } else {
    for (int k = 0; k < chains; ++k) run(k);
  }
  return out;
}

}  // namespace rwspatial
