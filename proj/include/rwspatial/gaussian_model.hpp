#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rwspatial/execution.hpp"
#include "rwspatial/field.hpp"
#include "rwspatial/graph.hpp"
#include "rwspatial/posterior.hpp"

namespace rwspatial {

/// Hyperparameters shared by both model families.
struct PriorSpec {
  double regression_sd = 100.0;  ///< N(0, sd^2) on mu, beta, beta~
  double re_sd_scale = 100.0;    ///< half-normal scale on sigma, sigma~
  double tau2_shape = 0.01;      ///< inverse-gamma on tau^2
  double tau2_scale = 0.01;
  double rate_beta_sd = 10.0;    ///< N(0, sd^2) on the random-walk coefficients
  double mu_lk_sd = 10.0;        ///< N(0, sd^2) on allele intercepts

  void validate() const;
};

struct McmcConfig {
  long iterations = 20000;  ///< total, including burn-in
  long burn_in = 5000;
  long thin = 1;
  std::uint64_t seed = 0;
  /// With the likelihood switched off every update samples its prior full
  /// conditional; used to audit the samplers.
  bool likelihood_enabled = true;

  void validate() const;
};

enum class GaussianVariant {
  SpatialRandomEffect,  ///< c = mu 1 + beta h + sigma eta + eps
  GraphDiffusion,       ///< c = mu 1 + beta~ (Q')^- h + sigma~ eta + eps
};

std::string to_string(GaussianVariant v);
GaussianVariant parse_gaussian_variant(const std::string& s);

struct GaussianModelSpec {
  Eigen::VectorXd response;   ///< c
  Eigen::VectorXd covariate;  ///< h
  GaussianVariant variant = GaussianVariant::SpatialRandomEffect;
  SpatialGraph graph;
  /// Rates alpha_ij = exp(beta0 + ...)/d_ij; all-zero coefficients give
  /// alpha_ij = 1/d_ij (binary adjacency when d = 1).
  RateParams rates;
  /// Center and scale h to unit sample sd before it enters the design.
  bool standardize_covariate = true;
  PriorSpec priors;
};

/// Constrained inverse of Q' applied to h: the unique sum-zero s with Q's = h - mean(h).
Eigen::VectorXd smooth_covariate(const GeneratorMatrix& q, const Eigen::VectorXd& h);

/// The Gaussian response model with an intrinsic random-walk random effect.
///
/// Parameter columns: mu, beta (beta_tilde), sigma (sigma_tilde), tau2, tau,
/// eta_0 .. eta_{M-1}. Conditional on eta,
///   c ~ N(mu 1 + beta x + sigma eta, tau^2 I),
/// where x is h (spatial) or the smoothed h (diffusion).
class GaussianModel : public LikelihoodModel {
 public:
  explicit GaussianModel(GaussianModelSpec spec);

  const GaussianModelSpec& spec() const noexcept { return spec_; }
  const GeneratorMatrix& generator() const noexcept { return field_.generator(); }
  const IntrinsicField& field() const noexcept { return field_; }
  /// The covariate column actually used in the mean.
  const Eigen::VectorXd& design() const noexcept { return design_; }
  std::size_t node_count() const noexcept { return field_.dimension(); }
  const std::vector<std::string>& parameter_names() const noexcept { return names_; }

  double log_likelihood(const Eigen::VectorXd& params) const override;

 private:
  GaussianModelSpec spec_;
  IntrinsicField field_;
  Eigen::VectorXd design_;
  std::vector<std::string> names_;
};

/// Gibbs / Metropolis-within-Gibbs sampler:
///  - (mu, beta) jointly from their bivariate Gaussian full conditional;
///  - tau^2 from its inverse-gamma full conditional;
///  - eta from N with precision QQ' + (sigma^2/tau^2) I under 1'eta = 0;
///  - log sigma by random-walk Metropolis, step adapted towards 0.44
///    acceptance during burn-in and frozen afterwards.
/// Initial state: least-squares (mu, beta), tau^2 at the residual variance,
/// eta = 0, sigma = 1.
PosteriorSamples fit_gaussian(const GaussianModel& model, const McmcConfig& config);

/// Runs `chains` independent chains; chain c uses seed derive_seed(config.seed, c).
std::vector<PosteriorSamples> fit_gaussian_chains(const GaussianModel& model,
                                                  const McmcConfig& config, int chains,
                                                  Execution execution = Execution::Parallel);

}  // namespace rwspatial
