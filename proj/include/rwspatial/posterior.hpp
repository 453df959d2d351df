#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rwspatial {

struct SamplerMetadata {
  std::string model;
  std::uint64_t seed = 0;
  long iterations = 0;
  long burn_in = 0;
  long thin = 1;
  std::map<std::string, double> acceptance_rates;
  std::map<std::string, double> proposal_scales;
};

/// Retained MCMC draws: one row per draw, one column per parameter, plus
/// the log-likelihood of each draw. Immutable once a chain completes.
class PosteriorSamples {
 public:
  PosteriorSamples() = default;
  PosteriorSamples(std::vector<std::string> names, Eigen::MatrixXd draws,
                   Eigen::VectorXd log_likelihood, SamplerMetadata meta);

  const std::vector<std::string>& names() const noexcept { return names_; }
  const Eigen::MatrixXd& draws() const noexcept { return draws_; }
  const Eigen::VectorXd& log_likelihood() const noexcept { return loglik_; }
  const SamplerMetadata& metadata() const noexcept { return meta_; }
  Eigen::Index draw_count() const noexcept { return draws_.rows(); }

  std::optional<Eigen::Index> index_of(const std::string& name) const;
  /// Column by name; throws ConfigError if absent.
  Eigen::VectorXd column(const std::string& name) const;
  /// Component-wise posterior mean of every column.
  Eigen::VectorXd means() const { return draws_.colwise().mean().transpose(); }

 private:
  std::vector<std::string> names_;
  Eigen::MatrixXd draws_;
  Eigen::VectorXd loglik_;
  SamplerMetadata meta_;
};

/// Type-7 (linear interpolation) sample quantile.
double quantile(Eigen::VectorXd values, double prob);

struct ParameterSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double q025 = 0.0;
  double q500 = 0.0;
  double q975 = 0.0;
};

std::vector<ParameterSummary> summarize(const PosteriorSamples& samples);

/// Monte Carlo standard error of a mean by non-overlapping batch means
/// (sqrt(n) batches), which accounts for autocorrelation.
double batch_means_standard_error(const Eigen::VectorXd& values);

/// Anything that can evaluate log L(data | theta) at a parameter row laid
/// out like the model's PosteriorSamples columns.
class LikelihoodModel {
 public:
  virtual ~LikelihoodModel() = default;
  virtual double log_likelihood(const Eigen::VectorXd& params) const = 0;
};

struct DICResult {
  double dbar = 0.0;       ///< posterior mean deviance
  double d_at_mean = 0.0;  ///< deviance at the component-wise posterior mean
  double p_d = 0.0;        ///< dbar - d_at_mean
  double dic = 0.0;        ///< dbar + p_d
};

inline constexpr Eigen::Index kMinDrawsForDic = 100;

/// Deviance D = -2 log L. Needs at least kMinDrawsForDic retained draws.
DICResult compute_dic(const PosteriorSamples& samples, const LikelihoodModel& model);

struct SplitHalfEntry {
  std::string name;
  double first_mean = 0.0;
  double second_mean = 0.0;
  double first_q025 = 0.0;
  double second_q025 = 0.0;
  double first_q975 = 0.0;
  double second_q975 = 0.0;
  double pooled_sd = 0.0;
  double standardized_difference = 0.0;  ///< |mean1 - mean2| / pooled sd
  bool flagged = false;
};

struct SplitHalfOptions {
  double threshold = 0.2;  ///< flag when halves differ by more than this many pooled sds
  /// Column-name prefixes to skip (latent fields are reported on request only).
  std::vector<std::string> skip_prefixes{"eta"};
};

inline constexpr Eigen::Index kMinDrawsForSplitHalf = 200;

/// Compares the first and second half of the chain per parameter.
std::vector<SplitHalfEntry> split_half_diagnostic(const PosteriorSamples& samples,
                                                  const SplitHalfOptions& options = {});

}  // namespace rwspatial
