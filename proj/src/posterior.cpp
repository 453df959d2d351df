#include "rwspatial/posterior.hpp"

#include <algorithm>
#include <cmath>

#include "rwspatial/errors.hpp"

namespace rwspatial {

PosteriorSamples::PosteriorSamples(std::vector<std::string> names, Eigen::MatrixXd draws,
                                   Eigen::VectorXd log_likelihood, SamplerMetadata meta)
    : names_(std::move(names)),
      draws_(std::move(draws)),
      loglik_(std::move(log_likelihood)),
      meta_(std::move(meta)) {
  if (static_cast<Eigen::Index>(names_.size()) != draws_.cols()) {
    throw PreconditionError("one name per draw column required");
  }
  if (loglik_.size() != draws_.rows()) {
    throw PreconditionError("log-likelihood length must equal the retained draw count");
  }
  if (!draws_.allFinite()) throw NumericalError("posterior draws contain non-finite values");
}

std::optional<Eigen::Index> PosteriorSamples::index_of(const std::string& name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) return std::nullopt;
  return static_cast<Eigen::Index>(it - names_.begin());
}

Eigen::VectorXd PosteriorSamples::column(const std::string& name) const {
  auto idx = index_of(name);
  if (!idx) throw ConfigError("no parameter named '" + name + "' in the samples");
  return draws_.col(*idx);
}

double quantile(Eigen::VectorXd values, double prob) {
  if (values.size() == 0) throw PreconditionError("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * prob;
  const auto lo = static_cast<Eigen::Index>(std::floor(h));
  const auto hi = std::min<Eigen::Index>(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

namespace {

double sample_sd(const Eigen::VectorXd& v) {
  if (v.size() < 2) return 0.0;
  const double m = v.mean();
  return std::sqrt((v.array() - m).square().sum() / static_cast<double>(v.size() - 1));
}

}  // namespace

std::vector<ParameterSummary> summarize(const PosteriorSamples& samples) {
  std::vector<ParameterSummary> out;
  for (std::size_t j = 0; j < samples.names().size(); ++j) {
    const Eigen::VectorXd col = samples.draws().col(static_cast<Eigen::Index>(j));
    ParameterSummary s;
    s.name = samples.names()[j];
    s.mean = col.mean();
    s.sd = sample_sd(col);
    s.q025 = quantile(col, 0.025);
    s.q500 = quantile(col, 0.5);
    s.q975 = quantile(col, 0.975);
    out.push_back(std::move(s));
  }
  return out;
}

double batch_means_standard_error(const Eigen::VectorXd& values) {
  const Eigen::Index n = values.size();
  const auto batches = std::max<Eigen::Index>(2, static_cast<Eigen::Index>(std::sqrt(double(n))));
  const Eigen::Index size = n / batches;
  if (size < 1) throw PreconditionError("too few draws for batch means");
  Eigen::VectorXd means(batches);
  for (Eigen::Index b = 0; b < batches; ++b) means[b] = values.segment(b * size, size).mean();
  return sample_sd(means) / std::sqrt(static_cast<double>(batches));
}

DICResult compute_dic(const PosteriorSamples& samples, const LikelihoodModel& model) {
  if (samples.draw_count() < kMinDrawsForDic) {
    throw PreconditionError("DIC needs at least " + std::to_string(kMinDrawsForDic) +
                            " retained draws; p_D is unstable below that");
  }
  DICResult r;
  r.d_at_mean = -2.0 * model.log_likelihood(samples.means());
  // Centered on D(theta bar) so identical draws give p_D = 0 exactly.
  const double excess = (-2.0 * samples.log_likelihood().array() - r.d_at_mean).mean();
  r.dbar = r.d_at_mean + excess;
  r.p_d = r.dbar - r.d_at_mean;
  r.dic = 2.0 * r.dbar - r.d_at_mean;
  return r;
}

std::vector<SplitHalfEntry> split_half_diagnostic(const PosteriorSamples& samples,
                                                  const SplitHalfOptions& options) {
  const Eigen::Index n = samples.draw_count();
  if (n < kMinDrawsForSplitHalf) {
    throw PreconditionError("split-half diagnostic needs at least " +
                            std::to_string(kMinDrawsForSplitHalf) + " draws");
  }
  const Eigen::Index half = n / 2;
  std::vector<SplitHalfEntry> out;
  for (std::size_t j = 0; j < samples.names().size(); ++j) {
    const auto& name = samples.names()[j];
    const bool skip = std::any_of(options.skip_prefixes.begin(), options.skip_prefixes.end(),
                                  [&](const std::string& p) { return name.rfind(p, 0) == 0; });
    if (skip) continue;
    const Eigen::VectorXd col = samples.draws().col(static_cast<Eigen::Index>(j));
    const Eigen::VectorXd a = col.head(half);
    const Eigen::VectorXd b = col.segment(half, half);
    SplitHalfEntry e;
    e.name = name;
    e.first_mean = a.mean();
    e.second_mean = b.mean();
    e.first_q025 = quantile(a, 0.025);
    e.second_q025 = quantile(b, 0.025);
    e.first_q975 = quantile(a, 0.975);
    e.second_q975 = quantile(b, 0.975);
    const double sa = sample_sd(a);
    const double sb = sample_sd(b);
    e.pooled_sd = std::sqrt(0.5 * (sa * sa + sb * sb));
    const double diff = std::abs(e.first_mean - e.second_mean);
    e.standardized_difference = e.pooled_sd > 0.0 ? diff / e.pooled_sd : (diff > 0.0 ? INFINITY : 0.0);
    e.flagged = e.standardized_difference > options.threshold;
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace rwspatial
