#include "rwspatial/genetics_model.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <optional>

#include "rwspatial/errors.hpp"
#include "rwspatial/field.hpp"
#include "rwspatial/probit.hpp"
#include "rwspatial/rng.hpp"

namespace rwspatial {

void GeneticsData::validate(std::size_t node_count) const {
  if (categories.empty()) throw DataError("genetics data has no loci");
  if (individual_node.empty()) throw DataError("genetics data has no individuals");
  if (alleles.size() != categories.size()) {
    throw DataError("allele table needs one row per locus");
  }
  for (NodeIndex s : individual_node) {
    if (s >= node_count) throw DataError("individual sampled at unknown node " + std::to_string(s));
  }
  const std::size_t slots = individual_node.size() * kPloidy;
  for (std::size_t l = 0; l < categories.size(); ++l) {
    const int k = categories[l];
    if (k < 2) {
      throw DataError("locus " + std::to_string(l + 1) + " has " + std::to_string(k) +
                      " categories; at least 2 are needed");
    }
    if (alleles[l].size() != slots) {
      throw DataError("locus " + std::to_string(l + 1) + " has " + std::to_string(alleles[l].size()) +
                      " allele calls, expected " + std::to_string(slots) +
                      " (missing calls are not supported)");
    }
    for (std::size_t j = 0; j < slots; ++j) {
      const int a = alleles[l][j];
      if (a < 0 || a >= k) {
        throw DataError("locus " + std::to_string(l + 1) + ", individual " +
                        std::to_string(j / kPloidy) + ": allele category " + std::to_string(a + 1) +
                        " outside 1.." + std::to_string(k));
      }
    }
  }
}

GeneticsModel::GeneticsModel(GeneticsModelSpec spec) : spec_(std::move(spec)) {
  spec_.priors.validate();
  const std::size_t m = spec_.graph.node_count();
  spec_.data.validate(m);
  if (spec_.rate_param_count < 1 || spec_.rate_param_count != 3 + spec_.graph.extra_names().size()) {
    throw ConfigError("rate model needs beta0..beta2 plus one coefficient per extra covariate");
  }
  if (!check_irreducible(generator(std::vector<double>(spec_.rate_param_count, 0.0)))) {
    throw DataError("stream network is not strongly connected");
  }

  for (std::size_t j = 0; j < spec_.rate_param_count; ++j) names_.push_back("beta" + std::to_string(j));
  const auto& cats = spec_.data.categories;
  for (std::size_t l = 0; l < cats.size(); ++l) {
    mu_offset_.push_back(static_cast<Eigen::Index>(names_.size()));
    for (int k = 1; k < cats[l]; ++k) {
      names_.push_back("mu_l" + std::to_string(l + 1) + "_k" + std::to_string(k + 1));
    }
  }
  for (std::size_t l = 0; l < cats.size(); ++l) {
    eta_offset_.push_back(static_cast<Eigen::Index>(names_.size()));
    for (int k = 0; k < cats[l]; ++k) {
      for (std::size_t s = 0; s < m; ++s) {
        names_.push_back("eta_l" + std::to_string(l + 1) + "_k" + std::to_string(k + 1) + "_" +
                         std::to_string(s));
      }
    }
  }

  copies_per_node_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
  for (NodeIndex s : spec_.data.individual_node) copies_per_node_[static_cast<Eigen::Index>(s)] += kPloidy;
}

GeneratorMatrix GeneticsModel::generator(const std::vector<double>& beta) const {
  return build_generator(spec_.graph, edge_rates_loglinear(spec_.graph, RateParams{beta}));
}

namespace {

// counts[l](s, k): allele copies of category k at node s
std::vector<Eigen::MatrixXd> allele_counts(const GeneticsModel& model) {
  const auto& data = model.spec().data;
  const auto m = static_cast<Eigen::Index>(model.node_count());
  std::vector<Eigen::MatrixXd> counts;
  for (std::size_t l = 0; l < data.locus_count(); ++l) {
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(m, data.categories[l]);
    for (std::size_t j = 0; j < data.alleles[l].size(); ++j) {
      c(static_cast<Eigen::Index>(data.individual_node[j / kPloidy]), data.alleles[l][j]) += 1.0;
    }
    counts.push_back(std::move(c));
  }
  return counts;
}

double log_likelihood_from(const GeneticsModel& model, const std::vector<Eigen::MatrixXd>& counts,
                           const Eigen::VectorXd& params) {
  const auto& cats = model.spec().data.categories;
  const auto m = static_cast<Eigen::Index>(model.node_count());
  double total = 0.0;
  std::vector<double> means;
  for (std::size_t l = 0; l < cats.size(); ++l) {
    const int kl = cats[l];
    means.resize(static_cast<std::size_t>(kl));
    for (Eigen::Index s = 0; s < m; ++s) {
      if (counts[l].row(s).sum() == 0.0) continue;
      for (int k = 0; k < kl; ++k) {
        const double mu = k == 0 ? 0.0 : params[model.mu_offset(l) + k - 1];
        means[static_cast<std::size_t>(k)] = mu + params[model.eta_offset(l, k) + s];
      }
      const Eigen::VectorXd p = probit_category_probs(means);
      for (int k = 0; k < kl; ++k) {
        const double n = counts[l](s, k);
        // floor keeps the deviance finite when quadrature underflows
        if (n > 0.0) total += n * std::log(std::max(p[k], std::numeric_limits<double>::min()));
      }
    }
  }
  return total;
}

struct RateState {
  std::vector<double> beta;
  GeneratorMatrix q;
  SparseMatrix p;
  double log_det = 0.0;
};

// Throws NumericalError when beta leaves the numerically representable region.
// The determinant is only needed while the eta prior enters the target.
RateState rate_state(const GeneticsModel& model, std::vector<double> beta, bool with_det) {
  GeneratorMatrix q = model.generator(beta);
  SparseMatrix p = stationary_precision(q);
  const double lp = with_det ? log_det_sum_zero(p) : 0.0;
  return {std::move(beta), std::move(q), std::move(p), lp};
}

double rate_log_target(const RateState& st, const std::vector<std::vector<Eigen::VectorXd>>& eta,
                       double prior_sd, bool lik) {
  double v = 0.0;
  for (double b : st.beta) v -= 0.5 * b * b / (prior_sd * prior_sd);
  if (!lik) return v;
  const SparseMatrix qt = st.q.sparse().transpose();
  for (const auto& locus : eta) {
    for (const auto& field : locus) {
      v += 0.5 * st.log_det - 0.5 * (qt * field).squaredNorm();
    }
  }
  return v;
}

}  // namespace

double GeneticsModel::log_likelihood(const Eigen::VectorXd& params) const {
  if (params.size() != static_cast<Eigen::Index>(names_.size())) {
    throw PreconditionError("parameter vector has the wrong length");
  }
  return log_likelihood_from(*this, allele_counts(*this), params);
}

PosteriorSamples fit_probit_genetics(const GeneticsModel& model, const McmcConfig& config,
                                     const GeneticsSamplerOptions& options) {
  config.validate();
  if (!(options.initial_rate_step > 0.0)) throw ConfigError("initial rate step must be positive");
  const auto& data = model.spec().data;
  const auto& priors = model.spec().priors;
  const auto& cats = data.categories;
  const std::size_t loci = data.locus_count();
  const auto m = static_cast<Eigen::Index>(model.node_count());
  const bool lik = config.likelihood_enabled;
  const std::vector<Eigen::MatrixXd> counts = allele_counts(model);

  Rng rng(config.seed);
  RateState rates = rate_state(model, std::vector<double>(model.spec().rate_param_count, 0.0), lik);
  ConstrainedGaussianSampler eta_sampler(rates.p);

  std::vector<std::vector<double>> mu(loci);
  std::vector<std::vector<Eigen::VectorXd>> eta(loci);
  // z[l][j * K + k]: latent utility of category k for allele copy j
  std::vector<std::vector<double>> z(loci);
  for (std::size_t l = 0; l < loci; ++l) {
    const auto kl = static_cast<std::size_t>(cats[l]);
    mu[l].assign(kl, 0.0);
    eta[l].assign(kl, Eigen::VectorXd::Zero(m));
    z[l].assign(data.alleles[l].size() * kl, 0.0);
    for (std::size_t j = 0; j < data.alleles[l].size(); ++j) {
      z[l][j * kl + static_cast<std::size_t>(data.alleles[l][j])] = 1.0;
    }
  }

  double log_step = std::log(options.initial_rate_step);
  long accepted = 0;
  long proposed = 0;

  const long kept = (config.iterations - config.burn_in + config.thin - 1) / config.thin;
  const auto width = static_cast<Eigen::Index>(model.parameter_names().size());
  Eigen::MatrixXd draws(kept, width);
  Eigen::VectorXd loglik(kept);
  long row = 0;
  const double mu_prior_prec = 1.0 / (priors.mu_lk_sd * priors.mu_lk_sd);

  Eigen::VectorXd lin(m);
  std::vector<double> means(static_cast<std::size_t>(*std::max_element(cats.begin(), cats.end())));
  for (long it = 0; it < config.iterations; ++it) {
    std::optional<IntrinsicField> prior_field;
    if (!lik) prior_field.emplace(rates.q, 1.0);
    for (std::size_t l = 0; l < loci; ++l) {
      const auto kl = static_cast<std::size_t>(cats[l]);
      auto mean_of = [&](std::size_t j, std::size_t k) {
        return mu[l][k] + eta[l][k][static_cast<Eigen::Index>(data.individual_node[j / kPloidy])];
      };
      // latent utilities
      if (lik) {
        for (std::size_t j = 0; j < data.alleles[l].size(); ++j) {
          for (std::size_t k = 0; k < kl; ++k) means[k] = mean_of(j, k);
          probit_latent_update(std::span<double>(&z[l][j * kl], kl),
                               static_cast<std::size_t>(data.alleles[l][j]),
                               std::span<const double>(means.data(), kl), rng);
        }
      }
      // allele intercepts
      for (std::size_t k = 1; k < kl; ++k) {
        double prec = mu_prior_prec;
        double b = 0.0;
        if (lik) {
          for (std::size_t j = 0; j < data.alleles[l].size(); ++j) {
            b += z[l][j * kl + k] -
                 eta[l][k][static_cast<Eigen::Index>(data.individual_node[j / kPloidy])];
          }
          prec += static_cast<double>(data.alleles[l].size());
        }
        mu[l][k] = b / prec + rng.normal() / std::sqrt(prec);
      }
      // fields
      for (std::size_t k = 0; k < kl; ++k) {
        if (lik) {
          lin.setZero();
          for (std::size_t j = 0; j < data.alleles[l].size(); ++j) {
            lin[static_cast<Eigen::Index>(data.individual_node[j / kPloidy])] += z[l][j * kl + k] - mu[l][k];
          }
          eta[l][k] = eta_sampler.draw(model.copies_per_node(), lin, rng);
        } else {
          eta[l][k] = sample_field(*prior_field, rng);
        }
      }
    }

    // rate coefficients
    {
      // eta moved since the last step, so the current target is recomputed
      const double current_target = rate_log_target(rates, eta, priors.rate_beta_sd, lik);
      std::vector<double> next = rates.beta;
      const double step = std::exp(log_step);
      for (double& b : next) b += step * rng.normal();
      bool accept = false;
      try {
        RateState cand = rate_state(model, std::move(next), lik);
        const double target = rate_log_target(cand, eta, priors.rate_beta_sd, lik);
        if (std::log(rng.uniform_open()) < target - current_target) {
          rates = std::move(cand);
          eta_sampler.set_base(rates.p);
          accept = true;
        }
      } catch (const NumericalError&) {
        // rates overflow or QQ' too ill-conditioned for its determinant: reject
      }
      if (it < config.burn_in) {
        log_step += (static_cast<double>(accept) - 0.234) / std::pow(static_cast<double>(it + 1), 0.6);
      } else {
        accepted += accept ? 1 : 0;
        ++proposed;
      }
    }

    if (it >= config.burn_in && (it - config.burn_in) % config.thin == 0) {
      Eigen::Index c = 0;
      for (double b : rates.beta) draws(row, c++) = b;
      for (std::size_t l = 0; l < loci; ++l) {
        for (std::size_t k = 1; k < mu[l].size(); ++k) draws(row, c++) = mu[l][k];
      }
      for (std::size_t l = 0; l < loci; ++l) {
        for (const auto& f : eta[l]) {
          draws.row(row).segment(c, m) = f.transpose();
          c += m;
        }
      }
      loglik[row] = log_likelihood_from(model, counts, draws.row(row).transpose());
      ++row;
    }
  }

  SamplerMetadata meta;
  meta.model = "probit_genetics";
  meta.seed = config.seed;
  meta.iterations = config.iterations;
  meta.burn_in = config.burn_in;
  meta.thin = config.thin;
  meta.acceptance_rates["beta"] =
      proposed > 0 ? static_cast<double>(accepted) / static_cast<double>(proposed) : 0.0;
  meta.proposal_scales["beta_step"] = std::exp(log_step);
  return PosteriorSamples(model.parameter_names(), std::move(draws), std::move(loglik),
                          std::move(meta));
}

std::vector<PosteriorSamples> fit_probit_genetics_chains(const GeneticsModel& model,
                                                         const McmcConfig& config, int chains,
                                                         const GeneticsSamplerOptions& options,
                                                         Execution execution) {
  if (chains <= 0) throw ConfigError("chains must be positive");
  std::vector<PosteriorSamples> out(static_cast<std::size_t>(chains));
  auto run = [&](int k) {
    McmcConfig cfg = config;
    cfg.seed = derive_seed(config.seed, static_cast<std::uint64_t>(k));
    out[static_cast<std::size_t>(k)] = fit_probit_genetics(model, cfg, options);
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

SpatialGraph synthetic_stream_network() {
  std::vector<Edge> edges;
  auto link = [&](NodeIndex up, NodeIndex down) {
    const int barrier = (up == 9 && down == 8) || (up == 21 && down == 20) ? 1 : 0;
    edges.push_back({up, down, {1.0, 1, barrier, {}}});
    edges.push_back({down, up, {1.0, 0, barrier, {}}});
  };
  for (NodeIndex i = 1; i < 18; ++i) link(i, i - 1);
  link(18, 6);
  for (NodeIndex i = 19; i < 24; ++i) link(i, i - 1);
  link(24, 12);
  for (NodeIndex i = 25; i < 30; ++i) link(i, i - 1);
  return SpatialGraph::from_edges(30, std::move(edges));
}

SyntheticGenetics simulate_genetics(const SpatialGraph& graph,
                                    const SyntheticGeneticsOptions& options, std::uint64_t seed) {
  if (options.categories < 2) throw ConfigError("need at least 2 allele categories");
  if (options.mu.size() != static_cast<std::size_t>(options.categories - 1)) {
    throw ConfigError("need one intercept per non-reference category");
  }
  if (options.loci == 0 || options.individuals_per_node == 0) {
    throw ConfigError("need at least one locus and one individual per node");
  }
  const IntrinsicField field(
      build_generator(graph, edge_rates_loglinear(graph, RateParams{options.beta})), 1.0);
  const std::size_t m = graph.node_count();
  const auto kl = static_cast<std::size_t>(options.categories);
  Rng rng(seed);

  SyntheticGenetics out;
  for (std::size_t s = 0; s < m; ++s) {
    for (std::size_t i = 0; i < options.individuals_per_node; ++i) out.data.individual_node.push_back(s);
  }
  for (std::size_t l = 0; l < options.loci; ++l) {
    out.data.categories.push_back(options.categories);
    std::vector<Eigen::VectorXd> fields;
    for (std::size_t k = 0; k < kl; ++k) fields.push_back(sample_field(field, rng));
    std::vector<int> calls;
    for (NodeIndex s : out.data.individual_node) {
      for (int p = 0; p < kPloidy; ++p) {
        int best = 0;
        double top = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < kl; ++k) {
          const double mu = k == 0 ? 0.0 : options.mu[k - 1];
          const double zk = mu + fields[k][static_cast<Eigen::Index>(s)] + rng.normal();
          if (zk > top) {
            top = zk;
            best = static_cast<int>(k);
          }
        }
        calls.push_back(best);
      }
    }
    out.data.alleles.push_back(std::move(calls));
    out.fields.push_back(std::move(fields));
  }
  return out;
}

}  // namespace rwspatial
