#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rwspatial/execution.hpp"
#include "rwspatial/gaussian_model.hpp"
#include "rwspatial/graph.hpp"
#include "rwspatial/posterior.hpp"

namespace rwspatial {

inline constexpr int kPloidy = 2;

/// Diploid allele calls. Categories are 0-based internally (1-based in files).
struct GeneticsData {
  std::vector<NodeIndex> individual_node;  ///< sampling node of each individual
  std::vector<int> categories;             ///< K_l per locus
  /// alleles[l][i * kPloidy + p]: category of copy p of individual i at locus l.
  std::vector<std::vector<int>> alleles;

  std::size_t locus_count() const noexcept { return categories.size(); }
  std::size_t individual_count() const noexcept { return individual_node.size(); }
  /// Rejects K_l < 2, out-of-range categories or nodes, and missing calls.
  void validate(std::size_t node_count) const;
};

struct GeneticsModelSpec {
  SpatialGraph graph;
  GeneticsData data;
  /// Number of random-walk coefficients (3 = beta0..beta2, plus extras).
  std::size_t rate_param_count = 3;
  PriorSpec priors;
};

/// Multinomial probit model for allele counts with random-walk spatial fields.
///
/// For locus l, category k and node s the latent utility of each allele copy
/// is N(mu_lk + eta_slk, 1) and the observed allele is the argmax. mu_l1 = 0
/// for identifiability, and each field eta_lk has the intrinsic prior with
/// precision QQ' (unit noise scale) where Q follows the log-linear rate model.
///
/// Parameter columns: beta0.., mu_l<l>_k<k> for k >= 2, then
/// eta_l<l>_k<k>_<s> for every locus, category and node (1-based l, k).
class GeneticsModel : public LikelihoodModel {
 public:
  explicit GeneticsModel(GeneticsModelSpec spec);

  const GeneticsModelSpec& spec() const noexcept { return spec_; }
  std::size_t node_count() const noexcept { return spec_.graph.node_count(); }
  const std::vector<std::string>& parameter_names() const noexcept { return names_; }

  Eigen::Index mu_offset(std::size_t locus) const { return mu_offset_.at(locus); }
  Eigen::Index eta_offset(std::size_t locus, int category) const {
    return eta_offset_.at(locus) + category * static_cast<Eigen::Index>(node_count());
  }
  /// Observations of each locus at each node.
  const Eigen::VectorXd& copies_per_node() const noexcept { return copies_per_node_; }

  GeneratorMatrix generator(const std::vector<double>& beta) const;

  double log_likelihood(const Eigen::VectorXd& params) const override;

 private:
  GeneticsModelSpec spec_;
  std::vector<std::string> names_;
  std::vector<Eigen::Index> mu_offset_;
  std::vector<Eigen::Index> eta_offset_;
  Eigen::VectorXd copies_per_node_;
};

struct GeneticsSamplerOptions {
  double initial_rate_step = 0.1;
};

/// Data-augmentation Gibbs sampler with a joint random-walk Metropolis step
/// on the rate coefficients:
///  - latent utilities by truncated-normal Gibbs, keeping the observed
///    category's utility strictly the largest;
///  - mu_lk (k >= 2) from their Gaussian full conditionals;
///  - each eta_lk from N with precision QQ' + diag(copies) under 1'eta = 0;
///  - beta by spherical Gaussian proposals, scale adapted towards 0.234
///    acceptance during burn-in; each proposal rebuilds Q, QQ' and the log
///    determinant on the sum-zero subspace, since the eta prior depends on beta.
/// Initial state: beta = 0, mu = 0, eta = 0.
PosteriorSamples fit_probit_genetics(const GeneticsModel& model, const McmcConfig& config,
                                     const GeneticsSamplerOptions& options = {});

std::vector<PosteriorSamples> fit_probit_genetics_chains(const GeneticsModel& model,
                                                         const McmcConfig& config, int chains,
                                                         const GeneticsSamplerOptions& options = {},
                                                         Execution execution = Execution::Parallel);

/// Synthetic stream network used for posterior-recovery checks: a main stem
/// of 18 reaches (node 0 is the outlet) with two 6-node tributaries joining
/// at nodes 6 and 12. Neighbouring nodes are linked both ways with unit
/// distance; u_ij = 1 when j is downstream of i. Two seasonal barriers sit
/// on the main stem (between 8 and 9) and on the first tributary (between
/// 20 and 21).
SpatialGraph synthetic_stream_network();

struct SyntheticGeneticsOptions {
  std::vector<double> beta{0.0, 1.0, -1.0};
  std::size_t loci = 3;
  int categories = 3;
  std::size_t individuals_per_node = 10;
  /// Allele intercepts mu_l2..mu_lK, shared across loci.
  std::vector<double> mu{0.3, -0.3};
};

struct SyntheticGenetics {
  GeneticsData data;
  std::vector<std::vector<Eigen::VectorXd>> fields;  ///< true eta[l][k]
};

/// Forward-simulates fields and allele calls from the model.
SyntheticGenetics simulate_genetics(const SpatialGraph& graph,
                                    const SyntheticGeneticsOptions& options, std::uint64_t seed);

}  // namespace rwspatial
