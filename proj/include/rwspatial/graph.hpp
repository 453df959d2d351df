#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace rwspatial {

using NodeIndex = std::size_t;
using SparseMatrix = Eigen::SparseMatrix<double>;

struct Node {
  std::string label;
  std::optional<std::pair<double, double>> coords;
};

/// Covariates attached to one directed edge i -> j.
struct EdgeCovariates {
  double distance = 1.0;  ///< d_ij > 0, in graph length units
  int downstream = 0;     ///< u_ij: 1 if j lies downstream of i
  int barrier = 0;        ///< v_ij: 1 if a seasonal blockage separates i and j
  /// Values aligned with SpatialGraph::extra_names(); NaN marks a missing value.
  std::vector<double> extras;
};

struct Edge {
  NodeIndex from = 0;
  NodeIndex to = 0;
  EdgeCovariates covariates;
};

/// Directed, weighted graph of areal units.
///
/// Validated on construction: no self edges, no duplicate ordered pairs,
/// endpoints in range, d_ij > 0, indicators in {0,1}. Edges are kept sorted
/// by (from, to) so everything derived from them is order-independent.
class SpatialGraph {
 public:
  SpatialGraph(std::vector<Node> nodes, std::vector<Edge> edges,
               std::vector<std::string> extra_names = {});

  /// Unlabeled convenience constructor; nodes are labelled "0".."M-1".
  static SpatialGraph from_edges(std::size_t node_count, std::vector<Edge> edges,
                                 std::vector<std::string> extra_names = {});

  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::span<const Node> nodes() const noexcept { return nodes_; }
  std::span<const Edge> edges() const noexcept { return edges_; }
  std::span<const std::string> extra_names() const noexcept { return extra_names_; }

  /// Position of edge (from, to) in edges(), if present.
  std::optional<std::size_t> find_edge(NodeIndex from, NodeIndex to) const;
  bool is_symmetric() const;

 private:
  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  std::vector<std::string> extra_names_;
};

/// Coefficients of the log-linear rate model: (beta0, beta1, beta2, extras...).
struct RateParams {
  std::vector<double> beta{0.0, 0.0, 0.0};

  double intercept() const { return beta.at(0); }
  double downstream() const { return beta.at(1); }
  double barrier() const { return beta.at(2); }
  std::size_t extra_count() const { return beta.size() > 3 ? beta.size() - 3 : 0; }
};

/// |linear predictor| above this is rejected instead of overflowing exp().
inline constexpr double kMaxLinearPredictor = 700.0;

/// Rate of every edge, aligned with graph.edges():
///   alpha_ij = exp(beta0 + beta1*u_ij + beta2*v_ij + sum_k beta_{3+k} x_ijk) / d_ij.
std::vector<double> edge_rates_loglinear(const SpatialGraph& graph, const RateParams& params);

struct RateEntry {
  NodeIndex from = 0;
  NodeIndex to = 0;
  double rate = 0.0;
};

/// Infinitesimal generator in the positive-diagonal convention:
///   Q_ii = sum_k alpha_ik,   Q_ij = -alpha_ij.
/// The large-population ODE is therefore dz/dt = -Q' z + (b - d), and the
/// stationary field has precision QQ'. Most CTMC texts use the negative of Q.
///
/// Immutable. Only strictly positive rates are stored, sorted by (from, to).
class GeneratorMatrix {
 public:
  /// Validates and assembles; zero rates are dropped, negative rates throw.
  GeneratorMatrix(std::size_t dimension, std::vector<RateEntry> rates);

  std::size_t dimension() const noexcept { return dim_; }
  std::span<const RateEntry> rates() const noexcept { return rates_; }
  /// sum_k alpha_ik, i.e. the diagonal entry Q_ii.
  double exit_rate(NodeIndex i) const { return exit_rates_(static_cast<Eigen::Index>(i)); }
  const Eigen::VectorXd& exit_rates() const noexcept { return exit_rates_; }
  double max_rate() const noexcept;

  /// Q as a compressed column-major matrix.
  const SparseMatrix& sparse() const noexcept { return q_; }
  Eigen::MatrixXd dense() const { return Eigen::MatrixXd(q_); }
  /// Out-neighbours of i with their rates, ascending by target.
  std::span<const RateEntry> out_rates(NodeIndex i) const;

  /// Notes produced while building (e.g. dropped zero-rate edges).
  std::span<const std::string> warnings() const noexcept { return warnings_; }

  bool operator==(const GeneratorMatrix& other) const;

 private:
  friend GeneratorMatrix build_generator(const SpatialGraph&, std::span<const double>);

  std::size_t dim_;
  std::vector<RateEntry> rates_;
  std::vector<std::size_t> row_start_;
  Eigen::VectorXd exit_rates_;
  SparseMatrix q_;
  std::vector<std::string> warnings_;
};

/// Q from per-edge rates aligned with graph.edges(). Edges whose rate is 0
/// are dropped with a warning, and irreducibility is re-checked afterwards.
GeneratorMatrix build_generator(const SpatialGraph& graph, std::span<const double> rates);

/// True iff the digraph of strictly positive rates is strongly connected.
bool check_irreducible(const GeneratorMatrix& q);

/// Factors of the equivalent intrinsic SAR model.
struct SarFactors {
  SparseMatrix b;               ///< B_ij = alpha_ji / sum_k alpha_ik, zero diagonal
  Eigen::VectorXd lambda_diag;  ///< Lambda_ii = 1 / (sum_k alpha_ik)^2
};

/// Requires every node to have a positive exit rate.
SarFactors to_sar(const GeneratorMatrix& q);

/// (I - B)' Lambda^{-1} (I - B), which equals QQ'.
SparseMatrix sar_precision(const SarFactors& sar);

}  // namespace rwspatial
