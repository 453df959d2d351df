#include "rwspatial/graph.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rwspatial/errors.hpp"

namespace rwspatial {

namespace {

std::string edge_name(const SpatialGraph& g, const Edge& e) {
  return g.nodes()[e.from].label + "->" + g.nodes()[e.to].label;
}

// Nodes reachable from 0 following (reverse = false) or against the edges.
std::vector<char> reachable_from_zero(std::size_t m, std::span<const RateEntry> rates,
                                      bool reverse) {
  std::vector<std::vector<NodeIndex>> adj(m);
  for (const auto& r : rates) {
    if (r.rate > 0.0) {
      if (reverse) {
        adj[r.to].push_back(r.from);
      } else {
        adj[r.from].push_back(r.to);
      }
    }
  }
  std::vector<char> seen(m, 0);
  std::vector<NodeIndex> stack{0};
  seen[0] = 1;
  while (!stack.empty()) {
    NodeIndex v = stack.back();
    stack.pop_back();
    for (NodeIndex w : adj[v]) {
      if (!seen[w]) {
        seen[w] = 1;
        stack.push_back(w);
      }
    }
  }
  return seen;
}

bool strongly_connected(std::size_t m, std::span<const RateEntry> rates) {
  if (m <= 1) return true;
  auto fwd = reachable_from_zero(m, rates, false);
  auto bwd = reachable_from_zero(m, rates, true);
  return std::all_of(fwd.begin(), fwd.end(), [](char c) { return c != 0; }) &&
         std::all_of(bwd.begin(), bwd.end(), [](char c) { return c != 0; });
}

}  // namespace

SpatialGraph::SpatialGraph(std::vector<Node> nodes, std::vector<Edge> edges,
                           std::vector<std::string> extra_names)
    : nodes_(std::move(nodes)), edges_(std::move(edges)), extra_names_(std::move(extra_names)) {
  if (nodes_.empty()) throw DataError("graph must have at least one node");
  const std::size_t m = nodes_.size();
  for (const auto& e : edges_) {
    if (e.from >= m || e.to >= m) {
      std::ostringstream os;
      os << "edge " << e.from << "->" << e.to << " references a node outside 0.." << m - 1;
      throw DataError(os.str());
    }
    if (e.from == e.to) throw DataError("self edge at node " + nodes_[e.from].label);
    const auto& c = e.covariates;
    if (!(c.distance > 0.0) || !std::isfinite(c.distance)) {
      throw DataError("edge " + edge_name(*this, e) + " has non-positive distance");
    }
    if ((c.downstream != 0 && c.downstream != 1) || (c.barrier != 0 && c.barrier != 1)) {
      throw DataError("edge " + edge_name(*this, e) + " has an indicator outside {0,1}");
    }
    if (c.extras.size() > extra_names_.size()) {
      throw DataError("edge " + edge_name(*this, e) + " carries more extra covariates than named");
    }
  }
  std::sort(edges_.begin(), edges_.end(), [](const Edge& a, const Edge& b) {
    return std::pair(a.from, a.to) < std::pair(b.from, b.to);
  });
  for (std::size_t k = 1; k < edges_.size(); ++k) {
    if (edges_[k].from == edges_[k - 1].from && edges_[k].to == edges_[k - 1].to) {
      throw DataError("duplicate edge " + edge_name(*this, edges_[k]));
    }
  }
}

SpatialGraph SpatialGraph::from_edges(std::size_t node_count, std::vector<Edge> edges,
                                      std::vector<std::string> extra_names) {
  std::vector<Node> nodes(node_count);
  for (std::size_t i = 0; i < node_count; ++i) nodes[i].label = std::to_string(i);
  return SpatialGraph(std::move(nodes), std::move(edges), std::move(extra_names));
}

std::optional<std::size_t> SpatialGraph::find_edge(NodeIndex from, NodeIndex to) const {
  auto it = std::lower_bound(edges_.begin(), edges_.end(), std::pair(from, to),
                             [](const Edge& e, const std::pair<NodeIndex, NodeIndex>& key) {
                               return std::pair(e.from, e.to) < key;
                             });
  if (it == edges_.end() || it->from != from || it->to != to) return std::nullopt;
  return static_cast<std::size_t>(it - edges_.begin());
}

bool SpatialGraph::is_symmetric() const {
  return std::all_of(edges_.begin(), edges_.end(),
                     [this](const Edge& e) { return find_edge(e.to, e.from).has_value(); });
}

std::vector<double> edge_rates_loglinear(const SpatialGraph& graph, const RateParams& params) {
  if (params.beta.size() < 3) {
    throw ConfigError("rate parameters need at least (beta0, beta1, beta2)");
  }
  for (double b : params.beta) {
    if (!std::isfinite(b)) throw ConfigError("rate parameters must be finite");
  }
  const std::size_t n_extra = params.extra_count();
  if (n_extra > graph.extra_names().size()) {
    throw ConfigError("rate parameters reference " + std::to_string(n_extra) +
                      " extra covariates but the graph names only " +
                      std::to_string(graph.extra_names().size()));
  }
  std::vector<double> rates;
  rates.reserve(graph.edges().size());
  for (const auto& e : graph.edges()) {
    const auto& c = e.covariates;
    double eta = params.beta[0] + params.beta[1] * c.downstream + params.beta[2] * c.barrier;
    for (std::size_t k = 0; k < n_extra; ++k) {
      if (k >= c.extras.size() || std::isnan(c.extras[k])) {
        throw ConfigError("edge " + edge_name(graph, e) + " is missing covariate '" +
                          graph.extra_names()[k] + "'");
      }
      eta += params.beta[3 + k] * c.extras[k];
    }
    if (!(std::abs(eta) <= kMaxLinearPredictor)) {
      std::ostringstream os;
      os << "linear predictor " << eta << " on edge " << edge_name(graph, e)
         << " exceeds |" << kMaxLinearPredictor << "|";
      throw NumericalError(os.str());
    }
    rates.push_back(std::exp(eta) / c.distance);
  }
  return rates;
}

GeneratorMatrix::GeneratorMatrix(std::size_t dimension, std::vector<RateEntry> rates)
    : dim_(dimension) {
  if (dim_ == 0) throw DataError("generator dimension must be positive");
  for (const auto& r : rates) {
    if (r.from >= dim_ || r.to >= dim_ || r.from == r.to) {
      throw DataError("generator rate entry outside the off-diagonal of a " +
                      std::to_string(dim_) + "-state chain");
    }
    if (!(r.rate >= 0.0) || !std::isfinite(r.rate)) {
      std::ostringstream os;
      os << "rate " << r.from << "->" << r.to << " is " << r.rate << "; rates must be >= 0";
      throw DataError(os.str());
    }
  }
  std::erase_if(rates, [](const RateEntry& r) { return r.rate == 0.0; });
  std::sort(rates.begin(), rates.end(), [](const RateEntry& a, const RateEntry& b) {
    return std::pair(a.from, a.to) < std::pair(b.from, b.to);
  });
  for (std::size_t k = 1; k < rates.size(); ++k) {
    if (rates[k].from == rates[k - 1].from && rates[k].to == rates[k - 1].to) {
      throw DataError("duplicate generator entry " + std::to_string(rates[k].from) + "->" +
                      std::to_string(rates[k].to));
    }
  }
  rates_ = std::move(rates);

  row_start_.assign(dim_ + 1, 0);
  for (const auto& r : rates_) ++row_start_[r.from + 1];
  for (std::size_t i = 0; i < dim_; ++i) row_start_[i + 1] += row_start_[i];

  exit_rates_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim_));
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(rates_.size() + dim_);
  for (const auto& r : rates_) {
    exit_rates_[static_cast<Eigen::Index>(r.from)] += r.rate;
    trip.emplace_back(r.from, r.to, -r.rate);
  }
  for (std::size_t i = 0; i < dim_; ++i) {
    if (exit_rates_[static_cast<Eigen::Index>(i)] > 0.0) {
      trip.emplace_back(i, i, exit_rates_[static_cast<Eigen::Index>(i)]);
    }
  }
  const auto n = static_cast<Eigen::Index>(dim_);
  q_.resize(n, n);
  q_.setFromTriplets(trip.begin(), trip.end());
  q_.makeCompressed();
}

double GeneratorMatrix::max_rate() const noexcept {
  double m = 0.0;
  for (const auto& r : rates_) m = std::max(m, r.rate);
  return m;
}

std::span<const RateEntry> GeneratorMatrix::out_rates(NodeIndex i) const {
  return std::span<const RateEntry>(rates_).subspan(row_start_.at(i),
                                                    row_start_.at(i + 1) - row_start_.at(i));
}

bool GeneratorMatrix::operator==(const GeneratorMatrix& other) const {
  if (dim_ != other.dim_ || rates_.size() != other.rates_.size()) return false;
  for (std::size_t k = 0; k < rates_.size(); ++k) {
    const auto& a = rates_[k];
    const auto& b = other.rates_[k];
    if (a.from != b.from || a.to != b.to || a.rate != b.rate) return false;
  }
  return true;
}

GeneratorMatrix build_generator(const SpatialGraph& graph, std::span<const double> rates) {
  if (rates.size() != graph.edges().size()) {
    throw ConfigError("expected one rate per edge (" + std::to_string(graph.edges().size()) +
                      "), got " + std::to_string(rates.size()));
  }
  std::vector<RateEntry> entries;
  std::vector<std::string> warnings;
  entries.reserve(rates.size());
  for (std::size_t k = 0; k < rates.size(); ++k) {
    const auto& e = graph.edges()[k];
    if (!(rates[k] >= 0.0)) {
      std::ostringstream os;
      os << "negative rate " << rates[k] << " on edge " << edge_name(graph, e);
      throw DataError(os.str());
    }
    if (rates[k] == 0.0) {
      warnings.push_back("edge " + edge_name(graph, e) + " has rate 0 and was dropped");
    }
    entries.push_back({e.from, e.to, rates[k]});
  }
  GeneratorMatrix q(graph.node_count(), std::move(entries));
  if (!warnings.empty()) {
    std::vector<RateEntry> structural;
    for (const auto& e : graph.edges()) structural.push_back({e.from, e.to, 1.0});
    if (strongly_connected(graph.node_count(), structural) && !check_irreducible(q)) {
      warnings.emplace_back("dropping zero-rate edges made the generator reducible");
    }
  }
  q.warnings_ = std::move(warnings);
  return q;
}

bool check_irreducible(const GeneratorMatrix& q) {
  return strongly_connected(q.dimension(), q.rates());
}

SarFactors to_sar(const GeneratorMatrix& q) {
  const auto m = static_cast<Eigen::Index>(q.dimension());
  const auto& exit = q.exit_rates();
  for (Eigen::Index i = 0; i < m; ++i) {
    if (!(exit[i] > 0.0)) {
      throw DataError("node " + std::to_string(i) + " has no outgoing rate; SAR form undefined");
    }
  }
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(q.rates().size());
  // B_ij = alpha_ji / alpha_i
  for (const auto& r : q.rates()) {
    trip.emplace_back(r.to, r.from, r.rate / exit[static_cast<Eigen::Index>(r.to)]);
  }
  SarFactors out;
  out.b.resize(m, m);
  out.b.setFromTriplets(trip.begin(), trip.end());
  out.b.makeCompressed();
  out.lambda_diag = exit.array().square().inverse().matrix();
  return out;
}

SparseMatrix sar_precision(const SarFactors& sar) {
  const auto m = sar.b.rows();
  SparseMatrix eye(m, m);
  eye.setIdentity();
  SparseMatrix i_minus_b = eye - sar.b;
  SparseMatrix lambda_inv(m, m);
  std::vector<Eigen::Triplet<double>> trip;
  for (Eigen::Index i = 0; i < m; ++i) trip.emplace_back(i, i, 1.0 / sar.lambda_diag[i]);
  lambda_inv.setFromTriplets(trip.begin(), trip.end());
  SparseMatrix p = SparseMatrix(i_minus_b.transpose()) * lambda_inv * i_minus_b;
  p.makeCompressed();
  return p;
}

}  // namespace rwspatial
