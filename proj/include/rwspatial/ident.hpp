#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rwspatial/execution.hpp"
#include "rwspatial/graph.hpp"

namespace rwspatial {

enum class Identifiability {
  IdentifiableByTheorem,  ///< irreducible and some row has >= 2 positive rates
  DeterministicLoop,      ///< irreducible, one exit per node: a single directed cycle
  Reducible,
};

std::string_view to_string(Identifiability c);

struct IdentifiabilityReport {
  Identifiability classification = Identifiability::Reducible;
  std::optional<NodeIndex> witness_row;           ///< only for IdentifiableByTheorem
  std::optional<std::vector<NodeIndex>> cycle;    ///< only for DeterministicLoop, starts at 0
};

/// A rate counts as structural iff it exceeds this times the largest rate.
inline constexpr double kStructuralRateTolerance = 1e-12;

/// Decides whether Q is recoverable from QQ'.
///
/// An irreducible generator with at least one row holding two or more
/// positive off-diagonal rates is determined by QQ'. Otherwise every node
/// has exactly one exit and the chain is a single directed loop, which is
/// confounded with the same loop run backwards (for M >= 3; at M = 2 the
/// reversed loop is the same chain).
IdentifiabilityReport check_identifiable(const GeneratorMatrix& q);

/// Forward cycle Q (i -> i+1 at rate r_i) and backward cycle W (i -> i-1 at
/// rate r_i). QQ' = WW' although Q != W. Requires M >= 3 and r_i > 0.
std::pair<GeneratorMatrix, GeneratorMatrix> construct_confounded_pair(
    const std::vector<double>& rates);

struct ConfounderSearchOptions {
  int trials = 50;
  std::uint64_t seed = 0;
  /// Off-diagonal pairs W may use. Empty: Q's support plus its reversal.
  std::vector<std::pair<NodeIndex, NodeIndex>> support;
  /// Extra starting generators tried before the random restarts.
  std::vector<GeneratorMatrix> planted_starts;
  double match_tolerance = 1e-8;   ///< on |WW' - QQ'|_inf / max_rate(Q)^2
  double distinct_tolerance = 1e-4;  ///< on |W - Q|_inf / max_rate(Q)
  int max_evaluations = 20000;
  Execution execution = Execution::Parallel;
};

struct ConfounderSearchResult {
  bool confounder_found = false;
  double best_residual = 0.0;  ///< smallest residual among distinct candidates
  Eigen::MatrixXd best_candidate;  ///< dense W for that candidate (empty if none)
  int starts = 0;
};

/// Local search (Nelder-Mead on log-rates over a fixed support) for a
/// generator W with WW' = QQ' and W != Q. No precondition on Q.
ConfounderSearchResult search_confounder(const GeneratorMatrix& q,
                                         const ConfounderSearchOptions& options);

/// Numerical probe of uniqueness: true iff no restart finds a distinct W
/// matching QQ'. Requires Q irreducible and IdentifiableByTheorem.
bool verify_unique(const GeneratorMatrix& q, int trials, std::uint64_t seed,
                   Execution execution = Execution::Parallel);

}  // namespace rwspatial
