#pragma once

namespace rwspatial {

/// How embarrassingly parallel loops (replicates, trials, chains, batches)
/// are run. Both paths give bit-identical results: every work item owns an
/// RNG stream derived from (seed, item index).
enum class Execution {
  Serial,    ///< plain loop; the reference implementation
  Parallel,  ///< OpenMP `parallel for` over work items
};

}  // namespace rwspatial
