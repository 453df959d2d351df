#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "rwspatial/errors.hpp"
#include "rwspatial/execution.hpp"
#include "rwspatial/graph.hpp"

namespace rwspatial {

/// Per-node birth and death intensities. Node i gains individuals at rate
/// N*b_i and loses them at rate N*d_i.
struct DemographyRates {
  Eigen::VectorXd birth;
  Eigen::VectorXd death;

  static DemographyRates none(std::size_t m) {
    return {Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m)),
            Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m))};
  }
  void validate(std::size_t m) const;
};

/// Snapshots of a population path.
///
/// `values` holds one row per snapshot: raw counts n(t) for the stochastic
/// process (with `scale` = N), or the density z(t) for the ODE (scale 1).
/// Densities are always recomputed as values / scale.
struct PopulationTrajectory {
  std::vector<double> times;
  Eigen::MatrixXd values;
  double scale = 1.0;
  std::uint64_t event_count = 0;
  std::uint64_t rng_seed = 0;
  /// Set when the total event rate hit zero before t_end; later snapshots
  /// repeat the absorbed state.
  std::optional<double> absorbed_at;

  std::size_t size() const noexcept { return times.size(); }
  Eigen::VectorXd density(std::size_t k) const {
    return values.row(static_cast<Eigen::Index>(k)).transpose() / scale;
  }
  Eigen::MatrixXd densities() const { return values / scale; }
};

/// Thrown when the event budget runs out; carries the path simulated so far.
class EventCapExceeded : public NumericalError {
 public:
  EventCapExceeded(const std::string& what, PopulationTrajectory partial)
      : NumericalError(what), partial_(std::move(partial)) {}
  const PopulationTrajectory& partial() const noexcept { return partial_; }

 private:
  PopulationTrajectory partial_;
};

struct SimulationOptions {
  double snapshot_every = 0.0;  ///< grid spacing; <= 0 records only 0 and t_end
  std::uint64_t max_events = 200'000'000;
};

/// Exact event-driven simulation of births, deaths and moves.
///
/// Deaths are suppressed at empty nodes (they would drive counts negative).
/// Snapshots are taken on the grid 0, h, 2h, ... plus t_end, carrying the
/// last state forward since the path is piecewise constant.
PopulationTrajectory simulate_population(const GeneratorMatrix& q, const DemographyRates& demo,
                                         const std::vector<std::int64_t>& n0, std::int64_t scale,
                                         double t_end, std::uint64_t seed,
                                         const SimulationOptions& options = {});

/// Default RK4 step: min(0.01, 0.1 / max_i Q_ii).
double default_ode_step(const GeneratorMatrix& q);

/// Classic fixed-step RK4 for dz/dt = -Q'z + (b - d). Steps are shortened to
/// land exactly on every snapshot time and on t_end. With snapshot_every <= 0
/// every integration step is recorded.
PopulationTrajectory integrate_limit_ode(const GeneratorMatrix& q, const DemographyRates& demo,
                                         const Eigen::VectorXd& z0, double t_end, double dt,
                                         double snapshot_every = 0.0);

struct ConvergenceOptions {
  double snapshot_every = 0.1;
  double dt = 0.0;  ///< ODE step; <= 0 picks default_ode_step
  Execution execution = Execution::Parallel;
  std::uint64_t max_events = 200'000'000;
};

struct ConvergenceRow {
  std::int64_t scale = 0;
  double median_gap = 0.0;
  std::vector<double> replicate_gaps;
};

/// For each N, simulates `replicates` paths from n0 = round(N z0) and reports
/// the median over replicates of sup_t |n(t)/N - z_ode(t)|_inf on the grid.
std::vector<ConvergenceRow> convergence_gap(const GeneratorMatrix& q, const DemographyRates& demo,
                                            const Eigen::VectorXd& z0, double t_end,
                                            const std::vector<std::int64_t>& scales,
                                            int replicates, std::uint64_t seed,
                                            const ConvergenceOptions& options = {});

}  // namespace rwspatial
