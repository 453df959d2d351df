#include "rwspatial/popsim.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>

#include "rwspatial/rng.hpp"

namespace rwspatial {

namespace {

std::vector<double> snapshot_grid(double t_end, double every) {
  std::vector<double> grid{0.0};
  if (every > 0.0) {
    for (std::size_t k = 1;; ++k) {
      const double t = static_cast<double>(k) * every;
      if (t >= t_end * (1.0 - 1e-12)) break;
      grid.push_back(t);
    }
  }
  grid.push_back(t_end);
  return grid;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

void DemographyRates::validate(std::size_t m) const {
  const auto n = static_cast<Eigen::Index>(m);
  if (birth.size() != n || death.size() != n) {
    throw ConfigError("birth/death vectors must have one entry per node");
  }
  if (!birth.allFinite() || !death.allFinite() || (birth.array() < 0.0).any() ||
      (death.array() < 0.0).any()) {
    throw ConfigError("birth/death rates must be finite and nonnegative");
  }
}

PopulationTrajectory simulate_population(const GeneratorMatrix& q, const DemographyRates& demo,
                                         const std::vector<std::int64_t>& n0, std::int64_t scale,
                                         double t_end, std::uint64_t seed,
                                         const SimulationOptions& options) {
  const std::size_t m = q.dimension();
  demo.validate(m);
  if (n0.size() != m) throw ConfigError("initial counts must have one entry per node");
  if (std::any_of(n0.begin(), n0.end(), [](std::int64_t v) { return v < 0; })) {
    throw ConfigError("initial counts must be nonnegative");
  }
  if (scale <= 0) throw ConfigError("population scale N must be positive");
  if (!(t_end > 0.0)) throw ConfigError("t_end must be positive");

  const auto grid = snapshot_grid(t_end, options.snapshot_every);
  PopulationTrajectory traj;
  traj.times = grid;
  traj.values.resize(static_cast<Eigen::Index>(grid.size()), static_cast<Eigen::Index>(m));
  traj.scale = static_cast<double>(scale);
  traj.rng_seed = seed;

  const double big_n = static_cast<double>(scale);
  std::vector<double> birth(m), death(m), exit(m);
  double total_birth = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    birth[i] = big_n * demo.birth[static_cast<Eigen::Index>(i)];
    death[i] = big_n * demo.death[static_cast<Eigen::Index>(i)];
    exit[i] = q.exit_rate(i);
    total_birth += birth[i];
  }

  std::vector<std::int64_t> n = n0;
  std::size_t next_snapshot = 0;
  auto record_until = [&](double t_now) {
    // Record every grid time strictly before t_now with the current state.
    while (next_snapshot < grid.size() && grid[next_snapshot] < t_now) {
      for (std::size_t i = 0; i < m; ++i) {
        traj.values(static_cast<Eigen::Index>(next_snapshot), static_cast<Eigen::Index>(i)) =
            static_cast<double>(n[i]);
      }
      ++next_snapshot;
    }
  };

  Rng rng(seed);
  double t = 0.0;
  std::uint64_t events = 0;
  while (true) {
    double total_death = 0.0;
    double total_move = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (n[i] > 0) {
        total_death += death[i];
        total_move += static_cast<double>(n[i]) * exit[i];
      }
    }
    const double total = total_birth + total_death + total_move;
    if (!(total > 0.0)) {
      traj.absorbed_at = t;
      record_until(std::numeric_limits<double>::infinity());
      break;
    }
    if (!std::isfinite(total)) throw NumericalError("total event rate is not finite");
    const double t_next = t + rng.exponential(total);
    if (t_next > t_end) {
      record_until(std::numeric_limits<double>::infinity());
      break;
    }
    record_until(t_next);
    t = t_next;

    if (events == options.max_events) {
      traj.times.resize(next_snapshot);
      traj.values.conservativeResize(static_cast<Eigen::Index>(next_snapshot), Eigen::NoChange);
      traj.event_count = events;
      std::ostringstream os;
      os << "event cap " << options.max_events << " exceeded at t = " << t;
      throw EventCapExceeded(os.str(), std::move(traj));
    }
    ++events;

    double u = rng.uniform() * total;
    std::size_t i = 0;
    if (u < total_birth) {
      for (i = 0; i + 1 < m && u >= birth[i]; ++i) u -= birth[i];
      ++n[i];
      continue;
    }
    u -= total_birth;
    if (u < total_death) {
      for (i = 0; i < m; ++i) {
        if (n[i] == 0) continue;
        if (u < death[i]) break;
        u -= death[i];
      }
      // guard against rounding past the last occupied node
      if (i == m) {
        for (i = m; i-- > 0;) {
          if (n[i] > 0 && death[i] > 0.0) break;
        }
      }
      --n[i];
      continue;
    }
    u -= total_death;
    std::size_t last_occupied = m;
    for (i = 0; i < m; ++i) {
      if (n[i] == 0 || exit[i] == 0.0) continue;
      last_occupied = i;
      const double w = static_cast<double>(n[i]) * exit[i];
      if (u < w) break;
      u -= w;
    }
    if (i == m) i = last_occupied;
    // pick the destination proportionally to alpha_ij
    const auto outs = q.out_rates(i);
    double v = rng.uniform() * exit[i];
    std::size_t k = 0;
    for (; k + 1 < outs.size() && v >= outs[k].rate; ++k) v -= outs[k].rate;
    --n[i];
    ++n[outs[k].to];
  }
  traj.event_count = events;
  return traj;
}

double default_ode_step(const GeneratorMatrix& q) {
  const double qmax = q.exit_rates().size() > 0 ? q.exit_rates().maxCoeff() : 0.0;
  return qmax > 0.0 ? std::min(0.01, 0.1 / qmax) : 0.01;
}

PopulationTrajectory integrate_limit_ode(const GeneratorMatrix& q, const DemographyRates& demo,
                                         const Eigen::VectorXd& z0, double t_end, double dt,
                                         double snapshot_every) {
  const std::size_t m = q.dimension();
  demo.validate(m);
  if (z0.size() != static_cast<Eigen::Index>(m)) {
    throw ConfigError("initial density must have one entry per node");
  }
  if (!(dt > 0.0)) throw ConfigError("ODE step dt must be positive");
  if (!(t_end > 0.0)) throw ConfigError("t_end must be positive");

  const SparseMatrix qt = q.sparse().transpose();
  const Eigen::VectorXd source = demo.birth - demo.death;
  auto rhs = [&](const Eigen::VectorXd& z) -> Eigen::VectorXd { return source - qt * z; };

  std::vector<double> grid;
  if (snapshot_every > 0.0) grid = snapshot_grid(t_end, snapshot_every);

  std::vector<double> times{0.0};
  std::vector<Eigen::VectorXd> states{z0};
  Eigen::VectorXd z = z0;
  double t = 0.0;
  std::size_t next_grid = 1;
  while (t < t_end) {
    double target = t_end;
    if (!grid.empty()) target = grid[next_grid];
    double h = std::min(dt, target - t);
    // avoid a sliver step right before the target
    if (target - (t + h) < 1e-12 * std::max(1.0, t_end)) h = target - t;
    const Eigen::VectorXd k1 = rhs(z);
    const Eigen::VectorXd k2 = rhs(z + 0.5 * h * k1);
    const Eigen::VectorXd k3 = rhs(z + 0.5 * h * k2);
    const Eigen::VectorXd k4 = rhs(z + h * k3);
    z += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    const bool on_target = (t + h == target) || (target - (t + h) <= 1e-12 * std::max(1.0, t_end));
    t = on_target ? target : t + h;
    if (!z.allFinite()) {
      std::ostringstream os;
      os << "ODE state became non-finite at t = " << t;
      throw NumericalError(os.str());
    }
    if (grid.empty()) {
      times.push_back(t);
      states.push_back(z);
    } else if (on_target) {
      times.push_back(t);
      states.push_back(z);
      ++next_grid;
      if (next_grid == grid.size()) break;
    }
  }

  PopulationTrajectory traj;
  traj.times = std::move(times);
  traj.values.resize(static_cast<Eigen::Index>(states.size()), static_cast<Eigen::Index>(m));
  for (std::size_t k = 0; k < states.size(); ++k) {
    traj.values.row(static_cast<Eigen::Index>(k)) = states[k].transpose();
  }
  traj.scale = 1.0;
  return traj;
}

std::vector<ConvergenceRow> convergence_gap(const GeneratorMatrix& q, const DemographyRates& demo,
                                            const Eigen::VectorXd& z0, double t_end,
                                            const std::vector<std::int64_t>& scales,
                                            int replicates, std::uint64_t seed,
                                            const ConvergenceOptions& options) {
  if (replicates <= 0) throw ConfigError("replicates must be positive");
  for (std::size_t k = 1; k < scales.size(); ++k) {
    if (scales[k] <= scales[k - 1]) throw ConfigError("N list must be strictly increasing");
  }
  if (!(options.snapshot_every > 0.0)) throw ConfigError("snapshot spacing must be positive");
  const double dt = options.dt > 0.0 ? options.dt : default_ode_step(q);
  const PopulationTrajectory ode =
      integrate_limit_ode(q, demo, z0, t_end, dt, options.snapshot_every);

  std::vector<ConvergenceRow> out;
  for (std::size_t s = 0; s < scales.size(); ++s) {
    const std::int64_t big_n = scales[s];
    std::vector<std::int64_t> n0(q.dimension());
    for (std::size_t i = 0; i < n0.size(); ++i) {
      n0[i] = std::llround(static_cast<double>(big_n) * z0[static_cast<Eigen::Index>(i)]);
    }
    std::vector<double> gaps(static_cast<std::size_t>(replicates), 0.0);
    SimulationOptions sim{options.snapshot_every, options.max_events};

    auto run_one = [&](int r) {
      const std::uint64_t rep_seed = derive_seed(derive_seed(seed, s), static_cast<std::uint64_t>(r));
      const auto path = simulate_population(q, demo, n0, big_n, t_end, rep_seed, sim);
      gaps[static_cast<std::size_t>(r)] = (path.densities() - ode.values).cwiseAbs().maxCoeff();
    };
    if (options.execution == Execution::Parallel) {
      // Exceptions cannot leave an OpenMP region; collect the first one.
      std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
      for (int r = 0; r < replicates; ++r) {
        try {
          run_one(r);
        } catch (...) {
#pragma omp critical
          if (!failure) failure = std::current_exception();
        }
      }
      if (failure) std::rethrow_exception(failure);
    } else {
      for (int r = 0; r < replicates; ++r) run_one(r);
    }
    out.push_back({big_n, median(gaps), std::move(gaps)});
  }
  return out;
}

}  // namespace rwspatial
