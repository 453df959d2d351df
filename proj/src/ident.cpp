#include "rwspatial/ident.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <functional>
#include <numeric>
#include <set>

#include "rwspatial/errors.hpp"
#include "rwspatial/rng.hpp"

namespace rwspatial {

namespace {

// Nelder-Mead with the dimension-adaptive coefficients of Gao & Han (2012).
// Restarts the simplex around the incumbent until an evaluation budget runs out
// or a restart fails to improve.
struct NelderMead {
  std::function<double(const Eigen::VectorXd&)> f;
  int max_evaluations = 20000;
  double initial_step = 0.5;
  double f_target = 0.0;

  std::pair<Eigen::VectorXd, double> minimize(Eigen::VectorXd x0) const {
    const Eigen::Index n = x0.size();
    const double dn = static_cast<double>(n);
    const double alpha = 1.0;
    const double beta = 1.0 + 2.0 / dn;
    const double gamma = 0.75 - 1.0 / (2.0 * dn);
    const double delta = 1.0 - 1.0 / dn;
    int evals = 0;
    auto eval = [&](const Eigen::VectorXd& x) {
      ++evals;
      const double v = f(x);
      return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };

    Eigen::VectorXd best = std::move(x0);
    double best_f = eval(best);
    double step = initial_step;
    while (evals < max_evaluations && best_f > f_target) {
      std::vector<Eigen::VectorXd> s(static_cast<std::size_t>(n + 1), best);
      std::vector<double> fs(static_cast<std::size_t>(n + 1), best_f);
      for (Eigen::Index i = 0; i < n; ++i) {
        s[static_cast<std::size_t>(i + 1)][i] += step;
        fs[static_cast<std::size_t>(i + 1)] = eval(s[static_cast<std::size_t>(i + 1)]);
      }
      std::vector<std::size_t> order(s.size());
      const double start_f = best_f;
      int iter = 0;
      while (evals < max_evaluations) {
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fs[a] < fs[b]; });
        const std::size_t lo = order.front();
        const std::size_t hi = order.back();
        const std::size_t second = order[order.size() - 2];
        if (fs[lo] <= f_target) break;
        double size = 0.0;
        for (const auto& v : s) size = std::max(size, (v - s[lo]).cwiseAbs().maxCoeff());
        if (size < 1e-13 || std::abs(fs[hi] - fs[lo]) <= 1e-300) break;
        ++iter;
        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
        for (std::size_t k = 0; k < s.size(); ++k) {
          if (k != hi) centroid += s[k];
        }
        centroid /= dn;
        const Eigen::VectorXd xr = centroid + alpha * (centroid - s[hi]);
        const double fr = eval(xr);
        if (fr < fs[lo]) {
          const Eigen::VectorXd xe = centroid + beta * (xr - centroid);
          const double fe = eval(xe);
          if (fe < fr) {
            s[hi] = xe;
            fs[hi] = fe;
          } else {
            s[hi] = xr;
            fs[hi] = fr;
          }
        } else if (fr < fs[second]) {
          s[hi] = xr;
          fs[hi] = fr;
        } else {
          const bool outside = fr < fs[hi];
          const Eigen::VectorXd xc = outside ? Eigen::VectorXd(centroid + gamma * (xr - centroid))
                                             : Eigen::VectorXd(centroid - gamma * (centroid - s[hi]));
          const double fc = eval(xc);
          if (fc < std::min(fr, fs[hi])) {
            s[hi] = xc;
            fs[hi] = fc;
          } else {
            for (std::size_t k = 0; k < s.size(); ++k) {
              if (k == lo) continue;
              s[k] = s[lo] + delta * (s[k] - s[lo]);
              fs[k] = eval(s[k]);
            }
          }
        }
      }
      const auto lo = static_cast<std::size_t>(std::min_element(fs.begin(), fs.end()) - fs.begin());
      best = s[lo];
      best_f = fs[lo];
      if (!(best_f < start_f * (1.0 - 1e-6)) && iter > 0) {
        step *= 0.1;
        if (step < 1e-8) break;
      }
    }
    return {best, best_f};
  }
};

Eigen::MatrixXd generator_from_support(const std::vector<std::pair<NodeIndex, NodeIndex>>& support,
                                       const Eigen::VectorXd& log_rates, Eigen::Index m) {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(m, m);
  for (std::size_t k = 0; k < support.size(); ++k) {
    const double a = std::exp(log_rates[static_cast<Eigen::Index>(k)]);
    const auto i = static_cast<Eigen::Index>(support[k].first);
    const auto j = static_cast<Eigen::Index>(support[k].second);
    w(i, j) -= a;
    w(i, i) += a;
  }
  return w;
}

}  // namespace

std::string_view to_string(Identifiability c) {
  switch (c) {
    case Identifiability::IdentifiableByTheorem:
      return "IdentifiableByTheorem";
    case Identifiability::DeterministicLoop:
      return "DeterministicLoop";
    case Identifiability::Reducible:
      return "Reducible";
  }
  return "Unknown";
}

IdentifiabilityReport check_identifiable(const GeneratorMatrix& q) {
  const std::size_t m = q.dimension();
  const double threshold = kStructuralRateTolerance * q.max_rate();
  std::vector<RateEntry> structural;
  for (const auto& r : q.rates()) {
    if (r.rate > threshold) structural.push_back(r);
  }
  const GeneratorMatrix support(m, structural);

  IdentifiabilityReport report;
  if (!check_irreducible(support)) {
    report.classification = Identifiability::Reducible;
    return report;
  }
  for (NodeIndex i = 0; i < m; ++i) {
    if (support.out_rates(i).size() >= 2) {
      report.classification = Identifiability::IdentifiableByTheorem;
      report.witness_row = i;
      return report;
    }
  }
  // Irreducible with exactly one exit per node: follow the exits from 0.
  std::vector<NodeIndex> cycle{0};
  if (m > 1) {
    NodeIndex v = support.out_rates(0).front().to;
    while (v != 0) {
      cycle.push_back(v);
      v = support.out_rates(v).front().to;
    }
  }
  report.classification = Identifiability::DeterministicLoop;
  report.cycle = std::move(cycle);
  return report;
}

std::pair<GeneratorMatrix, GeneratorMatrix> construct_confounded_pair(
    const std::vector<double>& rates) {
  const std::size_t m = rates.size();
  if (m < 3) {
    throw PreconditionError("confounded cycles need M >= 3; at M = 2 the reversed loop equals Q");
  }
  std::vector<RateEntry> fwd;
  std::vector<RateEntry> bwd;
  for (std::size_t i = 0; i < m; ++i) {
    if (!(rates[i] > 0.0) || !std::isfinite(rates[i])) {
      throw PreconditionError("confounded cycle rates must be positive and finite");
    }
    fwd.push_back({i, (i + 1) % m, rates[i]});
    bwd.push_back({i, (i + m - 1) % m, rates[i]});
  }
  return {GeneratorMatrix(m, std::move(fwd)), GeneratorMatrix(m, std::move(bwd))};
}

ConfounderSearchResult search_confounder(const GeneratorMatrix& q,
                                         const ConfounderSearchOptions& options) {
  const auto m = static_cast<Eigen::Index>(q.dimension());
  const double scale = q.max_rate() > 0.0 ? q.max_rate() : 1.0;
  const Eigen::MatrixXd q_dense = q.dense() / scale;
  const Eigen::MatrixXd target = q_dense * q_dense.transpose();

  std::vector<std::pair<NodeIndex, NodeIndex>> support = options.support;
  if (support.empty()) {
    std::set<std::pair<NodeIndex, NodeIndex>> s;
    for (const auto& r : q.rates()) {
      s.insert({r.from, r.to});
      s.insert({r.to, r.from});
    }
    support.assign(s.begin(), s.end());
  }
  const auto n_params = static_cast<Eigen::Index>(support.size());

  auto residual_of = [&](const Eigen::MatrixXd& w) {
    return (w * w.transpose() - target).cwiseAbs().maxCoeff();
  };
  NelderMead nm;
  nm.max_evaluations = options.max_evaluations;
  nm.f_target = 1e-24;
  nm.f = [&](const Eigen::VectorXd& theta) {
    const Eigen::MatrixXd w = generator_from_support(support, theta, m);
    return (w * w.transpose() - target).squaredNorm();
  };

  // Starting points: planted generators first, then random log-rates.
  std::vector<Eigen::VectorXd> starts;
  for (const auto& planted : options.planted_starts) {
    const Eigen::MatrixXd pd = planted.dense() / scale;
    Eigen::VectorXd theta(n_params);
    for (Eigen::Index k = 0; k < n_params; ++k) {
      const double a = -pd(static_cast<Eigen::Index>(support[static_cast<std::size_t>(k)].first),
                           static_cast<Eigen::Index>(support[static_cast<std::size_t>(k)].second));
      theta[k] = std::log(std::max(a, 1e-12));
    }
    starts.push_back(theta);
  }
  Rng root(options.seed);
  for (int t = 0; t < options.trials; ++t) {
    Rng rng = root.split(static_cast<std::uint64_t>(t));
    Eigen::VectorXd theta(n_params);
    for (Eigen::Index k = 0; k < n_params; ++k) theta[k] = rng.normal(-0.5, 1.0);
    starts.push_back(theta);
  }

  struct Outcome {
    double residual = std::numeric_limits<double>::infinity();
    double distance = 0.0;
    Eigen::MatrixXd w;
  };
  std::vector<Outcome> outcomes(starts.size());
  auto run = [&](std::size_t k) {
    auto [theta, fval] = nm.minimize(starts[k]);
    (void)fval;
    Outcome o;
    o.w = generator_from_support(support, theta, m);
    o.residual = residual_of(o.w);
    o.distance = (o.w - q_dense).cwiseAbs().maxCoeff();
    outcomes[k] = std::move(o);
  };
  const auto n_starts = static_cast<long>(starts.size());
  if (options.execution == Execution::Parallel) {
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
    for (long k = 0; k < n_starts; ++k) {
      try {
        run(static_cast<std::size_t>(k));
      } catch (...) {
#pragma omp critical
        if (!failure) failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
  } else {
    for (long k = 0; k < n_starts; ++k) run(static_cast<std::size_t>(k));
  }

  ConfounderSearchResult result;
  result.starts = static_cast<int>(starts.size());
  result.best_residual = std::numeric_limits<double>::infinity();
  for (const auto& o : outcomes) {
    if (o.distance <= options.distinct_tolerance) continue;
    if (o.residual < result.best_residual) {
      result.best_residual = o.residual;
      result.best_candidate = o.w * scale;
    }
    if (o.residual <= options.match_tolerance) result.confounder_found = true;
  }
  return result;
}

bool verify_unique(const GeneratorMatrix& q, int trials, std::uint64_t seed, Execution execution) {
  const auto report = check_identifiable(q);
  if (report.classification != Identifiability::IdentifiableByTheorem) {
    throw PreconditionError("verify_unique needs an irreducible generator with a row holding "
                            "two or more positive rates; got " +
                            std::string(to_string(report.classification)));
  }
  ConfounderSearchOptions options;
  options.trials = trials;
  options.seed = seed;
  options.execution = execution;
  return !search_confounder(q, options).confounder_found;
}

}  // namespace rwspatial
