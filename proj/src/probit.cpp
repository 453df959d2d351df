#include "rwspatial/probit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <boost/math/special_functions/erf.hpp>

namespace rwspatial {

double normal_cdf(double x) { return 0.5 * boost::math::erfc(-x / std::numbers::sqrt2); }

double log_normal_cdf(double x) {
  if (x > -5.0) return std::log(normal_cdf(x));
  // Mills-ratio expansion, relative error below 1e-12 for x <= -5 with 6 terms
  const double x2 = x * x;
  double series = 1.0;
  double term = 1.0;
  for (int k = 1; k <= 6; ++k) {
    term *= -static_cast<double>(2 * k - 1) / x2;
    series += term;
  }
  return -0.5 * x2 - std::log(-x) - 0.5 * std::log(2.0 * std::numbers::pi) + std::log(series);
}

double normal_quantile(double p) {
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

namespace {

// Standard normal restricted to (alpha, inf).
double standard_tail(double alpha, Rng& rng) {
  if (alpha < 0.5) {
    // P(Z > alpha) >= 0.31 here, so the complement form keeps full precision.
    const double upper_mass = normal_cdf(-alpha);
    const double u = rng.uniform_open();
    return -normal_quantile(u * upper_mass);
  }
  const double lambda = 0.5 * (alpha + std::sqrt(alpha * alpha + 4.0));
  while (true) {
    const double x = alpha + rng.exponential(lambda);
    const double log_accept = -0.5 * (x - lambda) * (x - lambda);
    if (std::log(rng.uniform_open()) <= log_accept) return x;
  }
}

}  // namespace

double truncated_normal_above(double mean, double lower, Rng& rng) {
  double x = mean + standard_tail(lower - mean, rng);
  if (!(x > lower)) x = std::nextafter(lower, std::numeric_limits<double>::infinity());
  return x;
}

double truncated_normal_below(double mean, double upper, Rng& rng) {
  double x = mean - standard_tail(mean - upper, rng);
  if (!(x < upper)) x = std::nextafter(upper, -std::numeric_limits<double>::infinity());
  return x;
}

void probit_latent_update(std::span<double> z, std::size_t observed, std::span<const double> means,
                          Rng& rng) {
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < z.size(); ++k) {
    if (k == observed) continue;
    z[k] = truncated_normal_below(means[k], z[observed], rng);
    top = std::max(top, z[k]);
  }
  z[observed] = truncated_normal_above(means[observed], top, rng);
}

const GaussHermiteRule& standard_normal_quadrature() {
  // Golub-Welsch on the probabilists' Hermite recurrence.
  static const GaussHermiteRule rule = [] {
    constexpr int n = 64;
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
      jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(static_cast<double>(k));
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
    GaussHermiteRule r;
    for (int k = 0; k < n; ++k) {
      r.nodes.push_back(eig.eigenvalues()[k]);
      const double v = eig.eigenvectors()(0, k);
      r.weights.push_back(v * v);
    }
    return r;
  }();
  return rule;
}

Eigen::VectorXd probit_category_probs(std::span<const double> means) {
  const auto& rule = standard_normal_quadrature();
  const auto k_count = static_cast<Eigen::Index>(means.size());
  Eigen::VectorXd p = Eigen::VectorXd::Zero(k_count);
  for (Eigen::Index k = 0; k < k_count; ++k) {
    double acc = 0.0;
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      double prod = 1.0;
      for (Eigen::Index a = 0; a < k_count; ++a) {
        if (a != k) prod *= normal_cdf(means[static_cast<std::size_t>(k)] -
                                       means[static_cast<std::size_t>(a)] + rule.nodes[q]);
      }
      acc += rule.weights[q] * prod;
    }
    p[k] = acc;
  }
  return p;
}

}  // namespace rwspatial
