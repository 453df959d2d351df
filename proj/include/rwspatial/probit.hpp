#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "rwspatial/rng.hpp"

namespace rwspatial {

double normal_cdf(double x);
/// log Phi(x), accurate far into the lower tail.
double log_normal_cdf(double x);
double normal_quantile(double p);

/// Draws from N(mean, 1) restricted to (lower, +inf).
///
/// Inverse CDF on the upper tail when the standardized bound is below 0.5,
/// otherwise Robert's exponential-proposal rejection sampler, which stays
/// efficient arbitrarily far into the tail. The result is strictly above
/// `lower`.
double truncated_normal_above(double mean, double lower, Rng& rng);
/// Draws from N(mean, 1) restricted to (-inf, upper); strictly below `upper`.
double truncated_normal_below(double mean, double upper, Rng& rng);

/// One Gibbs sweep over the latent utilities of a single observation with
/// observed category `observed`: every other utility is drawn below the
/// observed one, then the observed utility is drawn above their maximum, so
/// it stays strictly the largest.
void probit_latent_update(std::span<double> z, std::size_t observed, std::span<const double> means,
                          Rng& rng);

/// Category probabilities of the multinomial probit: with z_a ~ N(m_a, 1)
/// independent, p_k = P(z_k is the maximum) = E[prod_{a != k} Phi(m_k - m_a + Z)].
/// Evaluated by 64-point Gauss-Hermite quadrature.
Eigen::VectorXd probit_category_probs(std::span<const double> means);

/// Gauss-Hermite nodes and weights for E[f(Z)], Z ~ N(0,1) (weights sum to 1).
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
const GaussHermiteRule& standard_normal_quadrature();

}  // namespace rwspatial
