#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gibbsvb/model.hpp"
#include "gibbsvb/vb.hpp"

namespace gibbsvb {

struct CurveEnvelope {
  std::vector<double> grid;
  std::vector<double> lower;
  std::vector<double> mean;
  std::vector<double> upper;
  double level = 0.95;
};

// count x p matrix of independent draws from N(mean, covariance).
Eigen::MatrixXd sample_theta(const GaussianDistribution& posterior, int count, std::uint64_t seed);

// Pointwise mean and central `level` quantiles of the rows of `curves`
// (samples x grid points).
CurveEnvelope envelope_from_samples(const Eigen::MatrixXd& curves, std::span<const double> grid, double level);

// Trend linear predictor as a function of the y-coordinate, one envelope per
// trend block (one per mark for per-mark trends, else a single envelope).
// Points are evaluated at x = frame centre; intercepts are dropped unless
// include_intercept is set.
std::vector<CurveEnvelope> trend_envelope(const ModelSpec& spec, const GaussianDistribution& posterior,
                                          std::span<const double> grid, double level, int count,
                                          std::uint64_t seed, bool include_intercept);

// exp(elbo_1 - elbo_0): a ratio of evidence lower bounds, so only an
// approximation of the true Bayes factor.
double bayes_factor(double elbo_model_1, double elbo_model_0);

struct SmoothingPrior {
  double kernel_scale = 4.0;
  double length_scale = 1.0;
  std::vector<std::pair<std::size_t, double>> pins;

  // sigma^2 = 4, l = 2 * mean spacing, last weight pinned to 0 and optionally
  // the first pinned to first_value.
  static SmoothingPrior defaults_for(std::span<const double> locations, bool pin_first = false,
                                     double first_value = -10.0);
};

inline constexpr double smoothing_jitter = 1e-8;

// Squared-exponential GP prior over interaction weights conditioned on the
// pinned values. Pinned coordinates keep their pinned mean with zero variance;
// 1e-8 is then added to the whole diagonal.
GaussianDistribution build_smoothing_prior(std::span<const double> locations, const SmoothingPrior& prior);

// Block-diagonal join [first | second].
GaussianDistribution join_priors(const GaussianDistribution& first, const GaussianDistribution& second);

// Locations of the interaction weights: bin midpoints for step functions,
// centers for smooth bases.
std::vector<double> weight_locations(const ModelSpec& spec);

// Per-sample phi(r) = exp(sum_k h_k(r) w_k), samples x grid.
Eigen::MatrixXd interaction_curve_samples(const ModelSpec& spec, const Eigen::MatrixXd& theta_samples,
                                          std::span<const double> r_grid);
CurveEnvelope interaction_curve(const ModelSpec& spec, const Eigen::MatrixXd& theta_samples,
                                std::span<const double> r_grid, double level = 0.95);

struct RangeEstimate {
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  bool boundary_flag = false;
};

// Argmax of each sample curve (ties to the smallest r); mean and central 95%
// interval of the argmax distribution.
RangeEstimate characteristic_range(const Eigen::MatrixXd& curve_samples, std::span<const double> r_grid);

// Type-7 empirical quantile of `values` (sorted in place).
double quantile(std::vector<double>& values, double q);

} // namespace gibbsvb
