#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gibbsvb/design.hpp"

namespace gibbsvb {

struct GaussianDistribution {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;

  Eigen::Index dim() const { return mean.size(); }

  // N(0, diag(1e9)), the "flat" prior.
  static GaussianDistribution flat(Eigen::Index p);
  static GaussianDistribution diagonal(const Eigen::VectorXd& mean, const Eigen::VectorXd& variances);

  // Symmetry within 1e-10 and a successful Cholesky factorization.
  void check() const;
};

inline constexpr double flat_prior_variance = 1e9;

// lambda(xi) = -tanh(xi/2) / (4 xi), with the limit -1/8 at xi = 0.
double lambda_xi(double xi);

// gamma(xi) = xi/2 - log(1 + e^xi) + (xi/4) tanh(xi/2). The tanh(xi/2) form is
// the one that makes the bound below tight at xi = |eta|.
double gamma_xi(double xi);

// Quadratic lower bound lambda(xi) eta^2 - eta/2 + gamma(xi) on -log(1 + e^eta).
double log_bound(double eta, double xi);

// -log(1 + e^eta) evaluated without overflow.
double neg_log1p_exp(double eta);

enum class XiInit { all_ones, from_offsets };

struct FitOptions {
  int max_iterations = 200;
  double elbo_rel_tolerance = 1e-8;
  XiInit xi_init = XiInit::all_ones;
  // Added to the precision diagonal (and escalated) if factorization fails.
  double jitter = 1e-10;

  void check() const;
};

struct VariationalState {
  Eigen::VectorXd xi;
  GaussianDistribution posterior;
  double elbo = 0.0;
  int iteration = 0;
  std::vector<double> elbo_trace;
  bool converged = false;
};

// Sigma^-1 = Sigma_0^-1 - 2 X' Lambda(xi) X,
// mu = Sigma [X'(y - 1/2 + 2 Lambda(xi) o) + Sigma_0^-1 mu_0].
GaussianDistribution update_posterior(const GaussianDistribution& prior, const LogisticDesign& design,
                                      const Eigen::VectorXd& xi, double jitter = 1e-10);

// xi_i = sqrt(x_i' Sigma x_i + (x_i' mu + o_i)^2), row by row.
Eigen::VectorXd update_xi(const LogisticDesign& design, const GaussianDistribution& posterior);

// Closed-form evidence lower bound at state.xi.
double elbo(const GaussianDistribution& prior, const LogisticDesign& design, const VariationalState& state);

VariationalState fit(const GaussianDistribution& prior, const LogisticDesign& design, const FitOptions& options = {});

// Logistic log-likelihood with offsets at theta.
double log_likelihood(const LogisticDesign& design, const Eigen::VectorXd& theta);

struct IrlsResult {
  Eigen::VectorXd theta;
  Eigen::MatrixXd covariance;  // inverse Fisher information at theta
  bool converged = false;
  int iterations = 0;
  double log_likelihood = 0.0;
  std::string diagnostic;
};

// Maximum-likelihood logistic regression with offsets by Newton/IRLS.
IrlsResult irls_fit(const LogisticDesign& design, int max_iterations = 100, double tolerance = 1e-10);

} // namespace gibbsvb
