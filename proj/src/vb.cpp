#include "gibbsvb/vb.hpp"

#include <cmath>
#include <sstream>

#include "gibbsvb/error.hpp"

namespace gibbsvb {

GaussianDistribution GaussianDistribution::flat(Eigen::Index p) {
  return {Eigen::VectorXd::Zero(p), flat_prior_variance * Eigen::MatrixXd::Identity(p, p)};
}

GaussianDistribution GaussianDistribution::diagonal(const Eigen::VectorXd& mean, const Eigen::VectorXd& variances) {
  if(mean.size() != variances.size()) {
    throw Error(ErrorKind::dimension, "mean and variances differ in length");
  }
  return {mean, variances.asDiagonal()};
}

void GaussianDistribution::check() const {
  if(covariance.rows() != mean.size() || covariance.cols() != mean.size()) {
    throw Error(ErrorKind::dimension, "covariance shape does not match mean");
  }
  if((covariance - covariance.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, covariance.cwiseAbs().maxCoeff())) {
    throw Error(ErrorKind::numerical_failure, "covariance is not symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(covariance);
  if(llt.info() != Eigen::Success) {
    throw Error(ErrorKind::numerical_failure, "covariance is not positive definite");
  }
}

double lambda_xi(double xi) {
  if(xi < 1e-6) {
    // tanh(z) = z - z^3/3 + ..., so lambda = -1/8 + xi^2/96 + O(xi^4).
    return -0.125 + xi * xi / 96.0;
  }
  return -std::tanh(0.5 * xi) / (4.0 * xi);
}

double neg_log1p_exp(double eta) {
  if(eta > 0.0) {
    return -(eta + std::log1p(std::exp(-eta)));
  }
  return -std::log1p(std::exp(eta));
}

double gamma_xi(double xi) { return 0.5 * xi + neg_log1p_exp(xi) + 0.25 * xi * std::tanh(0.5 * xi); }

double log_bound(double eta, double xi) { return lambda_xi(xi) * eta * eta - 0.5 * eta + gamma_xi(xi); }

void FitOptions::check() const {
  if(max_iterations < 1) {
    throw Error(ErrorKind::invalid_argument, "max_iterations must be >= 1");
  }
  if(!(elbo_rel_tolerance > 0.0)) {
    throw Error(ErrorKind::invalid_argument, "elbo_rel_tolerance must be > 0");
  }
  if(!(jitter >= 0.0)) {
    throw Error(ErrorKind::invalid_argument, "jitter must be >= 0");
  }
}

namespace {

struct PriorTerms {
  Eigen::MatrixXd precision;
  Eigen::VectorXd precision_mean;  // Sigma_0^-1 mu_0
  double log_det_cov;
  double quad;  // mu_0' Sigma_0^-1 mu_0
};

PriorTerms prior_terms(const GaussianDistribution& prior) {
  Eigen::LLT<Eigen::MatrixXd> llt(prior.covariance);
  if(llt.info() != Eigen::Success) {
    throw Error(ErrorKind::numerical_failure, "prior covariance is not positive definite");
  }
  PriorTerms t;
  const auto p = prior.dim();
  t.precision = llt.solve(Eigen::MatrixXd::Identity(p, p));
  t.precision = 0.5 * (t.precision + t.precision.transpose()).eval();
  t.precision_mean = llt.solve(prior.mean);
  t.log_det_cov = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  t.quad = prior.mean.dot(t.precision_mean);
  return t;
}

struct Evaluation {
  GaussianDistribution posterior;
  double elbo;
};

void check_shapes(const GaussianDistribution& prior, const LogisticDesign& design, const Eigen::VectorXd& xi) {
  design.check();
  if(prior.dim() != design.p()) {
    throw Error(ErrorKind::dimension, "prior dimension " + std::to_string(prior.dim()) + " differs from design p " +
                                          std::to_string(design.p()));
  }
  if(xi.size() != design.N()) {
    throw Error(ErrorKind::dimension, "xi length differs from the number of design rows");
  }
  if((xi.array() < 0.0).any()) {
    throw Error(ErrorKind::invalid_argument, "variational parameters must be non-negative");
  }
}

// Posterior and evidence bound for a fixed xi from one factorization.
Evaluation evaluate(const PriorTerms& pt, const LogisticDesign& design, const Eigen::VectorXd& xi, double jitter) {
  const auto N = design.N();
  const auto p = design.p();
  Eigen::VectorXd lam(N);
  Eigen::VectorXd gam(N);
  for(Eigen::Index i = 0; i < N; ++i) {
    lam[i] = lambda_xi(xi[i]);
    gam[i] = gamma_xi(xi[i]);
  }
  const Eigen::VectorXd weights = -2.0 * lam;
  Eigen::MatrixXd precision = pt.precision;
  precision.selfadjointView<Eigen::Lower>().rankUpdate((design.X.array().colwise() * weights.array().sqrt()).matrix().transpose());
  precision.triangularView<Eigen::StrictlyUpper>() = precision.transpose();

  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  double added = 0.0;
  double step = jitter;
  int attempts = 0;
  while(llt.info() != Eigen::Success) {
    if(step <= 0.0 || ++attempts > 12) {
      std::ostringstream ss;
      ss << "posterior precision is not positive definite (p = " << p << ", diagonal range ["
         << precision.diagonal().minCoeff() << ", " << precision.diagonal().maxCoeff() << "], jitter tried up to "
         << added << ")";
      throw Error(ErrorKind::numerical_failure, ss.str());
    }
    precision.diagonal().array() += step;
    added += step;
    step *= 10.0;
    llt.compute(precision);
  }

  const Eigen::VectorXd resid = design.y.array() - 0.5 + 2.0 * lam.array() * design.offset.array();
  const Eigen::VectorXd rhs = design.X.transpose() * resid + pt.precision_mean;
  Evaluation ev;
  ev.posterior.mean = llt.solve(rhs);
  ev.posterior.covariance = llt.solve(Eigen::MatrixXd::Identity(p, p));
  ev.posterior.covariance = 0.5 * (ev.posterior.covariance + ev.posterior.covariance.transpose()).eval();

  const double log_det_precision = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double quad_post = ev.posterior.mean.dot(rhs);  // mu' Sigma^-1 mu
  const double offset_quad = (lam.array() * design.offset.array().square()).sum();
  const double offset_lin = (design.y.array() - 0.5).matrix().dot(design.offset);
  ev.elbo = -0.5 * log_det_precision - 0.5 * pt.log_det_cov + gam.sum() + 0.5 * quad_post - 0.5 * pt.quad +
            offset_quad + offset_lin;
  return ev;
}

} // namespace

GaussianDistribution update_posterior(const GaussianDistribution& prior, const LogisticDesign& design,
                                      const Eigen::VectorXd& xi, double jitter) {
  check_shapes(prior, design, xi);
  return evaluate(prior_terms(prior), design, xi, jitter).posterior;
}

Eigen::VectorXd update_xi(const LogisticDesign& design, const GaussianDistribution& posterior) {
  design.check();
  if(posterior.dim() != design.p()) {
    throw Error(ErrorKind::dimension, "posterior dimension differs from design p");
  }
  const Eigen::VectorXd spread = (design.X * posterior.covariance).cwiseProduct(design.X).rowwise().sum();
  const Eigen::VectorXd eta = design.X * posterior.mean + design.offset;
  return (spread.array().max(0.0) + eta.array().square()).sqrt();
}

double elbo(const GaussianDistribution& prior, const LogisticDesign& design, const VariationalState& state) {
  check_shapes(prior, design, state.xi);
  return evaluate(prior_terms(prior), design, state.xi, 1e-10).elbo;
}

VariationalState fit(const GaussianDistribution& prior, const LogisticDesign& design, const FitOptions& options) {
  options.check();
  design.check();
  const auto pt = prior_terms(prior);
  VariationalState state;
  state.xi = options.xi_init == XiInit::all_ones ? Eigen::VectorXd::Ones(design.N())
                                                  : Eigen::VectorXd(design.offset.cwiseAbs());
  check_shapes(prior, design, state.xi);

  for(int it = 1; it <= options.max_iterations; ++it) {
    auto ev = evaluate(pt, design, state.xi, options.jitter);
    if(!std::isfinite(ev.elbo)) {
      throw Error(ErrorKind::numerical_failure, "evidence lower bound became non-finite at iteration " +
                                                    std::to_string(it));
    }
    const bool has_previous = !state.elbo_trace.empty();
    const double previous = has_previous ? state.elbo_trace.back() : 0.0;
    state.posterior = std::move(ev.posterior);
    state.elbo = ev.elbo;
    state.iteration = it;
    state.elbo_trace.push_back(ev.elbo);
    if(has_previous && (ev.elbo - previous) < options.elbo_rel_tolerance * std::abs(previous)) {
      state.converged = true;
      break;
    }
    if(it == options.max_iterations) {
      break;
    }
    state.xi = update_xi(design, state.posterior);
  }
  return state;
}

double log_likelihood(const LogisticDesign& design, const Eigen::VectorXd& theta) {
  design.check();
  const Eigen::VectorXd eta = design.X * theta + design.offset;
  double total = 0.0;
  for(Eigen::Index i = 0; i < eta.size(); ++i) {
    total += design.y[i] * eta[i] + neg_log1p_exp(eta[i]);
  }
  return total;
}

IrlsResult irls_fit(const LogisticDesign& design, int max_iterations, double tolerance) {
  design.check();
  const auto N = design.N();
  const auto p = design.p();
  if(N <= p) {
    throw Error(ErrorKind::invalid_argument, "irls needs more rows than parameters");
  }
  IrlsResult res;
  res.theta = Eigen::VectorXd::Zero(p);
  res.log_likelihood = log_likelihood(design, res.theta);
  Eigen::VectorXd prob(N);
  Eigen::VectorXd w(N);
  for(int it = 1; it <= max_iterations; ++it) {
    res.iterations = it;
    const Eigen::VectorXd eta = design.X * res.theta + design.offset;
    for(Eigen::Index i = 0; i < N; ++i) {
      prob[i] = 1.0 / (1.0 + std::exp(-eta[i]));
      w[i] = prob[i] * (1.0 - prob[i]);
    }
    const Eigen::VectorXd score = design.X.transpose() * (design.y - prob);
    Eigen::MatrixXd info = Eigen::MatrixXd::Zero(p, p);
    info.selfadjointView<Eigen::Lower>().rankUpdate((design.X.array().colwise() * w.array().sqrt()).matrix().transpose());
    info.triangularView<Eigen::StrictlyUpper>() = info.transpose();
    Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    if(ldlt.info() != Eigen::Success) {
      res.diagnostic = "information matrix is singular";
      return res;
    }
    Eigen::VectorXd step = ldlt.solve(score);
    double ll = log_likelihood(design, res.theta + step);
    int halvings = 0;
    while(!(ll >= res.log_likelihood - 1e-12 * std::abs(res.log_likelihood)) && halvings < 30) {
      step *= 0.5;
      ll = log_likelihood(design, res.theta + step);
      ++halvings;
    }
    res.theta += step;
    res.log_likelihood = ll;
    if(!res.theta.allFinite() || res.theta.norm() > 1e6) {
      std::ostringstream ss;
      ss << "coefficient norm diverging (|theta| = " << res.theta.norm() << "); data look separable";
      res.diagnostic = ss.str();
      return res;
    }
    if(step.cwiseAbs().maxCoeff() < tolerance * (1.0 + res.theta.cwiseAbs().maxCoeff())) {
      const Eigen::VectorXd fitted = design.X * res.theta;
      const Eigen::Index saturated = (w.array() < 1e-12).count();
      if(saturated > 0 && fitted.cwiseAbs().maxCoeff() > 25.0) {
        std::ostringstream ss;
        ss << saturated << " fitted probabilities are numerically 0 or 1 (|theta| = " << res.theta.norm()
           << "); data look separable";
        res.diagnostic = ss.str();
        return res;
      }
      res.converged = true;
      res.covariance = ldlt.solve(Eigen::MatrixXd::Identity(p, p));
      return res;
    }
  }
  std::ostringstream ss;
  ss << "no convergence after " << max_iterations << " iterations (|theta| = " << res.theta.norm()
     << "); possible separation";
  res.diagnostic = ss.str();
  return res;
}

} // namespace gibbsvb
