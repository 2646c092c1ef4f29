#include "gibbsvb/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "gibbsvb/error.hpp"

namespace gibbsvb {

namespace {

Eigen::MatrixXd cholesky_factor(const Eigen::MatrixXd& cov) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  double jitter = 1e-12 * std::max(1.0, cov.diagonal().cwiseAbs().maxCoeff());
  int attempts = 0;
  while(llt.info() != Eigen::Success) {
    if(++attempts > 8) {
      throw Error(ErrorKind::numerical_failure, "posterior covariance cannot be factorized");
    }
    Eigen::MatrixXd jittered = cov;
    jittered.diagonal().array() += jitter;
    llt.compute(jittered);
    jitter *= 100.0;
  }
  return llt.matrixL();
}

void check_level(double level) {
  if(!(level > 0.0 && level < 1.0)) {
    throw Error(ErrorKind::invalid_argument, "envelope level must lie in (0, 1)");
  }
}

bool strictly_increasing(std::span<const double> v) {
  for(std::size_t i = 1; i < v.size(); ++i) {
    if(!(v[i - 1] < v[i])) {
      return false;
    }
  }
  return true;
}

} // namespace

double quantile(std::vector<double>& values, double q) {
  if(values.empty()) {
    throw Error(ErrorKind::invalid_argument, "quantile of an empty sample");
  }
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Eigen::MatrixXd sample_theta(const GaussianDistribution& posterior, int count, std::uint64_t seed) {
  if(count < 1) {
    throw Error(ErrorKind::invalid_argument, "sample count must be >= 1");
  }
  const Eigen::MatrixXd L = cholesky_factor(posterior.covariance);
  const auto p = posterior.dim();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd z(p, count);
  for(int s = 0; s < count; ++s) {
    for(Eigen::Index k = 0; k < p; ++k) {
      z(k, s) = normal(rng);
    }
  }
  Eigen::MatrixXd draws = (L * z).colwise() + posterior.mean;
  return draws.transpose();
}

CurveEnvelope envelope_from_samples(const Eigen::MatrixXd& curves, std::span<const double> grid, double level) {
  check_level(level);
  if(curves.cols() != static_cast<Eigen::Index>(grid.size())) {
    throw Error(ErrorKind::dimension, "curve samples do not match the grid");
  }
  if(!strictly_increasing(grid)) {
    throw Error(ErrorKind::invalid_argument, "envelope grid must be strictly increasing");
  }
  CurveEnvelope env;
  env.grid.assign(grid.begin(), grid.end());
  env.level = level;
  const double tail = 0.5 * (1.0 - level);
  std::vector<double> column(static_cast<std::size_t>(curves.rows()));
  for(Eigen::Index g = 0; g < curves.cols(); ++g) {
    for(Eigen::Index s = 0; s < curves.rows(); ++s) {
      column[static_cast<std::size_t>(s)] = curves(s, g);
    }
    const double m = curves.col(g).mean();
    double lo = quantile(column, tail);
    double hi = quantile(column, 1.0 - tail);
    env.lower.push_back(std::min(lo, m));
    env.mean.push_back(m);
    env.upper.push_back(std::max(hi, m));
  }
  return env;
}

std::vector<CurveEnvelope> trend_envelope(const ModelSpec& spec, const GaussianDistribution& posterior,
                                          std::span<const double> grid, double level, int count,
                                          std::uint64_t seed, bool include_intercept) {
  check_level(level);
  const auto& trend = spec.trend();
  if(trend.kind == TrendKind::polynomial_xy) {
    throw Error(ErrorKind::unsupported, "trend envelopes are defined for constant or y-polynomial trends");
  }
  if(posterior.dim() != static_cast<Eigen::Index>(spec.parameter_dim())) {
    throw Error(ErrorKind::dimension, "posterior dimension differs from the model");
  }
  const Eigen::MatrixXd draws = sample_theta(posterior, count, seed);
  const int blocks = (trend.per_mark || trend.per_mark_intercept) ? spec.mark_levels() : 1;
  const auto td = spec.trend_dim();
  const auto intercepts = trend.intercept_columns(spec.mark_levels());
  const double x_mid = 0.5 * (trend.frame.xmin() + trend.frame.xmax());

  std::vector<CurveEnvelope> out;
  std::vector<double> row(td);
  for(int m = 0; m < blocks; ++m) {
    Eigen::MatrixXd design(static_cast<Eigen::Index>(grid.size()), static_cast<Eigen::Index>(td));
    for(std::size_t g = 0; g < grid.size(); ++g) {
      trend.evaluate({x_mid, grid[g]}, m, spec.mark_levels(), row);
      if(!include_intercept) {
        for(const auto c : intercepts) {
          row[c] = 0.0;
        }
      }
      for(std::size_t k = 0; k < td; ++k) {
        design(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(k)) = row[k];
      }
    }
    const Eigen::MatrixXd curves = draws.leftCols(static_cast<Eigen::Index>(td)) * design.transpose();
    out.push_back(envelope_from_samples(curves, grid, level));
  }
  return out;
}

double bayes_factor(double elbo_model_1, double elbo_model_0) { return std::exp(elbo_model_1 - elbo_model_0); }

SmoothingPrior SmoothingPrior::defaults_for(std::span<const double> locations, bool pin_first, double first_value) {
  if(locations.empty()) {
    throw Error(ErrorKind::invalid_argument, "smoothing prior needs at least one location");
  }
  SmoothingPrior prior;
  const double spacing = locations.size() > 1
                             ? (locations.back() - locations.front()) / static_cast<double>(locations.size() - 1)
                             : std::max(locations.front(), 1e-3);
  prior.length_scale = 2.0 * spacing;
  if(pin_first && locations.size() > 1) {
    prior.pins.emplace_back(0, first_value);
  }
  prior.pins.emplace_back(locations.size() - 1, 0.0);
  return prior;
}

GaussianDistribution build_smoothing_prior(std::span<const double> locations, const SmoothingPrior& prior) {
  if(!strictly_increasing(locations) || locations.empty()) {
    throw Error(ErrorKind::invalid_argument, "smoothing prior grid must be strictly increasing");
  }
  if(!(prior.kernel_scale > 0.0) || !(prior.length_scale > 0.0)) {
    throw Error(ErrorKind::invalid_argument, "kernel scale and length scale must be positive");
  }
  const auto K = static_cast<Eigen::Index>(locations.size());
  Eigen::MatrixXd cov(K, K);
  for(Eigen::Index a = 0; a < K; ++a) {
    for(Eigen::Index b = 0; b < K; ++b) {
      const double d = locations[static_cast<std::size_t>(a)] - locations[static_cast<std::size_t>(b)];
      cov(a, b) = prior.kernel_scale * std::exp(-d * d / (2.0 * prior.length_scale * prior.length_scale));
    }
  }
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(K);

  std::vector<bool> pinned(static_cast<std::size_t>(K), false);
  std::vector<Eigen::Index> pin_idx;
  Eigen::VectorXd pin_val(static_cast<Eigen::Index>(prior.pins.size()));
  for(std::size_t i = 0; i < prior.pins.size(); ++i) {
    const auto [k, v] = prior.pins[i];
    if(k >= static_cast<std::size_t>(K) || pinned[k]) {
      throw Error(ErrorKind::invalid_argument, "pin index out of range or repeated");
    }
    pinned[k] = true;
    pin_idx.push_back(static_cast<Eigen::Index>(k));
    pin_val[static_cast<Eigen::Index>(i)] = v;
  }

  if(!pin_idx.empty()) {
    std::vector<Eigen::Index> free_idx;
    for(Eigen::Index k = 0; k < K; ++k) {
      if(!pinned[static_cast<std::size_t>(k)]) {
        free_idx.push_back(k);
      }
    }
    const auto B = static_cast<Eigen::Index>(pin_idx.size());
    const auto F = static_cast<Eigen::Index>(free_idx.size());
    Eigen::MatrixXd kbb(B, B);
    Eigen::MatrixXd kfb(F, B);
    Eigen::MatrixXd kff(F, F);
    for(Eigen::Index i = 0; i < B; ++i) {
      for(Eigen::Index j = 0; j < B; ++j) kbb(i, j) = cov(pin_idx[i], pin_idx[j]);
      for(Eigen::Index f = 0; f < F; ++f) kfb(f, i) = cov(free_idx[f], pin_idx[i]);
    }
    for(Eigen::Index f = 0; f < F; ++f) {
      for(Eigen::Index g = 0; g < F; ++g) kff(f, g) = cov(free_idx[f], free_idx[g]);
    }
    kbb.diagonal().array() += smoothing_jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(kbb);
    if(llt.info() != Eigen::Success) {
      throw Error(ErrorKind::numerical_failure, "pinned block of the kernel matrix is not positive definite");
    }
    const Eigen::MatrixXd gain = llt.solve(kfb.transpose()).transpose();  // K_FB K_BB^-1
    const Eigen::VectorXd free_mean = gain * pin_val;
    Eigen::MatrixXd free_cov = kff - gain * kfb.transpose();
    free_cov = 0.5 * (free_cov + free_cov.transpose()).eval();

    cov.setZero();
    mean.setZero();
    for(Eigen::Index f = 0; f < F; ++f) {
      mean[free_idx[f]] = free_mean[f];
      for(Eigen::Index g = 0; g < F; ++g) cov(free_idx[f], free_idx[g]) = free_cov(f, g);
    }
    for(Eigen::Index i = 0; i < B; ++i) {
      mean[pin_idx[i]] = pin_val[i];
    }
  }
  cov.diagonal().array() += smoothing_jitter;

  Eigen::LLT<Eigen::MatrixXd> check(cov);
  if(check.info() != Eigen::Success) {
    throw Error(ErrorKind::numerical_failure, "smoothing prior covariance is not positive definite after jitter");
  }
  return {mean, cov};
}

GaussianDistribution join_priors(const GaussianDistribution& first, const GaussianDistribution& second) {
  const auto a = first.dim();
  const auto b = second.dim();
  GaussianDistribution out;
  out.mean.resize(a + b);
  out.mean << first.mean, second.mean;
  out.covariance = Eigen::MatrixXd::Zero(a + b, a + b);
  out.covariance.topLeftCorner(a, a) = first.covariance;
  out.covariance.bottomRightCorner(b, b) = second.covariance;
  return out;
}

std::vector<double> weight_locations(const ModelSpec& spec) {
  if(const auto* s = std::get_if<StepFunction>(&spec.interaction())) {
    std::vector<double> mids;
    for(std::size_t k = 1; k < s->edges.size(); ++k) {
      mids.push_back(0.5 * (s->edges[k - 1] + s->edges[k]));
    }
    return mids;
  }
  if(const auto* s = std::get_if<SmoothBasis>(&spec.interaction())) {
    return s->centers;
  }
  throw Error(ErrorKind::invalid_argument, "weight locations need a step_function or smooth_basis spec");
}

Eigen::MatrixXd interaction_curve_samples(const ModelSpec& spec, const Eigen::MatrixXd& theta_samples,
                                          std::span<const double> r_grid) {
  if(!std::holds_alternative<StepFunction>(spec.interaction()) &&
     !std::holds_alternative<SmoothBasis>(spec.interaction())) {
    throw Error(ErrorKind::invalid_argument, "interaction curves need a step_function or smooth_basis spec");
  }
  if(theta_samples.cols() != static_cast<Eigen::Index>(spec.parameter_dim())) {
    throw Error(ErrorKind::dimension, "theta samples do not match the model dimension");
  }
  const auto K = static_cast<Eigen::Index>(spec.interaction_dim());
  Eigen::MatrixXd basis(K, static_cast<Eigen::Index>(r_grid.size()));
  std::vector<double> h(static_cast<std::size_t>(K));
  for(std::size_t g = 0; g < r_grid.size(); ++g) {
    pair_basis(spec.interaction(), r_grid[g], h);
    for(Eigen::Index k = 0; k < K; ++k) {
      basis(k, static_cast<Eigen::Index>(g)) = h[static_cast<std::size_t>(k)];
    }
  }
  const Eigen::MatrixXd log_curve = theta_samples.rightCols(K) * basis;
  return log_curve.array().exp();
}

CurveEnvelope interaction_curve(const ModelSpec& spec, const Eigen::MatrixXd& theta_samples,
                                std::span<const double> r_grid, double level) {
  return envelope_from_samples(interaction_curve_samples(spec, theta_samples, r_grid), r_grid, level);
}

RangeEstimate characteristic_range(const Eigen::MatrixXd& curve_samples, std::span<const double> r_grid) {
  if(curve_samples.rows() < 1 || curve_samples.cols() != static_cast<Eigen::Index>(r_grid.size()) ||
     r_grid.empty()) {
    throw Error(ErrorKind::dimension, "curve samples do not match the r grid");
  }
  std::vector<double> argmax;
  argmax.reserve(static_cast<std::size_t>(curve_samples.rows()));
  std::size_t at_boundary = 0;
  const auto last = curve_samples.cols() - 1;
  for(Eigen::Index s = 0; s < curve_samples.rows(); ++s) {
    Eigen::Index best = 0;
    for(Eigen::Index g = 1; g < curve_samples.cols(); ++g) {
      if(curve_samples(s, g) > curve_samples(s, best)) {
        best = g;
      }
    }
    if(best == 0 || best == last) {
      ++at_boundary;
    }
    argmax.push_back(r_grid[static_cast<std::size_t>(best)]);
  }
  RangeEstimate est;
  est.mean = std::accumulate(argmax.begin(), argmax.end(), 0.0) / static_cast<double>(argmax.size());
  est.lo = quantile(argmax, 0.025);
  est.hi = quantile(argmax, 0.975);
  est.boundary_flag = 2 * at_boundary > argmax.size();
  return est;
}

} // namespace gibbsvb
