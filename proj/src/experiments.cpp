#include "gibbsvb/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <sstream>
#include <thread>

#include "gibbsvb/io.hpp"
#include "gibbsvb/quadrature.hpp"
#include "gibbsvb/simulate.hpp"

namespace gibbsvb {

namespace {

// Runs body(i) for i in [0, count) on `workers` threads. Results must be
// written to per-index slots so the outcome does not depend on scheduling.
template <class Body>
void parallel_for(std::size_t count, int workers, Body&& body) {
  if(workers <= 1 || count <= 1) {
    for(std::size_t i = 0; i < count; ++i) {
      body(i);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> pool;
  const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(workers), count);
  for(std::size_t t = 0; t < n_threads; ++t) {
    pool.emplace_back([&] {
      for(auto i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch(...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for(auto& th : pool) {
    th.join();
  }
  for(auto& e : errors) {
    if(e) {
      std::rethrow_exception(e);
    }
  }
}

constexpr std::uint64_t dummy_seed_offset = 0x9e3779b97f4a7c15ULL;

double median(std::vector<double> v) { return quantile(v, 0.5); }

std::string fmt(double v) {
  std::ostringstream ss;
  ss << std::setprecision(12) << v;
  return ss.str();
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if(!out) {
    throw Error(ErrorKind::io, "cannot write " + path.string());
  }
  return out;
}

} // namespace

double max_relative_drop(const std::vector<double>& trace) {
  double worst = 0.0;
  for(std::size_t i = 1; i < trace.size(); ++i) {
    const double drop = (trace[i - 1] - trace[i]) / std::max(1.0, std::abs(trace[i - 1]));
    worst = std::max(worst, drop);
  }
  return worst;
}

const char* to_string(PriorKind kind) {
  switch(kind) {
    case PriorKind::flat: return "flat";
    case PriorKind::tight_correct: return "tight_correct";
    case PriorKind::tight_wrong: return "tight_wrong";
  }
  return "flat";
}

PriorKind parse_prior_kind(const std::string& text) {
  if(text == "flat") return PriorKind::flat;
  if(text == "tight_correct") return PriorKind::tight_correct;
  if(text == "tight_wrong") return PriorKind::tight_wrong;
  throw Error(ErrorKind::invalid_argument, "unknown prior kind '" + text + "'");
}

GaussianDistribution strauss_prior(PriorKind kind, const Eigen::Vector2d& theta_true, double gamma) {
  if(kind == PriorKind::flat) {
    return GaussianDistribution::flat(2);
  }
  const Eigen::VectorXd variances = gamma <= 0.05 + 1e-12 ? Eigen::Vector2d(1.0, 0.01) : Eigen::Vector2d(1.0, 0.001);
  Eigen::VectorXd mean = theta_true;
  if(kind == PriorKind::tight_wrong) {
    mean.array() += std::numbers::ln2;
  }
  return GaussianDistribution::diagonal(mean, variances);
}

double strauss_range_for(double beta) { return std::round(pack_range_rule(beta) * 100.0) / 100.0; }

Eigen::Vector2d StraussReplicate::rel_error_vb() const {
  return ((theta_vb - theta_true).array() / theta_true.array().abs()).matrix();
}
Eigen::Vector2d StraussReplicate::rel_error_irls() const {
  return ((theta_irls - theta_true).array() / theta_true.array().abs()).matrix();
}
Eigen::Vector2d StraussReplicate::rel_diff_vb_irls() const {
  return ((theta_vb - theta_irls).array().abs() / theta_irls.array().abs()).matrix();
}

std::string StraussStudyConfig::describe() const {
  std::ostringstream ss;
  ss << std::setprecision(17) << "study=strauss\nbeta_levels=";
  for(std::size_t i = 0; i < beta_levels.size(); ++i) ss << (i ? "," : "") << beta_levels[i];
  ss << "\ngamma_levels=";
  for(std::size_t i = 0; i < gamma_levels.size(); ++i) ss << (i ? "," : "") << gamma_levels[i];
  ss << "\nreplicates=" << replicates << "\npriors=";
  for(std::size_t i = 0; i < prior_kinds.size(); ++i) ss << (i ? "," : "") << to_string(prior_kinds[i]);
  ss << "\nseed=" << seed << "\nburn_in=" << burn_in_steps << "\nmax_iter=" << fit.max_iterations
     << "\nfit_tol=" << fit.elbo_rel_tolerance << "\ndummy=default(max(4n/V,100/V))\n";
  return ss.str();
}

std::vector<StraussReplicate> run_strauss_study(const StraussStudyConfig& config) {
  if(config.replicates < 1) {
    throw Error(ErrorKind::invalid_argument, "replicates must be >= 1");
  }
  struct Task {
    double beta;
    double gamma;
    int replicate;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  std::uint64_t index = 0;
  for(const double beta : config.beta_levels) {
    for(const double gamma : config.gamma_levels) {
      for(int r = 0; r < config.replicates; ++r) {
        tasks.push_back({beta, gamma, r, replicate_seed(config.seed, index++)});
      }
    }
  }
  const auto n_priors = config.prior_kinds.size();
  std::vector<StraussReplicate> rows(tasks.size() * n_priors);
  const Window target = Window::unit_square();

  parallel_for(tasks.size(), config.workers, [&](std::size_t t) {
    const auto& task = tasks[t];
    const double range = strauss_range_for(task.beta);
    const Eigen::Vector2d theta(std::log(task.beta), std::log(task.gamma));
    const ModelSpec spec(TrendBasis{}, Strauss{range});
    const Window sim_window = target.dilate(range);

    McmcOptions mcmc;
    mcmc.burn_in_steps = config.burn_in_steps;
    mcmc.seed = task.seed;
    const auto data = sample_gibbs(spec, {theta[0], theta[1]}, sim_window, mcmc);
    const auto scheme = DummyScheme::default_for(data);
    const auto dummy = generate_dummy(sim_window, scheme, task.seed ^ dummy_seed_offset);
    const auto design = build_design(spec, data, dummy, scheme, target);
    const auto irls = irls_fit(design);

    for(std::size_t k = 0; k < n_priors; ++k) {
      const auto kind = config.prior_kinds[k];
      const auto state = fit(strauss_prior(kind, theta, task.gamma), design, config.fit);
      auto& row = rows[t * n_priors + k];
      row.beta = task.beta;
      row.gamma = task.gamma;
      row.range = range;
      row.replicate = task.replicate;
      row.prior = kind;
      row.seed = task.seed;
      row.n_points = design.n_data();
      row.design_rows = static_cast<std::size_t>(design.N());
      row.theta_true = theta;
      row.theta_vb = state.posterior.mean;
      row.sd_vb = state.posterior.covariance.diagonal().cwiseSqrt();
      row.theta_irls = irls.theta;
      row.vb_converged = state.converged;
      row.irls_converged = irls.converged;
      row.vb_iterations = state.iteration;
      row.elbo = state.elbo;
      row.elbo_max_drop = max_relative_drop(state.elbo_trace);
    }
  });
  return rows;
}

std::string TrendStudyConfig::describe() const {
  std::ostringstream ss;
  ss << std::setprecision(17) << "study=trend\nreplicates=" << replicates << "\nseed=" << seed
     << "\nshared_truth=" << (shared_truth ? 1 : 0) << "\nburn_in=" << burn_in_steps << "\nprior_sd=" << prior_sd
     << "\nenvelope_samples=" << envelope_samples << "\nmax_iter=" << fit.max_iterations
     << "\nfit_tol=" << fit.elbo_rel_tolerance << "\n";
  return ss.str();
}

Window trend_study_window() { return Window(0.0, 1.0, 0.05, 0.75); }

namespace {

constexpr double trend_cross_range = 0.008;

ModelSpec trend_model(bool separate) {
  TrendBasis trend;
  trend.kind = TrendKind::polynomial_y;
  trend.degree = 4;
  trend.per_mark = separate;
  trend.per_mark_intercept = !separate;
  trend.frame = trend_study_window();
  return ModelSpec(trend, CrossStrauss{trend_cross_range}, std::nullopt, 2);
}

} // namespace

Eigen::VectorXd trend_study_truth(bool shared_truth) {
  // Layout: [type 0: 1, y, y^2, y^3, y^4 | type 1: ... | cross interaction],
  // y rescaled to [-1, 1] over the window.
  Eigen::VectorXd theta(11);
  const double base = std::log(600.0);
  theta << base, 0.8, -0.4, 0.0, 0.0,  //
      base, -0.8, 0.2, 0.0, 0.6,       //
      std::log(0.5);
  if(shared_truth) {
    theta.segment(5, 5) = theta.segment(0, 5);
  }
  return theta;
}

TrendStudyResult run_trend_study(const TrendStudyConfig& config) {
  if(config.replicates < 1) {
    throw Error(ErrorKind::invalid_argument, "replicates must be >= 1");
  }
  const Window target = trend_study_window();
  const Window sim_window = target.dilate(trend_cross_range);
  const auto separate = trend_model(true);
  const auto shared = trend_model(false);
  const Eigen::VectorXd truth = trend_study_truth(config.shared_truth);
  const std::vector<double> theta(truth.data(), truth.data() + truth.size());
  const auto prior_for = [&](const ModelSpec& spec) {
    const auto p = static_cast<Eigen::Index>(spec.parameter_dim());
    return GaussianDistribution::diagonal(Eigen::VectorXd::Zero(p),
                                          Eigen::VectorXd::Constant(p, config.prior_sd * config.prior_sd));
  };

  TrendStudyResult result;
  result.replicates.resize(static_cast<std::size_t>(config.replicates));
  GaussianDistribution first_posterior;
  parallel_for(result.replicates.size(), config.workers, [&](std::size_t r) {
    const auto seed = replicate_seed(config.seed, r);
    McmcOptions mcmc;
    mcmc.burn_in_steps = config.burn_in_steps;
    mcmc.seed = seed;
    const auto data = sample_gibbs(separate, theta, sim_window, mcmc);
    const auto scheme = DummyScheme::default_for(data);
    const auto dummy = generate_dummy(sim_window, scheme, seed ^ dummy_seed_offset);
    const auto design_sep = build_design(separate, data, dummy, scheme, target);
    const auto design_shared = build_design(shared, data, dummy, scheme, target);
    const auto fit_sep = fit(prior_for(separate), design_sep, config.fit);
    const auto fit_shared = fit(prior_for(shared), design_shared, config.fit);

    auto& row = result.replicates[r];
    row.replicate = static_cast<int>(r);
    row.seed = seed;
    for(const auto& meta : design_sep.rows) {
      if(meta.is_data) {
        (meta.mark == 0 ? row.n_type0 : row.n_type1)++;
      }
    }
    row.elbo_separate = fit_sep.elbo;
    row.elbo_shared = fit_shared.elbo;
    row.converged = fit_sep.converged && fit_shared.converged;
    row.elbo_max_drop = std::max(max_relative_drop(fit_sep.elbo_trace), max_relative_drop(fit_shared.elbo_trace));
    if(r == 0) {
      first_posterior = fit_sep.posterior;
    }
  });

  std::vector<double> grid(static_cast<std::size_t>(config.envelope_points));
  for(std::size_t g = 0; g < grid.size(); ++g) {
    grid[g] = target.ymin() + (target.ymax() - target.ymin()) * static_cast<double>(g) /
                                  static_cast<double>(grid.size() - 1);
  }
  result.envelopes = trend_envelope(separate, first_posterior, grid, 0.95, config.envelope_samples,
                                    replicate_seed(config.seed, dummy_seed_offset), false);
  return result;
}

std::string InteractionStudyConfig::describe() const {
  std::ostringstream ss;
  ss << std::setprecision(17) << "study=interaction\nseed=" << seed << "\ntheta1=" << theta1
     << "\ncharacteristic_range=" << characteristic_range << "\nepsilon=" << epsilon << "\nside=" << side
     << "\nstep_bins=" << step_bins << "\nbasis_count=" << basis_count << "\nr_max=" << r_max
     << "\nburn_in=" << burn_in_steps << "\nposterior_samples=" << posterior_samples
     << "\nmax_iter=" << fit.max_iterations << "\nfit_tol=" << fit.elbo_rel_tolerance << "\n";
  return ss.str();
}

InteractionStudyResult run_interaction_study(const InteractionStudyConfig& config) {
  const Window target(0.0, config.side, 0.0, config.side);
  const Window sim_window = target.dilate(config.r_max);
  const double sigma = lennard_jones_sigma_for_range(config.characteristic_range);
  const ModelSpec lj_spec(TrendBasis{}, lennard_jones(config.epsilon, sigma));

  McmcOptions mcmc;
  mcmc.burn_in_steps = config.burn_in_steps;
  mcmc.seed = config.seed;
  const auto data = sample_gibbs(lj_spec, {config.theta1}, sim_window, mcmc);
  const auto scheme = DummyScheme::default_for(data);
  const auto dummy = generate_dummy(sim_window, scheme, config.seed ^ dummy_seed_offset);

  InteractionStudyResult result;
  result.n_points = data.restricted_to(target).n();
  const double dr = 0.0005;
  for(double r = dr; r < config.r_max; r += dr) {
    result.r_grid.push_back(r);
  }
  result.true_curve = lennard_jones_curve(config.epsilon, sigma, result.r_grid);

  const auto run_fit = [&](const InteractionSpec& interaction, bool midpoints) {
    const ModelSpec spec(TrendBasis{}, interaction);
    const auto design = build_design(spec, data, dummy, scheme, target);
    const auto locations = weight_locations(spec);
    const auto weights = build_smoothing_prior(locations, SmoothingPrior::defaults_for(locations, true));
    const auto prior = join_priors(GaussianDistribution::flat(1), weights);
    InteractionFit out;
    out.state = fit(prior, design, config.fit);
    out.elbo_max_drop = max_relative_drop(out.state.elbo_trace);
    const auto draws = sample_theta(out.state.posterior, config.posterior_samples, config.seed + 17);
    out.curve = interaction_curve(spec, draws, result.r_grid);
    // A step function is constant on each bin; its argmax is reported at the
    // bin midpoint.
    out.range_grid = midpoints ? locations : result.r_grid;
    out.range = characteristic_range(interaction_curve_samples(spec, draws, out.range_grid), out.range_grid);
    return out;
  };
  result.step = run_fit(uniform_steps(config.step_bins, config.r_max), true);
  const double spacing = config.r_max / static_cast<double>(config.basis_count);
  result.basis = run_fit(uniform_basis(config.basis_count, config.r_max, spacing), false);
  return result;
}

void write_envelope_csv(std::ostream& out, const CurveEnvelope& env) {
  out << "grid,lower,mean,upper\n" << std::setprecision(12);
  for(std::size_t g = 0; g < env.grid.size(); ++g) {
    out << env.grid[g] << "," << env.lower[g] << "," << env.mean[g] << "," << env.upper[g] << "\n";
  }
}

namespace {

Provenance provenance_for(const std::string& config_text, std::uint64_t seed) {
  return Provenance{fingerprint(config_text), seed};
}

void write_config(const std::filesystem::path& dir, const std::string& text, const Provenance& prov) {
  auto out = open_out(dir / "config.txt");
  write_provenance(out, prov);
  out << text;
}

} // namespace

void write_strauss_results(const std::string& dir, const StraussStudyConfig& config,
                           const std::vector<StraussReplicate>& rows) {
  std::filesystem::create_directories(dir);
  const auto text = config.describe();
  const auto prov = provenance_for(text, config.seed);
  write_config(dir, text, prov);

  {
    auto out = open_out(std::filesystem::path(dir) / "replicates.csv");
    write_provenance(out, prov);
    out << "beta,gamma,R,prior,replicate,seed,n,rows,theta1_true,theta2_true,theta1_vb,theta2_vb,sd1_vb,sd2_vb,"
           "theta1_irls,theta2_irls,relerr1_vb,relerr2_vb,relerr1_irls,relerr2_irls,reldiff1,reldiff2,"
           "vb_converged,irls_converged,vb_iterations,elbo,elbo_max_drop\n";
    for(const auto& r : rows) {
      const auto ev = r.rel_error_vb();
      const auto ei = r.rel_error_irls();
      const auto d = r.rel_diff_vb_irls();
      out << fmt(r.beta) << "," << fmt(r.gamma) << "," << fmt(r.range) << "," << to_string(r.prior) << ","
          << r.replicate << "," << r.seed << "," << r.n_points << "," << r.design_rows << ","
          << fmt(r.theta_true[0]) << "," << fmt(r.theta_true[1]) << "," << fmt(r.theta_vb[0]) << ","
          << fmt(r.theta_vb[1]) << "," << fmt(r.sd_vb[0]) << "," << fmt(r.sd_vb[1]) << ","
          << fmt(r.theta_irls[0]) << "," << fmt(r.theta_irls[1]) << "," << fmt(ev[0]) << "," << fmt(ev[1]) << ","
          << fmt(ei[0]) << "," << fmt(ei[1]) << "," << fmt(d[0]) << "," << fmt(d[1]) << ","
          << (r.vb_converged ? 1 : 0) << "," << (r.irls_converged ? 1 : 0) << "," << r.vb_iterations << ","
          << fmt(r.elbo) << "," << fmt(r.elbo_max_drop) << "\n";
    }
  }

  // Group keys keep the study's cell order.
  std::vector<std::tuple<double, double, PriorKind>> keys;
  std::map<std::tuple<double, double, int>, std::vector<const StraussReplicate*>> groups;
  for(const auto& r : rows) {
    const auto key = std::make_tuple(r.beta, r.gamma, static_cast<int>(r.prior));
    if(groups.find(key) == groups.end()) {
      keys.emplace_back(r.beta, r.gamma, r.prior);
    }
    groups[key].push_back(&r);
  }
  auto out = open_out(std::filesystem::path(dir) / "summary.csv");
  write_provenance(out, prov);
  out << "beta,gamma,prior,replicates,mean_n,mean_relerr1_vb,mean_relerr2_vb,mean_relerr1_irls,mean_relerr2_irls,"
         "median_abserr2_vb,max_reldiff1,max_reldiff2,all_converged\n";
  for(const auto& [beta, gamma, kind] : keys) {
    const auto& g = groups[std::make_tuple(beta, gamma, static_cast<int>(kind))];
    double n = 0.0;
    Eigen::Vector2d ev = Eigen::Vector2d::Zero();
    Eigen::Vector2d ei = Eigen::Vector2d::Zero();
    Eigen::Vector2d dmax = Eigen::Vector2d::Zero();
    std::vector<double> abs2;
    bool conv = true;
    for(const auto* r : g) {
      n += static_cast<double>(r->n_points);
      ev += r->rel_error_vb();
      ei += r->rel_error_irls();
      dmax = dmax.cwiseMax(r->rel_diff_vb_irls());
      abs2.push_back(std::abs(r->theta_vb[1] - r->theta_true[1]));
      conv = conv && r->vb_converged && r->irls_converged;
    }
    const double c = static_cast<double>(g.size());
    out << fmt(beta) << "," << fmt(gamma) << "," << to_string(kind) << "," << g.size() << "," << fmt(n / c) << ","
        << fmt(ev[0] / c) << "," << fmt(ev[1] / c) << "," << fmt(ei[0] / c) << "," << fmt(ei[1] / c) << ","
        << fmt(median(abs2)) << "," << fmt(dmax[0]) << "," << fmt(dmax[1]) << "," << (conv ? 1 : 0) << "\n";
  }
}

void write_trend_results(const std::string& dir, const TrendStudyConfig& config, const TrendStudyResult& result) {
  std::filesystem::create_directories(dir);
  const auto text = config.describe();
  const auto prov = provenance_for(text, config.seed);
  write_config(dir, text, prov);
  {
    auto out = open_out(std::filesystem::path(dir) / "replicates.csv");
    write_provenance(out, prov);
    out << "replicate,seed,n_type0,n_type1,elbo_separate,elbo_shared,log_bf,bf,converged,elbo_max_drop\n";
    for(const auto& r : result.replicates) {
      out << r.replicate << "," << r.seed << "," << r.n_type0 << "," << r.n_type1 << "," << fmt(r.elbo_separate)
          << "," << fmt(r.elbo_shared) << "," << fmt(r.log_bayes_factor()) << ","
          << fmt(bayes_factor(r.elbo_separate, r.elbo_shared)) << "," << (r.converged ? 1 : 0) << ","
          << fmt(r.elbo_max_drop) << "\n";
    }
  }
  {
    std::vector<double> lbf;
    std::size_t favour = 0;
    for(const auto& r : result.replicates) {
      lbf.push_back(r.log_bayes_factor());
      favour += r.log_bayes_factor() > 0.0 ? 1 : 0;
    }
    auto out = open_out(std::filesystem::path(dir) / "summary.csv");
    write_provenance(out, prov);
    out << "replicates,fraction_bf_gt_1,median_log_bf,median_bf\n";
    const double med = median(lbf);
    out << lbf.size() << "," << fmt(static_cast<double>(favour) / static_cast<double>(lbf.size())) << ","
        << fmt(med) << "," << fmt(std::exp(med)) << "\n";
  }
  for(std::size_t m = 0; m < result.envelopes.size(); ++m) {
    auto out = open_out(std::filesystem::path(dir) / ("trend_envelope_type" + std::to_string(m) + ".csv"));
    write_provenance(out, prov);
    write_envelope_csv(out, result.envelopes[m]);
  }
}

void write_interaction_results(const std::string& dir, const InteractionStudyConfig& config,
                               const InteractionStudyResult& result) {
  std::filesystem::create_directories(dir);
  const auto text = config.describe();
  const auto prov = provenance_for(text, config.seed);
  write_config(dir, text, prov);
  const auto write_curve = [&](const std::string& name, const CurveEnvelope& env) {
    auto out = open_out(std::filesystem::path(dir) / name);
    write_provenance(out, prov);
    write_envelope_csv(out, env);
  };
  write_curve("step_curve.csv", result.step.curve);
  write_curve("basis_curve.csv", result.basis.curve);
  {
    auto out = open_out(std::filesystem::path(dir) / "true_curve.csv");
    write_provenance(out, prov);
    out << "r,phi\n" << std::setprecision(12);
    for(std::size_t g = 0; g < result.r_grid.size(); ++g) {
      out << result.r_grid[g] << "," << result.true_curve[g] << "\n";
    }
  }
  {
    auto out = open_out(std::filesystem::path(dir) / "step_weights.csv");
    write_provenance(out, prov);
    out << "r,weight_mean,weight_sd\n";
    const auto locations = result.step.range_grid;
    const auto& post = result.step.state.posterior;
    for(std::size_t k = 0; k < locations.size(); ++k) {
      const auto i = static_cast<Eigen::Index>(k) + 1;
      out << fmt(locations[k]) << "," << fmt(post.mean[i]) << "," << fmt(std::sqrt(post.covariance(i, i))) << "\n";
    }
  }
  auto out = open_out(std::filesystem::path(dir) / "summary.csv");
  write_provenance(out, prov);
  out << "fit,n_points,iterations,converged,elbo,range_mean,range_lo,range_hi,boundary_flag\n";
  const auto line = [&](const char* name, const InteractionFit& f) {
    out << name << "," << result.n_points << "," << f.state.iteration << "," << (f.state.converged ? 1 : 0) << ","
        << fmt(f.state.elbo) << "," << fmt(f.range.mean) << "," << fmt(f.range.lo) << "," << fmt(f.range.hi) << ","
        << (f.range.boundary_flag ? 1 : 0) << "\n";
  };
  line("step", result.step);
  line("basis", result.basis);
}

} // namespace gibbsvb
