#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gibbsvb/posterior.hpp"
#include "gibbsvb/vb.hpp"

namespace gibbsvb {

enum class PriorKind { flat, tight_correct, tight_wrong };

const char* to_string(PriorKind kind);
PriorKind parse_prior_kind(const std::string& text);

// Strauss study priors in theta space:
//   flat:          N(0, diag(1e9))
//   tight_correct: N(theta, S) with S = diag(1, .01) for gamma = .05, diag(1, .001) otherwise
//   tight_wrong:   N(theta + log 2, S)
GaussianDistribution strauss_prior(PriorKind kind, const Eigen::Vector2d& theta_true, double gamma);

// Strauss range for intensity beta: pack_range_rule rounded to two decimals.
double strauss_range_for(double beta);

struct StraussStudyConfig {
  std::vector<double> beta_levels{100.0, 1000.0};
  std::vector<double> gamma_levels{0.05, 0.4};
  int replicates = 20;
  std::vector<PriorKind> prior_kinds{PriorKind::flat, PriorKind::tight_correct, PriorKind::tight_wrong};
  std::uint64_t seed = 1;
  std::size_t burn_in_steps = 100000;
  FitOptions fit;
  int workers = 1;

  std::string describe() const;
};

struct StraussReplicate {
  double beta = 0.0;
  double gamma = 0.0;
  double range = 0.0;
  int replicate = 0;
  PriorKind prior = PriorKind::flat;
  std::uint64_t seed = 0;
  std::size_t n_points = 0;    // data points inside the target window
  std::size_t design_rows = 0;
  Eigen::Vector2d theta_true = Eigen::Vector2d::Zero();
  Eigen::Vector2d theta_vb = Eigen::Vector2d::Zero();
  Eigen::Vector2d sd_vb = Eigen::Vector2d::Zero();
  Eigen::Vector2d theta_irls = Eigen::Vector2d::Zero();
  bool vb_converged = false;
  bool irls_converged = false;
  int vb_iterations = 0;
  double elbo = 0.0;
  // Largest relative decrease between consecutive ELBO iterates (<= 0 when monotone).
  double elbo_max_drop = 0.0;

  Eigen::Vector2d rel_error_vb() const;      // (vb - truth) / |truth|
  Eigen::Vector2d rel_error_irls() const;    // (irls - truth) / |truth|
  Eigen::Vector2d rel_diff_vb_irls() const;  // |vb - irls| / |irls|
};

// Every (beta, gamma) cell and replicate: simulate on the R-dilated unit
// square, build one border-corrected design, fit IRLS once and VB once per
// prior kind on that same design.
std::vector<StraussReplicate> run_strauss_study(const StraussStudyConfig& config);

struct TrendStudyConfig {
  std::uint64_t seed = 1;
  int replicates = 20;
  bool shared_truth = false;
  std::size_t burn_in_steps = 100000;
  double prior_sd = 10.0;
  int envelope_samples = 1000;
  int envelope_points = 71;
  FitOptions fit;
  int workers = 1;

  std::string describe() const;
};

struct TrendReplicate {
  int replicate = 0;
  std::uint64_t seed = 0;
  std::size_t n_type0 = 0;
  std::size_t n_type1 = 0;
  double elbo_separate = 0.0;
  double elbo_shared = 0.0;
  bool converged = false;
  double elbo_max_drop = 0.0;

  double log_bayes_factor() const { return elbo_separate - elbo_shared; }
};

struct TrendStudyResult {
  std::vector<TrendReplicate> replicates;
  // Posterior trend envelopes (no intercept) of the separate-trend fit of
  // replicate 0, one per type, over y in [0.05, 0.75].
  std::vector<CurveEnvelope> envelopes;
};

// Window [0,1] x [0.05,0.75]; quartic-in-y trends per type; cross-type
// Strauss with R = 0.008.
Window trend_study_window();
Eigen::VectorXd trend_study_truth(bool shared_truth);
TrendStudyResult run_trend_study(const TrendStudyConfig& config);

struct InteractionStudyConfig {
  std::uint64_t seed = 1;
  double theta1 = 5.298317366548036;  // log 200
  double characteristic_range = 0.06;
  double epsilon = 1.0;
  double side = 2.0;
  std::size_t step_bins = 20;
  std::size_t basis_count = 50;
  double r_max = 0.16;
  std::size_t burn_in_steps = 300000;
  int posterior_samples = 1000;
  FitOptions fit = long_fit();

  std::string describe() const;

  static FitOptions long_fit() {
    FitOptions f;
    f.max_iterations = 5000;
    return f;
  }
};

struct InteractionFit {
  VariationalState state;
  CurveEnvelope curve;     // on InteractionStudyResult::r_grid
  std::vector<double> range_grid;
  RangeEstimate range;
  double elbo_max_drop = 0.0;
};

struct InteractionStudyResult {
  std::size_t n_points = 0;
  std::vector<double> r_grid;
  std::vector<double> true_curve;
  InteractionFit step;
  InteractionFit basis;
};

InteractionStudyResult run_interaction_study(const InteractionStudyConfig& config);

// Result directories: config.txt, replicates.csv, summary.csv and
// plot-ready CSVs, each carrying a provenance header.
void write_strauss_results(const std::string& dir, const StraussStudyConfig& config,
                           const std::vector<StraussReplicate>& rows);
void write_trend_results(const std::string& dir, const TrendStudyConfig& config, const TrendStudyResult& result);
void write_interaction_results(const std::string& dir, const InteractionStudyConfig& config,
                               const InteractionStudyResult& result);

void write_envelope_csv(std::ostream& out, const CurveEnvelope& env);

// Largest relative drop between consecutive entries of an ELBO trace.
double max_relative_drop(const std::vector<double>& trace);

} // namespace gibbsvb
