#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "gibbsvb/geometry.hpp"

namespace gibbsvb {

enum class TrendKind { constant, polynomial_y, polynomial_xy };

// Trend part of the canonical statistic. Coordinates are rescaled affinely
// to [-1, 1] over `frame` before the monomials are taken.
//
// Coefficient layout (M = mark levels):
//   shared:               [basis]
//   per_mark:             [basis for mark 0 | basis for mark 1 | ...]
//   per_mark_intercept:   [intercept 0 .. intercept M-1 | non-constant basis]
struct TrendBasis {
  TrendKind kind = TrendKind::constant;
  int degree = 0;
  bool per_mark = false;
  bool per_mark_intercept = false;
  Window frame = Window::unit_square();

  std::size_t basis_size() const;
  std::size_t row_length(int mark_levels) const;
  // Values of the raw basis functions at u (length basis_size(); entry 0 is 1).
  void basis_values(Point u, std::span<double> out) const;
  // Full trend block for a point of the given mark.
  void evaluate(Point u, int mark, int mark_levels, std::span<double> out) const;
  // Index of every intercept coordinate within the trend block.
  std::vector<std::size_t> intercept_columns(int mark_levels) const;
};

struct NoInteraction {};

struct Strauss {
  double range;
};

// Counts neighbours of the opposite mark only.
struct CrossStrauss {
  double range;
};

// Bins [r_{k-1}, r_k) for k = 1..K with edges r_0 = 0 < ... < r_K = r_max.
struct StepFunction {
  std::vector<double> edges;

  std::size_t bins() const { return edges.empty() ? 0 : edges.size() - 1; }
  double r_max() const { return edges.back(); }
};

// h_k(r) = exp(-(r - c_k)^2 / (2 bandwidth^2)) for r < cutoff, 0 beyond.
struct SmoothBasis {
  std::vector<double> centers;
  double bandwidth;
  double cutoff;
};

// Simulation only: Phi(r) = 4 eps [(sigma/r)^12 - (sigma/r)^6], truncated at cutoff.
struct LennardJones {
  double epsilon;
  double sigma;
  double cutoff;
};

using InteractionSpec = std::variant<NoInteraction, Strauss, CrossStrauss, StepFunction, SmoothBasis, LennardJones>;

StepFunction uniform_steps(std::size_t bins, double r_max);
// Centers r_max * k / K for k = 1..K; cutoff = last center + 3 bandwidths.
SmoothBasis uniform_basis(std::size_t count, double r_max, double bandwidth);
// Cutoff defaults to 2.5 sigma.
LennardJones lennard_jones(double epsilon, double sigma, std::optional<double> cutoff = {});

std::string describe(const InteractionSpec& spec);

class ModelSpec {
public:
  ModelSpec(TrendBasis trend, InteractionSpec interaction, std::optional<double> hardcore_radius = {},
            int mark_levels = 1);

  const TrendBasis& trend() const { return trend_; }
  const InteractionSpec& interaction() const { return interaction_; }
  const std::optional<double>& hardcore_radius() const { return hardcore_radius_; }
  int mark_levels() const { return mark_levels_; }

  std::size_t trend_dim() const { return trend_dim_; }
  std::size_t interaction_dim() const { return interaction_dim_; }
  std::size_t parameter_dim() const { return trend_dim_ + interaction_dim_; }

  // Largest distance at which another point can affect a statistic or the
  // conditional intensity (interaction range or hard core). Zero when none.
  double reach() const { return reach_; }
  bool fittable() const { return !std::holds_alternative<LennardJones>(interaction_); }

private:
  TrendBasis trend_;
  InteractionSpec interaction_;
  std::optional<double> hardcore_radius_;
  int mark_levels_;
  std::size_t trend_dim_;
  std::size_t interaction_dim_;
  double reach_;
};

// Per-distance pair contributions h_k(r) of the interaction block (length
// interaction_dim). Mark compatibility is handled by the caller for
// cross-type interactions.
void pair_basis(const InteractionSpec& spec, double r, std::span<double> out);

// t(u; omega) against an arbitrary set of other points. `self` is skipped.
void statistic_row(const ModelSpec& spec, PatternView others, Point u, int u_mark,
                   std::optional<std::size_t> self, std::span<double> out);

// t(u; omega) = t(omega u {u}) - t(omega \ {u}); self_index given iff u is
// pattern point self_index.
Eigen::VectorXd statistic_row(const ModelSpec& spec, const PointPattern& pattern, Point u,
                              std::optional<int> u_mark = {}, std::optional<std::size_t> self_index = {});

// Same row with neighbours drawn from a prebuilt index (radius >= spec.reach()).
Eigen::VectorXd statistic_row(const ModelSpec& spec, const NeighborIndex& index, Point u,
                              std::optional<int> u_mark = {}, std::optional<std::size_t> self_index = {});

// psi row for step_function / smooth_basis specs, summing over data points.
Eigen::VectorXd interaction_row(const ModelSpec& spec, const PointPattern& pattern, Point u,
                                std::optional<std::size_t> self_index = {});

// True when some point other than `self` lies within the hard-core radius.
bool hardcore_violation(const ModelSpec& spec, PatternView others, Point u, std::optional<std::size_t> self);

// lambda(u; omega) = H(u; omega) exp(theta' t(u; omega)). For Lennard-Jones
// specs the trend part uses theta and the pair part the closed-form potential.
double conditional_intensity(const ModelSpec& spec, std::span<const double> theta, PatternView others, Point u,
                             int u_mark, std::optional<std::size_t> self);
double conditional_intensity(const ModelSpec& spec, const Eigen::VectorXd& theta, const PointPattern& pattern,
                             Point u, std::optional<int> u_mark = {}, std::optional<std::size_t> self_index = {});

double lennard_jones_potential(double epsilon, double sigma, double r);
// phi(r) = exp(-Phi(r)); maximal at 2^(1/6) sigma.
std::vector<double> lennard_jones_curve(double epsilon, double sigma, std::span<const double> r_grid);
double lennard_jones_characteristic_range(double sigma);
double lennard_jones_sigma_for_range(double characteristic_range);

} // namespace gibbsvb
