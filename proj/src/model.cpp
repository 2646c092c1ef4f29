#include "gibbsvb/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gibbsvb {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double rescale(double v, double lo, double hi) { return 2.0 * (v - lo) / (hi - lo) - 1.0; }

bool strictly_increasing(const std::vector<double>& v) {
  return std::adjacent_find(v.begin(), v.end(), [](double a, double b) { return !(a < b); }) == v.end();
}

void validate(const InteractionSpec& spec) {
  std::visit(overloaded{
                 [](const NoInteraction&) {},
                 [](const Strauss& s) {
                   if(!(s.range > 0.0)) throw Error(ErrorKind::invalid_radius, "strauss range must be > 0");
                 },
                 [](const CrossStrauss& s) {
                   if(!(s.range > 0.0)) throw Error(ErrorKind::invalid_radius, "cross-strauss range must be > 0");
                 },
                 [](const StepFunction& s) {
                   if(s.edges.size() < 2 || s.edges.front() != 0.0 || !strictly_increasing(s.edges)) {
                     throw Error(ErrorKind::invalid_argument,
                                 "step grid must be 0 = r_0 < r_1 < ... < r_K with K >= 1");
                   }
                 },
                 [](const SmoothBasis& s) {
                   if(s.centers.empty() || !strictly_increasing(s.centers) || !(s.bandwidth > 0.0) ||
                      !(s.cutoff > 0.0)) {
                     throw Error(ErrorKind::invalid_argument,
                                 "smooth basis needs increasing centers, bandwidth > 0 and cutoff > 0");
                   }
                 },
                 [](const LennardJones& s) {
                   if(!(s.epsilon > 0.0) || !(s.sigma > 0.0) || !(s.cutoff > 0.0)) {
                     throw Error(ErrorKind::invalid_argument, "lennard-jones needs epsilon, sigma, cutoff > 0");
                   }
                 },
             },
             spec);
}

std::size_t interaction_length(const InteractionSpec& spec) {
  return std::visit(overloaded{
                        [](const NoInteraction&) -> std::size_t { return 0; },
                        [](const Strauss&) -> std::size_t { return 1; },
                        [](const CrossStrauss&) -> std::size_t { return 1; },
                        [](const StepFunction& s) -> std::size_t { return s.bins(); },
                        [](const SmoothBasis& s) -> std::size_t { return s.centers.size(); },
                        [](const LennardJones&) -> std::size_t { return 0; },
                    },
                    spec);
}

double interaction_range(const InteractionSpec& spec) {
  return std::visit(overloaded{
                        [](const NoInteraction&) { return 0.0; },
                        [](const Strauss& s) { return s.range; },
                        [](const CrossStrauss& s) { return s.range; },
                        [](const StepFunction& s) { return s.r_max(); },
                        [](const SmoothBasis& s) { return s.cutoff; },
                        [](const LennardJones& s) { return s.cutoff; },
                    },
                    spec);
}

// `each(cb)` must call cb(distance, mark) once for every other point that can
// interact with u (self already skipped).
template <class Each>
void fill_row(const ModelSpec& spec, Point u, int u_mark, Each&& each, std::span<double> out) {
  const auto td = spec.trend_dim();
  spec.trend().evaluate(u, u_mark, spec.mark_levels(), out.first(td));
  auto inter = out.subspan(td);
  std::fill(inter.begin(), inter.end(), 0.0);
  std::visit(overloaded{
                 [](const NoInteraction&) {},
                 [](const LennardJones&) {},
                 [&](const Strauss& s) {
                   each([&](double d, int) {
                     if(d < s.range) inter[0] += 1.0;
                   });
                 },
                 [&](const CrossStrauss& s) {
                   each([&](double d, int m) {
                     if(d < s.range && m != u_mark) inter[0] += 1.0;
                   });
                 },
                 [&](const StepFunction& s) {
                   const double r_max = s.r_max();
                   each([&](double d, int) {
                     if(d < r_max) {
                       const auto j = std::upper_bound(s.edges.begin(), s.edges.end(), d) - s.edges.begin();
                       inter[static_cast<std::size_t>(j - 1)] += 1.0;
                     }
                   });
                 },
                 [&](const SmoothBasis& s) {
                   const double denom = 2.0 * s.bandwidth * s.bandwidth;
                   each([&](double d, int) {
                     if(d < s.cutoff) {
                       for(std::size_t k = 0; k < s.centers.size(); ++k) {
                         const double z = d - s.centers[k];
                         inter[k] += std::exp(-z * z / denom);
                       }
                     }
                   });
                 },
             },
             spec.interaction());
}

void check_mark(const ModelSpec& spec, int mark) {
  if(mark < 0 || mark >= spec.mark_levels()) {
    throw Error(ErrorKind::invalid_argument,
                "mark " + std::to_string(mark) + " outside 0.." + std::to_string(spec.mark_levels() - 1));
  }
}

int resolve_mark(const ModelSpec& spec, const PointPattern& pattern, std::optional<int> u_mark,
                 std::optional<std::size_t> self) {
  int m = 0;
  if(u_mark) {
    m = *u_mark;
  } else if(self) {
    m = pattern.mark(*self);
  }
  check_mark(spec, m);
  return m;
}

void require_fittable(const ModelSpec& spec) {
  if(!spec.fittable()) {
    throw Error(ErrorKind::unsupported, "lennard-jones interaction is not of exponential-family form; "
                                        "it can only be simulated");
  }
}

} // namespace

std::size_t TrendBasis::basis_size() const {
  switch(kind) {
    case TrendKind::constant: return 1;
    case TrendKind::polynomial_y: return static_cast<std::size_t>(degree) + 1;
    case TrendKind::polynomial_xy: return static_cast<std::size_t>((degree + 1) * (degree + 2) / 2);
  }
  return 1;
}

std::size_t TrendBasis::row_length(int mark_levels) const {
  const auto b = basis_size();
  if(per_mark) {
    return b * static_cast<std::size_t>(mark_levels);
  }
  if(per_mark_intercept) {
    return static_cast<std::size_t>(mark_levels) + b - 1;
  }
  return b;
}

void TrendBasis::basis_values(Point u, std::span<double> out) const {
  switch(kind) {
    case TrendKind::constant:
      out[0] = 1.0;
      return;
    case TrendKind::polynomial_y: {
      const double y = rescale(u.y, frame.ymin(), frame.ymax());
      double v = 1.0;
      for(int k = 0; k <= degree; ++k) {
        out[static_cast<std::size_t>(k)] = v;
        v *= y;
      }
      return;
    }
    case TrendKind::polynomial_xy: {
      const double x = rescale(u.x, frame.xmin(), frame.xmax());
      const double y = rescale(u.y, frame.ymin(), frame.ymax());
      std::size_t j = 0;
      // Ordered by total degree, then by decreasing power of x.
      for(int t = 0; t <= degree; ++t) {
        for(int a = t; a >= 0; --a) {
          out[j++] = std::pow(x, a) * std::pow(y, t - a);
        }
      }
      return;
    }
  }
}

void TrendBasis::evaluate(Point u, int mark, int mark_levels, std::span<double> out) const {
  const auto b = basis_size();
  std::fill(out.begin(), out.end(), 0.0);
  if(per_mark) {
    basis_values(u, out.subspan(static_cast<std::size_t>(mark) * b, b));
  } else if(per_mark_intercept) {
    std::vector<double> values(b);
    basis_values(u, values);
    out[static_cast<std::size_t>(mark)] = 1.0;
    std::copy(values.begin() + 1, values.end(), out.begin() + mark_levels);
  } else {
    basis_values(u, out.first(b));
  }
}

std::vector<std::size_t> TrendBasis::intercept_columns(int mark_levels) const {
  std::vector<std::size_t> cols;
  if(per_mark) {
    for(int m = 0; m < mark_levels; ++m) {
      cols.push_back(static_cast<std::size_t>(m) * basis_size());
    }
  } else if(per_mark_intercept) {
    for(int m = 0; m < mark_levels; ++m) {
      cols.push_back(static_cast<std::size_t>(m));
    }
  } else {
    cols.push_back(0);
  }
  return cols;
}

StepFunction uniform_steps(std::size_t bins, double r_max) {
  if(bins == 0 || !(r_max > 0.0)) {
    throw Error(ErrorKind::invalid_argument, "step grid needs K >= 1 and r_max > 0");
  }
  StepFunction s;
  s.edges.resize(bins + 1);
  for(std::size_t k = 0; k <= bins; ++k) {
    s.edges[k] = r_max * static_cast<double>(k) / static_cast<double>(bins);
  }
  s.edges.back() = r_max;
  return s;
}

SmoothBasis uniform_basis(std::size_t count, double r_max, double bandwidth) {
  if(count == 0 || !(r_max > 0.0) || !(bandwidth > 0.0)) {
    throw Error(ErrorKind::invalid_argument, "smooth basis needs K >= 1, r_max > 0, bandwidth > 0");
  }
  SmoothBasis s;
  s.centers.resize(count);
  for(std::size_t k = 0; k < count; ++k) {
    s.centers[k] = r_max * static_cast<double>(k + 1) / static_cast<double>(count);
  }
  s.bandwidth = bandwidth;
  s.cutoff = s.centers.back() + 3.0 * bandwidth;
  return s;
}

LennardJones lennard_jones(double epsilon, double sigma, std::optional<double> cutoff) {
  return LennardJones{epsilon, sigma, cutoff.value_or(2.5 * sigma)};
}

std::string describe(const InteractionSpec& spec) {
  std::ostringstream ss;
  std::visit(overloaded{
                 [&](const NoInteraction&) { ss << "none"; },
                 [&](const Strauss& s) { ss << "strauss(R=" << s.range << ")"; },
                 [&](const CrossStrauss& s) { ss << "cross_strauss(R=" << s.range << ")"; },
                 [&](const StepFunction& s) { ss << "step_function(K=" << s.bins() << ", r_max=" << s.r_max() << ")"; },
                 [&](const SmoothBasis& s) {
                   ss << "smooth_basis(K=" << s.centers.size() << ", bandwidth=" << s.bandwidth
                      << ", cutoff=" << s.cutoff << ")";
                 },
                 [&](const LennardJones& s) {
                   ss << "lennard_jones(epsilon=" << s.epsilon << ", sigma=" << s.sigma << ", cutoff=" << s.cutoff
                      << ")";
                 },
             },
             spec);
  return ss.str();
}

ModelSpec::ModelSpec(TrendBasis trend, InteractionSpec interaction, std::optional<double> hardcore_radius,
                     int mark_levels)
    : trend_(std::move(trend)), interaction_(std::move(interaction)), hardcore_radius_(hardcore_radius),
      mark_levels_(mark_levels) {
  if(trend_.degree < 0) {
    throw Error(ErrorKind::invalid_argument, "trend degree must be >= 0");
  }
  if(trend_.kind == TrendKind::constant) {
    trend_.degree = 0;
  }
  if(trend_.per_mark && trend_.per_mark_intercept) {
    throw Error(ErrorKind::invalid_argument, "per_mark and per_mark_intercept are exclusive");
  }
  if(mark_levels_ < 1) {
    throw Error(ErrorKind::invalid_argument, "mark_levels must be >= 1");
  }
  if(hardcore_radius_ && !(*hardcore_radius_ > 0.0)) {
    throw Error(ErrorKind::invalid_radius, "hard-core radius must be > 0");
  }
  validate(interaction_);
  trend_dim_ = trend_.row_length(mark_levels_);
  interaction_dim_ = interaction_length(interaction_);
  reach_ = std::max(interaction_range(interaction_), hardcore_radius_.value_or(0.0));
}

void pair_basis(const InteractionSpec& spec, double r, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  std::visit(overloaded{
                 [](const NoInteraction&) {},
                 [](const LennardJones&) {},
                 [&](const Strauss& s) { out[0] = r < s.range ? 1.0 : 0.0; },
                 [&](const CrossStrauss& s) { out[0] = r < s.range ? 1.0 : 0.0; },
                 [&](const StepFunction& s) {
                   if(r >= 0.0 && r < s.r_max()) {
                     const auto j = std::upper_bound(s.edges.begin(), s.edges.end(), r) - s.edges.begin();
                     out[static_cast<std::size_t>(j - 1)] = 1.0;
                   }
                 },
                 [&](const SmoothBasis& s) {
                   if(r < s.cutoff) {
                     for(std::size_t k = 0; k < s.centers.size(); ++k) {
                       const double z = r - s.centers[k];
                       out[k] = std::exp(-z * z / (2.0 * s.bandwidth * s.bandwidth));
                     }
                   }
                 },
             },
             spec);
}

void statistic_row(const ModelSpec& spec, PatternView others, Point u, int u_mark, std::optional<std::size_t> self,
                   std::span<double> out) {
  if(out.size() != spec.parameter_dim()) {
    throw Error(ErrorKind::dimension, "row buffer length differs from parameter_dim");
  }
  fill_row(
      spec, u, u_mark,
      [&](auto&& cb) {
        for(std::size_t j = 0; j < others.size(); ++j) {
          if(self && *self == j) {
            continue;
          }
          cb(pair_distance(u, others.points[j]), others.mark(j));
        }
      },
      out);
}

Eigen::VectorXd statistic_row(const ModelSpec& spec, const PointPattern& pattern, Point u, std::optional<int> u_mark,
                              std::optional<std::size_t> self_index) {
  require_fittable(spec);
  const int m = resolve_mark(spec, pattern, u_mark, self_index);
  Eigen::VectorXd row(static_cast<Eigen::Index>(spec.parameter_dim()));
  statistic_row(spec, pattern.view(), u, m, self_index, {row.data(), static_cast<std::size_t>(row.size())});
  return row;
}

Eigen::VectorXd statistic_row(const ModelSpec& spec, const NeighborIndex& index, Point u, std::optional<int> u_mark,
                              std::optional<std::size_t> self_index) {
  require_fittable(spec);
  const auto& pattern = index.pattern();
  const int m = resolve_mark(spec, pattern, u_mark, self_index);
  Eigen::VectorXd row(static_cast<Eigen::Index>(spec.parameter_dim()));
  const double reach = spec.reach();
  fill_row(
      spec, u, m,
      [&](auto&& cb) {
        if(reach <= 0.0) {
          return;
        }
        index.for_each_within(u, reach, [&](std::size_t j, double d) {
          if(self_index && *self_index == j) {
            return;
          }
          cb(d, pattern.mark(j));
        });
      },
      {row.data(), static_cast<std::size_t>(row.size())});
  return row;
}

Eigen::VectorXd interaction_row(const ModelSpec& spec, const PointPattern& pattern, Point u,
                                std::optional<std::size_t> self_index) {
  if(!std::holds_alternative<StepFunction>(spec.interaction()) &&
     !std::holds_alternative<SmoothBasis>(spec.interaction())) {
    throw Error(ErrorKind::invalid_argument, "interaction_row needs a step_function or smooth_basis spec");
  }
  const Eigen::VectorXd full = statistic_row(spec, pattern, u, std::nullopt, self_index);
  return full.tail(static_cast<Eigen::Index>(spec.interaction_dim()));
}

bool hardcore_violation(const ModelSpec& spec, PatternView others, Point u, std::optional<std::size_t> self) {
  if(!spec.hardcore_radius()) {
    return false;
  }
  const double h = *spec.hardcore_radius();
  for(std::size_t j = 0; j < others.size(); ++j) {
    if(self && *self == j) {
      continue;
    }
    if(pair_distance(u, others.points[j]) < h) {
      return true;
    }
  }
  return false;
}

double conditional_intensity(const ModelSpec& spec, std::span<const double> theta, PatternView others, Point u,
                             int u_mark, std::optional<std::size_t> self) {
  if(theta.size() != spec.parameter_dim()) {
    throw Error(ErrorKind::dimension, "theta has length " + std::to_string(theta.size()) + ", model needs " +
                                          std::to_string(spec.parameter_dim()));
  }
  check_mark(spec, u_mark);
  if(hardcore_violation(spec, others, u, self)) {
    return 0.0;
  }
  std::vector<double> row(spec.parameter_dim());
  statistic_row(spec, others, u, u_mark, self, row);
  double eta = 0.0;
  for(std::size_t k = 0; k < row.size(); ++k) {
    eta += theta[k] * row[k];
  }
  if(const auto* lj = std::get_if<LennardJones>(&spec.interaction())) {
    for(std::size_t j = 0; j < others.size(); ++j) {
      if(self && *self == j) {
        continue;
      }
      const double d = pair_distance(u, others.points[j]);
      if(d < lj->cutoff) {
        if(d <= 0.0) {
          return 0.0;
        }
        eta -= lennard_jones_potential(lj->epsilon, lj->sigma, d);
      }
    }
  }
  return std::exp(eta);
}

double conditional_intensity(const ModelSpec& spec, const Eigen::VectorXd& theta, const PointPattern& pattern,
                             Point u, std::optional<int> u_mark, std::optional<std::size_t> self_index) {
  const int m = resolve_mark(spec, pattern, u_mark, self_index);
  return conditional_intensity(spec, {theta.data(), static_cast<std::size_t>(theta.size())}, pattern.view(), u, m,
                               self_index);
}

double lennard_jones_potential(double epsilon, double sigma, double r) {
  if(!(r > 0.0)) {
    throw Error(ErrorKind::invalid_argument, "lennard-jones potential is undefined at r <= 0");
  }
  const double s6 = std::pow(sigma / r, 6);
  return 4.0 * epsilon * (s6 * s6 - s6);
}

std::vector<double> lennard_jones_curve(double epsilon, double sigma, std::span<const double> r_grid) {
  if(!(epsilon > 0.0) || !(sigma > 0.0)) {
    throw Error(ErrorKind::invalid_argument, "lennard-jones needs epsilon > 0 and sigma > 0");
  }
  std::vector<double> out;
  out.reserve(r_grid.size());
  for(const double r : r_grid) {
    out.push_back(std::exp(-lennard_jones_potential(epsilon, sigma, r)));
  }
  return out;
}

double lennard_jones_characteristic_range(double sigma) { return std::pow(2.0, 1.0 / 6.0) * sigma; }

double lennard_jones_sigma_for_range(double characteristic_range) {
  return characteristic_range / std::pow(2.0, 1.0 / 6.0);
}

} // namespace gibbsvb
