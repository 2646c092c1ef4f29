#include "gibbsvb/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace gibbsvb {

PointPattern sample_poisson(const Window& window, double intensity, std::uint64_t seed) {
  if(!(intensity > 0.0) || !std::isfinite(intensity)) {
    throw Error(ErrorKind::invalid_argument, "poisson intensity must be positive and finite");
  }
  std::mt19937_64 rng(seed);
  std::poisson_distribution<long> count(intensity * window.volume());
  std::uniform_real_distribution<double> ux(window.xmin(), window.xmax());
  std::uniform_real_distribution<double> uy(window.ymin(), window.ymax());
  const long n = count(rng);
  std::vector<Point> pts;
  pts.reserve(static_cast<std::size_t>(n));
  for(long i = 0; i < n; ++i) {
    const double x = ux(rng);
    const double y = uy(rng);
    pts.push_back({x, y});
  }
  return PointPattern(window, std::move(pts));
}

namespace {

void check_stability(const ModelSpec& spec, const std::vector<double>& theta) {
  if(theta.size() != spec.parameter_dim()) {
    throw Error(ErrorKind::dimension, "theta has length " + std::to_string(theta.size()) + ", model needs " +
                                          std::to_string(spec.parameter_dim()));
  }
  const bool strauss_like = std::holds_alternative<Strauss>(spec.interaction()) ||
                            std::holds_alternative<CrossStrauss>(spec.interaction());
  if(strauss_like && theta.back() > 0.0) {
    throw Error(ErrorKind::unstable_model, "strauss interaction parameter must be <= 0 for a well-defined model");
  }
}

} // namespace

GibbsChain::GibbsChain(ModelSpec spec, std::vector<double> theta, Window window, std::uint64_t seed,
                       InitialState initial)
    : spec_(std::move(spec)), theta_(std::move(theta)), window_(window), rng_(seed) {
  check_stability(spec_, theta_);
  const double reach = spec_.reach();
  if(reach > 0.0) {
    nx_ = std::clamp(static_cast<int>(std::floor(window_.width() / reach)), 1, 1024);
    ny_ = std::clamp(static_cast<int>(std::floor(window_.height() / reach)), 1, 1024);
  }
  cell_w_ = window_.width() / nx_;
  cell_h_ = window_.height() / ny_;
  cells_.resize(static_cast<std::size_t>(nx_) * ny_);

  if(initial == InitialState::poisson) {
    const double rate = std::exp(theta_.empty() ? 0.0 : theta_.front());
    std::poisson_distribution<long> count(rate * window_.volume());
    const long n = count(rng_);
    std::uniform_int_distribution<int> mark(0, spec_.mark_levels() - 1);
    for(long i = 0; i < n; ++i) {
      const double x = window_.xmin() + unit_(rng_) * window_.width();
      const double y = window_.ymin() + unit_(rng_) * window_.height();
      insert({std::min(x, window_.xmax()), std::min(y, window_.ymax())}, mark(rng_));
    }
  }
}

std::size_t GibbsChain::cell_of(Point p) const {
  const int cx = std::clamp(static_cast<int>((p.x - window_.xmin()) / cell_w_), 0, nx_ - 1);
  const int cy = std::clamp(static_cast<int>((p.y - window_.ymin()) / cell_h_), 0, ny_ - 1);
  return static_cast<std::size_t>(cy) * nx_ + cx;
}

void GibbsChain::insert(Point p, int mark) {
  const auto c = cell_of(p);
  points_.push_back(p);
  marks_.push_back(mark);
  home_.push_back(c);
  slot_.push_back(cells_[c].size());
  cells_[c].push_back(points_.size() - 1);
}

void GibbsChain::erase(std::size_t i) {
  // Drop i from its cell.
  auto& cell = cells_[home_[i]];
  const auto s = slot_[i];
  cell[s] = cell.back();
  slot_[cell[s]] = s;
  cell.pop_back();
  // Move the last point into slot i.
  const auto last = points_.size() - 1;
  if(i != last) {
    points_[i] = points_[last];
    marks_[i] = marks_[last];
    home_[i] = home_[last];
    slot_[i] = slot_[last];
    cells_[home_[i]][slot_[i]] = i;
  }
  points_.pop_back();
  marks_.pop_back();
  home_.pop_back();
  slot_.pop_back();
}

void GibbsChain::gather(Point u, std::optional<std::size_t> self) {
  local_points_.clear();
  local_marks_.clear();
  const double reach = spec_.reach();
  if(reach <= 0.0) {
    return;
  }
  const auto span = [&](double lo, double hi, double origin, double side, int cells) {
    const int a = static_cast<int>(std::floor((lo - origin) / side)) - 1;
    const int b = static_cast<int>(std::floor((hi - origin) / side)) + 1;
    return std::pair{std::clamp(a, 0, cells - 1), std::clamp(b, 0, cells - 1)};
  };
  const auto [cx0, cx1] = span(u.x - reach, u.x + reach, window_.xmin(), cell_w_, nx_);
  const auto [cy0, cy1] = span(u.y - reach, u.y + reach, window_.ymin(), cell_h_, ny_);
  for(int cy = cy0; cy <= cy1; ++cy) {
    for(int cx = cx0; cx <= cx1; ++cx) {
      for(const auto j : cells_[static_cast<std::size_t>(cy) * nx_ + cx]) {
        if(self && *self == j) {
          continue;
        }
        if(pair_distance(u, points_[j]) < reach) {
          local_points_.push_back(points_[j]);
          local_marks_.push_back(marks_[j]);
        }
      }
    }
  }
}

double GibbsChain::intensity(Point u, int mark, std::optional<std::size_t> self) {
  gather(u, self);
  const double lam = conditional_intensity(spec_, theta_, PatternView{local_points_, local_marks_}, u, mark,
                                           std::nullopt);
  if(!std::isfinite(lam)) {
    throw Error(ErrorKind::numerical_failure, "conditional intensity is not finite");
  }
  return lam;
}

void GibbsChain::step() {
  ++proposals_;
  const double volume = window_.volume();
  const double levels = spec_.mark_levels();
  const double n = static_cast<double>(points_.size());
  if(unit_(rng_) < 0.5) {
    const double x = window_.xmin() + unit_(rng_) * window_.width();
    const double y = window_.ymin() + unit_(rng_) * window_.height();
    const Point u{std::min(x, window_.xmax()), std::min(y, window_.ymax())};
    const int mark = std::min(static_cast<int>(unit_(rng_) * levels), spec_.mark_levels() - 1);
    const double ratio = intensity(u, mark) * volume * levels / (n + 1.0);
    if(unit_(rng_) < ratio) {
      insert(u, mark);
      ++accepted_;
    }
  } else {
    if(points_.empty()) {
      return;
    }
    const auto i = std::min(static_cast<std::size_t>(unit_(rng_) * n), points_.size() - 1);
    const double lam = intensity(points_[i], marks_[i], i);
    const double ratio = lam > 0.0 ? n / (volume * levels * lam) : 2.0;
    if(unit_(rng_) < ratio) {
      erase(i);
      ++accepted_;
    }
  }
}

void GibbsChain::run(std::size_t steps) {
  for(std::size_t s = 0; s < steps; ++s) {
    step();
  }
}

PointPattern GibbsChain::pattern() const {
  if(spec_.mark_levels() > 1) {
    return PointPattern(window_, points_, marks_);
  }
  return PointPattern(window_, points_);
}

PointPattern sample_gibbs(const ModelSpec& spec, const std::vector<double>& theta, const Window& window,
                          const McmcOptions& options) {
  GibbsChain chain(spec, theta, window, options.seed, options.initial);
  chain.run(options.burn_in_steps);
  return chain.pattern();
}

double pack_range_rule(double intensity_guess) {
  if(!(intensity_guess > 0.0)) {
    throw Error(ErrorKind::invalid_argument, "intensity guess must be positive");
  }
  const double r_max = 2.0 * std::sqrt(2.0 / (std::numbers::pi * std::numbers::pi * intensity_guess));
  return 0.7 * r_max;
}

} // namespace gibbsvb
