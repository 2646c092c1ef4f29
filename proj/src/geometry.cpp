#include "gibbsvb/geometry.hpp"

#include <algorithm>
#include <sstream>

namespace gibbsvb {

Window::Window(double xmin, double xmax, double ymin, double ymax)
    : xmin_(xmin), xmax_(xmax), ymin_(ymin), ymax_(ymax) {
  if(!std::isfinite(xmin) || !std::isfinite(xmax) || !std::isfinite(ymin) || !std::isfinite(ymax)) {
    throw Error(ErrorKind::invalid_argument, "window bounds must be finite");
  }
  if(!(xmax > xmin) || !(ymax > ymin)) {
    std::ostringstream ss;
    ss << "window needs xmax > xmin and ymax > ymin, got [" << xmin << ", " << xmax << "] x [" << ymin
       << ", " << ymax << "]";
    throw Error(ErrorKind::invalid_argument, ss.str());
  }
}

Window Window::dilate(double r) const {
  if(!(r >= 0.0) || !std::isfinite(r)) {
    throw Error(ErrorKind::invalid_radius, "dilation radius must be finite and non-negative");
  }
  Window out = *this;
  out.margin_ += r;
  return out;
}

Window Window::erode(double r) const {
  if(!(r >= 0.0) || !std::isfinite(r)) {
    throw Error(ErrorKind::invalid_radius, "erosion radius must be finite and non-negative");
  }
  if(r <= margin_) {
    Window out = *this;
    out.margin_ = margin_ - r;
    return out;
  }
  const double rest = r - margin_;
  return Window(xmin_ + rest, xmax_ - rest, ymin_ + rest, ymax_ - rest);
}

PointPattern::PointPattern(Window window, std::vector<Point> points, std::vector<int> marks)
    : window_(window), points_(std::move(points)), marks_(std::move(marks)) {
  if(!marks_.empty() && marks_.size() != points_.size()) {
    throw Error(ErrorKind::dimension, "marks must align with points");
  }
  for(std::size_t i = 0; i < points_.size(); ++i) {
    const auto& p = points_[i];
    if(!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw Error(ErrorKind::invalid_argument, "point " + std::to_string(i) + " has non-finite coordinates");
    }
    if(!window_.contains(p)) {
      std::ostringstream ss;
      ss << "point " << i << " (" << p.x << ", " << p.y << ") lies outside the window";
      throw Error(ErrorKind::invalid_argument, ss.str());
    }
  }
  for(const int m : marks_) {
    if(m < 0) {
      throw Error(ErrorKind::invalid_argument, "marks must be non-negative");
    }
  }
}

int PointPattern::max_mark() const {
  if(marks_.empty()) {
    return 0;
  }
  return *std::max_element(marks_.begin(), marks_.end());
}

PointPattern PointPattern::restricted_to(const Window& sub) const {
  std::vector<Point> pts;
  std::vector<int> mk;
  for(std::size_t i = 0; i < points_.size(); ++i) {
    if(sub.contains(points_[i])) {
      pts.push_back(points_[i]);
      if(has_marks()) {
        mk.push_back(marks_[i]);
      }
    }
  }
  return PointPattern(sub, std::move(pts), std::move(mk));
}

namespace {

void check_radius(double r) {
  if(!(r > 0.0) || !std::isfinite(r)) {
    throw Error(ErrorKind::invalid_radius, "radius must be positive and finite");
  }
}

} // namespace

NeighborIndex::NeighborIndex(const PointPattern& pattern, double radius)
    : pattern_(&pattern), radius_(radius) {
  check_radius(radius);
  const auto& w = pattern.window();
  x0_ = w.xmin();
  y0_ = w.ymin();
  nx_ = std::max(1, static_cast<int>(std::floor(w.width() / radius)));
  ny_ = std::max(1, static_cast<int>(std::floor(w.height() / radius)));
  const auto cap = std::max<std::size_t>(1, 4 * pattern.n());
  while(static_cast<std::size_t>(nx_) * ny_ > cap && (nx_ > 1 || ny_ > 1)) {
    nx_ = std::max(1, nx_ / 2);
    ny_ = std::max(1, ny_ / 2);
  }
  cell_w_ = w.width() / nx_;
  cell_h_ = w.height() / ny_;

  const auto cells = cell_count();
  std::vector<std::size_t> cell_of(pattern.n());
  cell_start_.assign(cells + 1, 0);
  for(std::size_t i = 0; i < pattern.n(); ++i) {
    const auto& p = pattern.point(i);
    const int cx = std::clamp(static_cast<int>((p.x - x0_) / cell_w_), 0, nx_ - 1);
    const int cy = std::clamp(static_cast<int>((p.y - y0_) / cell_h_), 0, ny_ - 1);
    cell_of[i] = static_cast<std::size_t>(cy) * nx_ + cx;
    ++cell_start_[cell_of[i] + 1];
  }
  for(std::size_t c = 0; c < cells; ++c) {
    cell_start_[c + 1] += cell_start_[c];
  }
  indices_.resize(pattern.n());
  auto fill = cell_start_;
  for(std::size_t i = 0; i < pattern.n(); ++i) {
    indices_[fill[cell_of[i]]++] = i;
  }
}

std::pair<int, int> NeighborIndex::cell_span(double lo, double hi, double origin, double side, int cells) {
  const int a = static_cast<int>(std::floor((lo - origin) / side)) - 1;
  const int b = static_cast<int>(std::floor((hi - origin) / side)) + 1;
  return {std::clamp(a, 0, cells - 1), std::clamp(b, 0, cells - 1)};
}

void NeighborIndex::check_query_radius(double r) const {
  check_radius(r);
  if(r > radius_) {
    throw Error(ErrorKind::invalid_radius, "query radius exceeds the index build radius");
  }
}

std::size_t NeighborIndex::count(Point u, double r, std::optional<std::size_t> exclude_index,
                                 std::optional<int> mark_filter) const {
  std::size_t total = 0;
  for_each_within(u, r, [&](std::size_t i, double) {
    if(exclude_index && *exclude_index == i) {
      return;
    }
    if(mark_filter && pattern_->mark(i) != *mark_filter) {
      return;
    }
    ++total;
  });
  return total;
}

NeighborIndex build_cell_grid(const PointPattern& pattern, double r) { return NeighborIndex(pattern, r); }

std::size_t count_neighbors(const PointPattern& pattern, Point u, double r, std::optional<std::size_t> exclude_index,
                            std::optional<int> mark_filter) {
  check_radius(r);
  std::size_t total = 0;
  for(std::size_t i = 0; i < pattern.n(); ++i) {
    if(exclude_index && *exclude_index == i) {
      continue;
    }
    if(mark_filter && pattern.mark(i) != *mark_filter) {
      continue;
    }
    if(pair_distance(u, pattern.point(i)) < r) {
      ++total;
    }
  }
  return total;
}

} // namespace gibbsvb
