#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "gibbsvb/error.hpp"

namespace gibbsvb {

struct Point {
  double x;
  double y;

  friend bool operator==(const Point&, const Point&) = default;
};

inline double pair_distance(Point a, Point b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

// Axis-aligned rectangle. Dilation is tracked as a margin around the base
// rectangle so that dilate(r).erode(r) restores the original bounds exactly.
class Window {
public:
  Window(double xmin, double xmax, double ymin, double ymax);

  static Window unit_square() { return Window(0.0, 1.0, 0.0, 1.0); }

  double xmin() const { return xmin_ - margin_; }
  double xmax() const { return xmax_ + margin_; }
  double ymin() const { return ymin_ - margin_; }
  double ymax() const { return ymax_ + margin_; }
  double width() const { return xmax() - xmin(); }
  double height() const { return ymax() - ymin(); }
  double volume() const { return width() * height(); }

  // Closed boundary.
  bool contains(Point p) const {
    return p.x >= xmin() && p.x <= xmax() && p.y >= ymin() && p.y <= ymax();
  }
  bool contains(const Window& other) const {
    return other.xmin() >= xmin() && other.xmax() <= xmax() && other.ymin() >= ymin() &&
           other.ymax() <= ymax();
  }

  Window dilate(double r) const;
  Window erode(double r) const;

  friend bool operator==(const Window& a, const Window& b) {
    return a.xmin() == b.xmin() && a.xmax() == b.xmax() && a.ymin() == b.ymin() &&
           a.ymax() == b.ymax();
  }

private:
  double xmin_;
  double xmax_;
  double ymin_;
  double ymax_;
  double margin_ = 0.0;
};

inline Window dilate(const Window& window, double r) { return window.dilate(r); }

// Non-owning view of points and (optional) marks. An empty marks span means
// every point carries mark 0.
struct PatternView {
  std::span<const Point> points;
  std::span<const int> marks;

  std::size_t size() const { return points.size(); }
  int mark(std::size_t i) const { return marks.empty() ? 0 : marks[i]; }
};

class PointPattern {
public:
  explicit PointPattern(Window window, std::vector<Point> points = {}, std::vector<int> marks = {});

  const Window& window() const { return window_; }
  std::size_t n() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const std::vector<Point>& points() const { return points_; }
  const Point& point(std::size_t i) const { return points_[i]; }
  bool has_marks() const { return !marks_.empty(); }
  const std::vector<int>& marks() const { return marks_; }
  int mark(std::size_t i) const { return marks_.empty() ? 0 : marks_[i]; }
  int max_mark() const;

  PatternView view() const { return {points_, marks_}; }

  // Points inside `sub` (closed), keeping the original order.
  PointPattern restricted_to(const Window& sub) const;

private:
  Window window_;
  std::vector<Point> points_;
  std::vector<int> marks_;
};

// Bucket grid over the pattern's window with square-ish cells of side >= the
// build radius. Queries with radius up to the build radius are exact.
class NeighborIndex {
public:
  NeighborIndex(const PointPattern& pattern, double radius);
  NeighborIndex(PointPattern&&, double) = delete;

  double radius() const { return radius_; }
  std::size_t cell_count() const { return static_cast<std::size_t>(nx_) * ny_; }
  const PointPattern& pattern() const { return *pattern_; }

  // Calls f(index, distance) for every point with distance < r.
  template <class F>
  void for_each_within(Point u, double r, F&& f) const {
    check_query_radius(r);
    if(indices_.empty()) {
      return;
    }
    const auto [cx0, cx1] = cell_span(u.x - r, u.x + r, x0_, cell_w_, nx_);
    const auto [cy0, cy1] = cell_span(u.y - r, u.y + r, y0_, cell_h_, ny_);
    for(int cy = cy0; cy <= cy1; ++cy) {
      for(int cx = cx0; cx <= cx1; ++cx) {
        const auto cell = static_cast<std::size_t>(cy) * nx_ + cx;
        for(auto k = cell_start_[cell]; k < cell_start_[cell + 1]; ++k) {
          const auto i = indices_[k];
          const double d = pair_distance(u, pattern_->point(i));
          if(d < r) {
            f(i, d);
          }
        }
      }
    }
  }

  std::size_t count(Point u, double r, std::optional<std::size_t> exclude_index = {},
                    std::optional<int> mark_filter = {}) const;

private:
  static std::pair<int, int> cell_span(double lo, double hi, double origin, double side, int cells);
  void check_query_radius(double r) const;

  const PointPattern* pattern_;
  double radius_;
  double x0_;
  double y0_;
  double cell_w_;
  double cell_h_;
  int nx_;
  int ny_;
  std::vector<std::size_t> cell_start_;
  std::vector<std::size_t> indices_;
};

// The index keeps a pointer to `pattern`, which must outlive it.
NeighborIndex build_cell_grid(const PointPattern& pattern, double r);
NeighborIndex build_cell_grid(PointPattern&&, double) = delete;

// Naive O(n) scan: points strictly closer than r to u.
std::size_t count_neighbors(const PointPattern& pattern, Point u, double r,
                            std::optional<std::size_t> exclude_index = {},
                            std::optional<int> mark_filter = {});

} // namespace gibbsvb
