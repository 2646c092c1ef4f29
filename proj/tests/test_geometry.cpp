#include "doctest.h"

#include <random>
#include <sstream>

#include "gibbsvb/geometry.hpp"
#include "gibbsvb/io.hpp"

using namespace gibbsvb;

namespace {

PointPattern uniform_pattern(const Window& w, std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ux(w.xmin(), w.xmax());
  std::uniform_real_distribution<double> uy(w.ymin(), w.ymax());
  std::vector<Point> pts(n);
  for(auto& p : pts) {
    p = {ux(rng), uy(rng)};
  }
  return PointPattern(w, pts);
}

std::size_t brute_count(const PointPattern& pat, Point u, double r, std::optional<std::size_t> skip = {}) {
  std::size_t c = 0;
  for(std::size_t i = 0; i < pat.n(); ++i) {
    if(skip && *skip == i) continue;
    const double dx = pat.point(i).x - u.x;
    const double dy = pat.point(i).y - u.y;
    if(dx * dx + dy * dy < r * r) ++c;
  }
  return c;
}

} // namespace

TEST_CASE("pair_distance examples") {
  CHECK(pair_distance({0, 0}, {0, 0}) == 0.0);
  CHECK(pair_distance({0, 0}, {3, 4}) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(pair_distance({0.5, 0.5}, {0.5, 0.55}) == doctest::Approx(0.05).epsilon(1e-12));
}

TEST_CASE("pair_distance is symmetric and obeys the triangle inequality") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for(int k = 0; k < 10000; ++k) {
    const Point a{u(rng), u(rng)}, b{u(rng), u(rng)}, c{u(rng), u(rng)};
    CHECK(pair_distance(a, b) == pair_distance(b, a));
    CHECK(pair_distance(a, c) <= pair_distance(a, b) + pair_distance(b, c) + 1e-12);
  }
}

TEST_CASE("window validation and dilation") {
  CHECK_THROWS_AS(Window(1, 0, 0, 1), Error);
  CHECK_THROWS_AS(Window(0, 1, 0, std::nan("")), Error);
  const auto w = Window::unit_square();
  CHECK(dilate(w, 0.0) == w);
  const auto d = dilate(w, 0.06);
  CHECK(d.xmin() == doctest::Approx(-0.06));
  CHECK(d.xmax() == doctest::Approx(1.06));
  CHECK(d.ymin() == doctest::Approx(-0.06));
  CHECK(d.ymax() == doctest::Approx(1.06));
  for(double side : {1.0, 2.0, 0.3}) {
    const Window s(0, side, 0, side);
    for(double r : {0.0, 0.01, 0.25}) {
      CHECK(dilate(s, r).volume() - s.volume() == doctest::Approx(4 * r * side + 4 * r * r).epsilon(1e-12));
    }
  }
  CHECK(d.erode(0.06) == w);
  CHECK(d.contains(w));
  CHECK_FALSE(w.contains(d));
}

TEST_CASE("pattern validation") {
  const auto w = Window::unit_square();
  CHECK_THROWS_AS(PointPattern(w, {{1.5, 0.5}}), Error);
  CHECK_THROWS_AS(PointPattern(w, {{0.5, 0.5}}, {0, 1}), Error);
  CHECK_THROWS_AS(PointPattern(w, {{0.5, 0.5}}, {-1}), Error);
  CHECK_THROWS_AS(PointPattern(w, {{std::nan(""), 0.5}}), Error);
  const PointPattern p(w, {{0.1, 0.1}, {0.9, 0.9}}, {0, 1});
  CHECK(p.max_mark() == 1);
  const auto sub = p.restricted_to(Window(0, 0.5, 0, 0.5));
  CHECK(sub.n() == 1);
  CHECK(sub.mark(0) == 0);
}

TEST_CASE("count_neighbors examples") {
  const auto w = Window::unit_square();
  const PointPattern one(w, {{0.5, 0.5}});
  CHECK(count_neighbors(one, {0.5, 0.55}, 0.06) == 1);
  const PointPattern empty(w);
  CHECK(count_neighbors(empty, {0.3, 0.3}, 0.1) == 0);
  CHECK_THROWS_AS(count_neighbors(one, {0.5, 0.5}, 0.0), Error);
  try {
    count_neighbors(one, {0.5, 0.5}, -1.0);
  } catch(const Error& e) {
    CHECK(e.kind() == ErrorKind::invalid_radius);
  }
}

TEST_CASE("points at exactly distance r are excluded") {
  const PointPattern p(Window::unit_square(), {{0.25, 0.5}, {0.75, 0.5}});
  CHECK(count_neighbors(p, {0.5, 0.5}, 0.25) == 0);
  CHECK(count_neighbors(p, {0.5, 0.5}, std::nextafter(0.25, 1.0)) == 2);
  const NeighborIndex idx(p, 0.25);
  CHECK(idx.count({0.5, 0.5}, 0.25) == 0);
}

TEST_CASE("exclude and mark filters") {
  const PointPattern p(Window::unit_square(), {{0.5, 0.5}, {0.52, 0.5}, {0.5, 0.53}}, {0, 1, 1});
  CHECK(count_neighbors(p, p.point(0), 0.1) == 3);
  CHECK(count_neighbors(p, p.point(0), 0.1, 0) == 2);
  CHECK(count_neighbors(p, p.point(0), 0.1, {}, 1) == 2);
  CHECK(count_neighbors(p, p.point(1), 0.1, 1, 1) == 1);
  const NeighborIndex idx(p, 0.1);
  CHECK(idx.count(p.point(1), 0.1, 1, 1) == 1);
}

TEST_CASE("count_neighbors is monotone in r") {
  std::mt19937_64 rng(3);
  const auto p = uniform_pattern(Window::unit_square(), 300, rng);
  std::size_t prev = 0;
  for(double r = 0.01; r < 0.8; r += 0.01) {
    const auto c = count_neighbors(p, {0.4, 0.6}, r);
    CHECK(c >= prev);
    prev = c;
  }
}

TEST_CASE("indexed counts equal brute force") {
  std::mt19937_64 rng(5);
  const Window w(0, 2, 0, 2);
  const auto p = uniform_pattern(w, 1000, rng);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for(double r : {0.01, 0.06, 0.3}) {
    const auto idx = build_cell_grid(p, r);
    for(int q = 0; q < 100; ++q) {
      const Point x{u(rng), u(rng)};
      const auto expect = brute_count(p, x, r);
      CHECK(count_neighbors(p, x, r) == expect);
      CHECK(idx.count(x, r) == expect);
      CHECK(idx.count(x, r * 0.5) == brute_count(p, x, r * 0.5));
    }
  }
}

TEST_CASE("index queries outside the window and with self exclusion") {
  std::mt19937_64 rng(9);
  const auto w = Window::unit_square();
  const auto p = uniform_pattern(w, 200, rng);
  const NeighborIndex idx(p, 0.1);
  CHECK(idx.count({-0.05, 0.5}, 0.1) == brute_count(p, {-0.05, 0.5}, 0.1));
  CHECK(idx.count({5.0, 5.0}, 0.1) == 0);
  for(std::size_t i = 0; i < p.n(); ++i) {
    CHECK(idx.count(p.point(i), 0.1, i) == brute_count(p, p.point(i), 0.1, i));
  }
  CHECK_THROWS_AS(idx.count({0.5, 0.5}, 0.2), Error);
}

TEST_CASE("degenerate grids") {
  const Window tiny(0, 0.01, 0, 0.01);
  const PointPattern p(tiny, {{0.001, 0.001}, {0.009, 0.009}});
  const NeighborIndex idx(p, 0.5);
  CHECK(idx.cell_count() == 1);
  CHECK(idx.count({0.005, 0.005}, 0.5) == 2);
  const PointPattern empty(Window::unit_square());
  const NeighborIndex e(empty, 0.1);
  CHECK(e.count({0.5, 0.5}, 0.1) == 0);
  CHECK_THROWS_AS(NeighborIndex(empty, 0.0), Error);
}

TEST_CASE("pattern csv round trip preserves coordinates") {
  std::mt19937_64 rng(13);
  const auto w = Window::unit_square();
  auto base = uniform_pattern(w, 50, rng);
  std::vector<int> marks(50);
  for(std::size_t i = 0; i < marks.size(); ++i) marks[i] = static_cast<int>(i % 2);
  const PointPattern p(w, base.points(), marks);
  std::stringstream ss;
  const Provenance prov{"abc", 7};
  write_pattern_csv(ss, p, &prov);
  CHECK(ss.str().rfind("# tool=gibbsvb", 0) == 0);
  const auto q = read_pattern_csv(ss, w);
  REQUIRE(q.n() == p.n());
  for(std::size_t i = 0; i < p.n(); ++i) {
    CHECK(q.point(i) == p.point(i));
    CHECK(q.mark(i) == p.mark(i));
  }
  std::stringstream bad("a,b\n1,2\n");
  CHECK_THROWS_AS(read_pattern_csv(bad, w), Error);
}
