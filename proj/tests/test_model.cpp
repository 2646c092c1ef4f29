#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>

#include "gibbsvb/model.hpp"

using namespace gibbsvb;

namespace {

PointPattern random_pattern(const Window& w, std::size_t n, int marks, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ux(w.xmin(), w.xmax());
  std::uniform_real_distribution<double> uy(w.ymin(), w.ymax());
  std::uniform_int_distribution<int> um(0, marks - 1);
  std::vector<Point> pts(n);
  std::vector<int> m(n);
  for(std::size_t i = 0; i < n; ++i) {
    pts[i] = {ux(rng), uy(rng)};
    m[i] = um(rng);
  }
  return marks > 1 ? PointPattern(w, pts, m) : PointPattern(w, pts);
}

using PointStat = std::function<Eigen::VectorXd(Point, int)>;
using PairStat = std::function<Eigen::VectorXd(double, int, int)>;

// Global sufficient statistic t(w) = sum_i a(x_i) + sum_{i<j} b(d_ij).
Eigen::VectorXd global_stat(const std::vector<Point>& pts, const std::vector<int>& marks, const PointStat& a,
                            const PairStat& b, Eigen::Index dim) {
  Eigen::VectorXd t = Eigen::VectorXd::Zero(dim);
  for(std::size_t i = 0; i < pts.size(); ++i) {
    t += a(pts[i], marks[i]);
    for(std::size_t j = i + 1; j < pts.size(); ++j) {
      t += b(pair_distance(pts[i], pts[j]), marks[i], marks[j]);
    }
  }
  return t;
}

// t(w + u) - t(w - u), for u either new (self empty) or pattern point `self`.
Eigen::VectorXd difference_oracle(const PointPattern& pat, Point u, int mark, std::optional<std::size_t> self,
                                  const PointStat& a, const PairStat& b, Eigen::Index dim) {
  std::vector<Point> pts(pat.points());
  std::vector<int> marks(pat.n());
  for(std::size_t i = 0; i < pat.n(); ++i) marks[i] = pat.mark(i);
  std::vector<Point> without = pts;
  std::vector<int> without_m = marks;
  std::vector<Point> with = pts;
  std::vector<int> with_m = marks;
  if(self) {
    without.erase(without.begin() + static_cast<long>(*self));
    without_m.erase(without_m.begin() + static_cast<long>(*self));
  } else {
    with.push_back(u);
    with_m.push_back(mark);
  }
  return global_stat(with, with_m, a, b, dim) - global_stat(without, without_m, a, b, dim);
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  std::copy(v.begin(), v.end(), out.data());
  return out;
}

TrendBasis constant_trend() { return TrendBasis{}; }

} // namespace

TEST_CASE("strauss statistic examples") {
  const ModelSpec spec(constant_trend(), Strauss{0.06});
  const auto w = Window::unit_square();
  const PointPattern empty(w);
  CHECK(statistic_row(spec, empty, {0.3, 0.3}) == vec({1, 0}));
  const PointPattern two(w, {{0.5, 0.5}, {0.5, 0.55}});
  CHECK(statistic_row(spec, two, {0.5, 0.5}, {}, 0) == vec({1, 1}));
}

TEST_CASE("statistic_row equals the global difference for every interaction kind") {
  std::mt19937_64 rng(21);
  const auto w = Window::unit_square();
  const auto pat = random_pattern(w, 200, 1, rng);
  const PointStat one = [](Point, int) { return vec({1}); };

  struct Case {
    InteractionSpec inter;
    PairStat pair;
  };
  const auto steps = uniform_steps(5, 0.1);
  const auto basis = uniform_basis(4, 0.1, 0.02);
  std::vector<Case> cases;
  cases.push_back({Strauss{0.07}, [](double d, int, int) { return vec({d < 0.07 ? 1.0 : 0.0}); }});
  cases.push_back({steps, [](double d, int, int) {
                     Eigen::VectorXd v = Eigen::VectorXd::Zero(5);
                     for(int k = 0; k < 5; ++k) {
                       if(d >= 0.02 * k && d < 0.02 * (k + 1)) v[k] = 1.0;
                     }
                     return v;
                   }});
  cases.push_back({basis, [basis](double d, int, int) {
                     Eigen::VectorXd v(4);
                     for(int k = 0; k < 4; ++k) {
                       v[k] = d < basis.cutoff ? std::exp(-std::pow(d - basis.centers[static_cast<std::size_t>(k)], 2) /
                                                          (2 * 0.02 * 0.02))
                                               : 0.0;
                     }
                     return v;
                   }});

  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for(const auto& c : cases) {
    const ModelSpec spec(constant_trend(), c.inter);
    const auto dim = static_cast<Eigen::Index>(spec.parameter_dim());
    const PairStat full = [&](double d, int a, int b) {
      Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
      v.tail(dim - 1) = c.pair(d, a, b);
      return v;
    };
    const PointStat first = [&](Point p, int m) {
      Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
      v.head(1) = one(p, m);
      return v;
    };
    const NeighborIndex idx(pat, std::max(spec.reach(), 1e-3));
    for(int q = 0; q < 20; ++q) {
      const Point u{u01(rng), u01(rng)};
      const auto expect = difference_oracle(pat, u, 0, {}, first, full, dim);
      CHECK((statistic_row(spec, pat, u) - expect).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((statistic_row(spec, idx, u) - expect).cwiseAbs().maxCoeff() < 1e-12);
    }
    for(std::size_t i = 0; i < pat.n(); i += 17) {
      const auto expect = difference_oracle(pat, pat.point(i), 0, i, first, full, dim);
      CHECK((statistic_row(spec, pat, pat.point(i), {}, i) - expect).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((statistic_row(spec, idx, pat.point(i), {}, i) - expect).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("per-mark quartic trend with cross-strauss matches the global difference") {
  std::mt19937_64 rng(22);
  const Window w(0, 1, 0.05, 0.75);
  const auto pat = random_pattern(w, 150, 2, rng);
  TrendBasis trend;
  trend.kind = TrendKind::polynomial_y;
  trend.degree = 4;
  trend.per_mark = true;
  trend.frame = w;
  const ModelSpec spec(trend, CrossStrauss{0.05}, {}, 2);
  REQUIRE(spec.parameter_dim() == 11);
  const PointStat a = [&](Point p, int m) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(11);
    const double y = 2.0 * (p.y - 0.05) / 0.7 - 1.0;
    for(int k = 0; k <= 4; ++k) v[5 * m + k] = std::pow(y, k);
    return v;
  };
  const PairStat b = [](double d, int m1, int m2) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(11);
    v[10] = (m1 != m2 && d < 0.05) ? 1.0 : 0.0;
    return v;
  };
  std::uniform_real_distribution<double> uy(0.05, 0.75);
  std::uniform_real_distribution<double> ux(0.0, 1.0);
  for(int q = 0; q < 30; ++q) {
    const Point u{ux(rng), uy(rng)};
    const int m = q % 2;
    const auto expect = difference_oracle(pat, u, m, {}, a, b, 11);
    CHECK((statistic_row(spec, pat, u, m) - expect).cwiseAbs().maxCoeff() < 1e-12);
  }
  for(std::size_t i = 0; i < pat.n(); i += 11) {
    const auto expect = difference_oracle(pat, pat.point(i), pat.mark(i), i, a, b, 11);
    CHECK((statistic_row(spec, pat, pat.point(i), pat.mark(i), i) - expect).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("per-mark-intercept layout shares the non-constant terms") {
  TrendBasis trend;
  trend.kind = TrendKind::polynomial_y;
  trend.degree = 2;
  trend.per_mark_intercept = true;
  const ModelSpec spec(trend, NoInteraction{}, {}, 2);
  CHECK(spec.trend_dim() == 4);
  const PointPattern empty(Window::unit_square());
  const auto r0 = statistic_row(spec, empty, {0.5, 1.0}, 0);
  const auto r1 = statistic_row(spec, empty, {0.5, 1.0}, 1);
  CHECK(r0 == vec({1, 0, 1, 1}));
  CHECK(r1 == vec({0, 1, 1, 1}));
}

TEST_CASE("polynomial_xy basis") {
  TrendBasis trend;
  trend.kind = TrendKind::polynomial_xy;
  trend.degree = 2;
  CHECK(trend.basis_size() == 6);
  std::vector<double> v(6);
  trend.basis_values({1.0, 0.5}, v);
  CHECK(v == std::vector<double>{1, 1, 0, 1, 0, 0});
}

TEST_CASE("interaction_row examples and partition identity") {
  const ModelSpec spec(constant_trend(), StepFunction{{0.0, 0.05, 0.1}});
  const auto w = Window(-0.5, 1, -0.5, 1);
  const PointPattern one(w, {{0.0, 0.0}});
  CHECK(interaction_row(spec, one, {0.03, 0.0}) == vec({1, 0}));
  CHECK(interaction_row(spec, one, {0.5, 0.5}) == vec({0, 0}));
  const ModelSpec strauss(constant_trend(), Strauss{0.06});
  CHECK_THROWS_AS(interaction_row(strauss, one, {0.0, 0.0}), Error);

  std::mt19937_64 rng(4);
  const auto pat = random_pattern(Window::unit_square(), 400, 1, rng);
  const ModelSpec step(constant_trend(), uniform_steps(8, 0.12));
  for(std::size_t i = 0; i < pat.n(); i += 7) {
    const auto row = interaction_row(step, pat, pat.point(i), i);
    for(Eigen::Index k = 0; k < row.size(); ++k) {
      CHECK(row[k] >= 0.0);
      CHECK(row[k] == std::floor(row[k]));
    }
    CHECK(row.sum() == static_cast<double>(count_neighbors(pat, pat.point(i), 0.12, i)));
  }
}

TEST_CASE("conditional intensity examples") {
  const ModelSpec spec(constant_trend(), Strauss{0.06});
  const Eigen::VectorXd theta = vec({std::log(100.0), std::log(0.4)});
  const auto w = Window::unit_square();
  CHECK(conditional_intensity(spec, theta, PointPattern(w), {0.5, 0.5}) == doctest::Approx(100.0));
  const PointPattern one(w, {{0.5, 0.5}});
  CHECK(conditional_intensity(spec, theta, one, {0.5, 0.55}) == doctest::Approx(40.0));
  const ModelSpec hc(constant_trend(), Strauss{0.06}, 0.01);
  CHECK(conditional_intensity(hc, theta, one, {0.5, 0.505}) == 0.0);
  CHECK(conditional_intensity(hc, theta, one, {0.5, 0.52}) == doctest::Approx(40.0));
  CHECK_THROWS_AS(conditional_intensity(spec, vec({1.0}), one, {0.5, 0.5}), Error);
}

TEST_CASE("conditional intensity is permutation invariant and constant without interaction") {
  std::mt19937_64 rng(8);
  const auto pat = random_pattern(Window::unit_square(), 100, 1, rng);
  std::vector<Point> shuffled(pat.points());
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const PointPattern perm(pat.window(), shuffled);
  const ModelSpec spec(constant_trend(), uniform_basis(5, 0.1, 0.02));
  const Eigen::VectorXd theta = vec({4.0, -1.0, 0.5, -0.3, 0.2, -0.1});
  const ModelSpec strauss(constant_trend(), Strauss{0.08});
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for(int q = 0; q < 50; ++q) {
    const Point x{u(rng), u(rng)};
    CHECK(conditional_intensity(spec, theta, pat, x) ==
          doctest::Approx(conditional_intensity(spec, theta, perm, x)).epsilon(1e-13));
    CHECK(conditional_intensity(strauss, vec({3.0, 0.0}), pat, x) == doctest::Approx(std::exp(3.0)));
  }
}

TEST_CASE("lennard-jones curve") {
  const double sigma = lennard_jones_sigma_for_range(0.06);
  CHECK(sigma == doctest::Approx(0.06 / std::pow(2.0, 1.0 / 6.0)));
  CHECK(sigma == doctest::Approx(0.0535).epsilon(1e-3));
  CHECK(lennard_jones_characteristic_range(sigma) == doctest::Approx(0.06));
  const std::vector<double> at_sigma{sigma};
  CHECK(lennard_jones_curve(1.0, sigma, at_sigma)[0] == doctest::Approx(1.0));
  std::vector<double> grid;
  for(double r = 0.0001; r < 0.15; r += 0.0001) grid.push_back(r);
  const auto curve = lennard_jones_curve(1.0, sigma, grid);
  const auto best = std::max_element(curve.begin(), curve.end()) - curve.begin();
  CHECK(std::abs(grid[static_cast<std::size_t>(best)] - 0.06) <= 0.0001 + 1e-12);
  const std::vector<double> zero{0.0};
  CHECK_THROWS_AS(lennard_jones_curve(1.0, sigma, zero), Error);

  const ModelSpec lj(constant_trend(), lennard_jones(1.0, sigma));
  CHECK_FALSE(lj.fittable());
  const PointPattern one(Window::unit_square(), {{0.5, 0.5}});
  CHECK_THROWS_AS(statistic_row(lj, one, {0.2, 0.2}), Error);
  const Eigen::VectorXd th = vec({std::log(200.0)});
  CHECK(conditional_intensity(lj, th, one, {0.5, 0.56}) ==
        doctest::Approx(200.0 * std::exp(-lennard_jones_potential(1.0, sigma, 0.06))));
  CHECK(conditional_intensity(lj, th, one, {0.5, 0.9}) == doctest::Approx(200.0));
}

TEST_CASE("spec validation") {
  CHECK_THROWS_AS(ModelSpec(constant_trend(), Strauss{0.0}), Error);
  CHECK_THROWS_AS(ModelSpec(constant_trend(), StepFunction{{0.0, 0.1, 0.05}}), Error);
  CHECK_THROWS_AS(ModelSpec(constant_trend(), NoInteraction{}, -0.1), Error);
  CHECK_THROWS_AS(ModelSpec(constant_trend(), NoInteraction{}, {}, 0), Error);
  const ModelSpec s(constant_trend(), Strauss{0.05}, 0.08);
  CHECK(s.reach() == doctest::Approx(0.08));
}
