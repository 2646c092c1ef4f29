#include "doctest.h"

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "gibbsvb/vb.hpp"

using namespace gibbsvb;

namespace {

LogisticDesign make_design(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& o) {
  LogisticDesign d;
  d.X = X;
  d.y = y;
  d.offset = o;
  d.rows.resize(static_cast<std::size_t>(X.rows()));
  for(Eigen::Index i = 0; i < X.rows(); ++i) d.rows[static_cast<std::size_t>(i)] = {{0, 0}, 0, y[i] == 1.0};
  return d;
}

LogisticDesign simulate_logistic(const Eigen::VectorXd& theta, Eigen::Index n, std::uint64_t seed,
                                 double offset_sd = 0.3) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto p = theta.size();
  Eigen::MatrixXd X(n, p);
  Eigen::VectorXd y(n), o(n);
  for(Eigen::Index i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    for(Eigen::Index k = 1; k < p; ++k) X(i, k) = z(rng);
    o[i] = offset_sd * z(rng);
    const double eta = X.row(i).dot(theta) + o[i];
    y[i] = u(rng) < 1.0 / (1.0 + std::exp(-eta)) ? 1.0 : 0.0;
  }
  return make_design(X, y, o);
}

double truth(double eta) { return -std::log1p(std::exp(eta)); }

// log of the integral of f(y|t) N(t; m, v) over a fine grid.
double log_evidence_1d(const LogisticDesign& d, double m, double v, double lo, double hi, int nodes) {
  const double h = (hi - lo) / (nodes - 1);
  std::vector<double> logs(static_cast<std::size_t>(nodes));
  double best = -INFINITY;
  for(int k = 0; k < nodes; ++k) {
    const double t = lo + h * k;
    double ll = -0.5 * std::log(2 * M_PI * v) - 0.5 * (t - m) * (t - m) / v;
    for(Eigen::Index i = 0; i < d.N(); ++i) {
      const double eta = d.X(i, 0) * t + d.offset[i];
      ll += d.y[i] * eta - std::log1p(std::exp(eta));
    }
    logs[static_cast<std::size_t>(k)] = ll;
    best = std::max(best, ll);
  }
  double s = 0.0;
  for(int k = 0; k < nodes; ++k) {
    s += ((k == 0 || k == nodes - 1) ? 0.5 : 1.0) * std::exp(logs[static_cast<std::size_t>(k)] - best);
  }
  return best + std::log(s * h);
}

} // namespace

TEST_CASE("lambda values") {
  CHECK(lambda_xi(0.0) == -0.125);
  CHECK(lambda_xi(2.0) == doctest::Approx(-std::tanh(1.0) / 8.0).epsilon(1e-14));
  CHECK(lambda_xi(2.0) == doctest::Approx(-0.0951985).epsilon(1e-6));
  CHECK(lambda_xi(1e6) == doctest::Approx(-2.5e-7).epsilon(1e-9));
  CHECK(lambda_xi(1e-7) == doctest::Approx(-0.125).epsilon(1e-12));
  double prev = lambda_xi(0.0);
  for(double xi = 0.01; xi < 30; xi += 0.01) {
    const double l = lambda_xi(xi);
    CHECK(l > prev);
    CHECK(l < 0.0);
    CHECK(l > -0.125);
    prev = l;
  }
}

TEST_CASE("gamma values") {
  CHECK(gamma_xi(0.0) == doctest::Approx(-std::log(2.0)).epsilon(1e-15));
  CHECK(log_bound(1.3, 1.3) == doctest::Approx(truth(1.3)).epsilon(1e-13));
  CHECK(std::abs(log_bound(1.3, 1.3) - truth(1.3)) < 1e-12);
  CHECK(std::isfinite(gamma_xi(50.0)));
  CHECK(std::isfinite(gamma_xi(1e4)));
  CHECK(std::isfinite(neg_log1p_exp(800.0)));
}

TEST_CASE("bound examples") {
  CHECK(log_bound(0.0, 0.0) == doctest::Approx(-std::log(2.0)).epsilon(1e-15));
  CHECK(log_bound(3.0, 1.0) < truth(3.0));
  CHECK(truth(3.0) == doctest::Approx(-3.0486).epsilon(1e-4));
}

TEST_CASE("bound is sound everywhere and tight at xi = |eta|") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> ue(-20.0, 20.0), ux(0.0, 20.0);
  for(int k = 0; k < 100000; ++k) {
    const double eta = ue(rng), xi = ux(rng);
    const double t = neg_log1p_exp(eta);
    if(log_bound(eta, xi) > t + 1e-12) {
      FAIL("bound exceeds truth at eta=" << eta << " xi=" << xi);
    }
    if(std::abs(log_bound(eta, std::abs(eta)) - t) >= 1e-10) {
      FAIL("bound not tight at eta=" << eta);
    }
  }
}

TEST_CASE("printed tanh(xi/4) constant breaks tangency") {
  const auto printed_gamma = [](double xi) {
    return xi / 2 - std::log1p(std::exp(xi)) + xi / 4 * std::tanh(xi / 4);
  };
  const double eta = 2.0;
  const double bound = lambda_xi(eta) * eta * eta - eta / 2 + printed_gamma(eta);
  CHECK(std::abs(bound - truth(eta)) > 1e-3);
}

TEST_CASE("posterior update examples") {
  const Eigen::MatrixXd X = Eigen::MatrixXd::Zero(4, 2);
  const Eigen::VectorXd zeros = Eigen::VectorXd::Zero(4);
  Eigen::VectorXd y(4);
  y << 1, 0, 1, 0;
  const auto d0 = make_design(X, y, zeros);
  const auto prior = GaussianDistribution::diagonal(Eigen::Vector2d(0.3, -1.0), Eigen::Vector2d(2.0, 0.5));
  const auto post0 = update_posterior(prior, d0, Eigen::VectorXd::Ones(4), 0.0);
  CHECK((post0.mean - prior.mean).norm() < 1e-14);
  CHECK((post0.covariance - prior.covariance).norm() < 1e-14);

  const auto d1 = make_design(Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Ones(1), Eigen::VectorXd::Zero(1));
  const auto p1 = GaussianDistribution::diagonal(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, 1e6));
  const auto post1 = update_posterior(p1, d1, Eigen::VectorXd::Zero(1), 0.0);
  const double precision = 1e-6 + 0.25;
  CHECK(post1.covariance(0, 0) == doctest::Approx(1.0 / precision).epsilon(1e-12));
  CHECK(post1.mean[0] == doctest::Approx(0.5 / precision).epsilon(1e-12));
  CHECK(post1.mean[0] == doctest::Approx(2.0).epsilon(1e-5));
}

TEST_CASE("posterior covariance never exceeds the prior") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for(int rep = 0; rep < 20; ++rep) {
    const auto d = simulate_logistic(Eigen::Vector3d(0.2, -0.5, 1.0), 40, 100 + static_cast<std::uint64_t>(rep));
    Eigen::MatrixXd A = Eigen::MatrixXd::Random(3, 3);
    GaussianDistribution prior{Eigen::Vector3d::Zero(), A * A.transpose() + Eigen::Matrix3d::Identity()};
    Eigen::VectorXd xi(d.N());
    for(auto& v : xi) v = u(rng);
    const auto post = update_posterior(prior, d, xi, 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(prior.covariance - post.covariance);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10);
  }
}

TEST_CASE("xi update examples and dense oracle") {
  const auto dz = make_design(Eigen::MatrixXd::Zero(3, 2), Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(3));
  const GaussianDistribution g{Eigen::Vector2d(1.0, -2.0), Eigen::Matrix2d::Identity()};
  CHECK(update_xi(dz, g).norm() == 0.0);

  const auto d = simulate_logistic(Eigen::Vector2d(0.4, -0.7), 7, 9);
  const GaussianDistribution point{Eigen::Vector2d(0.5, 1.5), Eigen::Matrix2d::Zero()};
  const auto xi0 = update_xi(d, point);
  for(Eigen::Index i = 0; i < d.N(); ++i) {
    CHECK(xi0[i] == doctest::Approx(std::abs(d.X.row(i).dot(point.mean) + d.offset[i])).epsilon(1e-14));
  }

  Eigen::Matrix2d B;
  B << 0.5, 0.1, 0.1, 0.3;
  const GaussianDistribution post{Eigen::Vector2d(0.5, 1.5), B};
  const auto& X = d.X;
  const auto& o = d.offset;
  const auto& mu = post.mean;
  const Eigen::MatrixXd dense =
      X * (post.covariance + mu * mu.transpose()) * X.transpose() + o * o.transpose() + 2.0 * X * mu * o.transpose();
  const auto xi = update_xi(d, post);
  for(Eigen::Index i = 0; i < d.N(); ++i) {
    CHECK(std::abs(xi[i] * xi[i] - dense(i, i)) < 1e-12);
  }
}

TEST_CASE("elbo of an uninformative design is N log 1/2") {
  const Eigen::Index n = 6;
  const auto d = make_design(Eigen::MatrixXd::Zero(n, 2), Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n));
  const auto prior = GaussianDistribution::diagonal(Eigen::Vector2d(1.0, 2.0), Eigen::Vector2d(3.0, 0.5));
  VariationalState st;
  st.xi = Eigen::VectorXd::Zero(n);
  CHECK(elbo(prior, d, st) == doctest::Approx(-static_cast<double>(n) * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("elbo is below the quadrature log evidence") {
  for(std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto d = simulate_logistic(Eigen::VectorXd::Constant(1, -0.7), 120, seed, 0.8);
    const auto prior = GaussianDistribution::diagonal(Eigen::VectorXd::Constant(1, 0.5), Eigen::VectorXd::Constant(1, 4.0));
    const auto st = fit(prior, d);
    CHECK(st.converged);
    const double ev = log_evidence_1d(d, 0.5, 4.0, -12.0, 12.0, 20001);
    CHECK(st.elbo <= ev);
    CHECK(st.elbo > ev - 1.0);
    for(std::size_t k = 1; k < st.elbo_trace.size(); ++k) {
      CHECK(st.elbo_trace[k] >= st.elbo_trace[k - 1] - 1e-8 * std::abs(st.elbo_trace[k - 1]));
    }
    CHECK(st.elbo >= st.elbo_trace.front());
  }
}

TEST_CASE("irls recovers closed forms and the truth") {
  Eigen::VectorXd y(10);
  y << 1, 1, 1, 0, 0, 0, 0, 0, 1, 0;
  const auto d = make_design(Eigen::MatrixXd::Ones(10, 1), y, Eigen::VectorXd::Zero(10));
  const auto r = irls_fit(d);
  CHECK(r.converged);
  CHECK(r.theta[0] == doctest::Approx(std::log(0.4 / 0.6)).epsilon(1e-10));

  const Eigen::Vector2d theta(-0.3, 0.9);
  const auto big = simulate_logistic(theta, 2000, 77);
  const auto rb = irls_fit(big);
  REQUIRE(rb.converged);
  for(int k = 0; k < 2; ++k) {
    CHECK(std::abs(rb.theta[k] - theta[k]) < 3.0 * std::sqrt(rb.covariance(k, k)));
  }
}

TEST_CASE("irls flags separation") {
  Eigen::MatrixXd X(6, 2);
  X << 1, -3, 1, -2, 1, -1, 1, 1, 1, 2, 1, 3;
  Eigen::VectorXd y(6);
  y << 0, 0, 0, 1, 1, 1;
  const auto r = irls_fit(make_design(X, y, Eigen::VectorXd::Zero(6)));
  CHECK_FALSE(r.converged);
  CHECK(!r.diagnostic.empty());
  CHECK_THROWS_AS(irls_fit(make_design(Eigen::MatrixXd::Ones(1, 2), Eigen::VectorXd::Ones(1), Eigen::VectorXd::Zero(1))), Error);
}

TEST_CASE("vb with a flat prior agrees with irls") {
  const Eigen::Vector3d theta(0.5, -1.0, 0.8);
  const auto d = simulate_logistic(theta, 500, 5);
  const auto st = fit(GaussianDistribution::flat(3), d);
  const auto r = irls_fit(d);
  REQUIRE(st.converged);
  REQUIRE(r.converged);
  for(int k = 0; k < 3; ++k) {
    CHECK(std::abs(st.posterior.mean[k] - r.theta[k]) / std::abs(r.theta[k]) < 0.05);
  }
}

TEST_CASE("tight prior dominates the data") {
  const Eigen::Vector3d theta(0.5, -1.0, 0.8);
  const auto d = simulate_logistic(Eigen::Vector3d(-2.0, 2.0, 0.0), 500, 6);
  const auto prior = GaussianDistribution::diagonal(theta, Eigen::Vector3d::Constant(1e-6));
  const auto st = fit(prior, d);
  CHECK((st.posterior.mean - theta).cwiseAbs().maxCoeff() < 1e-2);
}

TEST_CASE("fit is deterministic and validates options") {
  const auto d = simulate_logistic(Eigen::Vector2d(0.1, 0.2), 100, 8);
  const auto a = fit(GaussianDistribution::flat(2), d);
  const auto b = fit(GaussianDistribution::flat(2), d);
  CHECK(a.posterior.mean == b.posterior.mean);
  CHECK(a.elbo_trace == b.elbo_trace);
  FitOptions bad;
  bad.max_iterations = 0;
  CHECK_THROWS_AS(fit(GaussianDistribution::flat(2), d, bad), Error);
  bad = FitOptions{};
  bad.elbo_rel_tolerance = 0.0;
  CHECK_THROWS_AS(fit(GaussianDistribution::flat(2), d, bad), Error);
  FitOptions one;
  one.max_iterations = 1;
  const auto c = fit(GaussianDistribution::flat(2), d, one);
  CHECK_FALSE(c.converged);
  CHECK(c.iteration == 1);
  CHECK_THROWS_AS(fit(GaussianDistribution::flat(3), d), Error);
}

TEST_CASE("from-offsets initialisation reaches the same optimum") {
  const auto d = simulate_logistic(Eigen::Vector2d(0.1, -0.6), 300, 12, 2.0);
  FitOptions opts;
  opts.xi_init = XiInit::from_offsets;
  const auto a = fit(GaussianDistribution::flat(2), d);
  const auto b = fit(GaussianDistribution::flat(2), d, opts);
  CHECK((a.posterior.mean - b.posterior.mean).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("gaussian validation") {
  GaussianDistribution g{Eigen::Vector2d::Zero(), Eigen::Matrix2d::Identity()};
  g.covariance(0, 1) = 0.5;
  CHECK_THROWS_AS(g.check(), Error);
  GaussianDistribution neg{Eigen::Vector2d::Zero(), -Eigen::Matrix2d::Identity()};
  CHECK_THROWS_AS(neg.check(), Error);
  CHECK(GaussianDistribution::flat(3).covariance(2, 2) == 1e9);
}
