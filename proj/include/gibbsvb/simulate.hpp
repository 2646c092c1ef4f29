#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "gibbsvb/geometry.hpp"
#include "gibbsvb/model.hpp"

namespace gibbsvb {

PointPattern sample_poisson(const Window& window, double intensity, std::uint64_t seed);

enum class InitialState { poisson, empty };

struct McmcOptions {
  std::size_t burn_in_steps = 100000;
  // poisson: homogeneous Poisson with intensity exp(theta_1), uniform marks.
  InitialState initial = InitialState::poisson;
  std::uint64_t seed = 1;
};

// Seed of replicate `index` under root seed `root`.
inline std::uint64_t replicate_seed(std::uint64_t root, std::uint64_t index) { return root + index; }

// Birth-death Metropolis-Hastings chain on configurations in a fixed window.
// Births propose a uniform location and a uniform mark; deaths a uniform
// existing point.
class GibbsChain {
public:
  GibbsChain(ModelSpec spec, std::vector<double> theta, Window window, std::uint64_t seed,
             InitialState initial = InitialState::poisson);

  void step();
  void run(std::size_t steps);

  std::size_t size() const { return points_.size(); }
  PointPattern pattern() const;

  std::size_t proposals() const { return proposals_; }
  std::size_t accepted() const { return accepted_; }

  // lambda(u; current state), skipping point `self` when given.
  double intensity(Point u, int mark, std::optional<std::size_t> self = {});

private:
  std::size_t cell_of(Point p) const;
  void insert(Point p, int mark);
  void erase(std::size_t i);
  void gather(Point u, std::optional<std::size_t> self);

  ModelSpec spec_;
  std::vector<double> theta_;
  Window window_;
  std::mt19937_64 rng_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};

  std::vector<Point> points_;
  std::vector<int> marks_;
  std::vector<std::size_t> slot_;  // position of point i within its cell
  std::vector<std::size_t> home_;  // cell of point i

  int nx_ = 1;
  int ny_ = 1;
  double cell_w_ = 1.0;
  double cell_h_ = 1.0;
  std::vector<std::vector<std::size_t>> cells_;

  std::vector<Point> local_points_;
  std::vector<int> local_marks_;

  std::size_t proposals_ = 0;
  std::size_t accepted_ = 0;
};

// Runs a chain for options.burn_in_steps proposals and returns its final state.
PointPattern sample_gibbs(const ModelSpec& spec, const std::vector<double>& theta, const Window& window,
                          const McmcOptions& options);

// 0.7 R_max with R_max = 2 sqrt(2 / (pi^2 lambda)).
double pack_range_rule(double intensity_guess);

} // namespace gibbsvb
