#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>

#include "gibbsvb/design.hpp"
#include "gibbsvb/geometry.hpp"
#include "gibbsvb/model.hpp"

namespace gibbsvb {

// Dummy points either from a homogeneous Poisson process of intensity rho, or
// one uniform point per cell of an nx-by-ny grid.
class DummyScheme {
public:
  struct Poisson {
    double rho;
  };
  struct Stratified {
    int nx;
    int ny;
  };

  static DummyScheme poisson(double rho);
  static DummyScheme stratified(int nx, int ny);
  // rho = max(4 n / V, 100 / V).
  static DummyScheme default_for(const PointPattern& data);

  bool is_poisson() const { return std::holds_alternative<Poisson>(scheme_); }
  const Poisson* as_poisson() const { return std::get_if<Poisson>(&scheme_); }
  const Stratified* as_stratified() const { return std::get_if<Stratified>(&scheme_); }

  // varrho(u), constant over the window for both schemes.
  double intensity(const Window& window) const;

  // "poisson:RHO" or "stratified:NX,NY".
  static DummyScheme parse(const std::string& text);
  std::string to_string() const;

private:
  explicit DummyScheme(std::variant<Poisson, Stratified> s) : scheme_(s) {}
  std::variant<Poisson, Stratified> scheme_;
};

double default_dummy_intensity(std::size_t n, const Window& window);

PointPattern generate_dummy(const Window& window, const DummyScheme& scheme, std::uint64_t seed);

// Builds (y, X, o). Statistics always see the full data pattern; with a
// fit_window only rows located inside it are kept. For multi-type models every
// dummy location is replicated once per mark level. Dummy rows hit by the hard
// core are dropped; a hard-core violation between data points is an error.
LogisticDesign build_design(const ModelSpec& spec, const PointPattern& data, const PointPattern& dummy,
                            const DummyScheme& scheme, std::optional<Window> fit_window = {});

} // namespace gibbsvb
