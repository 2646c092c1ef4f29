#include "gibbsvb/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

namespace gibbsvb {

std::size_t LogisticDesign::n_data() const {
  return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const RowMeta& r) { return r.is_data; }));
}

void LogisticDesign::check() const {
  if(y.size() != X.rows() || offset.size() != X.rows() || static_cast<Eigen::Index>(rows.size()) != X.rows()) {
    throw Error(ErrorKind::dimension, "design components have inconsistent lengths");
  }
}

void write_design_csv(std::ostream& out, const LogisticDesign& design) {
  out << "y,o";
  for(Eigen::Index k = 0; k < design.p(); ++k) {
    out << ",x" << (k + 1);
  }
  out << "\n" << std::setprecision(17);
  for(Eigen::Index i = 0; i < design.N(); ++i) {
    out << design.y[i] << "," << design.offset[i];
    for(Eigen::Index k = 0; k < design.p(); ++k) {
      out << "," << design.X(i, k);
    }
    out << "\n";
  }
}

DummyScheme DummyScheme::poisson(double rho) {
  if(!(rho > 0.0) || !std::isfinite(rho)) {
    throw Error(ErrorKind::invalid_argument, "dummy intensity rho must be positive");
  }
  return DummyScheme(Poisson{rho});
}

DummyScheme DummyScheme::stratified(int nx, int ny) {
  if(nx < 1 || ny < 1) {
    throw Error(ErrorKind::invalid_argument, "stratified dummy grid needs nx, ny >= 1");
  }
  return DummyScheme(Stratified{nx, ny});
}

double default_dummy_intensity(std::size_t n, const Window& window) {
  const double v = window.volume();
  return std::max(4.0 * static_cast<double>(n) / v, 100.0 / v);
}

DummyScheme DummyScheme::default_for(const PointPattern& data) {
  return poisson(default_dummy_intensity(data.n(), data.window()));
}

double DummyScheme::intensity(const Window& window) const {
  if(const auto* p = as_poisson()) {
    return p->rho;
  }
  const auto* s = as_stratified();
  return static_cast<double>(s->nx) * s->ny / window.volume();
}

DummyScheme DummyScheme::parse(const std::string& text) {
  const auto colon = text.find(':');
  if(colon == std::string::npos) {
    throw Error(ErrorKind::invalid_argument, "dummy scheme must be poisson:RHO or stratified:NX,NY");
  }
  const auto kind = text.substr(0, colon);
  const auto rest = text.substr(colon + 1);
  try {
    if(kind == "poisson") {
      std::size_t used = 0;
      const double rho = std::stod(rest, &used);
      if(used != rest.size()) throw std::invalid_argument(rest);
      return poisson(rho);
    }
    if(kind == "stratified") {
      const auto comma = rest.find(',');
      if(comma == std::string::npos) throw std::invalid_argument(rest);
      return stratified(std::stoi(rest.substr(0, comma)), std::stoi(rest.substr(comma + 1)));
    }
  } catch(const std::logic_error&) {
    throw Error(ErrorKind::invalid_argument, "cannot parse dummy scheme '" + text + "'");
  }
  throw Error(ErrorKind::invalid_argument, "unknown dummy scheme '" + kind + "'");
}

std::string DummyScheme::to_string() const {
  std::ostringstream ss;
  ss << std::setprecision(17);
  if(const auto* p = as_poisson()) {
    ss << "poisson:" << p->rho;
  } else {
    const auto* s = as_stratified();
    ss << "stratified:" << s->nx << "," << s->ny;
  }
  return ss.str();
}

PointPattern generate_dummy(const Window& window, const DummyScheme& scheme, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Point> pts;
  if(const auto* p = scheme.as_poisson()) {
    std::poisson_distribution<long> count(p->rho * window.volume());
    const auto n = count(rng);
    std::uniform_real_distribution<double> ux(window.xmin(), window.xmax());
    std::uniform_real_distribution<double> uy(window.ymin(), window.ymax());
    pts.reserve(static_cast<std::size_t>(n));
    for(long i = 0; i < n; ++i) {
      const double x = ux(rng);
      const double y = uy(rng);
      pts.push_back({x, y});
    }
  } else {
    const auto* s = scheme.as_stratified();
    const double cw = window.width() / s->nx;
    const double ch = window.height() / s->ny;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    pts.reserve(static_cast<std::size_t>(s->nx) * s->ny);
    for(int j = 0; j < s->ny; ++j) {
      for(int i = 0; i < s->nx; ++i) {
        const double x = window.xmin() + (i + unit(rng)) * cw;
        const double y = window.ymin() + (j + unit(rng)) * ch;
        pts.push_back({std::min(x, window.xmax()), std::min(y, window.ymax())});
      }
    }
  }
  return PointPattern(window, std::move(pts));
}

LogisticDesign build_design(const ModelSpec& spec, const PointPattern& data, const PointPattern& dummy,
                            const DummyScheme& scheme, std::optional<Window> fit_window) {
  if(!spec.fittable()) {
    throw Error(ErrorKind::unsupported, "cannot build a logistic design for a lennard-jones model");
  }
  if(!(data.window() == dummy.window())) {
    throw Error(ErrorKind::invalid_argument, "data and dummy patterns must share the same window");
  }
  if(fit_window && !data.window().contains(*fit_window)) {
    throw Error(ErrorKind::invalid_argument, "fit window must lie inside the data window");
  }
  if(data.max_mark() >= spec.mark_levels()) {
    throw Error(ErrorKind::invalid_argument, "data marks exceed the model's mark levels");
  }

  const auto in_fit = [&](Point u) { return !fit_window || fit_window->contains(u); };
  const double log_rho = std::log(scheme.intensity(data.window()));
  const auto p = static_cast<Eigen::Index>(spec.parameter_dim());
  const int levels = spec.mark_levels();

  std::optional<NeighborIndex> index;
  if(spec.reach() > 0.0) {
    index.emplace(data, spec.reach());
  }

  std::vector<RowMeta> rows;
  std::vector<std::size_t> data_index;
  rows.reserve(data.n() + dummy.n() * static_cast<std::size_t>(levels));
  for(std::size_t i = 0; i < data.n(); ++i) {
    const auto& u = data.point(i);
    if(spec.hardcore_radius() && index) {
      const auto h = *spec.hardcore_radius();
      if(index->count(u, h, i) > 0) {
        throw Error(ErrorKind::infeasible_data,
                    "data point " + std::to_string(i) + " violates the hard core of radius " + std::to_string(h));
      }
    }
    if(in_fit(u)) {
      rows.push_back({u, data.mark(i), true});
      data_index.push_back(i);
    }
  }
  for(std::size_t j = 0; j < dummy.n(); ++j) {
    const auto& u = dummy.point(j);
    if(!in_fit(u)) {
      continue;
    }
    if(spec.hardcore_radius() && index && index->count(u, *spec.hardcore_radius()) > 0) {
      continue;
    }
    for(int m = 0; m < levels; ++m) {
      rows.push_back({u, m, false});
    }
  }

  LogisticDesign design;
  const auto N = static_cast<Eigen::Index>(rows.size());
  design.y = Eigen::VectorXd::Zero(N);
  design.X.resize(N, p);
  design.offset = Eigen::VectorXd::Constant(N, -log_rho);
  for(Eigen::Index r = 0; r < N; ++r) {
    const auto& meta = rows[static_cast<std::size_t>(r)];
    std::optional<std::size_t> self;
    if(meta.is_data) {
      design.y[r] = 1.0;
      self = data_index[static_cast<std::size_t>(r)];
    }
    Eigen::VectorXd row = index ? statistic_row(spec, *index, meta.location, meta.mark, self)
                                : statistic_row(spec, data, meta.location, meta.mark, self);
    design.X.row(r) = row.transpose();
  }
  design.rows = std::move(rows);
  return design;
}

} // namespace gibbsvb
