#include "gibbsvb/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "gibbsvb/experiments.hpp"
#include "gibbsvb/io.hpp"
#include "gibbsvb/posterior.hpp"
#include "gibbsvb/quadrature.hpp"
#include "gibbsvb/simulate.hpp"
#include "gibbsvb/vb.hpp"

namespace gibbsvb::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream ss(text);
  while(std::getline(ss, cur, sep)) {
    parts.push_back(cur);
  }
  if(!text.empty() && text.back() == sep) {
    parts.emplace_back();
  }
  return parts;
}

double to_double(const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if(used == s.size()) {
      return v;
    }
  } catch(const std::logic_error&) {
  }
  throw Error(ErrorKind::invalid_argument, "not a number: '" + s + "'");
}

std::size_t to_count(const std::string& s) {
  const double v = to_double(s);
  if(v < 1.0 || v != std::floor(v)) {
    throw Error(ErrorKind::invalid_argument, "expected a positive integer, got '" + s + "'");
  }
  return static_cast<std::size_t>(v);
}

std::string format_window(const Window& w) {
  std::ostringstream ss;
  ss << std::setprecision(17) << w.xmin() << "," << w.xmax() << "," << w.ymin() << "," << w.ymax();
  return ss.str();
}

} // namespace

Window parse_window(const std::string& text) {
  const auto v = parse_doubles(text);
  if(v.size() != 4) {
    throw Error(ErrorKind::invalid_argument, "window must be x0,x1,y0,y1");
  }
  return Window(v[0], v[1], v[2], v[3]);
}

std::vector<double> parse_doubles(const std::string& text) {
  std::vector<double> out;
  if(text.empty()) {
    return out;
  }
  for(const auto& part : split(text, ',')) {
    out.push_back(to_double(part));
  }
  return out;
}

TrendBasis parse_trend(const std::string& text, const Window& frame, bool per_mark, bool per_mark_intercept) {
  TrendBasis trend;
  trend.frame = frame;
  trend.per_mark = per_mark;
  trend.per_mark_intercept = per_mark_intercept;
  const auto parts = split(text, ':');
  if(parts.size() == 1 && parts[0] == "constant") {
    trend.kind = TrendKind::constant;
  } else if(parts.size() == 2 && (parts[0] == "poly-y" || parts[0] == "poly-xy")) {
    trend.kind = parts[0] == "poly-y" ? TrendKind::polynomial_y : TrendKind::polynomial_xy;
    const double d = to_double(parts[1]);
    if(d < 0.0 || d != std::floor(d)) {
      throw Error(ErrorKind::invalid_argument, "trend degree must be a non-negative integer");
    }
    trend.degree = static_cast<int>(d);
  } else {
    throw Error(ErrorKind::invalid_argument, "trend must be constant, poly-y:D or poly-xy:D, got '" + text + "'");
  }
  return trend;
}

InteractionSpec parse_interaction(const std::string& text) {
  const auto parts = split(text, ':');
  const auto& kind = parts[0];
  const auto need = [&](std::size_t lo, std::size_t hi) {
    if(parts.size() < lo || parts.size() > hi) {
      throw Error(ErrorKind::invalid_argument, "malformed interaction '" + text + "'");
    }
  };
  if(kind == "none") {
    need(1, 1);
    return NoInteraction{};
  }
  if(kind == "strauss") {
    need(2, 2);
    return Strauss{to_double(parts[1])};
  }
  if(kind == "cross-strauss") {
    need(2, 2);
    return CrossStrauss{to_double(parts[1])};
  }
  if(kind == "step") {
    need(3, 3);
    return uniform_steps(to_count(parts[1]), to_double(parts[2]));
  }
  if(kind == "basis") {
    need(3, 4);
    const auto k = to_count(parts[1]);
    const double r_max = to_double(parts[2]);
    const double bw = parts.size() == 4 ? to_double(parts[3]) : r_max / static_cast<double>(k);
    return uniform_basis(k, r_max, bw);
  }
  if(kind == "lj") {
    need(3, 4);
    std::optional<double> cut;
    if(parts.size() == 4) {
      cut = to_double(parts[3]);
    }
    return lennard_jones(to_double(parts[1]), to_double(parts[2]), cut);
  }
  throw Error(ErrorKind::invalid_argument, "unknown interaction kind '" + kind + "'");
}

std::vector<std::string> read_config_tokens(const std::string& path) {
  std::ifstream in(path);
  if(!in) {
    throw Error(ErrorKind::io, "cannot open config file " + path);
  }
  std::vector<std::string> tokens;
  std::string line;
  std::size_t line_no = 0;
  while(std::getline(in, line)) {
    ++line_no;
    while(!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) {
      line.pop_back();
    }
    const auto start = line.find_first_not_of(" \t");
    if(start == std::string::npos || line[start] == '#') {
      continue;
    }
    const auto eq = line.find('=', start);
    if(eq == std::string::npos) {
      throw Error(ErrorKind::invalid_argument,
                  path + ":" + std::to_string(line_no) + ": expected key=value, got '" + line + "'");
    }
    auto key = line.substr(start, eq - start);
    while(!key.empty() && (key.back() == ' ' || key.back() == '\t')) {
      key.pop_back();
    }
    auto value = line.substr(eq + 1);
    const auto vstart = value.find_first_not_of(" \t");
    value = vstart == std::string::npos ? std::string() : value.substr(vstart);
    tokens.push_back("--" + key + "=" + value);
  }
  return tokens;
}

namespace {

// Flags shared by every command that needs a model.
struct ModelFlags {
  std::string window = "0,1,0,1";
  std::string trend = "constant";
  bool per_mark = false;
  bool per_mark_intercept = false;
  int marks = 1;
  std::string interaction = "none";
  double hardcore = 0.0;

  void add_to(CLI::App& app) {
    app.add_option("--window", window, "Observation window x0,x1,y0,y1");
    app.add_option("--trend", trend, "constant | poly-y:D | poly-xy:D");
    app.add_flag("--per-mark", per_mark, "Separate trend block per mark level");
    app.add_flag("--per-mark-intercept", per_mark_intercept, "Separate intercepts, shared trend shape");
    app.add_option("--marks", marks, "Number of mark levels")->check(CLI::PositiveNumber);
    app.add_option("--interaction", interaction,
                   "none | strauss:R | cross-strauss:R | step:K:RMAX | basis:K:RMAX[:BW] | lj:EPS:SIGMA[:CUT]");
    app.add_option("--hardcore", hardcore, "Hard-core radius (0 = none)")->check(CLI::NonNegativeNumber);
  }

  Window parsed_window() const { return parse_window(window); }

  // Trend polynomials are rescaled over `frame`.
  ModelSpec spec(const Window& frame) const {
    std::optional<double> h;
    if(hardcore > 0.0) {
      h = hardcore;
    }
    return ModelSpec(parse_trend(trend, frame, per_mark, per_mark_intercept), parse_interaction(interaction), h,
                     marks);
  }

  json to_json() const {
    return json{{"window", window},           {"trend", trend},     {"per_mark", per_mark},
                {"per_mark_intercept", per_mark_intercept}, {"marks", marks}, {"interaction", interaction},
                {"hardcore", hardcore}};
  }

  static ModelFlags from_json(const json& j) {
    ModelFlags f;
    f.window = j.at("window").get<std::string>();
    f.trend = j.at("trend").get<std::string>();
    f.per_mark = j.at("per_mark").get<bool>();
    f.per_mark_intercept = j.at("per_mark_intercept").get<bool>();
    f.marks = j.at("marks").get<int>();
    f.interaction = j.at("interaction").get<std::string>();
    f.hardcore = j.at("hardcore").get<double>();
    return f;
  }
};

// `name=value` lines for every option of `app`, given or defaulted, in
// declaration order.
std::string resolved_config(const CLI::App& app, const std::string& command) {
  std::ostringstream ss;
  ss << "command=" << command << "\n";
  for(const auto* opt : app.get_options()) {
    if(opt->get_lnames().empty()) {
      continue;
    }
    const auto& name = opt->get_lnames().front();
    if(name == "help" || name == "config") {
      continue;
    }
    std::string value;
    if(opt->count() > 0) {
      const auto& res = opt->results();
      for(std::size_t i = 0; i < res.size(); ++i) {
        value += (i ? "," : "") + res[i];
      }
    } else if(opt->get_expected_min() == 0) {
      value = "false";
    } else {
      value = opt->get_default_str();
    }
    ss << name << "=" << value << "\n";
  }
  return ss.str();
}

// Hash of the resolved config without the output location and worker count.
std::string config_hash(const std::string& config) {
  std::istringstream in(config);
  std::string line;
  std::string kept;
  while(std::getline(in, line)) {
    if(line.rfind("out=", 0) == 0 || line.rfind("workers=", 0) == 0) {
      continue;
    }
    kept += line + "\n";
  }
  return fingerprint(kept);
}

fs::path prepare_out(const std::string& dir) {
  fs::create_directories(dir);
  return fs::path(dir);
}

void write_text(const fs::path& path, const std::string& text, const Provenance& prov) {
  std::ofstream out(path);
  if(!out) {
    throw Error(ErrorKind::io, "cannot write " + path.string());
  }
  write_provenance(out, prov);
  out << text;
}

std::string read_all(const std::string& path) {
  std::ifstream in(path);
  if(!in) {
    throw Error(ErrorKind::io, "cannot open " + path);
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json vector_json(const Eigen::VectorXd& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for(Eigen::Index i = 0; i < m.rows(); ++i) {
    rows.push_back(vector_json(m.row(i).transpose()));
  }
  return rows;
}

GaussianDistribution gaussian_from_json(const json& j) {
  const auto mean = j.at("mean").get<std::vector<double>>();
  GaussianDistribution g;
  g.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
  const auto p = g.dim();
  if(j.contains("covariance")) {
    const auto rows = j.at("covariance").get<std::vector<std::vector<double>>>();
    if(static_cast<Eigen::Index>(rows.size()) != p) {
      throw Error(ErrorKind::dimension, "covariance rows do not match the mean");
    }
    g.covariance.resize(p, p);
    for(Eigen::Index i = 0; i < p; ++i) {
      if(static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != p) {
        throw Error(ErrorKind::dimension, "covariance is not square");
      }
      for(Eigen::Index k = 0; k < p; ++k) {
        g.covariance(i, k) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
      }
    }
  } else {
    const auto var = j.at("variances").get<std::vector<double>>();
    if(static_cast<Eigen::Index>(var.size()) != p) {
      throw Error(ErrorKind::dimension, "variances do not match the mean");
    }
    g.covariance = Eigen::Map<const Eigen::VectorXd>(var.data(), p).asDiagonal();
  }
  g.check();
  return g;
}

json load_json(const std::string& path) {
  try {
    return json::parse(read_all(path));
  } catch(const json::exception& e) {
    throw Error(ErrorKind::io, path + ": " + e.what());
  }
}

// ---------------------------------------------------------------- simulate

struct SimulateCmd {
  ModelFlags model;
  std::string process = "gibbs";
  std::string theta;
  double intensity = 100.0;
  std::size_t burn_in = 100000;
  std::uint64_t seed = 1;
  std::string out_dir = "out";

  void add_to(CLI::App& app) {
    model.add_to(app);
    app.add_option("--process", process, "gibbs | poisson")->check(CLI::IsMember({"gibbs", "poisson"}));
    app.add_option("--theta", theta, "Comma-separated parameter vector (gibbs)");
    app.add_option("--intensity", intensity, "Intensity (poisson)");
    app.add_option("--burn-in", burn_in, "Birth-death proposals");
    app.add_option("--seed", seed, "Random seed");
    app.add_option("--out", out_dir, "Output directory");
  }

  int run(const std::string& config, std::ostream& out) const {
    const Window window = model.parsed_window();
    const Provenance prov{config_hash(config), seed};
    PointPattern pattern(window);
    if(process == "poisson") {
      pattern = sample_poisson(window, intensity, seed);
    } else {
      const auto spec = model.spec(window);
      McmcOptions opts;
      opts.burn_in_steps = burn_in;
      opts.seed = seed;
      pattern = sample_gibbs(spec, parse_doubles(theta), window, opts);
    }
    const auto dir = prepare_out(out_dir);
    write_pattern_csv((dir / "pattern.csv").string(), pattern, &prov);
    write_text(dir / "manifest.txt", config, prov);
    out << "simulated " << pattern.n() << " points in [" << format_window(window) << "] -> "
        << (dir / "pattern.csv").string() << "\n";
    return 0;
  }
};

// ---------------------------------------------------------------- fit

struct FitCmd {
  ModelFlags model;
  std::string data_path;
  std::string dummy_path;
  std::string dummy = "default";
  std::string fit_window;
  std::string fitter = "vb";
  std::string prior = "flat";
  bool pin_first = false;
  double fit_tol = 1e-8;
  int max_iter = 200;
  std::string xi_init = "ones";
  std::uint64_t seed = 1;
  bool export_design = false;
  std::string out_dir = "out";

  void add_to(CLI::App& app) {
    model.add_to(app);
    app.add_option("--data", data_path, "Data pattern CSV")->required();
    app.add_option("--dummy-file", dummy_path, "Reuse a dummy pattern CSV");
    app.add_option("--dummy", dummy, "default | poisson:RHO | stratified:NX,NY");
    app.add_option("--fit-window", fit_window, "Border correction: keep rows inside x0,x1,y0,y1");
    app.add_option("--fitter", fitter, "vb | irls")->check(CLI::IsMember({"vb", "irls"}));
    app.add_option("--prior", prior, "flat | smooth | file:PATH");
    app.add_flag("--pin-first", pin_first, "Smoothing prior: pin the first weight to -10");
    app.add_option("--fit-tol", fit_tol, "Relative ELBO tolerance")->check(CLI::PositiveNumber);
    app.add_option("--max-iter", max_iter, "Maximum EM iterations")->check(CLI::PositiveNumber);
    app.add_option("--xi-init", xi_init, "ones | offsets")->check(CLI::IsMember({"ones", "offsets"}));
    app.add_option("--seed", seed, "Seed for generated dummy points");
    app.add_flag("--export-design", export_design, "Also write design.csv (y,o,x1..xp)");
    app.add_option("--out", out_dir, "Output directory");
  }

  GaussianDistribution make_prior(const ModelSpec& spec) const {
    const auto p = static_cast<Eigen::Index>(spec.parameter_dim());
    if(prior == "flat") {
      return GaussianDistribution::flat(p);
    }
    if(prior == "smooth") {
      const auto locations = weight_locations(spec);
      const auto weights = build_smoothing_prior(locations, SmoothingPrior::defaults_for(locations, pin_first));
      return join_priors(GaussianDistribution::flat(static_cast<Eigen::Index>(spec.trend_dim())), weights);
    }
    if(prior.rfind("file:", 0) == 0) {
      auto g = gaussian_from_json(load_json(prior.substr(5)));
      if(g.dim() != p) {
        throw Error(ErrorKind::dimension, "prior file has dimension " + std::to_string(g.dim()) +
                                              ", model needs " + std::to_string(p));
      }
      return g;
    }
    throw Error(ErrorKind::invalid_argument, "prior must be flat, smooth or file:PATH");
  }

  int run(const std::string& config, std::ostream& out) const {
    const Window window = model.parsed_window();
    std::optional<Window> fw;
    if(!fit_window.empty()) {
      fw = parse_window(fit_window);
    }
    const auto spec = model.spec(fw.value_or(window));
    const auto data = read_pattern_csv(data_path, window);

    PointPattern dummy_pattern(window);
    std::optional<DummyScheme> scheme;
    if(dummy != "default") {
      scheme = DummyScheme::parse(dummy);
    }
    if(!dummy_path.empty()) {
      dummy_pattern = read_pattern_csv(dummy_path, window);
      if(!scheme) {
        scheme = DummyScheme::poisson(static_cast<double>(std::max<std::size_t>(dummy_pattern.n(), 1)) /
                                      window.volume());
      }
    } else {
      if(!scheme) {
        scheme = DummyScheme::default_for(data);
      }
      dummy_pattern = generate_dummy(window, *scheme, seed);
    }
    const auto design = build_design(spec, data, dummy_pattern, *scheme, fw);

    const Provenance prov{config_hash(config), seed};
    const auto dir = prepare_out(out_dir);
    std::ostringstream data_text;
    std::ostringstream dummy_text;
    write_pattern_csv(data_text, data);
    write_pattern_csv(dummy_text, dummy_pattern);

    json result;
    result["provenance"] = {{"tool", std::string(tool_name)},
                            {"version", std::string(tool_version)},
                            {"config_hash", prov.config_hash},
                            {"seed", seed}};
    result["model"] = model.to_json();
    result["model"]["fit_window"] = fit_window;
    result["fitter"] = fitter;
    result["data_fingerprint"] = fingerprint(data_text.str());
    result["dummy_fingerprint"] = fingerprint(dummy_text.str());
    result["dummy_scheme"] = scheme->to_string();
    result["n_data"] = design.n_data();
    result["rows"] = design.N();

    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
    if(fitter == "irls") {
      const auto res = irls_fit(design);
      mean = res.theta;
      cov = res.converged ? res.covariance : Eigen::MatrixXd::Constant(mean.size(), mean.size(), std::nan(""));
      result["converged"] = res.converged;
      result["iterations"] = res.iterations;
      result["log_likelihood"] = res.log_likelihood;
      result["diagnostic"] = res.diagnostic;
      if(!res.converged) {
        out << "warning: irls did not converge: " << res.diagnostic << "\n";
      }
    } else {
      FitOptions opts;
      opts.elbo_rel_tolerance = fit_tol;
      opts.max_iterations = max_iter;
      opts.xi_init = xi_init == "ones" ? XiInit::all_ones : XiInit::from_offsets;
      const auto pr = make_prior(spec);
      const auto state = fit(pr, design, opts);
      mean = state.posterior.mean;
      cov = state.posterior.covariance;
      result["converged"] = state.converged;
      result["iterations"] = state.iteration;
      result["elbo"] = state.elbo;
      result["elbo_trace"] = state.elbo_trace;
      result["prior"] = {{"kind", prior}, {"mean", vector_json(pr.mean)}, {"covariance", matrix_json(pr.covariance)}};
      result["options"] = {{"max_iterations", opts.max_iterations},
                           {"elbo_rel_tolerance", opts.elbo_rel_tolerance},
                           {"xi_init", xi_init},
                           {"jitter", opts.jitter}};
      if(!state.converged) {
        out << "warning: VB stopped at max_iterations before the ELBO settled\n";
      }
    }
    result["posterior"] = {{"mean", vector_json(mean)}, {"covariance", matrix_json(cov)}};

    {
      std::ofstream f(dir / "fit.json");
      f << std::setprecision(17) << result.dump(2) << "\n";
    }
    write_pattern_csv((dir / "dummy.csv").string(), dummy_pattern, &prov);
    write_text(dir / "config.txt", config, prov);
    if(export_design) {
      std::ofstream f(dir / "design.csv");
      write_provenance(f, prov);
      write_design_csv(f, design);
    }

    out << fitter << " fit: n = " << design.n_data() << ", rows = " << design.N() << "\n";
    out << std::left << std::setw(8) << "coef" << std::right << std::setw(16) << "mean" << std::setw(16) << "sd"
        << "\n";
    for(Eigen::Index k = 0; k < mean.size(); ++k) {
      out << std::left << std::setw(8) << ("t" + std::to_string(k + 1)) << std::right << std::setw(16)
          << std::setprecision(8) << mean[k] << std::setw(16) << std::sqrt(cov(k, k)) << "\n";
    }
    if(result.contains("elbo")) {
      out << "elbo = " << std::setprecision(12) << result["elbo"].get<double>() << "\n";
    }
    return 0;
  }
};

struct LoadedFit {
  ModelSpec spec;
  GaussianDistribution posterior;
  Window frame;
};

LoadedFit load_fit(const std::string& path) {
  const auto j = load_json(path);
  const auto flags = ModelFlags::from_json(j.at("model"));
  const auto fw = j.at("model").value("fit_window", std::string());
  const Window frame = fw.empty() ? flags.parsed_window() : parse_window(fw);
  auto post = gaussian_from_json(j.at("posterior"));
  return LoadedFit{flags.spec(frame), std::move(post), frame};
}

// ---------------------------------------------------------------- envelope

struct EnvelopeCmd {
  std::string fit_path;
  std::string grid;
  int points = 101;
  double level = 0.95;
  int samples = 1000;
  bool with_intercept = false;
  std::uint64_t seed = 1;
  std::string out_dir = "out";

  void add_to(CLI::App& app) {
    app.add_option("--fit", fit_path, "fit.json from the fit command")->required();
    app.add_option("--grid", grid, "y0,y1 range (default: window y-range)");
    app.add_option("--points", points, "Grid points")->check(CLI::Range(2, 100000));
    app.add_option("--level", level, "Envelope coverage");
    app.add_option("--samples", samples, "Posterior draws")->check(CLI::PositiveNumber);
    app.add_flag("--with-intercept", with_intercept, "Keep intercepts in the trend curves");
    app.add_option("--seed", seed, "Random seed");
    app.add_option("--out", out_dir, "Output directory");
  }

  int run(const std::string& config, std::ostream& out) const {
    const auto loaded = load_fit(fit_path);
    double y0 = loaded.frame.ymin();
    double y1 = loaded.frame.ymax();
    if(!grid.empty()) {
      const auto r = parse_doubles(grid);
      if(r.size() != 2 || !(r[1] > r[0])) {
        throw Error(ErrorKind::invalid_argument, "grid must be y0,y1 with y1 > y0");
      }
      y0 = r[0];
      y1 = r[1];
    }
    std::vector<double> g(static_cast<std::size_t>(points));
    for(std::size_t i = 0; i < g.size(); ++i) {
      g[i] = y0 + (y1 - y0) * static_cast<double>(i) / static_cast<double>(g.size() - 1);
    }
    const auto envs = trend_envelope(loaded.spec, loaded.posterior, g, level, samples, seed, with_intercept);
    const Provenance prov{config_hash(config), seed};
    const auto dir = prepare_out(out_dir);
    for(std::size_t m = 0; m < envs.size(); ++m) {
      const auto path = dir / ("envelope_type" + std::to_string(m) + ".csv");
      std::ofstream f(path);
      write_provenance(f, prov);
      write_envelope_csv(f, envs[m]);
      out << "wrote " << path.string() << "\n";
    }
    write_text(dir / "config.txt", config, prov);
    return 0;
  }
};

// ---------------------------------------------------------------- interaction

struct InteractionCmd {
  std::string fit_path;
  std::string r_grid;
  int points = 0;
  double level = 0.95;
  int samples = 1000;
  bool midpoints = false;
  std::uint64_t seed = 1;
  std::string out_dir = "out";

  void add_to(CLI::App& app) {
    app.add_option("--fit", fit_path, "fit.json from the fit command")->required();
    app.add_option("--r-grid", r_grid, "r0,r1 range (default: (0, r_max))");
    app.add_option("--points", points, "Grid points (default: 0.0005 spacing)");
    app.add_option("--level", level, "Envelope coverage");
    app.add_option("--samples", samples, "Posterior draws")->check(CLI::PositiveNumber);
    app.add_flag("--range-at-midpoints", midpoints, "Characteristic range over weight locations");
    app.add_option("--seed", seed, "Random seed");
    app.add_option("--out", out_dir, "Output directory");
  }

  int run(const std::string& config, std::ostream& out) const {
    const auto loaded = load_fit(fit_path);
    const auto locations = weight_locations(loaded.spec);
    double r0 = 0.0;
    double r1 = 0.0;
    if(const auto* s = std::get_if<StepFunction>(&loaded.spec.interaction())) {
      r1 = s->r_max();
    } else {
      r1 = std::get<SmoothBasis>(loaded.spec.interaction()).cutoff;
    }
    if(!r_grid.empty()) {
      const auto r = parse_doubles(r_grid);
      if(r.size() != 2 || !(r[1] > r[0])) {
        throw Error(ErrorKind::invalid_argument, "r-grid must be r0,r1 with r1 > r0");
      }
      r0 = r[0];
      r1 = r[1];
    }
    std::vector<double> grid;
    if(points >= 2) {
      for(int i = 0; i < points; ++i) {
        grid.push_back(r0 + (r1 - r0) * (i + 0.5) / points);
      }
    } else {
      for(double r = r0 + 0.0005; r < r1; r += 0.0005) {
        grid.push_back(r);
      }
    }
    const auto draws = sample_theta(loaded.posterior, samples, seed);
    const auto env = interaction_curve(loaded.spec, draws, grid, level);
    const std::vector<double> range_grid = midpoints ? locations : grid;
    const auto range = characteristic_range(interaction_curve_samples(loaded.spec, draws, range_grid), range_grid);

    const Provenance prov{config_hash(config), seed};
    const auto dir = prepare_out(out_dir);
    {
      std::ofstream f(dir / "interaction_curve.csv");
      write_provenance(f, prov);
      write_envelope_csv(f, env);
    }
    std::ostringstream rec;
    rec << std::setprecision(12) << "mean=" << range.mean << "\nlo=" << range.lo << "\nhi=" << range.hi
        << "\nboundary_flag=" << (range.boundary_flag ? 1 : 0) << "\n";
    write_text(dir / "range.txt", rec.str(), prov);
    write_text(dir / "config.txt", config, prov);
    out << "characteristic range " << std::setprecision(6) << range.mean << " [" << range.lo << ", " << range.hi
        << "]" << (range.boundary_flag ? " (argmax at grid boundary for most samples)" : "") << "\n";
    return 0;
  }
};

// ---------------------------------------------------------------- bayes-factor

struct BayesFactorCmd {
  std::string fit1;
  std::string fit0;
  std::optional<double> elbo1;
  std::optional<double> elbo0;
  std::string out_dir;

  void add_to(CLI::App& app) {
    app.add_option("--fit1", fit1, "fit.json of model 1");
    app.add_option("--fit0", fit0, "fit.json of model 0");
    app.add_option("--elbo1", elbo1, "ELBO of model 1");
    app.add_option("--elbo0", elbo0, "ELBO of model 0");
    app.add_option("--out", out_dir, "Optional output directory");
  }

  int run(const std::string& config, std::ostream& out) const {
    double e1 = 0.0;
    double e0 = 0.0;
    if(!fit1.empty() || !fit0.empty()) {
      if(fit1.empty() || fit0.empty()) {
        throw Error(ErrorKind::invalid_argument, "give both --fit1 and --fit0");
      }
      const auto a = load_json(fit1);
      const auto b = load_json(fit0);
      if(!a.contains("elbo") || !b.contains("elbo")) {
        throw Error(ErrorKind::invalid_argument, "bayes factors need VB fits (with an elbo)");
      }
      if(a.at("data_fingerprint") != b.at("data_fingerprint") ||
         a.at("dummy_fingerprint") != b.at("dummy_fingerprint")) {
        throw Error(ErrorKind::invalid_argument, "fits were made on different data or dummy configurations");
      }
      e1 = a.at("elbo").get<double>();
      e0 = b.at("elbo").get<double>();
    } else if(elbo1 && elbo0) {
      e1 = *elbo1;
      e0 = *elbo0;
    } else {
      throw Error(ErrorKind::invalid_argument, "give --fit1/--fit0 or --elbo1/--elbo0");
    }
    const double bf = bayes_factor(e1, e0);
    out << std::setprecision(10) << "log BF = " << (e1 - e0) << "\nBF = " << bf
        << "\n(ratio of evidence lower bounds)\n";
    if(!out_dir.empty()) {
      const Provenance prov{config_hash(config), 0};
      std::ostringstream rec;
      rec << std::setprecision(17) << "elbo1=" << e1 << "\nelbo0=" << e0 << "\nlog_bf=" << (e1 - e0)
          << "\nbf=" << bf << "\n";
      const auto dir = prepare_out(out_dir);
      write_text(dir / "bayes_factor.txt", rec.str(), prov);
    }
    return 0;
  }
};

// ---------------------------------------------------------------- study

struct StudyCmd {
  int replicates = 20;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  int workers = 1;
  std::size_t burn_in = 0;
  double fit_tol = 1e-8;
  int max_iter = 0;
  std::string priors = "flat,tight_correct,tight_wrong";
  bool shared_truth = false;

  void add_common(CLI::App& app, bool with_replicates) {
    if(with_replicates) {
      app.add_option("--replicates", replicates, "Replicates per cell")->check(CLI::PositiveNumber);
    }
    app.add_option("--seed", seed, "Root seed (replicate i uses seed + i)");
    app.add_option("--out", out_dir, "Results directory");
    app.add_option("--burn-in", burn_in, "Birth-death proposals (0 = study default)");
    app.add_option("--fit-tol", fit_tol, "Relative ELBO tolerance")->check(CLI::PositiveNumber);
    app.add_option("--max-iter", max_iter, "Maximum EM iterations (0 = study default)");
    if(with_replicates) {
      app.add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
    }
  }

  void apply_fit(FitOptions& f) const {
    f.elbo_rel_tolerance = fit_tol;
    if(max_iter > 0) {
      f.max_iterations = max_iter;
    }
  }

  int run_strauss(const std::string& config, std::ostream& out) const {
    StraussStudyConfig c;
    c.replicates = replicates;
    c.seed = seed;
    c.workers = workers;
    if(burn_in > 0) c.burn_in_steps = burn_in;
    apply_fit(c.fit);
    c.prior_kinds.clear();
    for(const auto& p : split(priors, ',')) {
      c.prior_kinds.push_back(parse_prior_kind(p));
    }
    const auto rows = run_strauss_study(c);
    write_strauss_results(out_dir, c, rows);
    write_text(fs::path(out_dir) / "cli_config.txt", config, Provenance{config_hash(config), seed});
    out << "strauss study: " << rows.size() << " fits -> " << out_dir << "\n";
    return 0;
  }

  int run_trend(const std::string& config, std::ostream& out) const {
    TrendStudyConfig c;
    c.replicates = replicates;
    c.seed = seed;
    c.workers = workers;
    c.shared_truth = shared_truth;
    if(burn_in > 0) c.burn_in_steps = burn_in;
    apply_fit(c.fit);
    const auto res = run_trend_study(c);
    write_trend_results(out_dir, c, res);
    write_text(fs::path(out_dir) / "cli_config.txt", config, Provenance{config_hash(config), seed});
    std::size_t favour = 0;
    for(const auto& r : res.replicates) favour += r.log_bayes_factor() > 0.0 ? 1 : 0;
    out << "trend study: BF(separate vs shared) > 1 in " << favour << "/" << res.replicates.size()
        << " replicates -> " << out_dir << "\n";
    return 0;
  }

  int run_interaction(const std::string& config, std::ostream& out) const {
    InteractionStudyConfig c;
    c.seed = seed;
    if(burn_in > 0) c.burn_in_steps = burn_in;
    apply_fit(c.fit);
    const auto res = run_interaction_study(c);
    write_interaction_results(out_dir, c, res);
    write_text(fs::path(out_dir) / "cli_config.txt", config, Provenance{config_hash(config), seed});
    out << std::setprecision(5) << "interaction study: n = " << res.n_points << "; step range " << res.step.range.mean
        << " [" << res.step.range.lo << ", " << res.step.range.hi << "]; basis range " << res.basis.range.mean
        << " [" << res.basis.range.lo << ", " << res.basis.range.hi << "] -> " << out_dir << "\n";
    return 0;
  }
};

std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::vector<std::string> head;
  std::vector<std::string> tail;
  std::vector<std::string> config_tokens;
  bool in_head = true;
  for(std::size_t i = 0; i < args.size(); ++i) {
    const auto& a = args[i];
    if(a == "--config" && i + 1 < args.size()) {
      const auto t = read_config_tokens(args[++i]);
      config_tokens.insert(config_tokens.end(), t.begin(), t.end());
      continue;
    }
    if(a.rfind("--config=", 0) == 0) {
      const auto t = read_config_tokens(a.substr(9));
      config_tokens.insert(config_tokens.end(), t.begin(), t.end());
      continue;
    }
    if(in_head && !a.empty() && a[0] == '-') {
      in_head = false;
    }
    (in_head ? head : tail).push_back(a);
  }
  // Config values precede explicit flags.
  head.insert(head.end(), config_tokens.begin(), config_tokens.end());
  head.insert(head.end(), tail.begin(), tail.end());
  return head;
}

} // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Variational Bayes for exponential-family Gibbs point processes"};
  app.name(std::string(tool_name));
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.set_version_flag("--version", std::string(tool_version));

  SimulateCmd simulate;
  FitCmd fitc;
  EnvelopeCmd envelope;
  InteractionCmd interaction;
  BayesFactorCmd bf;
  StudyCmd study;

  auto* sim_app = app.add_subcommand("simulate", "Simulate Gibbs or Poisson patterns");
  simulate.add_to(*sim_app);
  auto* fit_app = app.add_subcommand("fit", "Fit a model to a pattern (VB or IRLS)");
  fitc.add_to(*fit_app);
  auto* env_app = app.add_subcommand("envelope", "Posterior trend envelopes from a fit");
  envelope.add_to(*env_app);
  auto* int_app = app.add_subcommand("interaction", "Posterior interaction curve and characteristic range");
  interaction.add_to(*int_app);
  auto* bf_app = app.add_subcommand("bayes-factor", "Bayes factor from two VB fits");
  bf.add_to(*bf_app);
  auto* study_app = app.add_subcommand("study", "Reproduce a simulation study");
  study_app->require_subcommand(1);
  auto* strauss_app = study_app->add_subcommand("strauss", "Strauss VB vs IRLS study");
  study.add_common(*strauss_app, true);
  strauss_app->add_option("--priors", study.priors, "Comma list of flat,tight_correct,tight_wrong");
  auto* trend_app = study_app->add_subcommand("trend", "Bivariate trend Bayes-factor study");
  study.add_common(*trend_app, true);
  trend_app->add_flag("--shared-truth", study.shared_truth, "Simulate both types from one trend");
  auto* inter_app = study_app->add_subcommand("interaction", "Lennard-Jones interaction recovery");
  study.add_common(*inter_app, false);

  std::vector<std::string> args;
  try {
    args = expand_config(raw_args);
  } catch(const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  std::vector<std::string> storage;
  storage.push_back(std::string(tool_name));
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for(auto& s : storage) {
    argv.push_back(s.data());
  }

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch(const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch(const CLI::CallForVersion&) {
    out << tool_version << "\n";
    return 0;
  } catch(const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    err << "run '" << tool_name << " --help' for usage\n";
    return 2;
  }

  try {
    if(sim_app->parsed()) return simulate.run(resolved_config(*sim_app, "simulate"), out);
    if(fit_app->parsed()) return fitc.run(resolved_config(*fit_app, "fit"), out);
    if(env_app->parsed()) return envelope.run(resolved_config(*env_app, "envelope"), out);
    if(int_app->parsed()) return interaction.run(resolved_config(*int_app, "interaction"), out);
    if(bf_app->parsed()) return bf.run(resolved_config(*bf_app, "bayes-factor"), out);
    if(strauss_app->parsed()) return study.run_strauss(resolved_config(*strauss_app, "study strauss"), out);
    if(trend_app->parsed()) return study.run_trend(resolved_config(*trend_app, "study trend"), out);
    if(inter_app->parsed()) return study.run_interaction(resolved_config(*inter_app, "study interaction"), out);
  } catch(const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch(const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  err << "usage error: no command given\n";
  return 2;
}

} // namespace gibbsvb::cli
