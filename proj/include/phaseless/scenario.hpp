#pragma once

#include "io.hpp"
#include "recovery.hpp"

namespace phaseless {

struct Thresholds {
  double interpolation = 1e-5;
  double least_squares = 1e-3;
  double assembly = 1e-2;
  double aligned_error = 1e-2;
};

struct Scenario {
  WindowSpec window;
  CompactBox K;
  CountableSet lambda;
  std::size_t horizon;
  Lattice gamma;
  nlohmann::json signal;
  RecoveryConfig cfg;
  Thresholds thresholds;
  std::uint64_t seed = 0;
  std::string base_dir;  // resolves relative from_file paths

  // Signal on its native grid: the scenario grid, or the file's grid for
  // from_file signals (same spacing, may extend beyond K).
  GridField synthesize_raw() const;
  // Signal on the scenario grid over K.
  GridField synthesize() const;
};

namespace detail {

inline GridField random_bandpass(const GridGeometry& g, const CompactBox& K, double band, int terms, std::uint64_t seed) {
  Rng rng(seed);
  const int d = g.dim();
  std::vector<Vec> freqs;
  std::vector<cdouble> coef;
  for (int k = 0; k < terms; ++k) {
    Vec xi(d);
    for (int j = 0; j < d; ++j) xi(j) = rng.uniform(-band, band);
    freqs.push_back(xi);
    double re = rng.normal();
    coef.emplace_back(re, rng.normal());
  }
  return GridField::sample(g, [&](const Vec& t) {
    double taper = 1;
    for (int j = 0; j < d; ++j) {
      double u = (t(j) - K.lo()(j)) / (K.hi()(j) - K.lo()(j));
      taper *= std::pow(std::sin(pi * u), 2);
    }
    cdouble s = 0;
    for (std::size_t k = 0; k < freqs.size(); ++k) s += coef[k] * unit_phase(freqs[k].dot(t));
    return taper * s;
  });
}

// g(t) (offset + cos(2 pi t_0 / period)) tabulated on [-extent, extent]^d.
inline WindowSpec with_periodic_multiplier(const WindowSpec& g, double period, double offset, double extent, double h) {
  const int d = g.dim();
  IVec n(d, static_cast<std::int64_t>(std::llround(2 * extent / h)) + 1);
  GridGeometry geom(Vec::Constant(d, -extent), Vec::Constant(d, h), n);
  return WindowSpec::tabulated(
      GridField::sample(geom, [&](const Vec& t) { return g(t) * (offset + std::cos(2 * pi * t(0) / period)); }));
}

}  // namespace detail

inline GridField Scenario::synthesize_raw() const {
  const GridGeometry& g = cfg.signal_grid;
  const std::string kind = signal.at("kind").get<std::string>();
  GridField f(g);
  if (kind == "gaussian_bump") {
    Vec center = signal.contains("center") ? vec_from_json(signal["center"]) : Vec::Zero(g.dim());
    double width = signal.value("width", 1.0);
    cdouble amp = signal.contains("amplitude") ? detail::cplx_from(signal["amplitude"]) : cdouble(1);
    Vec ramp = signal.contains("ramp") ? vec_from_json(signal["ramp"]) : Vec::Zero(g.dim());
    require_dim(center.size(), g.dim(), "gaussian_bump center");
    require_dim(ramp.size(), g.dim(), "gaussian_bump ramp");
    f = GridField::sample(g, [&](const Vec& t) {
      return amp * std::exp(-pi * ((t - center) / width).squaredNorm()) * detail::unit_phase(ramp.dot(t));
    });
  } else if (kind == "hermite_combo") {
    if (g.dim() != 1) throw Error(ErrorCode::DimError, "hermite_combo is one-dimensional");
    std::vector<cdouble> c;
    for (const auto& v : signal.at("coeffs")) c.push_back(detail::cplx_from(v));
    f = GridField::sample(g, [&](const Vec& t) {
      cdouble s = 0;
      for (std::size_t n = 0; n < c.size(); ++n) s += c[n] * hermite_function(int(n), t(0));
      return s;
    });
  } else if (kind == "random_bandpass") {
    f = detail::random_bandpass(g, K, signal.value("band", 4.0), signal.value("terms", 8), signal.value("seed", seed));
  } else if (kind == "from_file") {
    std::string path = signal.at("path").get<std::string>();
    if (!path.empty() && path[0] != '/' && !base_dir.empty()) path = base_dir + "/" + path;
    GridField raw = load_gfld(path);
    require_dim(raw.dim(), g.dim(), "signal file");
    if ((raw.geom.spacing - g.spacing).cwiseAbs().maxCoeff() > 1e-12 * g.spacing.maxCoeff())
      throw Error(ErrorCode::DimError, "signal file spacing differs from the scenario grid");
    return raw;
  } else {
    throw Error(ErrorCode::ParseError, "unknown signal kind '" + kind + "'");
  }
  return f;
}

inline GridField Scenario::synthesize() const {
  GridField raw = synthesize_raw();
  const GridGeometry& g = cfg.signal_grid;
  if (raw.geom.same_as(g, 1e-12)) return raw;
  GridField f(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    IVec idx;
    if (raw.geom.snap(g.node(i), idx)) f.values[i] = raw.values[raw.geom.flatten(idx)];
  }
  return f;
}

inline GatePolicy gate_policy_from(const std::string& s) {
  if (s == "enforce") return GatePolicy::enforce;
  if (s == "warn") return GatePolicy::warn;
  throw Error(ErrorCode::ParseError, "gate_policy must be enforce or warn");
}

inline SliceMode slice_mode_from(const std::string& s) {
  if (s == "automatic") return SliceMode::automatic;
  if (s == "periodic") return SliceMode::periodic;
  if (s == "truncated") return SliceMode::truncated;
  throw Error(ErrorCode::ParseError, "slice_mode must be automatic, periodic or truncated");
}

inline Scenario scenario_from_json(const nlohmann::json& j) {
  try {
    CompactBox K = box_from_json(j.at("K"));
    const double h = j.at("grid").at("spacing").get<double>();
    RecoveryConfig cfg = RecoveryConfig::over(K, h);
    if (j.contains("recovery")) {
      const auto& r = j["recovery"];
      cfg.svd_tol = r.value("svd_tol", cfg.svd_tol);
      cfg.shannon_radius = r.value("shannon_radius", cfg.shannon_radius);
      cfg.gate_policy = gate_policy_from(r.value("gate_policy", std::string("enforce")));
      cfg.slice_mode = slice_mode_from(r.value("slice_mode", std::string("automatic")));
      cfg.lambda_horizon = r.value("lambda_horizon", std::size_t(0));
    }
    Thresholds th;
    if (j.contains("thresholds")) {
      const auto& t = j["thresholds"];
      th.interpolation = t.value("interpolation", th.interpolation);
      th.least_squares = t.value("least_squares", th.least_squares);
      th.assembly = t.value("assembly", th.assembly);
      th.aligned_error = t.value("aligned_error", th.aligned_error);
    }
    std::uint64_t seed = j.value("seed", std::uint64_t(0));
    cfg.seed = seed;
    WindowSpec w = window_from_json(j.at("window"));
    Scenario s{w,
               K,
               countable_set_from_json(j.at("lambda").at("set")),
               j.at("lambda").at("horizon").get<std::size_t>(),
               lattice_from_json(j.at("gamma")),
               j.at("signal"),
               cfg,
               th,
               seed,
               ""};
    require_dim(s.window.dim(), K.dim(), "scenario window");
    require_dim(s.lambda.dim(), K.dim(), "scenario lambda");
    require_dim(s.gamma.dim(), K.dim(), "scenario gamma");
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::ParseError, "cannot read " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  Scenario s = scenario_from_json(j);
  auto slash = path.find_last_of('/');
  s.base_dir = slash == std::string::npos ? "." : path.substr(0, slash);
  return s;
}

}  // namespace phaseless
