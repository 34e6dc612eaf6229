#pragma once

#include "paley_wiener.hpp"
#include "uniqueness.hpp"

namespace phaseless {

enum class GatePolicy { enforce, warn };
enum class SliceMode { automatic, periodic, truncated };

inline const char* to_string(GatePolicy p) { return p == GatePolicy::enforce ? "enforce" : "warn"; }
inline const char* to_string(SliceMode m) {
  return m == SliceMode::automatic ? "automatic" : m == SliceMode::periodic ? "periodic" : "truncated";
}

struct RecoveryConfig {
  GridGeometry signal_grid;
  double svd_tol = 1e-8;
  double shannon_radius = 0;  // 0 selects 40 cells of the largest Gamma step
  GatePolicy gate_policy = GatePolicy::enforce;
  SliceMode slice_mode = SliceMode::automatic;
  std::size_t lambda_horizon = 0;  // 0 uses every sampled translate
  unsigned threads = 0;
  std::uint64_t seed = 1;

  static RecoveryConfig over(const CompactBox& K, double h) {
    RecoveryConfig c;
    c.signal_grid = GridGeometry::over_box(K, h);
    return c;
  }

  // { t - t' } for signal-grid nodes t, t'.
  GridGeometry omega_grid() const {
    const int d = signal_grid.dim();
    Vec o(d);
    IVec n(d);
    for (int j = 0; j < d; ++j) {
      o(j) = -double(signal_grid.shape[j] - 1) * signal_grid.spacing(j);
      n[j] = 2 * signal_grid.shape[j] - 1;
    }
    return GridGeometry(o, signal_grid.spacing, n);
  }

  void validate() const {
    if (!(svd_tol > 0 && svd_tol < 1)) throw Error(ErrorCode::BadDomain, "svd_tol must lie in (0, 1)");
    if (signal_grid.dim() == 0) throw Error(ErrorCode::DimError, "signal grid not set");
  }
};

struct TranslateMeasurements {
  Vec omega;
  std::vector<cdouble> values;  // one per translate lambda
};

struct SliceStage {
  std::vector<TranslateMeasurements> measurements;  // omega_grid flat order
  double out_of_band = 0;                           // max over lambda, relative spectral energy outside K-K
  SliceMode mode = SliceMode::periodic;
};

namespace detail {

inline std::int64_t next_pow2(std::int64_t n) {
  std::int64_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

inline void enforce_gate(const GateReport& g, GatePolicy policy) {
  if (!g.pass && policy == GatePolicy::enforce)
    throw Error(ErrorCode::GateError, std::string(to_string(g.gate)) + " gate failed: " + g.details);
}

}  // namespace detail

inline SliceStage slice_measurements(const SpectrogramSamples& s, const RecoveryConfig& cfg) {
  cfg.validate();
  const GridGeometry& sg = cfg.signal_grid;
  const int d = sg.dim();
  require_dim(d, s.freq_lattice.dim(), "slice_measurements");
  detail::enforce_gate(gamma_gate(s.support, s.freq_lattice), cfg.gate_policy);
  shannon_kernel(s.freq_lattice);  // validates the closed-form cell

  // dense frequency grid: one period 1/h per axis, n_j points, cft output step h
  IVec n(d), S = s.gamma_window.shape(), L(d);
  Vec P(d), c(d);
  bool commensurate = true;
  for (int j = 0; j < d; ++j) {
    n[j] = detail::next_pow2(2 * sg.shape[j]);
    P(j) = 1.0 / sg.spacing(j);
    c(j) = std::abs(s.freq_lattice.generator()(j, j));
    double q = P(j) / c(j);
    L[j] = static_cast<std::int64_t>(std::llround(q));
    if (std::abs(q - double(L[j])) > 1e-9 * q || S[j] < L[j]) commensurate = false;
  }
  SliceMode mode = cfg.slice_mode;
  if (mode == SliceMode::automatic) mode = commensurate ? SliceMode::periodic : SliceMode::truncated;
  if (mode == SliceMode::periodic && !commensurate)
    throw Error(ErrorCode::BadDomain, "periodic slice mode needs 1/(h c) integral and one full period of samples");
  const double R = cfg.shannon_radius > 0 ? cfg.shannon_radius : 40.0 * c.maxCoeff();

  Vec dstep(d);
  for (int j = 0; j < d; ++j) dstep(j) = P(j) / double(n[j]);
  const GridGeometry dense(-P / 2.0, dstep, n);
  std::vector<CMat> W(d);
  for (int j = 0; j < d; ++j) {
    W[j] = CMat::Zero(n[j], S[j]);
    for (std::int64_t i = 0; i < n[j]; ++i) {
      double xi = dense.origin(j) + double(i) * dense.spacing(j);
      if (mode == SliceMode::periodic) {
        for (std::int64_t k = 0; k < L[j]; ++k)
          W[j](i, k) = periodic_sinc((xi - c(j) * double(s.gamma_window.lo[j] + k)) / c(j), L[j]);
      } else {
        auto kmin = static_cast<std::int64_t>(std::ceil((xi - R) / c(j)));
        auto kmax = static_cast<std::int64_t>(std::floor((xi + R) / c(j)));
        if (kmin < s.gamma_window.lo[j] || kmax > s.gamma_window.hi[j])
          throw Error(ErrorCode::CoverageError, "Gamma samples do not cover the truncation radius");
        for (std::int64_t k = kmin; k <= kmax; ++k)
          W[j](i, k - s.gamma_window.lo[j]) = sinc((xi - c(j) * double(k)) / c(j));
      }
    }
  }

  const GridGeometry og = cfg.omega_grid();
  const std::size_t nl = cfg.lambda_horizon ? std::min(cfg.lambda_horizon, s.lambdas.size()) : s.lambdas.size();
  const CompactBox band = s.support.difference();
  SliceStage out;
  out.mode = mode;
  out.measurements.resize(og.size());
  for (std::size_t q = 0; q < og.size(); ++q) out.measurements[q] = {og.node(q), std::vector<cdouble>(nl)};
  std::vector<double> oob(nl, 0.0);

  parallel_for(nl, resolve_threads(cfg.threads), [&](std::size_t li) {
    std::vector<double> sl = s.slice(li);
    std::vector<cdouble> data(sl.begin(), sl.end());
    IVec shape = S;
    for (int j = 0; j < d; ++j) {
      IVec ns;
      data = detail::apply_axis(data, shape, j, W[j], ns);
      shape = ns;
    }
    GridField spec = cft(GridField(dense, std::move(data)), -1);
    double e_in = 0, e_out = 0;
    const double tol = 1e-9 * spec.geom.spacing.maxCoeff();
    for (std::size_t i = 0; i < spec.size(); ++i) {
      double e = std::norm(spec.values[i]);
      (band.contains(spec.geom.node(i), tol) ? e_in : e_out) += e;
    }
    oob[li] = (e_in + e_out) > 0 ? e_out / (e_in + e_out) : 0.0;
    for (std::size_t q = 0; q < og.size(); ++q) {
      IVec m = og.unflatten(q);
      IVec k(d);
      for (int j = 0; j < d; ++j) k[j] = m[j] - (sg.shape[j] - 1) + n[j] / 2;
      out.measurements[q].values[li] = spec.values[spec.geom.flatten(k)];
    }
  });
  for (double v : oob) out.out_of_band = std::max(out.out_of_band, v);
  return out;
}

// ---- translate system ----

struct TranslateSystem {
  CMat M;                         // rows: translates, cols: support nodes
  std::vector<std::size_t> cols;  // signal-grid flat index of each column
  std::vector<double> col_scale;  // nonempty: unknown c is f_w(t) * col_scale[c]
};

// M[l, t] = conj(g_w(t - l)) dV with g_w(u) = g(u - w) conj(g(u)), restricted to
// nodes t with t - w also on the grid (support of f_w).
inline TranslateSystem translate_system(const WindowSpec& w, const Vec& omega, const std::vector<Vec>& lambdas,
                                        const GridGeometry& g) {
  require_dim(w.dim(), g.dim(), "translate_system");
  TranslateSystem sys;
  for (std::size_t i = 0; i < g.size(); ++i) {
    Vec back = g.node(i) - omega;
    IVec bi;
    if (g.snap(back, bi)) sys.cols.push_back(i);
  }
  const double dv = g.cell_volume();
  // g chi with chi periodic on every translate: chi(t - l) = chi(t) leaves a column
  // factor D = chi(t - w) chi(t) > 0. Splitting it as sqrt(D) on each side keeps the
  // min-norm solution in the span of the base-window rows.
  const auto& pf = w.periodic_factor();
  bool factored = pf.has_value();
  for (std::size_t l = 0; factored && l < lambdas.size(); ++l) {
    double q = lambdas[l](0) / pf->period;
    factored = std::abs(q - std::round(q)) <= 1e-9 * std::max(1.0, std::abs(q));
  }
  const WindowSpec base = factored ? w.without_periodic_factor() : w;
  if (factored)
    for (std::size_t c : sys.cols) {
      Vec t = g.node(c);
      sys.col_scale.push_back(std::sqrt((*pf)(t - omega) * (*pf)(t)));
    }
  sys.M = CMat::Zero(static_cast<Eigen::Index>(lambdas.size()), static_cast<Eigen::Index>(sys.cols.size()));
  for (std::size_t c = 0; c < sys.cols.size(); ++c) {
    Vec t = g.node(sys.cols[c]);
    for (std::size_t l = 0; l < lambdas.size(); ++l) {
      Vec u = t - lambdas[l];
      sys.M(l, c) = std::conj(base(u - omega)) * base(u) * dv;
      if (factored) sys.M(l, c) *= sys.col_scale[c];
    }
  }
  return sys;
}

struct TranslateSolution {
  GridField f_omega;
  double residual = 0;  // relative to |b|
  double rhs_norm = 0;
  std::size_t rank = 0;
  double sigma_max = 0;
};

inline TranslateSolution solve_translate_system(const TranslateMeasurements& m, const WindowSpec& w,
                                                const std::vector<Vec>& lambdas, const RecoveryConfig& cfg) {
  cfg.validate();
  if (m.values.size() < lambdas.size()) throw Error(ErrorCode::DimError, "measurements do not cover the translates");
  TranslateSolution out{GridField(cfg.signal_grid)};
  TranslateSystem sys = translate_system(w, m.omega, lambdas, cfg.signal_grid);
  if (sys.cols.empty()) return out;
  CVec rhs(static_cast<Eigen::Index>(lambdas.size()));
  for (std::size_t l = 0; l < lambdas.size(); ++l) rhs(l) = m.values[l];
  Eigen::JacobiSVD<CMat> svd(sys.M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  out.sigma_max = s.size() ? s(0) : 0.0;
  if (!(out.sigma_max > 0)) throw Error(ErrorCode::DegenerateSystem, "translate matrix is zero");
  Eigen::Index r = 0;
  while (r < s.size() && s(r) > cfg.svd_tol * s(0)) ++r;
  out.rank = static_cast<std::size_t>(r);
  CVec coef = (svd.matrixU().leftCols(r).adjoint() * rhs).cwiseQuotient(s.head(r).cast<cdouble>());
  CVec x = svd.matrixV().leftCols(r) * coef;
  for (std::size_t c = 0; c < sys.cols.size(); ++c)
    out.f_omega.values[sys.cols[c]] = sys.col_scale.empty() ? x(c) : x(c) / sys.col_scale[c];
  double nr = rhs.norm();
  out.rhs_norm = nr;
  out.residual = nr > 0 ? (sys.M * x - rhs).norm() / nr : 0.0;
  return out;
}

inline TranslateSolution solve_translate_system(const TranslateMeasurements& m, const WindowSpec& w, const CountableSet& lam,
                                                std::size_t horizon, const RecoveryConfig& cfg) {
  return solve_translate_system(m, w, lam.enumerate(horizon), cfg);
}

// ---- assembly ----

struct Assembly {
  GridField estimate;
  IVec anchor;
  double residual = 0;
  double clipped_mass = 0;
};

inline Assembly assemble_signal(const std::vector<GridField>& slices, const RecoveryConfig& cfg) {
  const GridGeometry& g = cfg.signal_grid;
  const GridGeometry og = cfg.omega_grid();
  if (slices.size() != og.size()) throw Error(ErrorCode::DimError, "one slice per omega node required");
  const int d = g.dim();
  auto omega_index = [&](const IVec& m) {  // m = t - t' in grid steps
    IVec k(d);
    for (int j = 0; j < d; ++j) k[j] = m[j] + g.shape[j] - 1;
    return og.flatten(k);
  };
  const GridField& f0 = slices[omega_index(IVec(d, 0))];

  Assembly out{GridField(g), IVec{}};
  std::size_t best = 0;
  double bestv = -1, neg = 0, tot = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    double re = f0.values[i].real();
    tot += std::abs(re);
    if (re < 0) neg += -re;
    double a = std::abs(f0.values[i]);
    if (a > bestv) bestv = a, best = i;  // first maximum wins: lexicographic tie-break
  }
  out.clipped_mass = tot > 0 ? neg / tot : 0.0;
  const double anchor_sq = std::max(f0.values[best].real(), 0.0);
  if (!(anchor_sq > 0)) throw Error(ErrorCode::ZeroSignal, "f_0 has no positive mass");
  out.anchor = g.unflatten(best);
  const double a = std::sqrt(anchor_sq);
  for (std::size_t i = 0; i < g.size(); ++i) {
    IVec s = g.unflatten(i), m(d);
    for (int j = 0; j < d; ++j) m[j] = out.anchor[j] - s[j];
    out.estimate.values[i] = slices[omega_index(m)].values[best] / a;
  }

  const double scale = std::pow(out.estimate.max_abs(), 2);
  Rng rng(cfg.seed);
  for (int trial = 0; trial < 50 && scale > 0; ++trial) {
    IVec s = g.unflatten(rng.index(g.size())), t = g.unflatten(rng.index(g.size())), m(d);
    for (int j = 0; j < d; ++j) m[j] = s[j] - t[j];  // omega = s - t, so s - omega = t
    cdouble lhs = slices[omega_index(m)].values[g.flatten(s)];
    cdouble rhs = out.estimate.values[g.flatten(t)] * std::conj(out.estimate.values[g.flatten(s)]);
    out.residual = std::max(out.residual, std::abs(lhs - rhs) / scale);
  }
  return out;
}

// ---- end to end ----

struct RecoveryResiduals {
  double interpolation = 0;  // relative slice energy outside K-K
  double least_squares_max = 0;  // max |Mx - b| over slices, relative to the largest |b|
  double assembly = 0;
  double clipped_mass = 0;
};

struct RecoveryReport {
  GridField estimate;
  IVec phase_anchor;
  RecoveryResiduals residuals;
  std::vector<GateReport> gates;
  std::optional<double> aligned_error;
  SliceMode slice_mode = SliceMode::periodic;
  std::size_t translates = 0;
  std::size_t min_rank = 0;
};

inline RecoveryReport recover(const SpectrogramSamples& s, const RecoveryConfig& cfg, const GridField* truth = nullptr) {
  cfg.validate();
  RecoveryReport rep;
  try {
    rep.gates.push_back(lambda_gate(s.window, s.support, s.time_set));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::MissingClassData) throw;
    rep.gates.push_back({s.time_set.is_lattice() ? GateKind::carlson : GateKind::ronkin, false,
                         -std::numeric_limits<double>::infinity(), e.what()});
  }
  rep.gates.push_back(gamma_gate(s.support, s.freq_lattice));
  for (const auto& g : rep.gates) detail::enforce_gate(g, cfg.gate_policy);

  SliceStage st = slice_measurements(s, cfg);
  rep.slice_mode = st.mode;
  rep.residuals.interpolation = st.out_of_band;
  const std::size_t nl = st.measurements.front().values.size();
  std::vector<Vec> lambdas(s.lambdas.begin(), s.lambdas.begin() + static_cast<std::ptrdiff_t>(nl));
  rep.translates = nl;

  std::vector<GridField> slices(st.measurements.size());
  std::vector<double> res(slices.size(), 0.0), rhs(slices.size(), 0.0);
  std::vector<std::size_t> rank(slices.size(), 0);
  parallel_for(slices.size(), resolve_threads(cfg.threads), [&](std::size_t q) {
    TranslateSolution sol = solve_translate_system(st.measurements[q], s.window, lambdas, cfg);
    slices[q] = std::move(sol.f_omega);
    res[q] = sol.residual * sol.rhs_norm;
    rhs[q] = sol.rhs_norm;
    rank[q] = sol.rank;
  });
  const double top = *std::max_element(rhs.begin(), rhs.end());
  rep.residuals.least_squares_max = top > 0 ? *std::max_element(res.begin(), res.end()) / top : 0.0;
  rep.min_rank = *std::min_element(rank.begin(), rank.end());

  Assembly as = assemble_signal(slices, cfg);
  rep.estimate = std::move(as.estimate);
  rep.phase_anchor = as.anchor;
  rep.residuals.assembly = as.residual;
  rep.residuals.clipped_mass = as.clipped_mass;
  if (truth) rep.aligned_error = aligned_error(rep.estimate, *truth);
  return rep;
}

inline nlohmann::json to_json(const RecoveryReport& r) {
  nlohmann::json gates = nlohmann::json::array();
  for (const auto& g : r.gates) gates.push_back(to_json(g));
  nlohmann::json j = {
      {"phase_anchor", r.phase_anchor},
      {"residuals",
       {{"interpolation", r.residuals.interpolation},
        {"least_squares_max", r.residuals.least_squares_max},
        {"assembly", r.residuals.assembly},
        {"clipped_mass", r.residuals.clipped_mass}}},
      {"gates", gates},
      {"slice_mode", to_string(r.slice_mode)},
      {"translates", r.translates},
      {"min_rank", r.min_rank},
  };
  j["aligned_error"] = r.aligned_error ? nlohmann::json(*r.aligned_error) : nlohmann::json(nullptr);
  return j;
}

// ---- diagnostics ----

struct GramReport {
  std::vector<double> singular_values;  // descending, min(rows, cols) of them
  double sigma_max = 0;
  double sigma_min = 0;       // smallest of the singular values above
  double sigma_min_full = 0;  // 0 when there are fewer translates than unknowns
  double cond = 0;
  std::size_t rows = 0, cols = 0;
};

inline GramReport gram_diagnostic(const WindowSpec& w, const Vec& omega, const CountableSet& lam, std::size_t horizon,
                                  const CompactBox& K, const GridGeometry& g) {
  require_dim(K.dim(), g.dim(), "gram_diagnostic");
  TranslateSystem sys = translate_system(w, omega, lam.enumerate(horizon), g);
  GramReport r;
  r.rows = static_cast<std::size_t>(sys.M.rows());
  r.cols = static_cast<std::size_t>(sys.M.cols());
  if (sys.M.size() == 0) return r;
  Eigen::JacobiSVD<CMat> svd(sys.M);
  const auto& s = svd.singularValues();
  r.singular_values.assign(s.data(), s.data() + s.size());
  r.sigma_max = s(0);
  r.sigma_min = s(s.size() - 1);
  r.sigma_min_full = r.rows < r.cols ? 0.0 : r.sigma_min;
  r.cond = r.sigma_min > 0 ? r.sigma_max / r.sigma_min : std::numeric_limits<double>::infinity();
  return r;
}

// ---- aliasing counterexample ----

struct AliasingPair {
  GridField f, h;
  double deviation = 0;  // max | |V_g f|^2 - |V_g h|^2 | / max |V_g f|^2 over tested samples
  double distance = 0;   // phase-aligned relative distance
  Vec xi;                // shift, a point of the reciprocal lattice
};

// For a real Gaussian g and Gamma = cZ, on the lines w in cZ the function
// e^{2 pi i z / c} at z = w + i(...) is real and positive, so multiplying the
// Fourier-Laplace transform of f g by (e^{2 pi i z/c} - a) or by (e^{2 pi i z/c} - conj a)
// gives equal spectrogram moduli on R x Gamma. In time this is a shift by 1/c.
inline AliasingPair aliasing_counterexample(const GridField& base, const CompactBox& K, const Lattice& gamma,
                                            const WindowSpec& w, const std::vector<Vec>& test_lambdas,
                                            cdouble a = cdouble(0, 1), std::int64_t gamma_range = 20) {
  if (gamma_gate(K, gamma).pass) throw Error(ErrorCode::NoCounterexample, "gamma gate passes: samples are injective");
  if (K.dim() != 1 || w.dim() != 1) throw Error(ErrorCode::DimError, "construction is one-dimensional");
  const auto* gw = std::get_if<GaussianWindow>(&w.family());
  if (!gw || std::abs(gw->A(0, 0).imag()) > 0 || std::abs(gw->nu(0).imag()) > 0)
    throw Error(ErrorCode::NoCounterexample, "construction needs a real Gaussian window");
  if (a.imag() == 0) throw Error(ErrorCode::NoCounterexample, "a must be non-real");
  const double c = std::abs(gamma.generator()(0, 0));
  const double shift = 1.0 / c;
  if (shift >= K.diam_inf()) throw Error(ErrorCode::NoCounterexample, "shift 1/c does not fit inside K");
  const GridGeometry& g = base.geom;
  const double steps = shift / g.spacing(0);
  if (std::abs(steps - std::round(steps)) > 1e-9) throw Error(ErrorCode::NoCounterexample, "1/c is not a grid multiple");
  const auto ds = static_cast<std::int64_t>(std::llround(steps));

  GridField f0(g);  // base restricted to [lo + 1/c, hi]
  for (std::size_t i = 0; i < g.size(); ++i) {
    double t = g.node(i)(0);
    if (t >= K.lo()(0) + shift - 1e-12 && t <= K.hi()(0) + 1e-12) f0.values[i] = base.values[i];
  }
  if (f0.energy() == 0) throw Error(ErrorCode::ZeroSignal, "base signal vanishes where the construction needs it");

  AliasingPair out{GridField(g), GridField(g), 0, 0, Vec::Constant(1, shift)};
  for (std::size_t i = 0; i < g.size(); ++i) {
    IVec idx = g.unflatten(i);
    double t = g.node(i)(0);
    cdouble moved = 0;
    if (idx[0] + ds < g.shape[0]) {
      cdouble gt = w(Vec::Constant(1, t));
      moved = f0.values[static_cast<std::size_t>(idx[0] + ds)] * w(Vec::Constant(1, t + shift)) / gt;
    }
    out.f.values[i] = moved - a * f0.values[i];
    out.h.values[i] = moved - std::conj(a) * f0.values[i];
  }
  std::vector<Vec> gammas;
  for (std::int64_t k = -gamma_range; k <= gamma_range; ++k) gammas.push_back(Vec::Constant(1, c * double(k)));
  double top = 0, dev = 0;
  for (const auto& x : test_lambdas) {
    auto vf = stft_eval(out.f, w, x, gammas), vh = stft_eval(out.h, w, x, gammas);
    for (std::size_t k = 0; k < gammas.size(); ++k) {
      top = std::max(top, std::norm(vf[k]));
      dev = std::max(dev, std::abs(std::norm(vf[k]) - std::norm(vh[k])));
    }
  }
  out.deviation = top > 0 ? dev / top : 0.0;
  out.distance = aligned_error(out.h, out.f);
  return out;
}

}  // namespace phaseless
