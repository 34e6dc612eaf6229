// phaseless: command-line front end.
//
// Exit codes: 0 ok, 1 gate check failed (gate), 2 usage/parse error,
// 3 signal support violation (sample), 4 gate enforced during recovery,
// 5 recovery residual thresholds not met, 6 other numerical failure.

#include <phaseless/phaseless.hpp>

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>

using namespace phaseless;

namespace {

enum Exit { kOk = 0, kGateFail = 1, kUsage = 2, kSupport = 3, kGateEnforced = 4, kThresholds = 5, kNumeric = 6 };

struct Overrides {
  std::optional<std::string> gate_policy;
  std::optional<double> svd_tol;
  std::optional<std::size_t> lambda_horizon;
  std::optional<double> shannon_radius;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;

  void attach(CLI::App* app) {
    app->add_option("--gate-policy", gate_policy, "enforce or warn")->check(CLI::IsMember({"enforce", "warn"}));
    app->add_option("--svd-tol", svd_tol, "relative singular value cutoff");
    app->add_option("--lambda-horizon", lambda_horizon, "number of translates (sample: sampled, recover: used)");
    app->add_option("--shannon-radius", shannon_radius, "truncation radius of the Gamma series");
    app->add_option("--seed", seed, "seed for all randomness");
    app->add_option("--threads", threads, "worker threads (default: PHASELESS_THREADS or 1)");
  }

  // CLI > file
  void apply(Scenario& s, bool sampling) const {
    if (gate_policy) s.cfg.gate_policy = gate_policy_from(*gate_policy);
    if (svd_tol) s.cfg.svd_tol = *svd_tol;
    if (shannon_radius) s.cfg.shannon_radius = *shannon_radius;
    if (seed) s.seed = s.cfg.seed = *seed;
    if (threads) s.cfg.threads = *threads;
    if (lambda_horizon) (sampling ? s.horizon : s.cfg.lambda_horizon) = *lambda_horizon;
    s.cfg.threads = resolve_threads(s.cfg.threads);
  }
};

int exit_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::ParseError:
    case ErrorCode::DimError:
    case ErrorCode::BadDomain:
    case ErrorCode::BadWindow:
    case ErrorCode::SingularLattice:
      return kUsage;
    case ErrorCode::SupportError: return kSupport;
    case ErrorCode::GateError: return kGateEnforced;
    default: return kNumeric;
  }
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::ParseError, "cannot write " + path);
  return os;
}

void csv_row(std::ostream& os, std::initializer_list<double> xs) {
  bool first = true;
  for (double x : xs) {
    if (!first) os << ',';
    os << detail::fmt(x);
    first = false;
  }
  os << '\n';
}

GateReport lambda_gate_or_missing(const Scenario& s) {
  try {
    return lambda_gate(s.window, s.K, s.lambda);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::MissingClassData) throw;
    return {s.lambda.is_lattice() ? GateKind::carlson : GateKind::ronkin, false,
            -std::numeric_limits<double>::infinity(), e.what()};
  }
}

int cmd_gate(const std::string& path, const Overrides& ov) {
  Scenario s = load_scenario(path);
  ov.apply(s, true);
  GateReport lg = lambda_gate_or_missing(s), gg = gamma_gate(s.K, s.gamma);
  nlohmann::json j = {{"lambda_gate", to_json(lg)}, {"gamma_gate", to_json(gg)}, {"pass", lg.pass && gg.pass}};
  std::cout << j.dump(2) << '\n';
  return lg.pass && gg.pass ? kOk : kGateFail;
}

int cmd_sample(const std::string& path, const std::string& out, const Overrides& ov) {
  Scenario s = load_scenario(path);
  ov.apply(s, true);
  GridField f = s.synthesize_raw();
  auto samples = sample_spectrogram(f, s.window, s.lambda, s.gamma, s.horizon, s.K, {}, s.cfg.threads);
  save_spec(out, samples);
  std::cout << "wrote " << samples.values.size() << " samples to " << out << '\n';
  return kOk;
}

int cmd_recover(const std::string& spec_path, const std::string& path, const std::string& prefix, const Overrides& ov) {
  Scenario s = load_scenario(path);
  ov.apply(s, false);
  SpectrogramSamples samples = load_spec(spec_path);
  GridField truth = s.synthesize();
  RecoveryReport rep = recover(samples, s.cfg, truth.energy() > 0 ? &truth : nullptr);
  nlohmann::json j = to_json(rep);
  const auto& th = s.thresholds;
  bool ok = rep.residuals.interpolation <= th.interpolation && rep.residuals.least_squares_max <= th.least_squares &&
            rep.residuals.assembly <= th.assembly && (!rep.aligned_error || *rep.aligned_error <= th.aligned_error);
  j["thresholds"] = {{"interpolation", th.interpolation},
                     {"least_squares", th.least_squares},
                     {"assembly", th.assembly},
                     {"aligned_error", th.aligned_error},
                     {"met", ok}};
  open_out(prefix + ".report.json") << j.dump(2) << '\n';
  save_gfld(prefix + ".estimate.gfld", rep.estimate);
  if (rep.aligned_error) std::cout << "aligned_error " << detail::fmt(*rep.aligned_error) << '\n';
  std::cout << "residuals interpolation " << detail::fmt(rep.residuals.interpolation) << " least_squares "
            << detail::fmt(rep.residuals.least_squares_max) << " assembly " << detail::fmt(rep.residuals.assembly) << '\n';
  return ok ? kOk : kThresholds;
}

// ---- demos ----

int demo_zero_flip(const std::string& prefix) {
  GridGeometry g(Vec::Constant(1, -4), Vec::Constant(1, 1.0 / 64), {513});
  auto [f, h] = zero_flip_pair(cdouble(0, 1), g);
  auto os = open_out(prefix + "_zero_flip.csv");
  os << "t,abs_f,abs_h,re_f,im_f,re_h,im_h\n";
  double gap = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    gap = std::max(gap, std::abs(std::abs(f.values[i]) - std::abs(h.values[i])));
    csv_row(os, {g.node(i)(0), std::abs(f.values[i]), std::abs(h.values[i]), f.values[i].real(), f.values[i].imag(),
                 h.values[i].real(), h.values[i].imag()});
  }
  std::cout << nlohmann::json{{"max_modulus_gap", gap}, {"aligned_distance", aligned_error(h, f)}}.dump(2) << '\n';
  return kOk;
}

int demo_aliasing(const std::string& prefix) {
  CompactBox K = CompactBox::cube(1, 1);
  GridGeometry g = GridGeometry::over_box(K, 1.0 / 64);
  auto w = WindowSpec::gaussian_isotropic(1, 1);
  GridField base = GridField::sample(g, [](const Vec& t) { return cdouble(1, 0.5) * std::exp(-pi * std::pow((t(0) - 0.1) / 0.9, 2)); });
  std::vector<Vec> xs;
  for (int k = -12; k <= 12; ++k) xs.push_back(Vec::Constant(1, 0.25 * k));
  Lattice gamma = Lattice::scaled(1, 1);
  auto pair = aliasing_counterexample(base, K, gamma, w, xs);
  auto os = open_out(prefix + "_aliasing.csv");
  os << "x,gamma,spec_f,spec_h\n";
  std::vector<Vec> gs;
  for (int k = -5; k <= 5; ++k) gs.push_back(Vec::Constant(1, double(k)));
  for (const auto& x : xs) {
    auto vf = stft_eval(pair.f, w, x, gs), vh = stft_eval(pair.h, w, x, gs);
    for (std::size_t k = 0; k < gs.size(); ++k) csv_row(os, {x(0), gs[k](0), std::norm(vf[k]), std::norm(vh[k])});
  }
  auto ss = open_out(prefix + "_aliasing_signals.csv");
  ss << "t,re_f,im_f,re_h,im_h\n";
  for (std::size_t i = 0; i < g.size(); ++i)
    csv_row(ss, {g.node(i)(0), pair.f.values[i].real(), pair.f.values[i].imag(), pair.h.values[i].real(), pair.h.values[i].imag()});
  std::cout << nlohmann::json{{"gamma_gate", to_json(gamma_gate(K, gamma))},
                              {"sample_deviation", pair.deviation},
                              {"aligned_distance", pair.distance}}
                   .dump(2)
            << '\n';
  return kOk;
}

int demo_gram_sweep(const std::string& prefix) {
  CompactBox K = CompactBox::cube(1, 1);
  GridGeometry g = GridGeometry::over_box(K, 1.0 / 64);
  auto w = WindowSpec::gaussian_isotropic(1, 1);
  auto lam = CountableSet::lattice(Lattice::scaled(1, 0.25));
  auto os = open_out(prefix + "_gram_sweep.csv");
  os << "horizon,rows,cols,sigma_max,sigma_min,cond\n";
  for (std::size_t n : {3u, 5u, 9u, 17u, 33u, 65u}) {
    auto r = gram_diagnostic(w, Vec::Zero(1), lam, n, K, g);
    csv_row(os, {double(n), double(r.rows), double(r.cols), r.sigma_max, r.sigma_min, r.cond});
  }
  std::cout << "wrote " << prefix << "_gram_sweep.csv\n";
  return kOk;
}

int demo_airy_profile(const std::string& prefix) {
  auto gauss = WindowSpec::gaussian_isotropic(1, 1);
  auto airy = WindowSpec::airy(1);
  const double peak = airy(Vec::Zero(2)).real();
  auto os = open_out(prefix + "_airy_profile.csv");
  os << "x,gaussian,airy\n";
  for (int i = -300; i <= 300; ++i) {
    double x = i / 100.0;
    csv_row(os, {x, gauss(Vec::Constant(1, x)).real(), airy((Vec(2) << x, 0.0).finished()).real() / peak});
  }
  std::cout << "wrote " << prefix << "_airy_profile.csv\n";
  return kOk;
}

int cmd_demo(const std::string& name, const std::string& prefix) {
  if (name == "zero_flip") return demo_zero_flip(prefix);
  if (name == "aliasing") return demo_aliasing(prefix);
  if (name == "gram_sweep") return demo_gram_sweep(prefix);
  if (name == "airy_profile") return demo_airy_profile(prefix);
  std::cerr << "unknown demo '" << name << "' (zero_flip, aliasing, gram_sweep, airy_profile)\n";
  return kUsage;
}

Vec parse_point(const std::string& txt) {
  std::vector<double> xs;
  std::size_t p = 0;
  while (p <= txt.size()) {
    auto q = txt.find(',', p);
    if (q == std::string::npos) q = txt.size();
    xs.push_back(detail::parse_double(std::string_view(txt).substr(p, q - p)));
    p = q + 1;
  }
  return Eigen::Map<Vec>(xs.data(), Eigen::Index(xs.size()));
}

int cmd_gram(const std::string& path, const std::vector<std::string>& omegas, const Overrides& ov) {
  Scenario s = load_scenario(path);
  ov.apply(s, true);
  nlohmann::json out = nlohmann::json::array();
  std::vector<std::string> list = omegas.empty() ? std::vector<std::string>{"0"} : omegas;
  for (const auto& o : list) {
    Vec om = o == "0" ? Vec::Zero(s.K.dim()) : parse_point(o);
    require_dim(om.size(), s.K.dim(), "--omega");
    auto r = gram_diagnostic(s.window, om, s.lambda, s.horizon, s.K, s.cfg.signal_grid);
    out.push_back({{"omega", vec_to_json(om)},
                   {"rows", r.rows},
                   {"cols", r.cols},
                   {"sigma_max", r.sigma_max},
                   {"sigma_min", r.sigma_min},
                   {"sigma_min_full", r.sigma_min_full},
                   {"cond", std::isfinite(r.cond) ? nlohmann::json(r.cond) : nlohmann::json("inf")},
                   {"singular_values", r.singular_values}});
  }
  std::cout << out.dump(2) << '\n';
  return kOk;
}

int cmd_window_eval(const std::string& path, const std::vector<std::string>& points) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::ParseError, "cannot read " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  WindowSpec w = window_from_json(j);
  std::cout << "re,im\n";
  for (const auto& p : points) {
    Vec t = parse_point(p);
    require_dim(t.size(), w.dim(), "window eval point");
    cdouble v = w(t);
    std::cout << detail::fmt(v.real()) << ',' << detail::fmt(v.imag()) << '\n';
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"phaseless: spectrogram sampling, uniqueness gates and phase retrieval"};
  app.require_subcommand(1);
  Overrides ov;
  std::string scenario, out, samples, prefix, demo_name, window_path;
  std::vector<std::string> omegas, points;

  auto* gate = app.add_subcommand("gate", "check the Lambda and Gamma uniqueness gates");
  gate->add_option("scenario", scenario)->required();
  ov.attach(gate);

  auto* sample = app.add_subcommand("sample", "sample the spectrogram of the scenario signal");
  sample->add_option("scenario", scenario)->required();
  sample->add_option("out", out, "SPEC1 output path")->required();
  ov.attach(sample);

  auto* rec = app.add_subcommand("recover", "recover the signal up to global phase");
  rec->add_option("samples", samples, "SPEC1 input")->required();
  rec->add_option("scenario", scenario)->required();
  rec->add_option("out_prefix", prefix)->required();
  ov.attach(rec);

  auto* demo = app.add_subcommand("demo", "write CSV data for a demo");
  demo->add_option("name", demo_name, "zero_flip | aliasing | gram_sweep | airy_profile")->required();
  demo->add_option("out_prefix", prefix)->required();

  auto* gram = app.add_subcommand("gram", "singular spectrum of the translate system");
  gram->add_option("scenario", scenario)->required();
  gram->add_option("--omega", omegas, "omega as x[,y...]; repeatable");
  ov.attach(gram);

  auto* window = app.add_subcommand("window", "window utilities");
  window->require_subcommand(1);
  auto* weval = window->add_subcommand("eval", "evaluate a window at points");
  weval->add_option("window", window_path, "window JSON")->required();
  weval->add_option("--point,-p", points, "x[,y...]; repeatable")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*gate) return cmd_gate(scenario, ov);
    if (*sample) return cmd_sample(scenario, out, ov);
    if (*rec) return cmd_recover(samples, scenario, prefix, ov);
    if (*demo) return cmd_demo(demo_name, prefix);
    if (*gram) return cmd_gram(scenario, omegas, ov);
    if (*weval) return cmd_window_eval(window_path, points);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_for(e);
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
