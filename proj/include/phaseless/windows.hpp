#pragma once

#include "grid.hpp"

#include <optional>

namespace phaseless {

// J1 by its power series near the origin and the Hankel expansion beyond.
inline constexpr double kBesselSwitch = 12.0;

inline double bessel_j1(double x) {
  const double ax = std::abs(x);
  const double sgn = x < 0 ? -1.0 : 1.0;
  if (ax <= kBesselSwitch) {
    const double h = 0.5 * ax, h2 = h * h;
    double term = h, sum = h;
    for (int k = 1; k < 200; ++k) {
      term *= -h2 / (double(k) * double(k + 1));
      sum += term;
      if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    }
    return sgn * sum;
  }
  // a_k = prod_{m=1..k} (4 - (2m-1)^2) / (k! 8^k x^k); P takes even k, Q odd k
  double p = 0, q = 0, a = 1, prev = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 60; ++k) {
    if (k > 0) a *= (4.0 - double((2 * k - 1) * (2 * k - 1))) / (double(k) * 8.0 * ax);
    if (std::abs(a) > prev) break;  // asymptotic series: stop at the smallest term
    prev = std::abs(a);
    double sign = ((k / 2) % 2 == 0) ? 1.0 : -1.0;
    (k % 2 == 0 ? p : q) += sign * a;
    if (std::abs(a) < 1e-17) break;
  }
  const double chi = ax - 0.75 * pi;
  return sgn * std::sqrt(2.0 / (pi * ax)) * (p * std::cos(chi) - q * std::sin(chi));
}

// Orthonormal Hermite function h_n(t) = 2^{1/4} (2^n n!)^{-1/2} H_n(sqrt(2 pi) t) e^{-pi t^2}.
inline double hermite_function(int n, double t) {
  const double u = std::sqrt(2.0 * pi) * t;
  double h0 = std::pow(2.0, 0.25) * std::exp(-pi * t * t);
  if (n == 0) return h0;
  double h1 = std::sqrt(2.0) * u * h0;
  for (int m = 1; m < n; ++m) {
    double h2 = std::sqrt(2.0 / double(m + 1)) * u * h1 - std::sqrt(double(m) / double(m + 1)) * h0;
    h0 = h1;
    h1 = h2;
  }
  return h1;
}

inline double airy_disk(double a, double r) {
  if (r < 1e-6 / a) {
    double s = 1.0 - std::pow(2.0 * pi * a * r, 2) / 8.0;
    return pi * pi * std::pow(a, 4) * s * s;
  }
  double v = a * bessel_j1(2.0 * pi * r * a) / r;
  return v * v;
}

struct GaussianWindow {
  CMat A;
  CVec nu;
  cdouble prefactor{1.0};
};
struct HermiteWindow {
  std::vector<int> k;
};
struct AiryWindow {
  double a;
};
struct BandlimitedWindow {
  GridField spectrum;
};
struct TabulatedWindow {
  GridField samples;
};

// chi(t) = offset + cos(2 pi t_0 / period), nonvanishing for |offset| > 1
struct PeriodicFactor {
  double period;
  double offset;
  double operator()(const Vec& t) const { return offset + std::cos(2 * pi * t(0) / period); }
};

class WindowSpec {
 public:
  using Family = std::variant<GaussianWindow, HermiteWindow, AiryWindow, BandlimitedWindow, TabulatedWindow>;

  static WindowSpec gaussian(CMat A, CVec nu, cdouble prefactor = 1.0) {
    require_dim(A.rows(), A.cols(), "gaussian A");
    require_dim(A.rows(), nu.size(), "gaussian nu");
    if ((A - A.adjoint()).norm() > 1e-12 * std::max(1.0, A.norm()))
      throw Error(ErrorCode::BadWindow, "gaussian A must be Hermitian");
    Eigen::LLT<Mat> llt(A.real());
    if (llt.info() != Eigen::Success) throw Error(ErrorCode::BadWindow, "Re A must be positive definite");
    // ||A + A^T||_1 as an induced (max column sum) norm
    double beta = (A + A.transpose()).cwiseAbs().colwise().sum().maxCoeff();
    int d = static_cast<int>(A.rows());
    return WindowSpec(d, GaussianWindow{std::move(A), std::move(nu), prefactor}, 0.0, beta);
  }
  // exp(-pi a ||t||^2)
  static WindowSpec gaussian_isotropic(int d, double a) {
    return gaussian(CMat::Identity(d, d) * cdouble(pi * a), CVec::Zero(d));
  }
  // exp(-z^T A z + z^T b + c), folded into nu and a prefactor.
  static WindowSpec gaussian_from_exponent(const CMat& A, const CVec& b, cdouble c) {
    CMat S = A + A.transpose();
    CVec nu = S.fullPivLu().solve(b);
    cdouble quad = (nu.transpose() * A * nu)(0, 0);
    return gaussian(A, nu, std::exp(c + quad));
  }
  static WindowSpec hermite(std::vector<int> k) {
    if (k.empty()) throw Error(ErrorCode::DimError, "hermite needs a multi-index");
    for (int v : k)
      if (v < 0) throw Error(ErrorCode::BadWindow, "hermite index must be nonnegative");
    int d = static_cast<int>(k.size());
    return WindowSpec(d, HermiteWindow{std::move(k)}, 0.0, 2.0 * pi);
  }
  static WindowSpec airy(double a, int d = 2) {
    if (d != 2) throw Error(ErrorCode::DimError, "airy window is two-dimensional");
    if (!(a > 0)) throw Error(ErrorCode::BadWindow, "airy radius must be positive");
    return WindowSpec(2, AiryWindow{a}, 4.0 * pi * a, 0.0);
  }
  static WindowSpec tabulated(GridField samples, std::optional<double> alpha = {}, std::optional<double> beta = {}) {
    int d = samples.dim();
    if (samples.energy() == 0) throw Error(ErrorCode::ZeroWindow, "tabulated window is zero");
    return WindowSpec(d, TabulatedWindow{std::move(samples)}, alpha, beta);
  }

  int dim() const { return dim_; }
  const Family& family() const { return family_; }
  std::optional<double> alpha() const { return alpha_; }
  std::optional<double> beta() const { return beta_; }
  cdouble scale() const { return scale_; }
  bool is_gaussian() const { return std::holds_alternative<GaussianWindow>(family_); }
  std::string family_name() const {
    static const char* names[] = {"gaussian", "hermite", "airy", "bandlimited", "tabulated"};
    return names[family_.index()];
  }

  WindowSpec scaled(cdouble c) const {
    WindowSpec w = *this;
    w.scale_ *= c;
    return w;
  }

  // g(t) (offset + cos(2 pi t_0 / period)); the factor stays visible to recovery.
  WindowSpec with_periodic_factor(double period, double offset) const {
    if (!(period > 0)) throw Error(ErrorCode::BadWindow, "period must be positive");
    if (!(std::abs(offset) > 1)) throw Error(ErrorCode::BadWindow, "periodic factor must not vanish: |offset| > 1");
    if (factor_) throw Error(ErrorCode::BadWindow, "window already carries a periodic factor");
    WindowSpec w = *this;
    w.factor_ = PeriodicFactor{period, offset};
    return w;
  }
  const std::optional<PeriodicFactor>& periodic_factor() const { return factor_; }
  WindowSpec without_periodic_factor() const {
    WindowSpec w = *this;
    w.factor_.reset();
    return w;
  }

  cdouble operator()(const Vec& t) const {
    require_dim(t.size(), dim_, "eval_window");
    cdouble v = scale_ * std::visit([&](const auto& f) { return eval(f, t); }, family_);
    return factor_ ? v * (*factor_)(t) : v;
  }

  std::vector<cdouble> eval(const std::vector<Vec>& pts) const {
    std::vector<cdouble> out;
    out.reserve(pts.size());
    for (const auto& p : pts) out.push_back((*this)(p));
    return out;
  }

 private:
  friend WindowSpec synth_bandlimited(GridField spectrum);

  WindowSpec(int d, Family f, std::optional<double> alpha, std::optional<double> beta)
      : dim_(d), family_(std::move(f)), alpha_(alpha), beta_(beta) {}

  static cdouble eval(const GaussianWindow& g, const Vec& t) {
    CVec x = t.cast<cdouble>() - g.nu;
    return g.prefactor * std::exp(-(x.transpose() * g.A * x)(0, 0));
  }
  static cdouble eval(const HermiteWindow& h, const Vec& t) {
    double v = 1;
    for (std::size_t j = 0; j < h.k.size(); ++j) v *= hermite_function(h.k[j], t(j));
    return v;
  }
  static cdouble eval(const AiryWindow& a, const Vec& t) { return airy_disk(a.a, t.norm()); }
  static cdouble eval(const BandlimitedWindow& b, const Vec& t) {
    // trapezoid rule for the inverse transform of the stored spectrum
    const auto& g = b.spectrum.geom;
    cdouble s = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const auto& v = b.spectrum.values[i];
      if (v == cdouble(0)) continue;
      IVec idx = g.unflatten(i);
      double w = 1, phase = 0;
      for (int j = 0; j < g.dim(); ++j) {
        if (g.shape[j] > 1 && (idx[j] == 0 || idx[j] == g.shape[j] - 1)) w *= 0.5;
        phase += (g.origin(j) + double(idx[j]) * g.spacing(j)) * t(j);
      }
      s += w * v * std::polar(1.0, 2.0 * pi * phase);
    }
    return s * g.cell_volume();
  }
  static cdouble eval(const TabulatedWindow& tw, const Vec& t) {
    // exact at nodes, multilinear between them, zero outside the table
    const auto& g = tw.samples.geom;
    IVec base(g.dim());
    std::vector<double> frac(g.dim());
    for (int j = 0; j < g.dim(); ++j) {
      double u = (t(j) - g.origin(j)) / g.spacing(j);
      double r = std::round(u);
      if (std::abs(u - r) <= 1e-9) u = r;
      if (u < 0 || u > double(g.shape[j] - 1)) return 0.0;
      double fl = std::min(std::floor(u), double(std::max<std::int64_t>(g.shape[j] - 2, 0)));
      base[j] = static_cast<std::int64_t>(fl);
      frac[j] = u - fl;
    }
    cdouble s = 0;
    for (unsigned mask = 0; mask < (1u << g.dim()); ++mask) {
      double w = 1;
      IVec idx = base;
      for (int j = 0; j < g.dim(); ++j) {
        bool up = (mask >> j) & 1u;
        w *= up ? frac[j] : 1.0 - frac[j];
        idx[j] += up;
      }
      if (w == 0) continue;
      s += w * tw.samples.values[g.flatten(idx)];
    }
    return s;
  }

  int dim_;
  Family family_;
  std::optional<double> alpha_, beta_;
  cdouble scale_{1.0};
  std::optional<PeriodicFactor> factor_;
};

inline WindowSpec synth_bandlimited(GridField spectrum) {
  if (spectrum.energy() == 0) throw Error(ErrorCode::ZeroWindow, "spectrum has no energy");
  CompactBox s = spectrum.support_box();
  double r = std::max(s.lo().cwiseAbs().maxCoeff(), s.hi().cwiseAbs().maxCoeff());
  int d = spectrum.dim();
  return WindowSpec(d, BandlimitedWindow{std::move(spectrum)}, 2.0 * pi * r, 0.0);
}

inline GridField tabulate(const WindowSpec& w, const GridGeometry& g) {
  require_dim(w.dim(), g.dim(), "tabulate");
  return GridField::sample(g, [&](const Vec& t) { return w(t); });
}

// Samples of g(t - omega) conj(g(t)).
inline GridField window_product(const WindowSpec& w, const Vec& omega, const GridGeometry& g) {
  require_dim(w.dim(), omega.size(), "window_product");
  return GridField::sample(g, [&](const Vec& t) { return w(t - omega) * std::conj(w(t)); });
}

inline double class_sigma(const WindowSpec& w, const CompactBox& K) {
  require_dim(w.dim(), K.dim(), "class_sigma");
  if (!w.alpha() || !w.beta()) throw Error(ErrorCode::MissingClassData, "window has no (alpha, beta) metadata");
  return 2.0 * *w.alpha() + *w.beta() * K.diam_inf();
}

// Max over random z, lambda in [-2,2]^d of
// |phi(z+l) - phi(z) phi(l) e^{-2 z^T A l} / phi(0)| / |phi(z+l)|, phi(z) = e^{-(z-nu)^T A (z-nu)}.
inline double gaussian_factorization_check(const Mat& A, const Vec& nu, int trials, std::uint64_t seed = 1) {
  require_dim(A.rows(), A.cols(), "factorization A");
  require_dim(A.rows(), nu.size(), "factorization nu");
  const auto d = A.rows();
  auto phi = [&](const Vec& z) {
    Vec x = z - nu;
    return std::exp(-x.dot(A * x));
  };
  Rng rng(seed);
  double worst = 0;
  for (int i = 0; i < trials; ++i) {
    Vec z(d), l(d);
    for (Eigen::Index j = 0; j < d; ++j) z(j) = rng.uniform(-2, 2);
    for (Eigen::Index j = 0; j < d; ++j) l(j) = rng.uniform(-2, 2);
    double lhs = phi(z + l);
    double rhs = phi(z) * phi(l) * std::exp(-2.0 * z.dot(A * l)) / phi(Vec::Zero(d));
    worst = std::max(worst, std::abs(lhs - rhs) / std::abs(lhs));
  }
  return worst;
}

// ---- JSON ----

namespace detail {
inline nlohmann::json cplx(cdouble z) { return {z.real(), z.imag()}; }
inline cdouble cplx_from(const nlohmann::json& j) {
  if (j.is_number()) return j.get<double>();
  return {j.at(0).get<double>(), j.at(1).get<double>()};
}
}  // namespace detail

inline nlohmann::json field_to_json(const GridField& f) {
  nlohmann::json j = to_json(f.geom);
  nlohmann::json vals = nlohmann::json::array();
  for (const auto& v : f.values) vals.push_back(detail::cplx(v));
  j["values"] = vals;
  return j;
}

inline GridField field_from_json(const nlohmann::json& j) {
  GridField f(grid_from_json(j));
  const auto& vals = j.at("values");
  if (vals.size() != f.size()) throw Error(ErrorCode::ParseError, "field values length");
  for (std::size_t i = 0; i < f.size(); ++i) f.values[i] = detail::cplx_from(vals[i]);
  return f;
}

inline nlohmann::json to_json(const WindowSpec& w) {
  nlohmann::json j = std::visit(
      [&](const auto& f) -> nlohmann::json {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, GaussianWindow>) {
          nlohmann::json A = nlohmann::json::array(), nu = nlohmann::json::array();
          for (Eigen::Index r = 0; r < f.A.rows(); ++r) {
            nlohmann::json row = nlohmann::json::array();
            for (Eigen::Index c = 0; c < f.A.cols(); ++c) row.push_back(detail::cplx(f.A(r, c)));
            A.push_back(row);
            nu.push_back(detail::cplx(f.nu(r)));
          }
          return {{"family", "gaussian"}, {"A", A}, {"nu", nu}, {"prefactor", detail::cplx(f.prefactor)}};
        } else if constexpr (std::is_same_v<T, HermiteWindow>) {
          return {{"family", "hermite"}, {"k", f.k}};
        } else if constexpr (std::is_same_v<T, AiryWindow>) {
          return {{"family", "airy"}, {"a", f.a}};
        } else if constexpr (std::is_same_v<T, BandlimitedWindow>) {
          return {{"family", "bandlimited"}, {"spectrum", field_to_json(f.spectrum)}};
        } else {
          return {{"family", "tabulated"}, {"samples", field_to_json(f.samples)}};
        }
      },
      w.family());
  j["dim"] = w.dim();
  if (w.alpha()) j["alpha"] = *w.alpha();
  if (w.beta()) j["beta"] = *w.beta();
  if (w.scale() != cdouble(1)) j["scale"] = detail::cplx(w.scale());
  if (const auto& pf = w.periodic_factor()) j["periodic_multiplier"] = {{"period", pf->period}, {"offset", pf->offset}};
  return j;
}

inline WindowSpec window_from_json(const nlohmann::json& j) {
  auto fam = j.at("family").get<std::string>();
  std::optional<WindowSpec> w;
  if (fam == "gaussian") {
    if (j.contains("a")) {
      w = WindowSpec::gaussian_isotropic(j.value("dim", 1), j.at("a").get<double>());
    } else {
      const auto& A = j.at("A");
      auto d = static_cast<Eigen::Index>(A.size());
      CMat m(d, d);
      CVec nu = CVec::Zero(d);
      for (Eigen::Index r = 0; r < d; ++r)
        for (Eigen::Index c = 0; c < d; ++c) m(r, c) = detail::cplx_from(A.at(r).at(c));
      if (j.contains("nu"))
        for (Eigen::Index r = 0; r < d; ++r) nu(r) = detail::cplx_from(j.at("nu").at(r));
      w = WindowSpec::gaussian(m, nu, j.contains("prefactor") ? detail::cplx_from(j["prefactor"]) : cdouble(1));
    }
  } else if (fam == "hermite") {
    w = WindowSpec::hermite(j.at("k").get<std::vector<int>>());
  } else if (fam == "airy") {
    w = WindowSpec::airy(j.at("a").get<double>(), j.value("dim", 2));
  } else if (fam == "bandlimited") {
    w = synth_bandlimited(field_from_json(j.at("spectrum")));
  } else if (fam == "tabulated") {
    std::optional<double> a, b;
    if (j.contains("alpha")) a = j["alpha"].get<double>();
    if (j.contains("beta")) b = j["beta"].get<double>();
    w = WindowSpec::tabulated(field_from_json(j.at("samples")), a, b);
  } else {
    throw Error(ErrorCode::ParseError, "unknown window family '" + fam + "'");
  }
  if (j.contains("scale")) w = w->scaled(detail::cplx_from(j["scale"]));
  if (j.contains("periodic_multiplier")) {
    const auto& pm = j["periodic_multiplier"];
    w = w->with_periodic_factor(pm.at("period").get<double>(), pm.value("offset", 2.0));
  }
  return *w;
}

}  // namespace phaseless
