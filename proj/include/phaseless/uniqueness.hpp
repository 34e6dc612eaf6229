#pragma once

#include "windows.hpp"

#include <sstream>

namespace phaseless {

enum class GateKind { carlson, ronkin, zalik, gaussian_semigroup, gamma_cell };

inline const char* to_string(GateKind g) {
  switch (g) {
    case GateKind::carlson: return "carlson";
    case GateKind::ronkin: return "ronkin";
    case GateKind::zalik: return "zalik";
    case GateKind::gaussian_semigroup: return "gaussian_semigroup";
    case GateKind::gamma_cell: return "gamma_cell";
  }
  return "unknown";
}

struct GateReport {
  GateKind gate;
  bool pass;
  double margin;  // +inf for gates without an inequality
  std::string details;
};

inline GateReport carlson_gate(double spacing, double sigma) {
  double margin = pi - spacing * sigma;
  std::ostringstream os;
  os << "spacing*sigma = " << spacing * sigma << " vs pi";
  return {GateKind::carlson, margin > 0, margin, os.str()};
}

inline double ronkin_constant(int d) {
  if (d < 1) throw Error(ErrorCode::DimError, "ronkin_constant needs d >= 1");
  const double e = std::numbers::e;
  double sum = 0;
  for (int k = 0; k <= d - 2; ++k) sum += std::pow(29.0 / 3.0, d - 2 - k) * (13.0 * k / 3.0 + 25.0 * e / 3.0);
  return 2.0 / std::tgamma(d + 1.0) * std::pow(pi / 2.0, d - 1) / ((d - 1) / 2.0 + e + sum);
}

inline GateReport ronkin_gate(const CountableSet& set, double sigma, std::size_t horizon, double radius) {
  const double delta = separation(set, horizon);
  if (!(delta > 0)) throw Error(ErrorCode::NotSeparated, "set is not separated");
  double dens[3];
  for (int i = 0; i < 3; ++i) dens[i] = cube_density_estimate(set, radius * double(1 << i));
  double dplus = std::max({dens[0], dens[1], dens[2]});
  const int d = set.dim();
  double threshold = ronkin_constant(d) * std::pow(delta, d - 1) * dplus;
  std::ostringstream os;
  os << "A_d=" << ronkin_constant(d) << " delta=" << delta << " D+~" << dplus << " (estimate at radii " << radius
     << "," << 2 * radius << "," << 4 * radius << ")";
  if (!(dens[0] <= dens[1] && dens[1] <= dens[2]) && !(dens[0] >= dens[1] && dens[1] >= dens[2]))
    os << "; warning: density estimates not monotone in radius";
  double margin = threshold - sigma;
  return {GateKind::ronkin, margin > 0, margin, os.str()};
}

inline constexpr std::size_t kZalikHorizon = 1000000;

inline GateReport zalik_classify(const CountableSet& set) {
  auto partial = [&](std::size_t n) {
    double s = 0;
    for (const auto& p : set.enumerate(n))
      if (p.norm() > 0) s += 1.0 / p.norm();
    return s;
  };
  const double inf = std::numeric_limits<double>::infinity();
  std::ostringstream os;
  bool pass = false;
  std::visit(
      [&](const auto& k) {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Lattice>) {
          if (set.dim() != 1) throw Error(ErrorCode::Unclassifiable, "zalik classification covers d = 1 only");
          pass = true;
          os << "lattice: harmonic divergence";
        } else if constexpr (std::is_same_v<T, ArithmeticSet>) {
          pass = true;
          os << "arithmetic: harmonic divergence";
        } else if constexpr (std::is_same_v<T, GeometricSet>) {
          pass = false;
          os << "geometric: convergent series";
        } else if constexpr (std::is_same_v<T, PrimeSet>) {
          pass = true;
          os << "primes: sum of 1/p diverges";
        } else {
          if (set.dim() != 1) throw Error(ErrorCode::Unclassifiable, "zalik classification covers d = 1 only");
          pass = false;
          os << "explicit finite set: finite sum";
        }
      },
      set.kind());
  std::size_t n = std::min(kZalikHorizon, set.explicit_size());
  os << "; partial sum over " << n << " points = " << partial(n) << " (evidence only)";
  return {GateKind::zalik, pass, pass ? inf : -inf, os.str()};
}

struct LambdaGateOptions {
  std::size_t ronkin_horizon = 200;
  double ronkin_radius = 50.0;
};

// Largest per-axis step t_j with t_j e_j in the lattice, or nullopt.
inline std::optional<double> axis_spacing(const Lattice& lat) {
  const int d = lat.dim();
  double spacing = 0;
  for (int j = 0; j < d; ++j) {
    Vec v = lat.inverse().col(j);
    double vmax = v.cwiseAbs().maxCoeff();
    std::optional<double> t;
    for (int n = 1; n <= 1000 && !t; ++n) {
      double cand = double(n) / vmax;
      Vec u = cand * v;
      if ((u - u.array().round().matrix()).cwiseAbs().maxCoeff() < 1e-9) t = cand;
    }
    if (!t) return std::nullopt;
    spacing = std::max(spacing, *t);
  }
  return spacing;
}

namespace detail {
inline bool factor_is_periodic_on(const PeriodicFactor& pf, const Lattice& lat) {
  for (Eigen::Index c = 0; c < lat.generator().cols(); ++c) {
    double q = lat.generator()(0, c) / pf.period;
    if (std::abs(q - std::round(q)) > 1e-9 * std::max(1.0, std::abs(q))) return false;
  }
  return true;
}
}  // namespace detail

inline GateReport lambda_gate(const WindowSpec& w, const CompactBox& K, const CountableSet& lam,
                              const LambdaGateOptions& opt = {}) {
  require_dim(w.dim(), K.dim(), "lambda_gate");
  require_dim(w.dim(), lam.dim(), "lambda_gate");
  if (const auto& pf = w.periodic_factor()) {
    // a Lambda-periodic nonvanishing factor leaves the translate systems injective iff they were
    if (!lam.is_lattice() || !detail::factor_is_periodic_on(*pf, lam.as_lattice()))
      throw Error(ErrorCode::MissingClassData, "periodic factor is not Lambda-periodic: no class data for the product");
    GateReport r = lambda_gate(w.without_periodic_factor(), K, lam, opt);
    r.details += "; Lambda-periodic factor divided out";
    return r;
  }
  if (w.is_gaussian()) {
    if (lam.is_lattice())
      return {GateKind::gaussian_semigroup, true, std::numeric_limits<double>::infinity(),
              "gaussian window with lattice translates: complete for any lattice"};
    if (lam.dim() == 1) return zalik_classify(lam);
  }
  const double sigma = class_sigma(w, K);
  if (lam.is_lattice()) {
    auto sp = axis_spacing(lam.as_lattice());
    if (!sp)
      return {GateKind::carlson, false, -std::numeric_limits<double>::infinity(),
              "no axis-aligned sublattice found; Carlson not applicable"};
    GateReport r = carlson_gate(*sp, sigma);
    r.details += "; sigma = " + std::to_string(sigma);
    return r;
  }
  return ronkin_gate(lam, sigma, opt.ronkin_horizon, opt.ronkin_radius);
}

inline GateReport gamma_gate(const CompactBox& K, const Lattice& gamma) {
  require_dim(K.dim(), gamma.dim(), "gamma_gate");
  Lattice dual = reciprocal(gamma);
  double margin = cell_slack(dual, K.difference()) - kCellTolerance;
  std::ostringstream os;
  os << "K-K in centered cell of the reciprocal lattice: corner slack " << margin + kCellTolerance;
  return {GateKind::gamma_cell, margin > 0, margin, os.str()};
}

inline nlohmann::json to_json(const GateReport& g) {
  nlohmann::json m;
  if (std::isfinite(g.margin)) m = g.margin;
  else m = g.margin > 0 ? "inf" : "-inf";
  return {{"gate", to_string(g.gate)}, {"pass", g.pass}, {"margin", m}, {"details", g.details}};
}

}  // namespace phaseless
