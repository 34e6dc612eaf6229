#pragma once

#include <phaseless/phaseless.hpp>

namespace fixtures {

using namespace phaseless;

inline Vec v1(double x) { return Vec::Constant(1, x); }

// d = 1, K = [-1, 1], h = 2^-6, Gaussian window, Lambda = 0.25 Z, Gamma = 0.2 Z.
struct Headline {
  CompactBox K = CompactBox::cube(1, 1);
  WindowSpec w = WindowSpec::gaussian_isotropic(1, 1);
  CountableSet lam = CountableSet::lattice(Lattice::scaled(1, 0.25));
  Lattice gamma = Lattice::scaled(1, 0.2);
  std::size_t horizon = 17;
  RecoveryConfig cfg = RecoveryConfig::over(CompactBox::cube(1, 1), 1.0 / 64);

  Headline() { cfg.svd_tol = 1e-10; }

  GridField bump(double center = 0.2, double width = 0.8, cdouble amp = {1, 0.3}, double ramp = 0) const {
    return GridField::sample(cfg.signal_grid, [&](const Vec& t) {
      return amp * std::exp(-pi * std::pow((t(0) - center) / width, 2)) * detail::unit_phase(ramp * t(0));
    });
  }
  SpectrogramSamples sample(const GridField& f) const {
    return sample_spectrogram(f, w, lam, gamma, horizon, K);
  }
  RecoveryReport run(const GridField& f) const {
    return recover(sample(f), cfg, &f);
  }
};

// Exact slices f_w(t) = f(t - w) conj(f(t)) on the omega grid.
inline std::vector<GridField> exact_slices(const GridField& f, const RecoveryConfig& cfg) {
  const GridGeometry& g = cfg.signal_grid;
  const GridGeometry og = cfg.omega_grid();
  std::vector<GridField> out;
  for (std::size_t q = 0; q < og.size(); ++q) {
    GridField s(g);
    const Vec om = og.node(q);
    for (std::size_t i = 0; i < g.size(); ++i) {
      IVec b;
      if (g.snap(g.node(i) - om, b)) s.values[i] = f.values[g.flatten(b)] * std::conj(f.values[i]);
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace fixtures
