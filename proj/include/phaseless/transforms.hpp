#pragma once

// Fourier convention: Ff(w) = int f(t) e^{-2 pi i w.t} dt.
// STFT: V_g f(x, w) = int f(t) conj(g(t - x)) e^{-2 pi i w.t} dt.

#include "windows.hpp"

#include <unsupported/Eigen/FFT>

namespace phaseless {

namespace detail {

inline cdouble unit_phase(double cycles) { return std::polar(1.0, 2.0 * pi * (cycles - std::round(cycles))); }

// Apply fn(line) to every 1-D line of a row-major array along `axis`.
template <class Fn>
void for_each_line(std::vector<cdouble>& data, const IVec& shape, int axis, Fn&& fn) {
  std::size_t n = static_cast<std::size_t>(shape[axis]);
  std::size_t inner = 1, outer = 1;
  for (int j = axis + 1; j < int(shape.size()); ++j) inner *= static_cast<std::size_t>(shape[j]);
  for (int j = 0; j < axis; ++j) outer *= static_cast<std::size_t>(shape[j]);
  std::vector<cdouble> line(n);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t i = 0; i < inner; ++i) {
      std::size_t base = o * n * inner + i;
      for (std::size_t k = 0; k < n; ++k) line[k] = data[base + k * inner];
      fn(line);
      for (std::size_t k = 0; k < n; ++k) data[base + k * inner] = line[k];
    }
}

// Linear map along one axis: out_line = W * in_line, W is m x n.
inline std::vector<cdouble> apply_axis(const std::vector<cdouble>& data, const IVec& shape, int axis,
                                       const CMat& W, IVec& out_shape) {
  out_shape = shape;
  out_shape[axis] = W.rows();
  std::size_t n = static_cast<std::size_t>(shape[axis]), m = static_cast<std::size_t>(W.rows());
  std::size_t inner = 1, outer = 1;
  for (int j = axis + 1; j < int(shape.size()); ++j) inner *= static_cast<std::size_t>(shape[j]);
  for (int j = 0; j < axis; ++j) outer *= static_cast<std::size_t>(shape[j]);
  std::vector<cdouble> out(outer * m * inner);
  CVec line(n);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t i = 0; i < inner; ++i) {
      for (std::size_t k = 0; k < n; ++k) line(k) = data[o * n * inner + i + k * inner];
      CVec r = W * line;
      for (std::size_t k = 0; k < m; ++k) out[o * m * inner + i + k * inner] = r(k);
    }
  return out;
}

}  // namespace detail

// Frequency grid of cft: spacing 1/(n dx), nodes (k - floor(n/2)) / (n dx).
inline GridGeometry reciprocal_grid(const GridGeometry& g) {
  Vec o(g.dim()), s(g.dim());
  for (int j = 0; j < g.dim(); ++j) {
    s(j) = 1.0 / (double(g.shape[j]) * g.spacing(j));
    o(j) = -double(g.shape[j] / 2) * s(j);
  }
  return GridGeometry(o, s, g.shape);
}

// Riemann-sum Fourier transform (sign -1 forward, +1 inverse). The output
// grid is reciprocal_grid(field.geom) unless out_origin is given.
inline GridField cft(const GridField& field, int sign, const Vec* out_origin = nullptr) {
  if (sign != 1 && sign != -1) throw Error(ErrorCode::BadDomain, "cft sign must be +-1");
  GridGeometry og = reciprocal_grid(field.geom);
  if (out_origin) {
    require_dim(out_origin->size(), field.dim(), "cft origin");
    og.origin = *out_origin;
  }
  GridField out(og, field.values);
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::Unscaled);
  for (int ax = 0; ax < field.dim(); ++ax) {
    const std::size_t n = static_cast<std::size_t>(field.geom.shape[ax]);
    const double x0 = field.geom.origin(ax), dx = field.geom.spacing(ax);
    const double w0 = og.origin(ax), dw = og.spacing(ax);
    std::vector<cdouble> pre(n), post(n);
    for (std::size_t j = 0; j < n; ++j) pre[j] = detail::unit_phase(sign * w0 * double(j) * dx);
    for (std::size_t k = 0; k < n; ++k) post[k] = dx * detail::unit_phase(sign * (w0 * x0 + double(k) * dw * x0));
    std::vector<cdouble> tmp(n);
    detail::for_each_line(out.values, out.geom.shape, ax, [&](std::vector<cdouble>& line) {
      for (std::size_t j = 0; j < n; ++j) line[j] *= pre[j];
      if (sign < 0) fft.fwd(tmp, line);
      else fft.inv(tmp, line);
      for (std::size_t k = 0; k < n; ++k) line[k] = tmp[k] * post[k];
    });
  }
  return out;
}

// Direct Riemann sum of the transform at arbitrary frequencies.
inline std::vector<cdouble> ft_at(const GridField& field, int sign, const std::vector<Vec>& freqs) {
  std::vector<cdouble> out(freqs.size(), 0.0);
  const double dv = field.geom.cell_volume();
  std::vector<Vec> nodes = field.geom.nodes();
  for (std::size_t q = 0; q < freqs.size(); ++q) {
    cdouble s = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (field.values[i] != cdouble(0)) s += field.values[i] * detail::unit_phase(sign * freqs[q].dot(nodes[i]));
    out[q] = s * dv;
  }
  return out;
}

inline GridField stft_integrand(const GridField& f, const WindowSpec& w, const Vec& x) {
  require_dim(f.dim(), w.dim(), "stft");
  require_dim(f.dim(), x.size(), "stft");
  GridField p(f.geom);
  for (std::size_t i = 0; i < f.size(); ++i)
    if (f.values[i] != cdouble(0)) p.values[i] = f.values[i] * std::conj(w(f.geom.node(i) - x));
  return p;
}

inline std::vector<cdouble> stft_eval(const GridField& f, const WindowSpec& w, const Vec& x, const std::vector<Vec>& omegas) {
  return ft_at(stft_integrand(f, w, x), -1, omegas);
}

// |V_g f(x, .)|^2 on reciprocal_grid(f.geom), FFT path.
inline GridField dense_slice(const GridField& f, const WindowSpec& w, const Vec& x) {
  GridField v = cft(stft_integrand(f, w, x), -1);
  for (auto& z : v.values) z = std::norm(z);
  return v;
}

// ---- spectrogram samples ----

struct IndexBox {
  IVec lo, hi;  // inclusive
  int dim() const { return static_cast<int>(lo.size()); }
  std::size_t size() const {
    std::size_t n = 1;
    for (int j = 0; j < dim(); ++j) n *= static_cast<std::size_t>(hi[j] - lo[j] + 1);
    return n;
  }
  IVec shape() const {
    IVec s(dim());
    for (int j = 0; j < dim(); ++j) s[j] = hi[j] - lo[j] + 1;
    return s;
  }
  IVec at(std::size_t flat) const {
    IVec k(dim());
    for (int j = dim() - 1; j >= 0; --j) {
      auto n = static_cast<std::size_t>(hi[j] - lo[j] + 1);
      k[j] = lo[j] + static_cast<std::int64_t>(flat % n);
      flat /= n;
    }
    return k;
  }
  bool contains(const IVec& k) const {
    for (int j = 0; j < dim(); ++j)
      if (k[j] < lo[j] || k[j] > hi[j]) return false;
    return true;
  }
};

// Indices k with Bk inside one period [-1/(2h), 1/(2h)) of the grid's
// frequency axis (bounding box, half-open per axis), padded by `extra` cells.
inline IndexBox gamma_window_for(const Lattice& gamma, const GridGeometry& g, std::int64_t extra = 0) {
  require_dim(gamma.dim(), g.dim(), "gamma window");
  const int d = g.dim();
  IndexBox box{IVec(d), IVec(d)};
  Vec half(d);
  for (int j = 0; j < d; ++j) half(j) = 0.5 / g.spacing(j);
  if (gamma.is_diagonal()) {
    for (int j = 0; j < d; ++j) {
      double c = std::abs(gamma.generator()(j, j));
      double L = half(j) / c;
      box.lo[j] = static_cast<std::int64_t>(std::ceil(-L - 1e-9)) - extra;
      box.hi[j] = static_cast<std::int64_t>(std::ceil(L - 1e-9)) - 1 + extra;
    }
    return box;
  }
  Vec r = gamma.inverse().cwiseAbs() * half;
  for (int j = 0; j < d; ++j) {
    box.lo[j] = -static_cast<std::int64_t>(std::ceil(r(j))) - extra;
    box.hi[j] = static_cast<std::int64_t>(std::ceil(r(j))) + extra;
  }
  return box;
}

struct SpectrogramSamples {
  CountableSet time_set;
  std::size_t lambda_horizon;
  Lattice freq_lattice;
  IndexBox gamma_window;
  CompactBox support;
  WindowSpec window;
  std::vector<Vec> lambdas;
  std::vector<double> values;  // [lambda][gamma flat], row-major

  std::size_t gamma_count() const { return gamma_window.size(); }
  double at(std::size_t li, std::size_t gi) const { return values[li * gamma_count() + gi]; }
  Vec gamma_point(std::size_t gi) const { return freq_lattice.point(gamma_window.at(gi)); }
  std::vector<double> slice(std::size_t li) const {
    auto b = values.begin() + static_cast<std::ptrdiff_t>(li * gamma_count());
    return {b, b + static_cast<std::ptrdiff_t>(gamma_count())};
  }
};

inline constexpr double kSupportTolerance = 1e-10;

// Relative energy of f at nodes outside K.
inline double energy_outside(const GridField& f, const CompactBox& K) {
  double out = 0, total = 0;
  const double tol = 1e-9 * f.geom.spacing.maxCoeff();
  for (std::size_t i = 0; i < f.size(); ++i) {
    double e = std::norm(f.values[i]);
    total += e;
    if (!K.contains(f.geom.node(i), tol)) out += e;
  }
  return total > 0 ? out / total : 0.0;
}

inline SpectrogramSamples sample_spectrogram(const GridField& f, const WindowSpec& w, const CountableSet& lam,
                                             const Lattice& gamma, std::size_t horizon, const CompactBox& K,
                                             std::optional<IndexBox> gwin = {}, unsigned threads = 0) {
  require_dim(f.dim(), w.dim(), "sample_spectrogram");
  require_dim(f.dim(), lam.dim(), "sample_spectrogram");
  require_dim(f.dim(), gamma.dim(), "sample_spectrogram");
  require_dim(f.dim(), K.dim(), "sample_spectrogram");
  if (energy_outside(f, K) > kSupportTolerance) throw Error(ErrorCode::SupportError, "signal has energy outside K");
  SpectrogramSamples s{lam, horizon, gamma, gwin ? *gwin : gamma_window_for(gamma, f.geom), K, w, lam.enumerate(horizon), {}};
  const std::size_t ng = s.gamma_count();
  std::vector<Vec> gammas;
  for (std::size_t gi = 0; gi < ng; ++gi) gammas.push_back(s.gamma_point(gi));
  s.values.assign(s.lambdas.size() * ng, 0.0);
  parallel_for(s.lambdas.size(), resolve_threads(threads), [&](std::size_t li) {
    auto v = stft_eval(f, w, s.lambdas[li], gammas);
    for (std::size_t gi = 0; gi < ng; ++gi) s.values[li * ng + gi] = std::norm(v[gi]);
  });
  return s;
}

// Max over random on-grid (x, w) with |x_j|, |w_j| <= region of
// |V_g f(x,w) - e^{-2 pi i x.w} V_{Fg} Ff(w, -x)| / (|V_g f(x,w)| + 1e-14).
inline double fiot_residual(const GridField& f, const WindowSpec& w, int trials, std::uint64_t seed = 1, double region = 2.0) {
  const GridField F = cft(f, -1);
  const GridField G = cft(tabulate(w, f.geom), -1);
  const GridGeometry& fg = F.geom;
  auto pick = [&](const GridGeometry& g, Rng& rng, IVec& idx) {
    for (int tries = 0; tries < 100000; ++tries) {
      std::size_t flat = rng.index(g.size());
      Vec p = g.node(flat);
      if (p.cwiseAbs().maxCoeff() <= region) {
        idx = g.unflatten(flat);
        return p;
      }
    }
    throw Error(ErrorCode::BadDomain, "no grid node inside the sampling region");
  };
  Rng rng(seed);
  double worst = 0;
  const double dxi = fg.cell_volume();
  for (int t = 0; t < trials; ++t) {
    IVec xi, wi;
    Vec x = pick(f.geom, rng, xi);
    Vec om = pick(fg, rng, wi);
    cdouble lhs = stft_eval(f, w, x, {om})[0];
    // shift by w on the frequency grid is an index shift (circular)
    IVec off(fg.dim());
    for (int j = 0; j < fg.dim(); ++j) off[j] = wi[j] - fg.shape[j] / 2;
    cdouble acc = 0;
    for (std::size_t k = 0; k < F.size(); ++k) {
      IVec idx = fg.unflatten(k);
      IVec sh(fg.dim());
      for (int j = 0; j < fg.dim(); ++j) sh[j] = ((idx[j] - off[j]) % fg.shape[j] + fg.shape[j]) % fg.shape[j];
      acc += F.values[k] * std::conj(G.values[fg.flatten(sh)]) * detail::unit_phase(x.dot(fg.node(idx)));
    }
    cdouble rhs = detail::unit_phase(-x.dot(om)) * acc * dxi;
    worst = std::max(worst, std::abs(lhs - rhs) / (std::abs(lhs) + 1e-14));
  }
  return worst;
}

}  // namespace phaseless
