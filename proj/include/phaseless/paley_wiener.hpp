#pragma once

#include "transforms.hpp"

namespace phaseless {

inline double sinc(double x) {
  if (std::abs(x) < 1e-8) return 1.0 - (pi * x) * (pi * x) / 6.0;
  return std::sin(pi * x) / (pi * x);
}

// sum_n sinc(x - nL) for integer L, symmetric partial sums.
inline double periodic_sinc(double x, std::int64_t L) {
  const double Ld = double(L);
  x -= Ld * std::round(x / Ld);
  if (std::abs(x) < 1e-12) return 1.0;
  const double s = std::sin(pi * x) / (Ld * std::sin(pi * x / Ld));
  return (L % 2 == 0) ? s * std::cos(pi * x / Ld) : s;
}

// r(t) = vol(G) int_D e^{2 pi i x.t} dx for a box D; r(0) = 1 when D is a cell of G*.
class ShannonKernel {
 public:
  ShannonKernel(Lattice lattice, CompactBox domain)
      : lattice_(std::move(lattice)), domain_(std::move(domain)), normalization_(lattice_.volume()) {}

  const Lattice& lattice() const { return lattice_; }
  const CompactBox& domain() const { return domain_; }
  double normalization() const { return normalization_; }

  cdouble operator()(const Vec& t) const {
    cdouble v = normalization_;
    for (int j = 0; j < domain_.dim(); ++j) {
      double lo = domain_.lo()(j), hi = domain_.hi()(j), w = hi - lo;
      v *= w * sinc(w * t(j)) * detail::unit_phase(0.5 * (lo + hi) * t(j));
    }
    return v;
  }

  bool centered() const { return (domain_.lo() + domain_.hi()).cwiseAbs().maxCoeff() <= 1e-12 * domain_.diam_inf(); }

 private:
  Lattice lattice_;
  CompactBox domain_;
  double normalization_;
};

inline ShannonKernel shannon_kernel(const Lattice& gamma, const CompactBox& D) {
  require_dim(gamma.dim(), D.dim(), "shannon_kernel");
  if (std::abs(D.volume() * gamma.volume() - 1.0) > 1e-9)
    throw Error(ErrorCode::BadDomain, "vol(D) vol(G) != 1: D is not a cell of the reciprocal lattice");
  ShannonKernel k(gamma, D);
  for (const auto& idx : index_shell(gamma.dim(), 1))
    if (std::abs(k(gamma.point(idx))) > 1e-10)
      throw Error(ErrorCode::BadDomain, "kernel does not vanish on the lattice: D is not a fundamental cell");
  return k;
}

// Kernel for G = diag(c) on the centered cell of G*.
inline ShannonKernel shannon_kernel(const Lattice& gamma) {
  if (!gamma.is_diagonal()) throw Error(ErrorCode::BadDomain, "closed-form kernel needs a diagonal lattice");
  Vec half = gamma.generator().diagonal().cwiseAbs().cwiseInverse() * 0.5;
  return shannon_kernel(gamma, CompactBox(-half, half));
}

// Samples of a function on the lattice points B k, k in `window`.
struct LatticeSamples {
  IndexBox window;
  std::vector<cdouble> values;
};

struct ShannonResult {
  std::vector<cdouble> values;
  double tail_estimate;  // max |sample| on the outermost cell shell used (rapid-decay assumption)
};

// Truncated series over lattice points within `radius` (Euclidean) of each target.
inline ShannonResult shannon_interpolate(const LatticeSamples& s, const ShannonKernel& r, const std::vector<Vec>& targets,
                                         double radius) {
  const Lattice& L = r.lattice();
  const int d = L.dim();
  const double cell = L.generator().colwise().norm().maxCoeff();
  ShannonResult out{std::vector<cdouble>(targets.size(), 0.0), 0.0};
  Vec reach = L.inverse().cwiseAbs() * Vec::Constant(d, radius);
  for (std::size_t q = 0; q < targets.size(); ++q) {
    const Vec& t = targets[q];
    Vec u = L.coords(t);
    IndexBox range{IVec(d), IVec(d)};
    for (int j = 0; j < d; ++j) {
      range.lo[j] = static_cast<std::int64_t>(std::floor(u(j) - reach(j)));
      range.hi[j] = static_cast<std::int64_t>(std::ceil(u(j) + reach(j)));
    }
    cdouble acc = 0;
    for (std::size_t f = 0; f < range.size(); ++f) {
      IVec k = range.at(f);
      Vec p = L.point(k);
      double dist = (p - t).norm();
      if (dist > radius) continue;
      if (!s.window.contains(k)) throw Error(ErrorCode::CoverageError, "samples do not cover the truncation ball");
      std::size_t flat = 0;
      for (int j = 0; j < d; ++j) flat = flat * static_cast<std::size_t>(s.window.hi[j] - s.window.lo[j] + 1) + static_cast<std::size_t>(k[j] - s.window.lo[j]);
      const cdouble v = s.values[flat];
      acc += v * r(t - p);
      if (dist > radius - cell) out.tail_estimate = std::max(out.tail_estimate, std::abs(v));
    }
    out.values[q] = acc;
  }
  return out;
}

// Series with the kernel periodized over P = L_j c_j per axis; exact for
// trigonometric polynomials of degree < L_j/2 sampled over one period.
// Uses L_j consecutive samples starting at window.lo.
inline std::vector<cdouble> shannon_interpolate_periodic(const LatticeSamples& s, const ShannonKernel& r, const IVec& periods,
                                                         const std::vector<Vec>& targets) {
  const Lattice& L = r.lattice();
  if (!L.is_diagonal() || !r.centered()) throw Error(ErrorCode::BadDomain, "periodic series needs a diagonal lattice and centered cell");
  const int d = L.dim();
  require_dim(periods.size(), d, "periodic periods");
  IVec shape = s.window.shape();
  for (int j = 0; j < d; ++j)
    if (shape[j] < periods[j]) throw Error(ErrorCode::CoverageError, "samples do not cover one period");
  std::vector<cdouble> out(targets.size(), 0.0);
  IndexBox one{s.window.lo, s.window.lo};
  for (int j = 0; j < d; ++j) one.hi[j] = one.lo[j] + periods[j] - 1;
  for (std::size_t q = 0; q < targets.size(); ++q) {
    cdouble acc = 0;
    for (std::size_t f = 0; f < one.size(); ++f) {
      IVec k = one.at(f);
      double w = 1;
      std::size_t flat = 0;
      for (int j = 0; j < d; ++j) {
        double c = std::abs(L.generator()(j, j));
        w *= periodic_sinc((targets[q](j) - c * double(k[j])) / c, periods[j]);
        flat = flat * static_cast<std::size_t>(shape[j]) + static_cast<std::size_t>(k[j] - s.window.lo[j]);
      }
      acc += w * s.values[flat];
    }
    out[q] = acc;
  }
  return out;
}

inline GridField bandlimit_project(const GridField& field, const CompactBox& box) {
  require_dim(field.dim(), box.dim(), "bandlimit_project");
  GridField F = cft(field, -1);
  const double tol = 1e-9 * F.geom.spacing.maxCoeff();
  for (std::size_t i = 0; i < F.size(); ++i)
    if (!box.contains(F.geom.node(i), tol)) F.values[i] = 0;
  return cft(F, +1, &field.geom.origin);
}

// f(t) = (t - z0) sinc^2(t), h(t) = (t - conj z0) sinc^2(t): |f| = |h| on R.
inline std::pair<GridField, GridField> zero_flip_pair(cdouble z0, const GridGeometry& g) {
  if (g.dim() != 1) throw Error(ErrorCode::DimError, "zero flip is one-dimensional");
  if (z0.imag() == 0) throw Error(ErrorCode::DegenerateFlip, "real zero: flipping leaves f unchanged");
  auto make = [&](cdouble z) {
    return GridField::sample(g, [&](const Vec& t) {
      double s = sinc(t(0));
      return (t(0) - z) * s * s;
    });
  };
  return {make(z0), make(std::conj(z0))};
}

}  // namespace phaseless
