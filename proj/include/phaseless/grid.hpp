#pragma once

#include "geometry.hpp"

#include <bit>
#include <cstring>
#include <istream>
#include <ostream>

namespace phaseless {

// Regular grid: node(i) = origin + i .* spacing, row-major (last axis fastest).
struct GridGeometry {
  Vec origin;
  Vec spacing;
  IVec shape;

  GridGeometry() = default;
  GridGeometry(Vec o, Vec s, IVec n) : origin(std::move(o)), spacing(std::move(s)), shape(std::move(n)) {
    require_dim(origin.size(), spacing.size(), "GridGeometry");
    require_dim(origin.size(), shape.size(), "GridGeometry");
    for (Eigen::Index j = 0; j < spacing.size(); ++j) {
      if (!(spacing(j) > 0)) throw Error(ErrorCode::BadDomain, "grid spacing must be positive");
      if (shape[j] < 1) throw Error(ErrorCode::BadDomain, "grid shape must be positive");
    }
  }

  // Grid with spacing h covering box exactly (box extents must be multiples of h).
  static GridGeometry over_box(const CompactBox& box, double h) {
    IVec n(box.dim());
    for (int j = 0; j < box.dim(); ++j)
      n[j] = static_cast<std::int64_t>(std::llround((box.hi()(j) - box.lo()(j)) / h)) + 1;
    return GridGeometry(box.lo(), Vec::Constant(box.dim(), h), n);
  }

  int dim() const { return static_cast<int>(shape.size()); }
  std::size_t size() const {
    std::size_t n = 1;
    for (auto s : shape) n *= static_cast<std::size_t>(s);
    return n;
  }
  double cell_volume() const { return spacing.prod(); }

  IVec unflatten(std::size_t flat) const {
    IVec idx(dim());
    for (int j = dim() - 1; j >= 0; --j) {
      idx[j] = static_cast<std::int64_t>(flat % static_cast<std::size_t>(shape[j]));
      flat /= static_cast<std::size_t>(shape[j]);
    }
    return idx;
  }
  std::size_t flatten(const IVec& idx) const {
    std::size_t flat = 0;
    for (int j = 0; j < dim(); ++j) flat = flat * static_cast<std::size_t>(shape[j]) + static_cast<std::size_t>(idx[j]);
    return flat;
  }
  bool in_range(const IVec& idx) const {
    for (int j = 0; j < dim(); ++j)
      if (idx[j] < 0 || idx[j] >= shape[j]) return false;
    return true;
  }
  Vec node(const IVec& idx) const {
    Vec x(dim());
    for (int j = 0; j < dim(); ++j) x(j) = origin(j) + double(idx[j]) * spacing(j);
    return x;
  }
  Vec node(std::size_t flat) const { return node(unflatten(flat)); }
  std::vector<Vec> nodes() const {
    std::vector<Vec> out;
    out.reserve(size());
    for (std::size_t i = 0; i < size(); ++i) out.push_back(node(i));
    return out;
  }

  // Index of the node equal to x within tol*spacing, if any.
  bool snap(const Vec& x, IVec& idx, double tol = 1e-9) const {
    idx.assign(dim(), 0);
    for (int j = 0; j < dim(); ++j) {
      double u = (x(j) - origin(j)) / spacing(j);
      double r = std::round(u);
      if (std::abs(u - r) > tol) return false;
      idx[j] = static_cast<std::int64_t>(r);
    }
    return in_range(idx);
  }

  CompactBox support_box() const {
    Vec hi(dim());
    for (int j = 0; j < dim(); ++j) hi(j) = origin(j) + double(std::max<std::int64_t>(shape[j] - 1, 1)) * spacing(j);
    return CompactBox(origin, hi);
  }

  bool same_as(const GridGeometry& o, double tol = 1e-12) const {
    return shape == o.shape && (origin - o.origin).cwiseAbs().maxCoeff() <= tol &&
           (spacing - o.spacing).cwiseAbs().maxCoeff() <= tol;
  }
};

struct GridField {
  GridGeometry geom;
  std::vector<cdouble> values;

  GridField() = default;
  explicit GridField(GridGeometry g) : geom(std::move(g)), values(geom.size(), cdouble(0)) {}
  GridField(GridGeometry g, std::vector<cdouble> v) : geom(std::move(g)), values(std::move(v)) {
    if (values.size() != geom.size()) throw Error(ErrorCode::DimError, "values length != prod(shape)");
  }

  template <class Fn>
  static GridField sample(const GridGeometry& g, Fn&& fn) {
    GridField out(g);
    for (std::size_t i = 0; i < g.size(); ++i) out.values[i] = fn(g.node(i));
    return out;
  }

  int dim() const { return geom.dim(); }
  std::size_t size() const { return values.size(); }
  CompactBox support_box() const { return geom.support_box(); }

  double energy() const {
    double e = 0;
    for (const auto& v : values) e += std::norm(v);
    return e * geom.cell_volume();
  }
  double norm() const { return std::sqrt(energy()); }
  double max_abs() const {
    double m = 0;
    for (const auto& v : values) m = std::max(m, std::abs(v));
    return m;
  }
  // Riemann inner product <this, other> = sum this * conj(other) * dV.
  cdouble inner(const GridField& o) const {
    if (!geom.same_as(o.geom)) throw Error(ErrorCode::DimError, "inner product on different grids");
    cdouble s = 0;
    for (std::size_t i = 0; i < size(); ++i) s += values[i] * std::conj(o.values[i]);
    return s * geom.cell_volume();
  }

  GridField operator*(cdouble c) const {
    GridField out = *this;
    for (auto& v : out.values) v *= c;
    return out;
  }
};

// min over unit tau of ||est - tau*truth|| / ||truth||, tau = phase of <est, truth>.
inline double aligned_error(const GridField& est, const GridField& truth) {
  cdouble ip = est.inner(truth);
  cdouble tau = std::abs(ip) > 0 ? ip / std::abs(ip) : cdouble(1);
  double num = 0, den = 0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    num += std::norm(est.values[i] - tau * truth.values[i]);
    den += std::norm(truth.values[i]);
  }
  if (den == 0) throw Error(ErrorCode::ZeroSignal, "aligned_error against a zero field");
  return std::sqrt(num / den);
}

// ---- GFLD1 ----

inline nlohmann::json to_json(const GridGeometry& g) {
  return {{"dim", g.dim()}, {"origin", vec_to_json(g.origin)}, {"spacing", vec_to_json(g.spacing)}, {"shape", g.shape}};
}

inline GridGeometry grid_from_json(const nlohmann::json& j) {
  GridGeometry g(vec_from_json(j.at("origin")), vec_from_json(j.at("spacing")), j.at("shape").get<IVec>());
  if (j.contains("dim") && j.at("dim").get<int>() != g.dim()) throw Error(ErrorCode::DimError, "grid dim mismatch");
  return g;
}

namespace detail {
inline void put_le(std::ostream& os, double x) {
  auto u = std::bit_cast<std::uint64_t>(x);
  if constexpr (std::endian::native == std::endian::big) u = __builtin_bswap64(u);
  char b[8];
  std::memcpy(b, &u, 8);
  os.write(b, 8);
}
inline double get_le(std::istream& is) {
  char b[8];
  if (!is.read(b, 8)) throw Error(ErrorCode::ParseError, "GFLD1 payload truncated");
  std::uint64_t u;
  std::memcpy(&u, b, 8);
  if constexpr (std::endian::native == std::endian::big) u = __builtin_bswap64(u);
  return std::bit_cast<double>(u);
}
}  // namespace detail

inline void write_gfld(std::ostream& os, const GridField& f) {
  nlohmann::json h = to_json(f.geom);
  h["magic"] = "GFLD1";
  h["dtype"] = "c128";
  os << h.dump() << '\n';
  for (const auto& v : f.values) {
    detail::put_le(os, v.real());
    detail::put_le(os, v.imag());
  }
}

inline GridField read_gfld(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw Error(ErrorCode::ParseError, "GFLD1 header missing");
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("GFLD1 header: ") + e.what());
  }
  if (h.value("magic", "") != "GFLD1" || h.value("dtype", "") != "c128")
    throw Error(ErrorCode::ParseError, "not a GFLD1/c128 file");
  GridField f(grid_from_json(h));
  for (auto& v : f.values) {
    double re = detail::get_le(is);
    v = cdouble(re, detail::get_le(is));
  }
  return f;
}

}  // namespace phaseless
