#pragma once

#include "core.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <limits>
#include <set>
#include <variant>

namespace phaseless {

inline constexpr double kDetTolerance = 1e-10;   // sigma_min / sigma_max
inline constexpr double kCellTolerance = 1e-12;  // corner slack inside the centered cell

class Lattice {
 public:
  explicit Lattice(Mat generator) : a_(std::move(generator)) {
    if (a_.rows() == 0 || a_.rows() != a_.cols())
      throw Error(ErrorCode::DimError, "lattice generator must be square");
    Eigen::JacobiSVD<Mat> svd(a_);
    const auto& s = svd.singularValues();
    if (!(s(s.size() - 1) > kDetTolerance * s(0)))
      throw Error(ErrorCode::SingularLattice, "generator is numerically singular");
    inv_ = a_.inverse();
  }

  static Lattice scaled(int d, double s) { return Lattice(s * Mat::Identity(d, d)); }

  int dim() const { return static_cast<int>(a_.rows()); }
  const Mat& generator() const { return a_; }
  const Mat& inverse() const { return inv_; }
  double volume() const { return std::abs(a_.determinant()); }
  double density() const { return 1.0 / volume(); }

  bool is_diagonal() const {
    for (int i = 0; i < dim(); ++i)
      for (int j = 0; j < dim(); ++j)
        if (i != j && a_(i, j) != 0.0) return false;
    return true;
  }

  Vec point(const IVec& k) const {
    Vec v = Vec::Zero(dim());
    for (int j = 0; j < dim(); ++j) v += static_cast<double>(k[j]) * a_.col(j);
    return v;
  }

  // Integer coordinates of x in this basis (not rounded).
  Vec coords(const Vec& x) const { return inv_ * x; }

 private:
  Mat a_;
  Mat inv_;
};

inline Lattice reciprocal(const Lattice& lat) { return Lattice(lat.inverse().transpose()); }

class CompactBox {
 public:
  CompactBox(Vec lo, Vec hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
    require_dim(lo_.size(), hi_.size(), "CompactBox");
    if (lo_.size() == 0) throw Error(ErrorCode::DimError, "empty box");
    for (Eigen::Index j = 0; j < lo_.size(); ++j)
      if (!(lo_(j) < hi_(j))) throw Error(ErrorCode::BadDomain, "box needs lo < hi");
  }

  static CompactBox cube(int d, double kappa) {
    return CompactBox(Vec::Constant(d, -kappa), Vec::Constant(d, kappa));
  }

  int dim() const { return static_cast<int>(lo_.size()); }
  const Vec& lo() const { return lo_; }
  const Vec& hi() const { return hi_; }
  double diam_inf() const { return (hi_ - lo_).maxCoeff(); }
  double volume() const { return (hi_ - lo_).prod(); }
  CompactBox difference() const { return CompactBox(lo_ - hi_, hi_ - lo_); }

  bool contains(const Vec& x, double tol = 0.0) const {
    for (int j = 0; j < dim(); ++j)
      if (x(j) < lo_(j) - tol || x(j) > hi_(j) + tol) return false;
    return true;
  }
  bool contains(const CompactBox& b) const { return contains(b.lo_) && contains(b.hi_); }

  std::vector<Vec> corners() const {
    std::vector<Vec> out;
    for (unsigned mask = 0; mask < (1u << dim()); ++mask) {
      Vec c(dim());
      for (int j = 0; j < dim(); ++j) c(j) = (mask >> j) & 1u ? hi_(j) : lo_(j);
      out.push_back(c);
    }
    return out;
  }

 private:
  Vec lo_, hi_;
};

// Smallest distance of the box corners, in cell coordinates, to the boundary
// of the centered cell A[-1/2,1/2)^d. Negative when a corner sticks out.
inline double cell_slack(const Lattice& lat, const CompactBox& box) {
  require_dim(lat.dim(), box.dim(), "cell_slack");
  double slack = std::numeric_limits<double>::infinity();
  for (const Vec& c : box.corners()) {
    Vec u = lat.coords(c);
    for (Eigen::Index j = 0; j < u.size(); ++j) slack = std::min(slack, 0.5 - std::abs(u(j)));
  }
  return slack;
}

inline bool fundamental_domain_contains(const Lattice& lat, const CompactBox& box) {
  return cell_slack(lat, box) >= kCellTolerance;
}

// Integer vectors with max |k_j| == shell, lexicographic order.
inline std::vector<IVec> index_shell(int d, std::int64_t shell) {
  std::vector<IVec> out;
  if (shell == 0) {
    out.emplace_back(d, 0);
    return out;
  }
  IVec k(d, -shell);
  while (true) {
    std::int64_t m = 0;
    for (auto v : k) m = std::max<std::int64_t>(m, std::abs(v));
    if (m == shell) out.push_back(k);
    int j = d - 1;
    while (j >= 0 && k[j] == shell) k[j--] = -shell;
    if (j < 0) break;
    ++k[j];
  }
  return out;
}

namespace detail {

inline std::vector<std::int64_t> primes_upto(std::int64_t n) {
  std::vector<std::int64_t> out;
  if (n < 2) return out;
  std::vector<bool> composite(static_cast<std::size_t>(n + 1), false);
  for (std::int64_t i = 2; i <= n; ++i) {
    if (composite[i]) continue;
    out.push_back(i);
    for (std::int64_t j = i * i; j <= n; j += i) composite[j] = true;
  }
  return out;
}

inline std::vector<std::int64_t> first_primes(std::size_t n) {
  if (n == 0) return {};
  // p_n < n (ln n + ln ln n) for n >= 6
  double x = std::max<double>(static_cast<double>(n), 6.0);
  auto bound = static_cast<std::int64_t>(x * (std::log(x) + std::log(std::log(x)))) + 16;
  auto p = primes_upto(bound);
  p.resize(n);
  return p;
}

}  // namespace detail

struct ArithmeticSet { double a; double b; };
struct GeometricSet { double q; double scale; };
struct PrimeSet { double scale; };
struct ExplicitSet { std::vector<Vec> points; };

class CountableSet {
 public:
  using Kind = std::variant<Lattice, ArithmeticSet, GeometricSet, PrimeSet, ExplicitSet>;

  static CountableSet lattice(Lattice l) {
    int d = l.dim();
    return CountableSet(d, std::move(l));
  }
  static CountableSet arithmetic(double a, double b) {
    if (!(b > 0)) throw Error(ErrorCode::BadDomain, "arithmetic step must be positive");
    return CountableSet(1, ArithmeticSet{a, b});
  }
  static CountableSet geometric(double q, double scale = 1.0) {
    if (!(q > 1) || !(scale > 0)) throw Error(ErrorCode::BadDomain, "geometric needs q > 1, scale > 0");
    return CountableSet(1, GeometricSet{q, scale});
  }
  static CountableSet primes(double scale = 1.0) {
    if (!(scale > 0)) throw Error(ErrorCode::BadDomain, "prime scale must be positive");
    return CountableSet(1, PrimeSet{scale});
  }
  static CountableSet explicit_points(std::vector<Vec> pts) {
    if (pts.empty()) throw Error(ErrorCode::TooFewPoints, "explicit set is empty");
    int d = static_cast<int>(pts.front().size());
    auto less = [](const Vec& x, const Vec& y) {
      return std::lexicographical_compare(x.data(), x.data() + x.size(), y.data(), y.data() + y.size());
    };
    std::set<Vec, decltype(less)> seen(less);
    for (const auto& p : pts) {
      require_dim(p.size(), d, "explicit set");
      if (!seen.insert(p).second) throw Error(ErrorCode::BadDomain, "explicit set has duplicates");
    }
    return CountableSet(d, ExplicitSet{std::move(pts)});
  }

  int dim() const { return dim_; }
  const Kind& kind() const { return kind_; }
  bool is_lattice() const { return std::holds_alternative<Lattice>(kind_); }
  const Lattice& as_lattice() const { return std::get<Lattice>(kind_); }
  std::size_t explicit_size() const {
    if (auto* e = std::get_if<ExplicitSet>(&kind_)) return e->points.size();
    return std::numeric_limits<std::size_t>::max();
  }

  std::vector<Vec> enumerate(std::size_t n) const {
    std::vector<Vec> out;
    out.reserve(n);
    std::visit(
        [&](const auto& k) {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, Lattice>) {
            for (std::int64_t s = 0; out.size() < n; ++s)
              for (const auto& idx : index_shell(dim_, s)) {
                if (out.size() == n) break;
                out.push_back(k.point(idx));
              }
          } else if constexpr (std::is_same_v<T, ArithmeticSet>) {
            for (std::size_t i = 0; i < n; ++i) out.push_back(Vec::Constant(1, k.a + k.b * double(i)));
          } else if constexpr (std::is_same_v<T, GeometricSet>) {
            for (std::size_t i = 0; i < n; ++i)
              out.push_back(Vec::Constant(1, k.scale * std::pow(k.q, double(i))));
          } else if constexpr (std::is_same_v<T, PrimeSet>) {
            for (auto p : detail::first_primes(n)) out.push_back(Vec::Constant(1, k.scale * double(p)));
          } else {
            for (std::size_t i = 0; i < std::min(n, k.points.size()); ++i) out.push_back(k.points[i]);
          }
        },
        kind_);
    return out;
  }

  // All points with |x_j| < r for every j (open cube), or ||x||_2 <= r (ball).
  std::size_t count_within(double r, bool cube) const {
    auto inside = [&](const Vec& x) { return cube ? x.cwiseAbs().maxCoeff() < r : x.norm() <= r; };
    std::size_t count = 0;
    std::visit(
        [&](const auto& k) {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, Lattice>) {
            // |k_j| <= sum_i |A^-1_{ji}| r bounds every index reaching the cube/ball
            Vec bound = k.inverse().cwiseAbs() * Vec::Constant(dim_, r);
            IVec hi(dim_);
            for (int j = 0; j < dim_; ++j) hi[j] = static_cast<std::int64_t>(std::ceil(bound(j))) + 1;
            IVec idx(dim_);
            for (int j = 0; j < dim_; ++j) idx[j] = -hi[j];
            while (true) {
              if (inside(k.point(idx))) ++count;
              int j = dim_ - 1;
              while (j >= 0 && idx[j] == hi[j]) idx[j] = -hi[j], --j;
              if (j < 0) break;
              ++idx[j];
            }
          } else if constexpr (std::is_same_v<T, ArithmeticSet>) {
            for (std::size_t i = 0;; ++i) {
              double x = k.a + k.b * double(i);
              if (x > r) break;
              if (inside(Vec::Constant(1, x))) ++count;
            }
          } else if constexpr (std::is_same_v<T, GeometricSet>) {
            for (double x = k.scale; x <= r; x *= k.q)
              if (inside(Vec::Constant(1, x))) ++count;
          } else if constexpr (std::is_same_v<T, PrimeSet>) {
            for (auto p : detail::primes_upto(static_cast<std::int64_t>(std::floor(r / k.scale))))
              if (inside(Vec::Constant(1, k.scale * double(p)))) ++count;
          } else {
            for (const auto& p : k.points)
              if (inside(p)) ++count;
          }
        },
        kind_);
    return count;
  }

 private:
  CountableSet(int d, Kind k) : dim_(d), kind_(std::move(k)) {}
  int dim_;
  Kind kind_;
};

inline double unit_ball_volume(int d) {
  return std::pow(pi, d / 2.0) / std::tgamma(d / 2.0 + 1.0);
}

// Ball-window density #(S n B_r) / vol(B_r).
inline double density_estimate(const CountableSet& s, double radius) {
  if (!(radius > 0)) throw Error(ErrorCode::BadDomain, "radius must be positive");
  return double(s.count_within(radius, false)) / (unit_ball_volume(s.dim()) * std::pow(radius, s.dim()));
}

// Cube-window density #(S n (-r,r)^d) / (2r)^d.
inline double cube_density_estimate(const CountableSet& s, double radius) {
  if (!(radius > 0)) throw Error(ErrorCode::BadDomain, "radius must be positive");
  return double(s.count_within(radius, true)) / std::pow(2.0 * radius, s.dim());
}

inline double separation(const CountableSet& s, std::size_t horizon) {
  auto pts = s.enumerate(horizon);
  if (pts.size() < 2) throw Error(ErrorCode::TooFewPoints, "separation needs two points");
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) best = std::min(best, (pts[i] - pts[j]).norm());
  return best;
}

// ---- JSON ----

inline nlohmann::json vec_to_json(const Vec& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

inline Vec vec_from_json(const nlohmann::json& j) {
  auto v = j.get<std::vector<double>>();
  return Eigen::Map<Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline nlohmann::json to_json(const Lattice& l) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < l.dim(); ++i) rows.push_back(vec_to_json(l.generator().row(i).transpose()));
  return {{"dim", l.dim()}, {"generator", rows}};
}

inline Lattice lattice_from_json(const nlohmann::json& j) {
  int d = j.at("dim").get<int>();
  const auto& rows = j.at("generator");
  if (static_cast<int>(rows.size()) != d) throw Error(ErrorCode::DimError, "generator rows != dim");
  Mat a(d, d);
  for (int i = 0; i < d; ++i) {
    Vec r = vec_from_json(rows.at(i));
    require_dim(r.size(), d, "generator row");
    a.row(i) = r.transpose();
  }
  return Lattice(a);
}

inline nlohmann::json to_json(const CompactBox& b) { return {{"lo", vec_to_json(b.lo())}, {"hi", vec_to_json(b.hi())}}; }

inline CompactBox box_from_json(const nlohmann::json& j) {
  return CompactBox(vec_from_json(j.at("lo")), vec_from_json(j.at("hi")));
}

inline nlohmann::json to_json(const CountableSet& s) {
  return std::visit(
      [&](const auto& k) -> nlohmann::json {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Lattice>) return {{"kind", "lattice"}, {"lattice", to_json(k)}};
        else if constexpr (std::is_same_v<T, ArithmeticSet>) return {{"kind", "arithmetic"}, {"a", k.a}, {"b", k.b}};
        else if constexpr (std::is_same_v<T, GeometricSet>) return {{"kind", "geometric"}, {"q", k.q}, {"scale", k.scale}};
        else if constexpr (std::is_same_v<T, PrimeSet>) return {{"kind", "primes"}, {"scale", k.scale}};
        else {
          nlohmann::json pts = nlohmann::json::array();
          for (const auto& p : k.points) pts.push_back(vec_to_json(p));
          return {{"kind", "explicit"}, {"points", pts}};
        }
      },
      s.kind());
}

inline CountableSet countable_set_from_json(const nlohmann::json& j) {
  auto kind = j.at("kind").get<std::string>();
  if (kind == "lattice") return CountableSet::lattice(lattice_from_json(j.at("lattice")));
  if (kind == "arithmetic") return CountableSet::arithmetic(j.at("a").get<double>(), j.at("b").get<double>());
  if (kind == "geometric") return CountableSet::geometric(j.at("q").get<double>(), j.value("scale", 1.0));
  if (kind == "primes") return CountableSet::primes(j.value("scale", 1.0));
  if (kind == "explicit") {
    std::vector<Vec> pts;
    for (const auto& p : j.at("points")) pts.push_back(vec_from_json(p));
    return CountableSet::explicit_points(std::move(pts));
  }
  throw Error(ErrorCode::ParseError, "unknown set kind '" + kind + "'");
}

}  // namespace phaseless
