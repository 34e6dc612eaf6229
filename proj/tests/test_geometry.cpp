#include <phaseless/phaseless.hpp>
#include <gtest/gtest.h>

#include <sstream>

using namespace phaseless;

namespace {

Mat m2(double a, double b, double c, double d) {
  Mat m(2, 2);
  m << a, b, c, d;
  return m;
}

CountableSet primes_oracle_set() { return CountableSet::primes(); }

// trial division, independent of the sieve
bool is_prime(std::int64_t n) {
  if (n < 2) return false;
  for (std::int64_t k = 2; k * k <= n; ++k)
    if (n % k == 0) return false;
  return true;
}

}  // namespace

TEST(Lattice, ReciprocalOfDiagonal) {
  Lattice r = reciprocal(Lattice::scaled(1, 0.5));
  EXPECT_DOUBLE_EQ(r.generator()(0, 0), 2.0);
  Lattice id = reciprocal(Lattice(Mat::Identity(3, 3)));
  EXPECT_TRUE(id.generator().isApprox(Mat::Identity(3, 3)));
}

TEST(Lattice, ReciprocalShearPairsAreIntegral) {
  Lattice a(m2(1, 1, 0, 1));
  Lattice r = reciprocal(a);
  EXPECT_TRUE(r.generator().isApprox(m2(1, 0, -1, 1), 1e-15));
  for (int i = -2; i <= 2; ++i)
    for (int j = -2; j <= 2; ++j)
      for (int k = -2; k <= 2; ++k)
        for (int l = -2; l <= 2; ++l) {
          double p = a.point({i, j}).dot(r.point({k, l}));
          EXPECT_NEAR(p, std::round(p), 1e-12);
        }
}

TEST(Lattice, SingularGeneratorRejected) {
  try {
    Lattice(m2(1, 2, 0.5, 1.0 + 1e-13));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingularLattice);
  }
}

TEST(Lattice, VolumeDuality) {
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    Mat a = Mat::Identity(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) a(i, j) += 0.3 * rng.uniform(-1, 1);
    Lattice l(a);
    EXPECT_NEAR(l.volume() * reciprocal(l).volume(), 1.0, 1e-12);
  }
}

TEST(Lattice, JsonRoundTrip) {
  Lattice l(m2(1, 0.25, -0.5, 2));
  Lattice r = lattice_from_json(to_json(l));
  EXPECT_EQ(r.generator(), l.generator());
  EXPECT_EQ(to_json(l)["generator"][0][1].get<double>(), 0.25);  // row-major
}

TEST(Box, DifferenceAndDiameter) {
  CompactBox k(Vec::Constant(2, -1), (Vec(2) << 1, 3).finished());
  EXPECT_DOUBLE_EQ(k.diam_inf(), 4.0);
  CompactBox d = k.difference();
  EXPECT_TRUE(d.contains(Vec::Zero(2)));
  EXPECT_DOUBLE_EQ(d.hi()(1), 4.0);
  EXPECT_THROW(CompactBox(Vec::Constant(1, 1), Vec::Constant(1, 1)), Error);
}

TEST(FundamentalDomain, Examples) {
  CompactBox k = CompactBox::cube(1, 1);
  EXPECT_TRUE(fundamental_domain_contains(Lattice::scaled(1, 4), k));
  EXPECT_FALSE(fundamental_domain_contains(Lattice::scaled(1, 1), k));
  EXPECT_TRUE(fundamental_domain_contains(Lattice::scaled(1, 1 / 0.2), k.difference()));
  EXPECT_FALSE(fundamental_domain_contains(Lattice::scaled(1, 1 / 0.26), k.difference()));
  // exactly on the boundary is rejected (strict interior)
  EXPECT_FALSE(fundamental_domain_contains(Lattice::scaled(1, 4), k.difference()));
  EXPECT_THROW(fundamental_domain_contains(Lattice::scaled(2, 4), k), Error);
}

TEST(FundamentalDomain, MonotoneInBoxAndScale) {
  Lattice l(m2(3, 1, 0, 3));
  CompactBox big(Vec::Constant(2, -0.7), Vec::Constant(2, 0.7));
  CompactBox small(Vec::Constant(2, -0.3), (Vec(2) << 0.5, 0.2).finished());
  ASSERT_TRUE(fundamental_domain_contains(l, big));
  EXPECT_TRUE(fundamental_domain_contains(l, small));
  EXPECT_TRUE(fundamental_domain_contains(Lattice(1.5 * l.generator()), big));
}

TEST(CountableSets, LatticeEnumerationIsShellOrdered) {
  auto pts = CountableSet::lattice(Lattice::scaled(1, 0.25)).enumerate(5);
  ASSERT_EQ(pts.size(), 5u);
  const double want[] = {0, -0.25, 0.25, -0.5, 0.5};
  for (int i = 0; i < 5; ++i) EXPECT_DOUBLE_EQ(pts[i](0), want[i]);
  auto p2 = CountableSet::lattice(Lattice::scaled(2, 1)).enumerate(9);
  EXPECT_EQ(p2.back().cwiseAbs().maxCoeff(), 1.0);
}

TEST(CountableSets, PrimesMatchTrialDivision) {
  auto pts = primes_oracle_set().enumerate(300);
  std::int64_t n = 1;
  for (const auto& p : pts) {
    do ++n;
    while (!is_prime(n));
    EXPECT_EQ(std::int64_t(p(0)), n);
  }
  std::int64_t count = 0;
  for (std::int64_t k = 2; k <= 10000; ++k) count += is_prime(k);
  EXPECT_EQ(count, 1229);
  EXPECT_EQ(primes_oracle_set().count_within(1e4, false), 1229u);
}

TEST(CountableSets, ExplicitRejectsDuplicates) {
  EXPECT_THROW(CountableSet::explicit_points({Vec::Constant(1, 1), Vec::Constant(1, 1)}), Error);
}

TEST(Density, Examples) {
  EXPECT_DOUBLE_EQ(density_estimate(CountableSet::lattice(Lattice::scaled(1, 1)), 100.5), 1.0);
  double p1 = density_estimate(primes_oracle_set(), 1e4);
  EXPECT_NEAR(p1, 1229.0 / 2e4, 1e-15);
  EXPECT_LT(density_estimate(primes_oracle_set(), 1e5), p1);
  EXPECT_DOUBLE_EQ(density_estimate(CountableSet::geometric(2), 1024), 11.0 / 2048);  // 1, 2, ..., 1024
}

TEST(Density, LatticeConvergesLikeOneOverR) {
  // 0.3 Z^2 with balls: error times r stays bounded by a constant fitted at r = 10
  CountableSet s = CountableSet::lattice(Lattice::scaled(2, 0.3));
  const double truth = 1 / 0.09;
  double c = std::abs(density_estimate(s, 10) - truth) * 10;
  for (double r : {100.0, 1000.0}) EXPECT_LE(std::abs(density_estimate(s, r) - truth) * r, 4 * c + 1);
  CountableSet z = CountableSet::lattice(Lattice::scaled(1, 0.5));
  for (double r : {10.0, 100.0, 1000.0}) EXPECT_LE(std::abs(density_estimate(z, r) - 2.0), 1.0 / r);
}

TEST(Separation, Examples) {
  EXPECT_DOUBLE_EQ(separation(CountableSet::lattice(Lattice::scaled(2, 0.5)), 25), 0.5);
  EXPECT_DOUBLE_EQ(separation(primes_oracle_set(), 100), 1.0);
  auto e = CountableSet::explicit_points({Vec::Constant(1, 0), Vec::Constant(1, 3), Vec::Constant(1, 3.5)});
  EXPECT_DOUBLE_EQ(separation(e, 3), 0.5);
  try {
    separation(CountableSet::explicit_points({Vec::Constant(1, 0)}), 5);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::TooFewPoints);
  }
}

TEST(CountableSets, JsonRoundTrip) {
  for (const char* txt : {R"({"kind":"arithmetic","a":1,"b":0.5})", R"({"kind":"geometric","q":3,"scale":2})",
                          R"({"kind":"primes","scale":0.5})", R"({"kind":"explicit","points":[[0],[1.5]]})",
                          R"({"kind":"lattice","lattice":{"dim":1,"generator":[[0.25]]}})"}) {
    auto s = countable_set_from_json(nlohmann::json::parse(txt));
    auto r = countable_set_from_json(to_json(s));
    auto a = s.enumerate(2), b = r.enumerate(2);
    ASSERT_EQ(a.size(), b.size()) << txt;
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]) << txt;
  }
}

TEST(Grid, FlattenAndSnap) {
  GridGeometry g(Vec::Constant(2, -1), Vec::Constant(2, 0.5), {5, 3});
  EXPECT_EQ(g.size(), 15u);
  EXPECT_EQ(g.flatten({1, 2}), 5u);
  EXPECT_EQ(g.unflatten(5), (IVec{1, 2}));
  IVec idx;
  EXPECT_TRUE(g.snap((Vec(2) << 0.5, 0.0).finished(), idx));
  EXPECT_EQ(idx, (IVec{3, 2}));
  EXPECT_FALSE(g.snap((Vec(2) << 0.25, 0.0).finished(), idx));
  EXPECT_FALSE(g.snap((Vec(2) << 0.0, 0.5).finished(), idx));  // past the last node
}

TEST(Grid, GfldRoundTripIsExact) {
  GridGeometry g(Vec::Constant(1, -1), Vec::Constant(1, 0.1), {7});
  Rng rng(5);
  GridField f = GridField::sample(g, [&](const Vec&) { return cdouble(rng.normal(), rng.normal()); });
  std::stringstream ss;
  write_gfld(ss, f);
  GridField r = read_gfld(ss);
  EXPECT_TRUE(r.geom.same_as(g, 0));
  EXPECT_EQ(r.values, f.values);
  std::stringstream bad("{\"magic\":\"NOPE\"}\n");
  EXPECT_THROW(read_gfld(bad), Error);
}

TEST(Grid, AlignedErrorIgnoresGlobalPhase) {
  GridGeometry g(Vec::Constant(1, 0), Vec::Constant(1, 1), {4});
  GridField f(g, {1, cdouble(0, 2), 3, -1});
  EXPECT_NEAR(aligned_error(f * std::polar(1.0, 2.1), f), 0.0, 1e-15);
  GridField h(g, {1, cdouble(0, 2), 3, 1});
  // closed form: |<h,f>| = 13, ||f||^2 = ||h||^2 = 15 -> sqrt(30 - 26) / sqrt(15)
  EXPECT_NEAR(aligned_error(h, f), std::sqrt(4.0 / 15.0), 1e-14);
}

// ---- uniqueness gates ----

TEST(Gates, Carlson) {
  auto r = carlson_gate(1, pi);
  EXPECT_FALSE(r.pass);
  EXPECT_EQ(r.margin, 0.0);
  EXPECT_TRUE(carlson_gate(0.1, pi).pass);
  EXPECT_EQ(carlson_gate(0.37, 2.5).margin, pi - 0.37 * 2.5);
  EXPECT_TRUE(carlson_gate(0.2, 4 * pi).pass);
  EXPECT_FALSE(carlson_gate(0.3, 4 * pi).pass);
}

TEST(Gates, CarlsonMonotone) {
  Rng rng(8);
  for (int t = 0; t < 200; ++t) {
    double sp = rng.uniform(0, 1), sg = rng.uniform(0, 10);
    if (!carlson_gate(sp, sg).pass) continue;
    EXPECT_TRUE(carlson_gate(sp * rng.uniform(), sg * rng.uniform()).pass);
  }
}

TEST(Gates, SineSharpnessWitness) {
  double worst = 0, peak = 0;
  for (int k = -50; k < 50; ++k) worst = std::max(worst, std::abs(std::sin(pi * k)));
  for (int i = 0; i <= 1000; ++i) peak = std::max(peak, std::abs(std::sin(pi * i / 1000.0)));
  EXPECT_LE(worst, 1e-12 * 50);  // sin(pi k) in floating point carries k * eps
  EXPECT_DOUBLE_EQ(peak, 1.0);
  EXPECT_FALSE(carlson_gate(1, pi).pass);
}

namespace {
// The constant written out a second time from the displayed formula.
double ronkin_reference(int d) {
  long double e = std::exp(1.0L), S = 0;
  for (int k = 0; k <= d - 2; ++k) {
    long double p = 1;
    for (int i = 0; i < d - 2 - k; ++i) p *= 29.0L / 3.0L;
    S += p * (13.0L * k + 25.0L * e) / 3.0L;
  }
  long double fact = 1;
  for (int i = 2; i <= d; ++i) fact *= i;
  long double half_pi = std::acos(-1.0L) / 2;
  long double pw = 1;
  for (int i = 0; i < d - 1; ++i) pw *= half_pi;
  return double(2.0L / fact * pw / ((d - 1) / 2.0L + e + S));
}
}  // namespace

TEST(Gates, RonkinConstant) {
  EXPECT_NEAR(ronkin_constant(1), 2 / std::exp(1.0), 1e-15);
  EXPECT_NEAR(ronkin_constant(2), 0.0607173579681531, 1e-15);
  for (int d = 1; d <= 6; ++d) {
    EXPECT_NEAR(ronkin_constant(d), ronkin_reference(d), 1e-15 * ronkin_reference(1));
    EXPECT_GT(ronkin_constant(d), 0);
    if (d > 1) { EXPECT_LT(ronkin_constant(d), ronkin_constant(d - 1)); }
  }
}

TEST(Gates, RonkinExamples) {
  auto z1 = CountableSet::lattice(Lattice::scaled(1, 0.1));
  EXPECT_TRUE(ronkin_gate(z1, 1, 50, 50).pass);
  EXPECT_FALSE(ronkin_gate(z1, 10, 50, 50).pass);
  auto z2 = CountableSet::lattice(Lattice::scaled(2, 0.1));
  auto r = ronkin_gate(z2, 0.5, 50, 5);
  EXPECT_TRUE(r.pass);
  // D+ is the largest open-cube count over radii 5, 10, 20: 399^2 points in (-20, 20)^2
  const double dplus = std::pow(399.0 / 40.0, 2);
  EXPECT_NEAR(r.margin, ronkin_constant(2) * 0.1 * dplus - 0.5, 1e-12);
}

TEST(Gates, Zalik) {
  EXPECT_TRUE(zalik_classify(CountableSet::primes()).pass);
  EXPECT_FALSE(zalik_classify(CountableSet::geometric(2)).pass);
  EXPECT_TRUE(zalik_classify(CountableSet::arithmetic(1, 1)).pass);
  try {
    zalik_classify(CountableSet::lattice(Lattice::scaled(2, 1)));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Unclassifiable);
  }
}

TEST(Gates, LambdaDispatch) {
  CompactBox k1 = CompactBox::cube(1, 1);
  auto g = lambda_gate(WindowSpec::gaussian_isotropic(1, 1), k1, CountableSet::lattice(Lattice::scaled(1, 10)));
  EXPECT_EQ(g.gate, GateKind::gaussian_semigroup);
  EXPECT_TRUE(g.pass);
  auto h = lambda_gate(WindowSpec::hermite({2}), k1, CountableSet::lattice(Lattice::scaled(1, 0.2)));
  EXPECT_EQ(h.gate, GateKind::carlson);
  EXPECT_TRUE(h.pass);
  EXPECT_EQ(lambda_gate(WindowSpec::gaussian_isotropic(1, 1), k1, CountableSet::geometric(2)).gate, GateKind::zalik);
  CompactBox k2 = CompactBox::cube(2, 1);
  EXPECT_TRUE(lambda_gate(WindowSpec::airy(1), k2, CountableSet::lattice(Lattice::scaled(2, 0.12))).pass);
  EXPECT_FALSE(lambda_gate(WindowSpec::airy(1), k2, CountableSet::lattice(Lattice::scaled(2, 0.13))).pass);
}

TEST(Gates, GaussianNeverFailsOnLattices) {
  Rng rng(2);
  for (int t = 0; t < 20; ++t) {
    Mat a = Mat::Identity(2, 2) * rng.uniform(0.1, 20);
    a(0, 1) = rng.uniform(-1, 1);
    auto r = lambda_gate(WindowSpec::gaussian_isotropic(2, rng.uniform(0.1, 3)), CompactBox::cube(2, 5),
                         CountableSet::lattice(Lattice(a)));
    EXPECT_TRUE(r.pass);
  }
}

TEST(Gates, GammaCell) {
  CompactBox k = CompactBox::cube(1, 1);
  EXPECT_TRUE(gamma_gate(k, Lattice::scaled(1, 0.2)).pass);
  auto f = gamma_gate(k, Lattice::scaled(1, 0.26));
  EXPECT_FALSE(f.pass);
  EXPECT_LT(f.margin, 0);
  for (double kappa : {0.5, 1.0, 3.0}) {
    EXPECT_TRUE(gamma_gate(CompactBox::cube(2, kappa), Lattice::scaled(2, 1 / (4 * kappa + 1))).pass);
  }
  try {
    gamma_gate(CompactBox::cube(2, 1), Lattice(m2(0.2, 0.2, 0.2, 0.2 + 1e-13)));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingularLattice);
  }
}

TEST(Gates, JsonMargins) {
  auto j = to_json(zalik_classify(CountableSet::geometric(2)));
  EXPECT_EQ(j["margin"], "-inf");
  EXPECT_EQ(j["gate"], "zalik");
}
