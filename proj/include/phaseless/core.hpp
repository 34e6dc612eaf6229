#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <numbers>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace phaseless {

using cdouble = std::complex<double>;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using IVec = std::vector<std::int64_t>;

inline constexpr double pi = std::numbers::pi;

enum class ErrorCode {
  SingularLattice,
  DimError,
  TooFewPoints,
  ZeroWindow,
  BadWindow,
  MissingClassData,
  SupportError,
  CoverageError,
  BadDomain,
  DegenerateFlip,
  NotSeparated,
  Unclassifiable,
  GateError,
  DegenerateSystem,
  ZeroSignal,
  NoCounterexample,
  ParseError,
};

inline const char* to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::SingularLattice: return "SingularLattice";
    case ErrorCode::DimError: return "DimError";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::ZeroWindow: return "ZeroWindow";
    case ErrorCode::BadWindow: return "BadWindow";
    case ErrorCode::MissingClassData: return "MissingClassData";
    case ErrorCode::SupportError: return "SupportError";
    case ErrorCode::CoverageError: return "CoverageError";
    case ErrorCode::BadDomain: return "BadDomain";
    case ErrorCode::DegenerateFlip: return "DegenerateFlip";
    case ErrorCode::NotSeparated: return "NotSeparated";
    case ErrorCode::Unclassifiable: return "Unclassifiable";
    case ErrorCode::GateError: return "GateError";
    case ErrorCode::DegenerateSystem: return "DegenerateSystem";
    case ErrorCode::ZeroSignal: return "ZeroSignal";
    case ErrorCode::NoCounterexample: return "NoCounterexample";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require_dim(std::size_t a, std::size_t b, const char* where) {
  if (a != b)
    throw Error(ErrorCode::DimError, std::string(where) + ": dimension " + std::to_string(a) +
                                         " vs " + std::to_string(b));
}

// Worker count: explicit > PHASELESS_THREADS > 1.
inline unsigned resolve_threads(unsigned requested = 0) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("PHASELESS_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<unsigned>(v);
  }
  return 1;
}

// Static block partition; each index is written by exactly one worker so
// results never depend on the thread count.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n ? n : 1)));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::jthread> pool;
  std::vector<std::exception_ptr> errs(threads);
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w * n / threads; i < (w + 1) * n / threads; ++i) fn(i);
      } catch (...) {
        errs[w] = std::current_exception();
      }
    });
  }
  pool.clear();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
}

}  // namespace phaseless

#include <random>

namespace phaseless {

// mt19937_64 is fully specified by the standard; the transforms below are
// spelled out so draws are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  double uniform() { return double(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * double(n)) % n; }
  double normal() {
    double u1 = 1.0 - uniform(), u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * pi * u2);
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace phaseless
