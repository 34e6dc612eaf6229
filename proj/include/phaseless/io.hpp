#pragma once

#include "transforms.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace phaseless {

namespace detail {
// Shortest round-trip text, locale independent.
inline std::string fmt(double x) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}
inline double parse_double(std::string_view s) {
  double v = 0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw Error(ErrorCode::ParseError, "bad number '" + std::string(s) + "'");
  return v;
}
inline std::int64_t parse_int(std::string_view s) {
  std::int64_t v = 0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw Error(ErrorCode::ParseError, "bad integer '" + std::string(s) + "'");
  return v;
}
}  // namespace detail

inline void write_spec(std::ostream& os, const SpectrogramSamples& s) {
  nlohmann::json h = {
      {"magic", "SPEC1"},
      {"window", to_json(s.window)},
      {"lambda", {{"set", to_json(s.time_set)}, {"horizon", s.lambda_horizon}}},
      {"gamma", to_json(s.freq_lattice)},
      {"gamma_window", {{"lo", s.gamma_window.lo}, {"hi", s.gamma_window.hi}}},
      {"K", to_json(s.support)},
  };
  os << h.dump() << '\n';
  const int d = s.freq_lattice.dim();
  os << "lambda_index";
  for (int j = 0; j < d; ++j) os << ",gamma_index_" << j;
  os << ",value\n";
  for (std::size_t li = 0; li < s.lambdas.size(); ++li)
    for (std::size_t gi = 0; gi < s.gamma_count(); ++gi) {
      os << li;
      for (auto k : s.gamma_window.at(gi)) os << ',' << k;
      os << ',' << detail::fmt(s.at(li, gi)) << '\n';
    }
}

inline SpectrogramSamples read_spec(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw Error(ErrorCode::ParseError, "SPEC1 header missing");
  try {
    auto h = nlohmann::json::parse(line);
    if (h.value("magic", "") != "SPEC1") throw Error(ErrorCode::ParseError, "not a SPEC1 file");
    CountableSet lam = countable_set_from_json(h.at("lambda").at("set"));
    auto horizon = h.at("lambda").at("horizon").get<std::size_t>();
    IndexBox gw{h.at("gamma_window").at("lo").get<IVec>(), h.at("gamma_window").at("hi").get<IVec>()};
    SpectrogramSamples s{lam, horizon, lattice_from_json(h.at("gamma")), gw, box_from_json(h.at("K")),
                         window_from_json(h.at("window")), lam.enumerate(horizon), {}};
    const int d = s.freq_lattice.dim();
    s.values.assign(s.lambdas.size() * s.gamma_count(), -1.0);
    std::getline(is, line);  // column names
    std::size_t rows = 0;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      std::vector<std::string_view> cols;
      std::string_view sv(line);
      for (std::size_t p = 0;;) {
        auto q = sv.find(',', p);
        cols.push_back(sv.substr(p, q == std::string_view::npos ? sv.npos : q - p));
        if (q == std::string_view::npos) break;
        p = q + 1;
      }
      if (cols.size() != std::size_t(d) + 2) throw Error(ErrorCode::ParseError, "SPEC1 row width");
      auto li = detail::parse_int(cols[0]);
      IVec k(d);
      for (int j = 0; j < d; ++j) k[j] = detail::parse_int(cols[1 + j]);
      if (li < 0 || std::size_t(li) >= s.lambdas.size() || !gw.contains(k))
        throw Error(ErrorCode::ParseError, "SPEC1 index out of range");
      std::size_t flat = 0;
      for (int j = 0; j < d; ++j) flat = flat * std::size_t(gw.hi[j] - gw.lo[j] + 1) + std::size_t(k[j] - gw.lo[j]);
      double v = detail::parse_double(cols[d + 1]);
      if (v < 0) throw Error(ErrorCode::ParseError, "negative spectrogram value");
      s.values[std::size_t(li) * s.gamma_count() + flat] = v;
      ++rows;
    }
    if (rows != s.values.size() || std::any_of(s.values.begin(), s.values.end(), [](double v) { return v < 0; }))
      throw Error(ErrorCode::ParseError, "SPEC1 body does not cover the index window");
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("SPEC1 header: ") + e.what());
  }
}

inline void save_spec(const std::string& path, const SpectrogramSamples& s) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::ParseError, "cannot write " + path);
  write_spec(os, s);
}
inline SpectrogramSamples load_spec(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::ParseError, "cannot read " + path);
  return read_spec(is);
}
inline void save_gfld(const std::string& path, const GridField& f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::ParseError, "cannot write " + path);
  write_gfld(os, f);
}
inline GridField load_gfld(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::ParseError, "cannot read " + path);
  return read_gfld(is);
}

}  // namespace phaseless
