#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "grid.hpp"

namespace sandpile {

/// Shortest round-trip is not required; 17 significant digits always are.
inline std::string fmt17(double x) {
  if (std::isnan(x)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string fmt17(const std::optional<double>& x) { return x ? fmt17(*x) : "nan"; }

inline std::ofstream open_csv(const std::filesystem::path& path, const std::string& header) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << header << '\n';
  return out;
}

inline void write_u_1d(const std::filesystem::path& path, const State1D& s, const Grid1D& g) {
  auto out = open_csv(path, "x,u");
  for (std::size_t j = 0; j < s.u.size(); ++j) out << fmt17(g.vertex(j)) << ',' << fmt17(s.u[j]) << '\n';
}

inline void write_v_1d(const std::filesystem::path& path, const State1D& s, const Grid1D& g) {
  auto out = open_csv(path, "x,v");
  for (std::size_t i = 0; i < s.v.size(); ++i)
    out << fmt17(g.center(static_cast<std::ptrdiff_t>(i + 1))) << ',' << fmt17(s.v[i]) << '\n';
}

inline void write_u_2d(const std::filesystem::path& path, const State2D& s, const Grid2D& g) {
  auto out = open_csv(path, "x,y,u");
  for (std::size_t l = 0; l < s.u.ny(); ++l)
    for (std::size_t j = 0; j < s.u.nx(); ++j)
      out << fmt17(g.vertex(j)) << ',' << fmt17(g.vertex(l)) << ',' << fmt17(s.u(j, l)) << '\n';
}

inline void write_v_2d(const std::filesystem::path& path, const State2D& s, const Grid2D& g) {
  auto out = open_csv(path, "x,y,v");
  for (std::size_t k = 0; k < s.v.ny(); ++k)
    for (std::size_t i = 0; i < s.v.nx(); ++i)
      out << fmt17(g.center(static_cast<std::ptrdiff_t>(i + 1))) << ','
          << fmt17(g.center(static_cast<std::ptrdiff_t>(k + 1))) << ',' << fmt17(s.v(i, k)) << '\n';
}

struct EocRow {
  double h;
  double err_u;
  std::optional<double> eoc_u;
  double err_v;
  std::optional<double> eoc_v;
};

inline void write_eoc(const std::filesystem::path& path, const std::vector<EocRow>& rows) {
  auto out = open_csv(path, "h,err_u,eoc_u,err_v,eoc_v");
  for (const EocRow& r : rows)
    out << fmt17(r.h) << ',' << fmt17(r.err_u) << ',' << fmt17(r.eoc_u) << ',' << fmt17(r.err_v)
        << ',' << fmt17(r.eoc_v) << '\n';
}

}  // namespace sandpile
