#pragma once

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "tvarch/errors.hpp"
#include "tvarch/estimate.hpp"
#include "tvarch/simulate.hpp"

namespace tvarch {

// Shortest decimal rendering that round-trips a 64-bit double.
inline std::string format_full(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline void write_path_csv(const SamplePath& path, std::ostream& os) {
  os << "# seed=" << path.seed << " mode=" << to_string(path.start_mode)
     << " N=" << path.N << " burn_in=" << path.burn_in << "\n";
  os << "t,x2,sigma2,z\n";
  for (long t = 1; t <= path.N; ++t)
    os << t << "," << format_full(path.x2_at(t)) << ","
       << format_full(path.sigma2_at(t)) << "," << format_full(path.z_at(t))
       << "\n";
}

inline void write_fits_csv(const std::vector<FitResult>& fits,
                           std::ostream& os) {
  const int dim =
      fits.empty() ? 0 : static_cast<int>(fits.front().estimate.size());
  os << "t0,u0,b";
  for (int i = 0; i < dim; ++i) os << ",a" << i;
  for (int i = 0; i < dim; ++i) os << ",se" << i;
  os << ",converged,value,gradient_norm,iterations,error\n";
  for (const FitResult& f : fits) {
    os << f.t0 << "," << format_full(f.u0) << "," << format_full(f.b);
    for (int i = 0; i < dim; ++i)
      os << ","
         << (f.estimate.size() > i ? format_full(f.estimate[i]) : "nan");
    for (int i = 0; i < dim; ++i)
      os << "," << (f.has_stderr() ? format_full(f.stderr_[i]) : "nan");
    os << "," << (f.converged ? 1 : 0) << "," << format_full(f.value) << ","
       << format_full(f.gradient_norm) << "," << f.iterations << ","
       << f.error << "\n";
  }
}

// Reads a squared-observation series. The header must name either an x2
// column (used as-is) or an x column (squared on input).
inline std::vector<double> read_x2_csv(std::istream& is) {
  std::string line;
  // Skip comment lines, then parse the header.
  do {
    if (!std::getline(is, line)) throw ConfigError("empty data file");
  } while (!line.empty() && line[0] == '#');

  std::vector<std::string> cols;
  {
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) cols.push_back(tok);
  }
  int x2_col = -1, x_col = -1;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (cols[i] == "x2") x2_col = static_cast<int>(i);
    if (cols[i] == "x") x_col = static_cast<int>(i);
  }
  if (x2_col < 0 && x_col < 0)
    throw ConfigError("data file needs an 'x2' or 'x' column header");
  const int col = x2_col >= 0 ? x2_col : x_col;
  const bool square = x2_col < 0;

  std::vector<double> out;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string tok;
    int i = 0;
    double v = 0.0;
    bool found = false;
    while (std::getline(ss, tok, ',')) {
      if (i == col) {
        v = std::stod(tok);
        found = true;
        break;
      }
      ++i;
    }
    if (!found) throw ConfigError("short data row: " + line);
    out.push_back(square ? v * v : v);
    if (!square && v < 0.0)
      throw ConfigError("x2 values must be non-negative");
  }
  return out;
}

}  // namespace tvarch
