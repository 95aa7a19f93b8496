#pragma once

// Plain-text config files. The grammar is line oriented:
//
//   # comment to end of line
//   blockname {            open a block (name may contain spaces)
//     key = v1 v2 ...      values are whitespace-separated tokens
//     nested name { ... }
//   }
//
// Braces and several assignments may share a line, e.g.
//   kernel { family = rectangular b = 0.1 }
// A key is the token directly before an '='; neither keys nor values may
// contain braces or '='. Keys are addressed by their dotted path, e.g.
// "model.curve a0.family". The digest hashes the sorted canonical
// entries, so reordering keys or blocks in the file does not change it.

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tvarch/errors.hpp"
#include "tvarch/kernel.hpp"
#include "tvarch/model.hpp"
#include "tvarch/montecarlo.hpp"
#include "tvarch/rng.hpp"

namespace tvarch {

class ConfigFile {
 public:
  static ConfigFile parse(const std::string& text) {
    ConfigFile cfg;
    std::vector<std::string> stack;
    std::istringstream is(text);
    std::string raw;
    int lineno = 0;

    // A segment may hold several assignments: "rho1 = 0.05 rho2 = 5".
    // A key is the single token directly before an '='; everything up to
    // the next key belongs to the current value list.
    auto assign = [&](const std::string& stmt) {
      std::vector<std::string> toks;
      {
        std::istringstream ss(stmt);
        std::string tok;
        while (ss >> tok) toks.push_back(tok);
      }
      if (toks.empty()) return;
      std::string prefix;
      for (const auto& b : stack) prefix += b + ".";
      std::size_t i = 0;
      while (i < toks.size()) {
        if (i + 1 >= toks.size() || toks[i + 1] != "=")
          throw ConfigError("expected 'key = value' at line " +
                            std::to_string(lineno) + ": " + stmt);
        const std::string key = prefix + toks[i];
        i += 2;
        std::vector<std::string> vals;
        while (i < toks.size() &&
               !(i + 1 < toks.size() && toks[i + 1] == "="))
          vals.push_back(toks[i++]);
        cfg.entries_[key] = vals;
      }
    };

    while (std::getline(is, raw)) {
      ++lineno;
      std::string line = strip_comment(raw);
      // Braces may share a line with a block name or a key assignment;
      // split the line at each brace and process the pieces in order.
      std::size_t pos = 0;
      while (pos < line.size()) {
        const std::size_t brace = line.find_first_of("{}", pos);
        if (brace == std::string::npos) {
          assign(line.substr(pos));
          break;
        }
        std::string before = line.substr(pos, brace - pos);
        trim(before);
        if (line[brace] == '{') {
          if (before.empty())
            throw ConfigError("missing block name at line " +
                              std::to_string(lineno));
          stack.push_back(before);
        } else {
          assign(before);
          if (stack.empty())
            throw ConfigError("unbalanced '}' at line " +
                              std::to_string(lineno));
          stack.pop_back();
        }
        pos = brace + 1;
      }
    }
    if (!stack.empty()) throw ConfigError("unclosed block: " + stack.back());
    return cfg;
  }

  static ConfigFile load(const std::string& file) {
    std::ifstream is(file);
    if (!is) throw ConfigError("cannot open config file: " + file);
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse(ss.str());
  }

  bool has(const std::string& key) const { return entries_.count(key) > 0; }

  const std::vector<std::string>& tokens(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) throw ConfigError("missing config key: " + key);
    return it->second;
  }

  std::string get_string(const std::string& key) const {
    const auto& t = tokens(key);
    if (t.size() != 1)
      throw ConfigError("config key expects one value: " + key);
    return t[0];
  }

  double get_double(const std::string& key) const {
    return to_double(get_string(key), key);
  }

  long get_long(const std::string& key) const {
    return static_cast<long>(to_double(get_string(key), key));
  }

  std::vector<double> get_doubles(const std::string& key) const {
    std::vector<double> out;
    for (const auto& t : tokens(key)) out.push_back(to_double(t, key));
    return out;
  }

  std::vector<long> get_longs(const std::string& key) const {
    std::vector<long> out;
    for (const auto& t : tokens(key))
      out.push_back(static_cast<long>(to_double(t, key)));
    return out;
  }

  // FNV-1a over the sorted canonical "path=v1 v2" entries.
  std::string digest() const {
    std::vector<std::string> lines;
    for (const auto& [k, v] : entries_) {
      std::string line = k + "=";
      for (std::size_t i = 0; i < v.size(); ++i)
        line += (i ? " " : "") + v[i];
      lines.push_back(std::move(line));
    }
    std::sort(lines.begin(), lines.end());
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (const auto& line : lines) {
      for (char c : line) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ull;
      }
      h ^= '\n';
      h *= 0x100000001B3ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(h));
    return buf;
  }

 private:
  static std::string strip_comment(const std::string& s) {
    const auto pos = s.find('#');
    return pos == std::string::npos ? s : s.substr(0, pos);
  }
  static void trim(std::string& s) {
    const auto notspace = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), notspace));
    s.erase(std::find_if(s.rbegin(), s.rend(), notspace).base(), s.end());
  }
  static double to_double(const std::string& t, const std::string& key) {
    try {
      std::size_t used = 0;
      const double v = std::stod(t, &used);
      if (used != t.size()) throw std::invalid_argument(t);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("config key " + key + ": bad number '" + t + "'");
    }
  }

  std::map<std::string, std::vector<std::string>> entries_;
};

// ---- Typed views over the standard blocks ----

inline InnovationLaw innovation_from_config(const ConfigFile& cfg) {
  const auto& toks = cfg.tokens("model.innovation");
  if (toks.empty()) throw ConfigError("model.innovation is empty");
  if (toks[0] == "student-t") {
    if (toks.size() != 2)
      throw ConfigError("student-t innovation needs a df value");
    return InnovationLaw::student_t(std::stod(toks[1]));
  }
  return InnovationLaw::parse(toks[0]);
}

inline EllSequence ell_from_config(const ConfigFile& cfg) {
  if (!cfg.has("model.ell")) return EllSequence::one();
  const auto& toks = cfg.tokens("model.ell");
  if (toks[0] == "one") return EllSequence::one();
  if (toks[0] == "polylog")
    return EllSequence::polylog(toks.size() > 1 ? std::stod(toks[1]) : 0.5);
  if (toks[0] == "geometric") {
    if (toks.size() != 2) throw ConfigError("geometric ell needs eta");
    return EllSequence::geometric(std::stod(toks[1]));
  }
  throw ConfigError("unknown ell family: " + toks[0]);
}

inline ParameterCurve curve_from_config(const ConfigFile& cfg,
                                        const std::string& block) {
  const std::string family = cfg.get_string(block + ".family");
  const std::vector<double> coeffs = cfg.get_doubles(block + ".coeffs");
  if (family == "constant")
    return ParameterCurve(CurveFamily::Constant, coeffs);
  if (family == "polynomial")
    return ParameterCurve(CurveFamily::Polynomial, coeffs);
  if (family == "sinusoid")
    return ParameterCurve(CurveFamily::Sinusoid, coeffs);
  if (family == "piecewise-linear")
    return ParameterCurve(CurveFamily::PiecewiseLinear, coeffs);
  throw ConfigError("unknown curve family: " + family);
}

inline TvArchSpec spec_from_config(const ConfigFile& cfg) {
  const int p = static_cast<int>(cfg.get_long("model.p"));
  if (p < 0) throw ConfigError("model.p must be >= 0");
  std::vector<ParameterCurve> curves;
  for (int j = 0; j <= p; ++j)
    curves.push_back(
        curve_from_config(cfg, "model.curve a" + std::to_string(j)));
  Regularity reg;
  reg.rho = cfg.get_double("model.rho");
  reg.Q = cfg.get_double("model.Q");
  reg.nu = cfg.get_double("model.nu");
  reg.M = cfg.get_double("model.M");
  reg.ell = ell_from_config(cfg);
  return TvArchSpec(std::move(curves), innovation_from_config(cfg), reg);
}

inline OmegaSpace omega_from_config(const ConfigFile& cfg, int p) {
  return OmegaSpace(p, cfg.get_double("omega.rho1"),
                    cfg.get_double("omega.rho2"));
}

inline KernelSpec kernel_from_config(const ConfigFile& cfg,
                                     double default_b = 0.1) {
  const KernelFamily family =
      cfg.has("kernel.family")
          ? parse_kernel_family(cfg.get_string("kernel.family"))
          : KernelFamily::Rectangular;
  const double b =
      cfg.has("kernel.b") ? cfg.get_double("kernel.b") : default_b;
  return KernelSpec(family, b);
}

inline ExperimentConfig experiment_from_config(const ConfigFile& cfg) {
  ExperimentConfig ec(spec_from_config(cfg), std::nullopt);
  if (cfg.has("omega.rho1"))
    ec.omega = omega_from_config(cfg, ec.spec.order());
  ec.kind = parse_experiment_kind(cfg.get_string("experiment.kind"));
  ec.reps = static_cast<int>(cfg.get_long("experiment.reps"));
  ec.u0s = cfg.get_doubles("experiment.u0");
  ec.Ns = cfg.get_longs("experiment.N");
  ec.base_seed =
      static_cast<std::uint64_t>(cfg.get_long("experiment.base_seed"));
  if (cfg.has("kernel.family"))
    ec.kernel_family = parse_kernel_family(cfg.get_string("kernel.family"));
  if (cfg.has("experiment.b") && cfg.has("experiment.b_rule"))
    throw ConfigError("give either experiment.b or experiment.b_rule");
  if (cfg.has("experiment.b")) {
    ec.b_rule = BandwidthRule::fixed(cfg.get_doubles("experiment.b"));
  } else if (cfg.has("experiment.b_rule")) {
    const auto& toks = cfg.tokens("experiment.b_rule");
    if (toks.size() != 3 || toks[0] != "power")
      throw ConfigError("experiment.b_rule = power <c> <gamma>");
    ec.b_rule = BandwidthRule::power(std::stod(toks[1]), std::stod(toks[2]));
  } else if (ec.kind != ExperimentKind::ApproximationRate) {
    throw ConfigError("experiment needs b or b_rule");
  }
  if (cfg.has("experiment.distances"))
    ec.distances = cfg.get_doubles("experiment.distances");
  if (cfg.has("experiment.taylor_order"))
    ec.taylor_order = static_cast<int>(cfg.get_long("experiment.taylor_order"));
  ec.validate();
  return ec;
}

}  // namespace tvarch
