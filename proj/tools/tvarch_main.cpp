// tvarch: batch CLI for simulating, fitting and verifying time-varying
// ARCH(p) models.
//
// Exit codes: 0 ok, 1 domain failure, 2 config parse error, 3 I/O error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tvarch/tvarch.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDomain = 1;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

struct CliError {
  int code;
  std::string message;
};

std::string join_args(int argc, char** argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) {
    if (i) s += ' ';
    s += argv[i];
  }
  return s;
}

void write_text_file(const std::string& path, const std::string& body) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw CliError{kExitIo, "cannot open output file: " + path};
  os << body;
  if (!os) throw CliError{kExitIo, "write failed: " + path};
}

void write_manifest(const std::string& out_path, const std::string& command,
                    const std::string& digest, std::uint64_t seed,
                    const std::vector<std::string>& outputs) {
  tvarch::RunManifest m;
  m.command = command;
  m.config_digest = digest;
  m.base_seed = seed;
  m.timestamp = tvarch::RunManifest::now_utc();
  m.outputs = outputs;
  std::ostringstream os;
  m.write(os);
  write_text_file(out_path, os.str());
}

std::vector<long> parse_grid(const std::string& text) {
  std::vector<long> grid;
  if (text.find(':') != std::string::npos) {
    long a = 0, b = 0, step = 0;
    if (std::sscanf(text.c_str(), "%ld:%ld:%ld", &a, &b, &step) != 3 ||
        step <= 0 || b < a)
      throw CliError{kExitConfig, "bad grid spec (want start:stop:step): " + text};
    for (long t = a; t <= b; t += step) grid.push_back(t);
  } else {
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) grid.push_back(std::stol(tok));
  }
  if (grid.empty()) throw CliError{kExitConfig, "empty grid"};
  return grid;
}

std::string render_assumption_report(const tvarch::AssumptionReport& rep) {
  std::ostringstream os;
  for (const auto& c : rep.checks) {
    os << (c.pass ? "PASS  " : "FAIL  ") << c.inequality
       << "  [lhs=" << tvarch::format_full(c.lhs)
       << " rhs=" << tvarch::format_full(c.rhs);
    if (c.location >= 0.0 && !c.pass)
      os << " at u=" << tvarch::format_full(c.location);
    os << "]\n";
  }
  return os.str();
}

std::string render_moment_report(const tvarch::MomentReport& rep,
                                 const char* level) {
  std::ostringstream os;
  for (const auto& c : rep.checks)
    os << (c.pass ? "PASS  " : "FAIL  ") << level << ": " << c.inequality
       << "  [lhs=" << tvarch::format_full(c.lhs)
       << " rhs=" << tvarch::format_full(c.rhs) << "]\n";
  return os.str();
}

// ---- validate ----

int cmd_validate(const std::string& config_path) {
  const tvarch::ConfigFile cfg = tvarch::ConfigFile::load(config_path);

  // Build the pieces without the validating constructor so a full report
  // can be printed even on failure.
  const int p = static_cast<int>(cfg.get_long("model.p"));
  std::vector<tvarch::ParameterCurve> curves;
  for (int j = 0; j <= p; ++j)
    curves.push_back(
        tvarch::curve_from_config(cfg, "model.curve a" + std::to_string(j)));
  tvarch::Regularity reg;
  reg.rho = cfg.get_double("model.rho");
  reg.Q = cfg.get_double("model.Q");
  reg.nu = cfg.get_double("model.nu");
  reg.M = cfg.get_double("model.M");
  reg.ell = tvarch::ell_from_config(cfg);
  const tvarch::InnovationLaw law = tvarch::innovation_from_config(cfg);

  const tvarch::AssumptionReport rep =
      tvarch::check_assumptions(curves, reg, 1001);
  std::cout << render_assumption_report(rep);

  bool omega_ok = true;
  if (cfg.has("omega.rho1")) {
    const tvarch::OmegaSpace omega = tvarch::omega_from_config(cfg, p);
    double worst_margin = std::numeric_limits<double>::infinity();
    double at = 0.0;
    for (int i = 0; i <= 1000; ++i) {
      const double u = i / 1000.0;
      tvarch::Vector a(p + 1);
      for (int j = 0; j <= p; ++j) a[j] = curves[j].value(u);
      double tail = 0.0;
      for (int j = 1; j <= p; ++j) tail += a[j];
      double margin = std::min(a[0] - omega.rho1, omega.rho2 - a[0]);
      for (int j = 1; j <= p; ++j) margin = std::min(margin, a[j] - omega.rho1);
      if (p > 0) margin = std::min(margin, 1.0 - tail);
      if (margin < worst_margin) { worst_margin = margin; at = u; }
    }
    omega_ok = worst_margin > 0.0;
    std::cout << (omega_ok ? "PASS  " : "FAIL  ")
              << "a(u) interior to Omega on the grid  [margin="
              << tvarch::format_full(worst_margin)
              << " at u=" << tvarch::format_full(at) << "]\n";
  }

  if (rep.all_pass() && omega_ok) {
    const tvarch::TvArchSpec spec(curves, law, reg);
    std::cout << render_moment_report(
        tvarch::validate_moment_conditions(spec, tvarch::MomentLevel::Clt),
        "clt-level");
    std::cout << render_moment_report(
        tvarch::validate_moment_conditions(spec, tvarch::MomentLevel::Bias),
        "bias-level");
    std::cout << "(moment checks are informational and do not gate the exit "
                 "status)\n";
  }
  return rep.all_pass() && omega_ok ? kExitOk : kExitDomain;
}

// ---- simulate ----

int cmd_simulate(const std::string& config_path, long n, std::uint64_t seed,
                 const std::string& mode, const std::string& out,
                 const std::string& argv_line) {
  const tvarch::ConfigFile cfg = tvarch::ConfigFile::load(config_path);
  const tvarch::TvArchSpec spec = tvarch::spec_from_config(cfg);
  const tvarch::StartMode start = mode == "paper-exact"
                                      ? tvarch::StartMode::PaperExact
                                      : tvarch::StartMode::StationaryStart;
  if (mode != "paper-exact" && mode != "stationary-start")
    throw CliError{kExitConfig, "mode must be paper-exact or stationary-start"};
  const tvarch::SamplePath path = tvarch::simulate_tvarch(spec, n, seed, start);
  std::ostringstream body;
  tvarch::write_path_csv(path, body);
  write_text_file(out, body.str());
  write_manifest(out + ".manifest", argv_line, cfg.digest(), seed, {out});
  std::cout << "wrote " << out << " (N=" << n << ")\n";
  return kExitOk;
}

// ---- fit ----

int cmd_fit(const std::string& input, const std::string& grid_spec, double b,
            const std::string& kernel_name, const std::string& omega_spec,
            long n, std::uint64_t seed, bool strict, const std::string& out,
            const std::string& argv_line) {
  std::vector<double> x2;
  long N = 0;
  std::optional<tvarch::ConfigFile> cfg;
  std::string digest = "-";

  const bool is_csv =
      input.size() > 4 && input.substr(input.size() - 4) == ".csv";
  if (is_csv) {
    std::ifstream is(input);
    if (!is) throw CliError{kExitIo, "cannot open data file: " + input};
    x2 = tvarch::read_x2_csv(is);
    N = static_cast<long>(x2.size());
  } else {
    cfg = tvarch::ConfigFile::load(input);
    digest = cfg->digest();
    const tvarch::TvArchSpec spec = tvarch::spec_from_config(*cfg);
    if (n <= 0)
      throw CliError{kExitConfig, "--n is required when fitting from a config"};
    x2 = tvarch::simulate_tvarch(spec, n, seed,
                                 tvarch::StartMode::StationaryStart)
             .x2;
    N = n;
  }

  int p = 1;
  double rho1 = 0.0, rho2 = 0.0;
  if (!omega_spec.empty()) {
    std::stringstream ss(omega_spec);
    std::string tok;
    std::vector<double> vals;
    while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
    if (vals.size() == 3) {
      p = static_cast<int>(vals[0]);
      rho1 = vals[1];
      rho2 = vals[2];
    } else {
      throw CliError{kExitConfig, "--omega wants p,rho1,rho2"};
    }
  } else if (cfg && cfg->has("omega.rho1")) {
    p = static_cast<int>(cfg->get_long("model.p"));
    rho1 = cfg->get_double("omega.rho1");
    rho2 = cfg->get_double("omega.rho2");
  } else {
    throw CliError{kExitConfig,
                   "no omega: give --omega p,rho1,rho2 or an omega block"};
  }
  const tvarch::OmegaSpace omega(p, rho1, rho2);

  double bandwidth = b;
  if (bandwidth <= 0.0 && cfg && cfg->has("kernel.b"))
    bandwidth = cfg->get_double("kernel.b");
  if (bandwidth <= 0.0)
    throw CliError{kExitConfig, "no bandwidth: give --b or a kernel block"};
  tvarch::KernelFamily family = tvarch::KernelFamily::Rectangular;
  if (!kernel_name.empty())
    family = tvarch::parse_kernel_family(kernel_name);
  else if (cfg && cfg->has("kernel.family"))
    family = tvarch::parse_kernel_family(cfg->get_string("kernel.family"));
  const tvarch::KernelSpec kernel(family, bandwidth);

  const std::vector<long> grid = parse_grid(grid_spec);
  const auto policy = strict ? tvarch::BoundaryPolicy::Strict
                             : tvarch::BoundaryPolicy::Renormalize;

  // Strict-mode boundary anchors are a hard error for the whole command.
  if (strict) {
    for (long t0 : grid) tvarch::kernel_weights(kernel, t0, N, p, policy);
  }
  const std::vector<tvarch::FitResult> fits =
      tvarch::fit_path(x2, N, grid, kernel, omega, {}, policy);

  std::ostringstream body;
  tvarch::write_fits_csv(fits, body);
  write_text_file(out, body.str());
  write_manifest(out + ".manifest", argv_line, digest, seed, {out});
  std::cout << "wrote " << out << " (" << fits.size() << " anchors)\n";
  return kExitOk;
}

// ---- experiment ----

int cmd_experiment(const std::string& config_path, const std::string& out_dir,
                   int threads, std::optional<std::uint64_t> seed_override,
                   const std::string& argv_line) {
  const tvarch::ConfigFile cfg = tvarch::ConfigFile::load(config_path);
  tvarch::ExperimentConfig ec = tvarch::experiment_from_config(cfg);
  ec.threads = threads;
  if (seed_override) ec.base_seed = *seed_override;

  std::filesystem::create_directories(out_dir);
  const std::string csv_path = out_dir + "/summary.csv";
  const std::string manifest_path = out_dir + "/manifest.txt";

  const tvarch::ExperimentSummary summary = tvarch::run_experiment(ec);
  write_text_file(csv_path, summary.csv());
  write_manifest(manifest_path, argv_line, cfg.digest(), ec.base_seed,
                 {csv_path});
  std::cout << "kind=" << tvarch::to_string(summary.kind)
            << " cells=" << summary.cells.size()
            << " failures=" << summary.total_failures << "/"
            << summary.total_reps << " runtime="
            << tvarch::format_full(summary.runtime_sec) << "s\n"
            << "wrote " << csv_path << "\n";
  return kExitOk;
}

// ---- asymptotics ----

int cmd_asymptotics(const std::string& config_path, double u0, long target_n,
                    long mc_n, int reps, std::uint64_t seed,
                    const std::string& out, const std::string& argv_line) {
  const tvarch::ConfigFile cfg = tvarch::ConfigFile::load(config_path);
  const tvarch::TvArchSpec spec = tvarch::spec_from_config(cfg);
  const tvarch::KernelSpec kernel = tvarch::kernel_from_config(cfg);
  const tvarch::McOptions mc{mc_n, reps, seed};

  const tvarch::SigmaEstimate sig = tvarch::sigma_of_u(spec, u0, mc);
  const tvarch::MuEstimate mu = tvarch::bias_mu(spec, u0, kernel, mc);
  const tvarch::BandwidthResult bw =
      tvarch::optimal_bandwidth(spec, u0, target_n, kernel, sig.sigma, mu.mu);

  std::ostringstream os;
  os << "u0 = " << tvarch::format_full(u0) << "\n";
  os << "kernel = " << tvarch::to_string(kernel.family)
     << " (w2 = " << tvarch::format_full(kernel.moments.w2)
     << ", w(2) = " << tvarch::format_full(kernel.moments.w2nd) << ")\n";
  const int dim = static_cast<int>(sig.sigma.rows());
  os << "sigma method = " << (sig.closed_form ? "closed-form" : "monte-carlo")
     << "\n";
  for (int i = 0; i < dim; ++i) {
    os << "sigma[" << i << "] =";
    for (int j = 0; j < dim; ++j)
      os << " " << tvarch::format_full(sig.sigma(i, j));
    os << "\n";
  }
  os << "sigma eigenvalues =";
  for (int i = 0; i < dim; ++i)
    os << " " << tvarch::format_full(sig.eigenvalues[i]);
  os << "\n";
  if (!sig.closed_form) {
    os << "sigma mc_stderr =";
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j)
        os << " " << tvarch::format_full(sig.mc_stderr(i, j));
    os << "\n";
  }
  os << "mu method = " << (mu.closed_form ? "closed-form" : "monte-carlo")
     << "\n";
  os << "mu =";
  for (int i = 0; i < dim; ++i) os << " " << tvarch::format_full(mu.mu[i]);
  os << "\n";
  if (!mu.closed_form) {
    os << "mu mc_stderr =";
    for (int i = 0; i < dim; ++i)
      os << " " << tvarch::format_full(mu.mc_stderr[i]);
    os << "\nmu stencil_bias = " << tvarch::format_full(mu.stencil_bias)
       << " (du = " << tvarch::format_full(mu.du) << ")\n";
  }
  os << "b_opt = " << tvarch::format_full(bw.b_opt)
     << " (conjectured-mse minimizer, N = " << target_n << ")\n";
  os << "zero_bias = " << (bw.zero_bias ? 1 : 0) << "\n";

  std::cout << os.str();
  if (!out.empty()) {
    write_text_file(out, os.str());
    write_manifest(out + ".manifest", argv_line, cfg.digest(), seed, {out});
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"time-varying ARCH simulation, estimation and verification"};
  app.require_subcommand(1);
  const std::string argv_line = join_args(argc, argv);

  std::string config_path, out = "out.csv", out_dir = "out";
  std::string mode = "stationary-start", grid_spec, kernel_name, omega_spec;
  std::string input;
  long n = 0, target_n = 4000, mc_n = 20000;
  std::uint64_t seed = 1;
  bool seed_given = false;
  int threads = 0, reps = 50;
  double b = 0.0, u0 = 0.5;
  bool no_strict = false;

  CLI::App* validate = app.add_subcommand("validate", "check model assumptions");
  validate->add_option("config", config_path)->required();

  CLI::App* simulate = app.add_subcommand("simulate", "generate a sample path");
  simulate->add_option("config", config_path)->required();
  simulate->add_option("--n", n, "path length")->required();
  simulate->add_option("--seed", seed);
  simulate->add_option("--mode", mode, "paper-exact | stationary-start");
  simulate->add_option("--out", out);

  CLI::App* fit = app.add_subcommand("fit", "local QML fits along a grid");
  fit->add_option("input", input, "x2 CSV (*.csv) or model config")->required();
  fit->add_option("--t0", grid_spec, "single anchor");
  fit->add_option("--grid", grid_spec, "anchors: list t1,t2,.. or start:stop:step");
  fit->add_option("--b", b, "bandwidth");
  fit->add_option("--kernel", kernel_name, "rectangular | epanechnikov | triangular");
  fit->add_option("--omega", omega_spec, "p,rho1,rho2");
  fit->add_option("--n", n, "simulated length (config input)");
  fit->add_option("--seed", seed);
  fit->add_flag("--no-strict-boundary", no_strict,
                "renormalize clipped kernels instead of failing");
  fit->add_option("--out", out);

  CLI::App* experiment = app.add_subcommand("experiment", "replicated study");
  experiment->add_option("config", config_path)->required();
  experiment->add_option("--out-dir", out_dir);
  experiment->add_option("--threads", threads);
  experiment->add_option("--seed", seed)->each([&](const std::string&) {
    seed_given = true;
  });

  CLI::App* asymptotics =
      app.add_subcommand("asymptotics", "Sigma, mu and optimal bandwidth");
  asymptotics->add_option("config", config_path)->required();
  asymptotics->add_option("--u0", u0);
  asymptotics->add_option("--n", target_n, "sample size the bandwidth is for");
  asymptotics->add_option("--mc-n", mc_n, "Monte Carlo path length");
  asymptotics->add_option("--reps", reps, "Monte Carlo replications");
  asymptotics->add_option("--seed", seed);
  asymptotics->add_option("--out", out, "also write the report to a file")
      ->default_val("");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(validate)) return cmd_validate(config_path);
    if (app.got_subcommand(simulate))
      return cmd_simulate(config_path, n, seed, mode, out, argv_line);
    if (app.got_subcommand(fit)) {
      if (grid_spec.empty())
        throw CliError{kExitConfig, "fit needs --t0 or --grid"};
      return cmd_fit(input, grid_spec, b, kernel_name, omega_spec, n, seed,
                     !no_strict, out, argv_line);
    }
    if (app.got_subcommand(experiment))
      return cmd_experiment(config_path, out_dir, threads,
                            seed_given ? std::optional<std::uint64_t>(seed)
                                       : std::nullopt,
                            argv_line);
    if (app.got_subcommand(asymptotics))
      return cmd_asymptotics(config_path, u0, target_n, mc_n, reps, seed, out,
                             argv_line);
  } catch (const CliError& e) {
    std::cerr << "error: " << e.message << "\n";
    return e.code;
  } catch (const tvarch::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const tvarch::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDomain;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDomain;
  }
  return kExitOk;
}
