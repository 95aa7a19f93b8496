#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "tvarch/asymptotics.hpp"
#include "tvarch/estimate.hpp"
#include "tvarch/kernel.hpp"
#include "tvarch/likelihood.hpp"
#include "tvarch/model.hpp"
#include "tvarch/rng.hpp"
#include "tvarch/simulate.hpp"

namespace tvarch {

enum class ExperimentKind {
  BiasLaw,
  CltCoverage,
  ApproximationRate,
  BandwidthSweep,
  ErgodicSum
};

inline const char* to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::BiasLaw: return "bias-law";
    case ExperimentKind::CltCoverage: return "clt-coverage";
    case ExperimentKind::ApproximationRate: return "approximation-rate";
    case ExperimentKind::BandwidthSweep: return "bandwidth-sweep";
    case ExperimentKind::ErgodicSum: return "ergodic-sum";
  }
  return "?";
}

inline ExperimentKind parse_experiment_kind(const std::string& s) {
  if (s == "bias-law") return ExperimentKind::BiasLaw;
  if (s == "clt-coverage") return ExperimentKind::CltCoverage;
  if (s == "approximation-rate") return ExperimentKind::ApproximationRate;
  if (s == "bandwidth-sweep") return ExperimentKind::BandwidthSweep;
  if (s == "ergodic-sum") return ExperimentKind::ErgodicSum;
  throw ConfigError("unknown experiment kind: " + s);
}

// Bandwidth per sample size: either an explicit list reused for every N or
// the power rule b = c N^-gamma.
struct BandwidthRule {
  enum class Kind { FixedList, Power } kind = Kind::Power;
  std::vector<double> list;
  double c = 0.8;
  double gamma = 0.4;

  std::vector<double> bandwidths(long N) const {
    if (kind == Kind::FixedList) return list;
    return {c * std::pow(static_cast<double>(N), -gamma)};
  }
  static BandwidthRule fixed(std::vector<double> bs) {
    return {Kind::FixedList, std::move(bs), 0.0, 0.0};
  }
  static BandwidthRule power(double c, double gamma) {
    return {Kind::Power, {}, c, gamma};
  }
};

struct ExperimentConfig {
  ExperimentConfig(TvArchSpec s, std::optional<OmegaSpace> om)
      : spec(std::move(s)), omega(om) {}

  TvArchSpec spec;
  std::optional<OmegaSpace> omega;  // required by the fit-based kinds
  std::vector<double> u0s = {0.5};
  std::vector<long> Ns;
  BandwidthRule b_rule;
  KernelFamily kernel_family = KernelFamily::Rectangular;
  int reps = 100;
  std::uint64_t base_seed = 1;
  ExperimentKind kind = ExperimentKind::CltCoverage;
  std::vector<double> distances = {0.05, 0.1, 0.2};  // approximation-rate
  int taylor_order = 0;                              // approximation-rate
  int threads = 0;                                   // 0 = hardware

  void validate() const {
    if (reps < 1) throw ConfigError("reps must be >= 1");
    if (Ns.empty()) throw ConfigError("experiment needs at least one N");
    if (u0s.empty()) throw ConfigError("experiment needs at least one u0");
    const bool needs_b = kind != ExperimentKind::ApproximationRate;
    if (needs_b) {
      for (long N : Ns)
        for (double b : b_rule.bandwidths(N))
          if (b * static_cast<double>(N) < 50.0)
            throw ConfigError("bandwidth rule yields bN < 50 at N = " +
                              std::to_string(N));
    }
    const bool needs_fit = kind == ExperimentKind::BiasLaw ||
                           kind == ExperimentKind::CltCoverage ||
                           kind == ExperimentKind::BandwidthSweep;
    if (needs_fit && !omega)
      throw ConfigError("experiment kind requires an omega block");
    if (kind == ExperimentKind::ApproximationRate && distances.empty())
      throw ConfigError("approximation-rate needs a distance list");
  }
};

// One summary row: a (u0, N, b) cell, or (u0, N, distance) for the
// approximation-rate kind.
struct CellResult {
  double u0 = 0.0;
  long N = 0;
  double b = 0.0;
  double distance = std::numeric_limits<double>::quiet_NaN();
  int n_ok = 0;
  int n_fail = 0;
  int n_cov = 0;  // replications contributing to coverage

  Vector truth;         // a(u0)
  Vector bias;          // mean(a_hat) - a(u0)
  Vector bias_stderr;   // MC standard error of the bias entries
  Vector mse;           // mean squared error per component
  Matrix scaled_cov;    // sample covariance of sqrt(bN) (a_hat - a)
  Vector coverage90, coverage95, coverage99;

  double scalar_mean = 0.0;    // approximation / ergodic statistic
  double scalar_true = 0.0;    // ergodic-sum target E X~^2
  double scalar_rmse = 0.0;
  double scalar_stderr = 0.0;
};

struct ExperimentSummary {
  ExperimentKind kind = ExperimentKind::CltCoverage;
  std::vector<CellResult> cells;
  int total_reps = 0;
  int total_failures = 0;
  double runtime_sec = 0.0;  // never rendered into the CSV

  std::string csv() const;
};

namespace mc_detail {

inline int effective_threads(int requested) {
  if (requested <= 0)
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return std::min(requested, 64);
}

// Runs fn(r) for r = 0..reps-1 on a small worker pool. fn must only write
// to its own replication slot; results are reduced by the caller in index
// order, so the summary is bit-identical for any worker count.
template <typename Fn>
void parallel_reps(int reps, int threads, Fn&& fn) {
  threads = effective_threads(threads);
  if (threads <= 1 || reps <= 1) {
    for (int r = 0; r < reps; ++r) fn(r);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int w = 0; w < threads; ++w)
    pool.emplace_back([&]() {
      for (;;) {
        const int r = next.fetch_add(1);
        if (r >= reps) return;
        fn(r);
      }
    });
  for (auto& t : pool) t.join();
}

struct RepFit {
  bool ok = false;
  bool has_se = false;
  Vector est;
  Vector se;
};

inline std::string format_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace mc_detail

inline std::string ExperimentSummary::csv() const {
  using mc_detail::format_g17;
  std::ostringstream os;
  const bool fit_kind = kind == ExperimentKind::BiasLaw ||
                        kind == ExperimentKind::CltCoverage ||
                        kind == ExperimentKind::BandwidthSweep;
  if (fit_kind) {
    const int dim = cells.empty() ? 0 : static_cast<int>(cells[0].bias.size());
    os << "u0,N,b,n_ok,n_fail,n_cov";
    for (int i = 0; i < dim; ++i)
      os << ",truth" << i << ",bias" << i << ",bias_se" << i << ",mse" << i
         << ",cov90_" << i << ",cov95_" << i << ",cov99_" << i;
    for (int i = 0; i < dim; ++i)
      for (int j = i; j < dim; ++j) os << ",scov" << i << j;
    os << "\n";
    for (const CellResult& c : cells) {
      os << format_g17(c.u0) << "," << c.N << "," << format_g17(c.b) << ","
         << c.n_ok << "," << c.n_fail << "," << c.n_cov;
      for (int i = 0; i < dim; ++i)
        os << "," << format_g17(c.truth[i]) << "," << format_g17(c.bias[i])
           << "," << format_g17(c.bias_stderr[i]) << ","
           << format_g17(c.mse[i]) << "," << format_g17(c.coverage90[i])
           << "," << format_g17(c.coverage95[i]) << ","
           << format_g17(c.coverage99[i]);
      for (int i = 0; i < dim; ++i)
        for (int j = i; j < dim; ++j)
          os << "," << format_g17(c.scaled_cov(i, j));
      os << "\n";
    }
  } else if (kind == ExperimentKind::ApproximationRate) {
    os << "u0,N,distance,taylor_order,n_ok,n_fail,mean_abs_residual,stderr\n";
    for (const CellResult& c : cells)
      os << format_g17(c.u0) << "," << c.N << "," << format_g17(c.distance)
         << "," << static_cast<int>(c.b) << "," << c.n_ok << "," << c.n_fail
         << "," << format_g17(c.scalar_mean) << ","
         << format_g17(c.scalar_stderr) << "\n";
  } else {
    os << "u0,N,b,n_ok,n_fail,weighted_mean,true_mean,rmse,stderr\n";
    for (const CellResult& c : cells)
      os << format_g17(c.u0) << "," << c.N << "," << format_g17(c.b) << ","
         << c.n_ok << "," << c.n_fail << "," << format_g17(c.scalar_mean)
         << "," << format_g17(c.scalar_true) << ","
         << format_g17(c.scalar_rmse) << "," << format_g17(c.scalar_stderr)
         << "\n";
  }
  return os.str();
}

namespace mc_detail {

inline CellResult reduce_fit_cell(double u0, long N, double b,
                                  const Vector& truth,
                                  const std::vector<RepFit>& reps) {
  const int dim = static_cast<int>(truth.size());
  const double bN = b * static_cast<double>(N);
  const double root_bN = std::sqrt(bN);
  const double q90 = normal_quantile(0.95);
  const double q95 = normal_quantile(0.975);
  const double q99 = normal_quantile(0.995);

  CellResult cell;
  cell.u0 = u0;
  cell.N = N;
  cell.b = b;
  cell.truth = truth;
  cell.bias = Vector::Zero(dim);
  cell.bias_stderr = Vector::Zero(dim);
  cell.mse = Vector::Zero(dim);
  cell.scaled_cov = Matrix::Zero(dim, dim);
  cell.coverage90 = Vector::Zero(dim);
  cell.coverage95 = Vector::Zero(dim);
  cell.coverage99 = Vector::Zero(dim);

  KahanVector mean_acc(dim), mse_acc(dim);
  for (const RepFit& r : reps) {
    if (!r.ok) { ++cell.n_fail; continue; }
    ++cell.n_ok;
    mean_acc.add(r.est);
    mse_acc.add((r.est - truth).cwiseProduct(r.est - truth));
  }
  if (cell.n_ok == 0) return cell;
  const Vector mean = mean_acc.value() / cell.n_ok;
  cell.bias = mean - truth;
  cell.mse = mse_acc.value() / cell.n_ok;

  KahanMatrix cov_acc(dim, dim);
  KahanVector var_acc(dim);
  KahanVector cov90(dim), cov95(dim), cov99(dim);
  for (const RepFit& r : reps) {
    if (!r.ok) continue;
    const Vector centered = r.est - mean;
    var_acc.add(centered.cwiseProduct(centered));
    const Vector scaled = root_bN * (r.est - truth);
    const Vector scaled_centered = scaled - root_bN * cell.bias;
    cov_acc.add(scaled_centered * scaled_centered.transpose());
    if (r.has_se) {
      ++cell.n_cov;
      Vector c90(dim), c95(dim), c99(dim);
      for (int i = 0; i < dim; ++i) {
        const double dev = std::abs(r.est[i] - truth[i]);
        c90[i] = dev <= q90 * r.se[i] ? 1.0 : 0.0;
        c95[i] = dev <= q95 * r.se[i] ? 1.0 : 0.0;
        c99[i] = dev <= q99 * r.se[i] ? 1.0 : 0.0;
      }
      cov90.add(c90);
      cov95.add(c95);
      cov99.add(c99);
    }
  }
  if (cell.n_ok > 1) {
    cell.scaled_cov = cov_acc.value() / (cell.n_ok - 1);
    cell.bias_stderr =
        (var_acc.value() / (cell.n_ok - 1) / cell.n_ok).cwiseSqrt();
  }
  if (cell.n_cov > 0) {
    cell.coverage90 = cov90.value() / cell.n_cov;
    cell.coverage95 = cov95.value() / cell.n_cov;
    cell.coverage99 = cov99.value() / cell.n_cov;
  }
  return cell;
}

}  // namespace mc_detail

// Run a replicated experiment. Replication r always uses
// derive_seed(base_seed, r), workers only fill their own slots, and cells
// are reduced in replication order, so the summary is a pure function of
// the config at any thread count.
inline ExperimentSummary run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto t_start = std::chrono::steady_clock::now();
  ExperimentSummary summary;
  summary.kind = config.kind;

  const int p = config.spec.order();
  const bool fit_kind = config.kind == ExperimentKind::BiasLaw ||
                        config.kind == ExperimentKind::CltCoverage ||
                        config.kind == ExperimentKind::BandwidthSweep;

  if (fit_kind) {
    const OmegaSpace omega = *config.omega;
    for (double u0 : config.u0s) {
      for (long N : config.Ns) {
        const std::vector<double> bs = config.b_rule.bandwidths(N);
        std::vector<KernelSpec> kernels;
        for (double b : bs) kernels.emplace_back(config.kernel_family, b);
        const long t0 = std::lround(u0 * static_cast<double>(N));
        const auto av = config.spec.coefficients(u0);
        Vector truth(p + 1);
        for (int j = 0; j <= p; ++j) truth[j] = av[j];

        // One simulated path per replication, fitted at every bandwidth;
        // bandwidth cells share innovations by construction.
        std::vector<std::vector<mc_detail::RepFit>> slots(
            config.reps, std::vector<mc_detail::RepFit>(bs.size()));
        mc_detail::parallel_reps(
            config.reps, config.threads, [&](int r) {
              const std::uint64_t seed_r = derive_seed(config.base_seed, r);
              SamplePath path;
              try {
                path = simulate_tvarch(config.spec, N, seed_r,
                                       StartMode::StationaryStart);
              } catch (const Error&) {
                return;  // all cells stay failed for this replication
              }
              for (std::size_t bi = 0; bi < bs.size(); ++bi) {
                mc_detail::RepFit& slot = slots[r][bi];
                try {
                  const LocalData data =
                      make_local_data(path, t0, kernels[bi], p);
                  FitResult fit = fit_local(data, omega);
                  if (!fit.converged) continue;
                  slot.ok = true;
                  slot.est = fit.estimate;
                  if (fit.active_constraints.empty()) {
                    try {
                      fit = standard_errors(fit, data);
                      slot.has_se = true;
                      slot.se = fit.stderr_;
                    } catch (const SingularSigma&) {
                    }
                  }
                } catch (const Error&) {
                }
              }
            });
        for (std::size_t bi = 0; bi < bs.size(); ++bi) {
          std::vector<mc_detail::RepFit> col(config.reps);
          for (int r = 0; r < config.reps; ++r) col[r] = slots[r][bi];
          summary.cells.push_back(
              mc_detail::reduce_fit_cell(u0, N, bs[bi], truth, col));
          summary.total_reps += config.reps;
          summary.total_failures += summary.cells.back().n_fail;
        }
      }
    }
  } else if (config.kind == ExperimentKind::ApproximationRate) {
    for (double u0 : config.u0s) {
      for (long N : config.Ns) {
        for (double d : config.distances) {
          std::vector<double> residual(config.reps,
                                       std::numeric_limits<double>::quiet_NaN());
          mc_detail::parallel_reps(config.reps, config.threads, [&](int r) {
            try {
              residual[r] = taylor_residual(config.spec, u0, u0 + d, N,
                                            derive_seed(config.base_seed, r),
                                            config.taylor_order)
                                .abs_residual;
            } catch (const Error&) {
            }
          });
          CellResult cell;
          cell.u0 = u0;
          cell.N = N;
          cell.b = config.taylor_order;
          cell.distance = d;
          KahanSum mean, sq;
          for (double v : residual) {
            if (std::isnan(v)) { ++cell.n_fail; continue; }
            ++cell.n_ok;
            mean.add(v);
            sq.add(v * v);
          }
          if (cell.n_ok > 0) {
            cell.scalar_mean = mean.value() / cell.n_ok;
            const double var = std::max(
                0.0, sq.value() / cell.n_ok - cell.scalar_mean * cell.scalar_mean);
            cell.scalar_rmse = std::sqrt(sq.value() / cell.n_ok);
            cell.scalar_stderr =
                cell.n_ok > 1 ? std::sqrt(var / (cell.n_ok - 1)) : 0.0;
          }
          summary.cells.push_back(cell);
          summary.total_reps += config.reps;
          summary.total_failures += cell.n_fail;
        }
      }
    }
  } else {  // ErgodicSum
    for (double u0 : config.u0s) {
      for (long N : config.Ns) {
        for (double b : config.b_rule.bandwidths(N)) {
          const KernelSpec kernel(config.kernel_family, b);
          const long t0 = std::lround(u0 * static_cast<double>(N));
          const auto a = config.spec.coefficients(u0);
          double tail = 0.0;
          for (int j = 1; j <= p; ++j) tail += a[j];
          const double true_mean = a[0] / (1.0 - tail);

          std::vector<double> mu_hat(config.reps,
                                     std::numeric_limits<double>::quiet_NaN());
          mc_detail::parallel_reps(config.reps, config.threads, [&](int r) {
            try {
              const SamplePath path = simulate_stationary(
                  config.spec, u0, N, derive_seed(config.base_seed, r));
              const KernelWeights w = kernel_weights(kernel, t0, N, p);
              KahanSum acc;
              for (long k = w.k_first; k <= w.k_last(); ++k)
                acc.add(w.at(k) * path.x2_at(k));
              mu_hat[r] = acc.value();
            } catch (const Error&) {
            }
          });
          CellResult cell;
          cell.u0 = u0;
          cell.N = N;
          cell.b = b;
          cell.scalar_true = true_mean;
          KahanSum mean, sqdev;
          for (double v : mu_hat) {
            if (std::isnan(v)) { ++cell.n_fail; continue; }
            ++cell.n_ok;
            mean.add(v);
            sqdev.add((v - true_mean) * (v - true_mean));
          }
          if (cell.n_ok > 0) {
            cell.scalar_mean = mean.value() / cell.n_ok;
            cell.scalar_rmse = std::sqrt(sqdev.value() / cell.n_ok);
            double var = 0.0;
            for (double v : mu_hat)
              if (!std::isnan(v))
                var += (v - cell.scalar_mean) * (v - cell.scalar_mean);
            cell.scalar_stderr =
                cell.n_ok > 1
                    ? std::sqrt(var / (cell.n_ok - 1) / cell.n_ok)
                    : 0.0;
          }
          summary.cells.push_back(cell);
          summary.total_reps += config.reps;
          summary.total_failures += cell.n_fail;
        }
      }
    }
  }

  summary.runtime_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  if (summary.total_reps > 0 &&
      summary.total_failures > 0.01 * summary.total_reps)
    throw ExperimentFailure(
        "more than 1% of replications failed (" +
        std::to_string(summary.total_failures) + " of " +
        std::to_string(summary.total_reps) + ")");
  return summary;
}

}  // namespace tvarch
