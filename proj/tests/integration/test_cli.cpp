#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "tvarch/csv.hpp"
#include "tvarch/kernel.hpp"

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code = -1;
  std::string output;
};

RunResult run_cli(const std::string& args) {
  const std::string cmd = std::string(TVARCH_CLI_PATH) + " " + args + " 2>&1";
  std::array<char, 4096> buf;
  RunResult res;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  while (std::fgets(buf.data(), buf.size(), pipe)) res.output += buf.data();
  const int status = pclose(pipe);
  res.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return res;
}

fs::path temp_dir() {
  const fs::path dir =
      fs::temp_directory_path() / ("tvarch_cli_test_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& p, const std::string& body) {
  std::ofstream os(p);
  os << body;
}

std::string read_file(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

const char* kConstArch0 = R"(
model {
  p = 0
  innovation = gaussian
  rho = 0.3
  Q = 0.5
  nu = 0.2
  M = 1.0
  curve a0 { family = constant coeffs = 1.5 }
}
omega { rho1 = 0.05 rho2 = 5 }
kernel { family = rectangular b = 0.2 }
)";

const char* kViolatingSpec = R"(
model {
  p = 1
  innovation = gaussian
  rho = 0.1
  Q = 0.5
  nu = 0.2
  M = 1.0
  curve a0 { family = constant coeffs = 0.5 }
  curve a1 { family = constant coeffs = 1.0 }
}
)";

}  // namespace

TEST_CASE("validate: pass, fail and parse-error exit codes") {
  const fs::path dir = temp_dir();
  write_file(dir / "good.cfg", kConstArch0);
  write_file(dir / "bad.cfg", kViolatingSpec);
  write_file(dir / "broken.cfg", "model {\n  p 0\n}\n");

  const RunResult good = run_cli("validate " + (dir / "good.cfg").string());
  REQUIRE(good.code == 0);
  REQUIRE(good.output.find("PASS") != std::string::npos);

  const RunResult bad = run_cli("validate " + (dir / "bad.cfg").string());
  REQUIRE(bad.code == 1);
  REQUIRE(bad.output.find("sup a1") != std::string::npos);

  const RunResult broken = run_cli("validate " + (dir / "broken.cfg").string());
  REQUIRE(broken.code == 2);
}

TEST_CASE("simulate: deterministic output, constant variance column") {
  const fs::path dir = temp_dir();
  write_file(dir / "model.cfg", kConstArch0);
  const std::string out1 = (dir / "path1.csv").string();
  const std::string out2 = (dir / "path2.csv").string();

  const std::string flags = "simulate " + (dir / "model.cfg").string() +
                            " --n 500 --seed 7 --mode stationary-start";
  REQUIRE(run_cli(flags + " --out " + out1).code == 0);
  REQUIRE(run_cli(flags + " --out " + out2).code == 0);
  REQUIRE(read_file(out1) == read_file(out2));
  REQUIRE(fs::exists(out1 + ".manifest"));

  // p = 0, constant a0: every sigma2 value is exactly 1.5
  std::ifstream is(out1);
  std::string line;
  std::getline(is, line);  // comment
  std::getline(is, line);  // header
  REQUIRE(line == "t,x2,sigma2,z");
  int rows = 0;
  while (std::getline(is, line)) {
    std::stringstream ss(line);
    std::string tok;
    std::getline(ss, tok, ',');
    std::getline(ss, tok, ',');
    std::getline(ss, tok, ',');
    REQUIRE(tok == "1.5");
    ++rows;
  }
  REQUIRE(rows == 500);
}

TEST_CASE("simulate: start modes differ only in early transients") {
  const fs::path dir = temp_dir();
  write_file(dir / "m.cfg", R"(
model {
  p = 1
  innovation = gaussian
  rho = 0.1
  Q = 0.5
  nu = 0.2
  M = 1.0
  curve a0 { family = constant coeffs = 0.5 }
  curve a1 { family = constant coeffs = 0.4 }
}
)");
  const std::string pe = (dir / "pe.csv").string();
  const std::string ss_out = (dir / "ss.csv").string();
  REQUIRE(run_cli("simulate " + (dir / "m.cfg").string() +
                  " --n 4000 --seed 3 --mode paper-exact --out " + pe)
              .code == 0);
  REQUIRE(run_cli("simulate " + (dir / "m.cfg").string() +
                  " --n 4000 --seed 3 --mode stationary-start --out " + ss_out)
              .code == 0);

  auto load_x2 = [](const std::string& p) {
    std::ifstream is(p);
    return tvarch::read_x2_csv(is);
  };
  const auto a = load_x2(pe);
  const auto b = load_x2(ss_out);
  double acc = 0.0;
  long n = 0;
  for (std::size_t t = 512; t < a.size(); ++t) {
    acc += std::abs(a[t] - b[t]);
    ++n;
  }
  REQUIRE(acc / n < 1e-6);
}

TEST_CASE("fit: single anchor, closed-form oracle, boundary exit") {
  const fs::path dir = temp_dir();
  write_file(dir / "m.cfg", kConstArch0);
  const std::string data = (dir / "data.csv").string();
  REQUIRE(run_cli("simulate " + (dir / "m.cfg").string() +
                  " --n 2000 --seed 11 --mode stationary-start --out " + data)
              .code == 0);

  const std::string fits = (dir / "fits.csv").string();
  const RunResult fit =
      run_cli("fit " + data + " --t0 1000 --b 0.2 --kernel rectangular "
              "--omega 0,0.05,5 --out " + fits);
  REQUIRE(fit.code == 0);

  // one data row
  std::ifstream is(fits);
  std::string header, row, extra;
  REQUIRE(std::getline(is, header));
  REQUIRE(std::getline(is, row));
  REQUIRE_FALSE(std::getline(is, extra));

  // closed-form oracle: the kernel-weighted mean of x2 around t0
  std::ifstream ds(data);
  const std::vector<double> x2 = tvarch::read_x2_csv(ds);
  const tvarch::KernelSpec kernel(tvarch::KernelFamily::Rectangular, 0.2);
  const tvarch::KernelWeights w = tvarch::kernel_weights(kernel, 1000, 2000, 0);
  double num = 0.0, den = 0.0;
  for (long k = w.k_first; k <= w.k_last(); ++k) {
    num += w.at(k) * x2[k - 1];
    den += w.at(k);
  }
  std::stringstream rs(row);
  std::string tok;
  for (int i = 0; i < 4; ++i) std::getline(rs, tok, ',');  // t0,u0,b,a0
  REQUIRE_THAT(std::stod(tok),
               Catch::Matchers::WithinAbs(num / den, 1e-8));

  // grid past the boundary in strict mode
  const RunResult boundary =
      run_cli("fit " + data + " --grid 10:1990:990 --b 0.2 "
              "--omega 0,0.05,5 --out " + (dir / "b.csv").string());
  REQUIRE(boundary.code == 1);
}

TEST_CASE("experiment: smoke run, determinism and failure exit") {
  const fs::path dir = temp_dir();
  write_file(dir / "exp.cfg", R"(
model {
  p = 0
  innovation = gaussian
  rho = 0.3
  Q = 0.5
  nu = 0.2
  M = 6.3
  curve a0 { family = sinusoid coeffs = 2 1 0 1 }
}
omega { rho1 = 0.1 rho2 = 5 }
experiment {
  kind = bias-law
  reps = 8
  u0 = 0.5
  N = 2000
  b = 0.2
  base_seed = 5
}
)");
  const std::string d1 = (dir / "out1").string();
  const std::string d2 = (dir / "out2").string();
  REQUIRE(run_cli("experiment " + (dir / "exp.cfg").string() + " --out-dir " +
                  d1).code == 0);
  REQUIRE(run_cli("experiment " + (dir / "exp.cfg").string() + " --out-dir " +
                  d2).code == 0);
  REQUIRE(read_file(d1 + "/summary.csv") == read_file(d2 + "/summary.csv"));
  REQUIRE(fs::exists(d1 + "/manifest.txt"));

  // reps = 1 smoke
  write_file(dir / "one.cfg", R"(
model {
  p = 0
  innovation = gaussian
  rho = 0.3
  Q = 0.5
  nu = 0.2
  M = 6.3
  curve a0 { family = sinusoid coeffs = 2 1 0 1 }
}
omega { rho1 = 0.1 rho2 = 5 }
experiment {
  kind = clt-coverage
  reps = 1
  u0 = 0.5
  N = 2000
  b = 0.2
  base_seed = 5
}
)");
  REQUIRE(run_cli("experiment " + (dir / "one.cfg").string() + " --out-dir " +
                  (dir / "one").string())
              .code == 0);

  // boundary anchor: all replications fail -> exit 1
  write_file(dir / "failing.cfg", R"(
model {
  p = 0
  innovation = gaussian
  rho = 0.3
  Q = 0.5
  nu = 0.2
  M = 6.3
  curve a0 { family = sinusoid coeffs = 2 1 0 1 }
}
omega { rho1 = 0.1 rho2 = 5 }
experiment {
  kind = clt-coverage
  reps = 8
  u0 = 0.02
  N = 2000
  b = 0.2
  base_seed = 5
}
)");
  REQUIRE(run_cli("experiment " + (dir / "failing.cfg").string() +
                  " --out-dir " + (dir / "failing").string())
              .code == 1);
}

TEST_CASE("asymptotics: closed forms, zero-bias flag, stencil failure") {
  const fs::path dir = temp_dir();
  write_file(dir / "cos.cfg", R"(
model {
  p = 0
  innovation = gaussian
  rho = 0.3
  Q = 0.5
  nu = 0.2
  M = 6.3
  curve a0 { family = sinusoid coeffs = 2 1 0 1 }
}
kernel { family = rectangular b = 0.2 }
)");
  const RunResult cos_run = run_cli(
      "asymptotics " + (dir / "cos.cfg").string() + " --u0 0.5 --n 4000");
  REQUIRE(cos_run.code == 0);
  REQUIRE(cos_run.output.find("closed-form") != std::string::npos);
  REQUIRE(cos_run.output.find("sigma[0] = 0.5") != std::string::npos);
  REQUIRE(cos_run.output.find("-1.6449") != std::string::npos);
  REQUIRE(cos_run.output.find("0.1358") != std::string::npos);

  write_file(dir / "const.cfg", kConstArch0);
  const RunResult flat = run_cli(
      "asymptotics " + (dir / "const.cfg").string() + " --u0 0.5 --n 4000");
  REQUIRE(flat.code == 0);
  REQUIRE(flat.output.find("zero_bias = 1") != std::string::npos);

  write_file(dir / "p1.cfg", R"(
model {
  p = 1
  innovation = gaussian
  rho = 0.3
  Q = 0.2
  nu = 0.5
  M = 1.3
  curve a0 { family = sinusoid coeffs = 0.6 0 0.2 1 }
  curve a1 { family = polynomial coeffs = 0.15 0.05 }
}
kernel { family = rectangular b = 0.2 }
)");
  const RunResult stencil = run_cli(
      "asymptotics " + (dir / "p1.cfg").string() +
      " --u0 0.01 --n 4000 --mc-n 500 --reps 2");
  REQUIRE(stencil.code == 1);
}
