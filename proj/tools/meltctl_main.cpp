#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <random>

#include "meltctl/driver.hpp"
#include "meltctl/errors.hpp"
#include "meltctl/oracle.hpp"
#include "meltctl/verify.hpp"

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kSolver = 3, kIo = 4 };

int cmd_run(const std::string& path, const std::string& output_dir, bool fast, bool no_timing, bool quiet) {
  meltctl::SimulationConfig cfg = meltctl::load_config(path);
  if (fast) cfg = meltctl::fast_variant(cfg);
  if (!output_dir.empty()) cfg.output_dir = output_dir;
  meltctl::RunOptions ro;
  ro.record_timing = !no_timing;
  ro.log = quiet ? nullptr : &std::cerr;
  const meltctl::SimulationResult res = meltctl::run_simulation(cfg, ro);
  const meltctl::TimeStepRecord& last = res.records.back();
  std::printf("%d steps, final J = %.6g, worst sign violation = %.3g, records in %s/records.csv\n",
              static_cast<int>(res.records.size()), last.J, res.worst_sign_violation, cfg.output_dir.c_str());
  return kOk;
}

int cmd_verify(const std::string& path, bool fast) {
  meltctl::SimulationConfig cfg = meltctl::load_config(path);
  if (fast) cfg = meltctl::fast_variant(cfg);
  bool all = true;
  for (const meltctl::CheckResult& c : meltctl::verify_first_step(cfg)) {
    std::printf("%-4s %-34s %.3e (tol %.1e)%s%s\n", c.passed ? "ok" : "FAIL", c.name.c_str(), c.value, c.tolerance,
                c.detail.empty() ? "" : "  ", c.detail.c_str());
    all = all && c.passed;
  }
  return all ? kOk : kFailure;
}

int cmd_oracle(int nodes, int instances, unsigned long seed) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int k = 0; k < instances; ++k) {
    const meltctl::TinyInstance inst = meltctl::random_instance(nodes, rng);
    const meltctl::EnumerationResult ref = meltctl::enumerate_state(inst.ops, inst.u, inst.advected);
    const meltctl::StateSolution st = meltctl::solve_state(inst.ops, inst.u, inst.advected);
    const double dy = (st.y - ref.solution.y).lpNorm<Eigen::Infinity>();
    const double dxi = (st.xi - ref.solution.xi).lpNorm<Eigen::Infinity>();
    worst = std::max({worst, dy, dxi});
  }
  std::printf("%d instances with %d free nodes, max deviation from enumeration %.3e\n", instances, nodes, worst);
  return worst <= 1e-10 ? kOk : kFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal control of a melting process with advection"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output_dir;
  bool fast = false;
  bool no_timing = false;
  bool quiet = false;
  auto* run = app.add_subcommand("run", "Run a simulation described by a config file");
  run->add_option("--config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  run->add_option("--output-dir", output_dir, "Override [output] dir");
  run->add_flag("--fast", fast, "Reduced step count or grid");
  run->add_flag("--no-timing", no_timing, "Write wall_ms = 0 for reproducible records");
  run->add_flag("-q,--quiet", quiet, "No per-step log");

  auto* verify = app.add_subcommand("verify", "Solve the first step and check solution invariants");
  verify->add_option("--config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  verify->add_flag("--fast", fast, "Reduced grid");

  int nodes = 8;
  int instances = 50;
  unsigned long seed = 1;
  auto* oracle = app.add_subcommand("oracle", "Compare the state solver with exhaustive enumeration");
  oracle->add_option("--nodes", nodes, "Free nodes per instance")->check(CLI::Range(2, 16));
  oracle->add_option("--instances", instances, "Number of random instances")->check(CLI::PositiveNumber);
  oracle->add_option("--seed", seed, "Random seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config_path, output_dir, fast, no_timing, quiet);
    if (*verify) return cmd_verify(config_path, fast);
    if (*oracle) return cmd_oracle(nodes, instances, seed);
  } catch (const meltctl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const meltctl::InvalidArgument& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return kConfig;
  } catch (const meltctl::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kIo;
  } catch (const meltctl::SolverError& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return kSolver;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kOk;
}
