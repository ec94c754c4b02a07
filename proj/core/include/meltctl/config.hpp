#pragma once

#include <array>
#include <string>

#include "meltctl/control.hpp"
#include "meltctl/mesh.hpp"

namespace meltctl {

struct MeshSpec {
  int dimension = 1;
  std::array<double, 2> extents{4.0, 0.0};
  std::array<int, 2> cells{400, 0};
};

struct VelocitySpec {
  enum class Kind { Constant, Rotation };
  Kind kind = Kind::Constant;
  Point value{0.0, 0.0};
  double omega = 0.0;
};

enum class Benchmark { Example1, Example2, Rest, File };

struct SimulationConfig {
  MeshSpec mesh;
  double tau = 0.01;
  int steps = 300;
  double kappa = 1.0;
  VelocitySpec velocity;
  double nu = 1e-4;
  Benchmark benchmark = Benchmark::Example1;
  std::string benchmark_file;
  double gamma0 = 1e-3;
  double growth = 1.5;
  int count = 40;
  EpsilonRule epsilon_rule;
  std::string output_dir = "output";
  int write_fields_every = 0;  // 0: never
  double xi0 = 1.0;            // initial solid fraction (uniform)
  PathOptions path;

  PathSchedule schedule() const { return make_schedule(gamma0, growth, count, epsilon_rule); }
  void validate() const;
};

// Sectioned key-value text:
//   [mesh] dimension, extents, cells   [time] tau, steps
//   [physics] kappa, velocity          [control] nu, benchmark
//   [schedule] gamma0, growth, count, epsilon_rule
//   [output] dir, write_fields_every
// Lines starting with ';' or '#' are comments. Unknown keys are errors.
SimulationConfig parse_config(const std::string& text, const std::string& source = "<string>");
SimulationConfig load_config(const std::string& path);

// Desk-scale reduction used in CI: Example 1 keeps at most 100 steps,
// Example 2 runs on the 25x50 grid.
SimulationConfig fast_variant(SimulationConfig cfg);

SimulationConfig example1_config();
SimulationConfig example2_config();

std::string to_string(Benchmark b);

}  // namespace meltctl
