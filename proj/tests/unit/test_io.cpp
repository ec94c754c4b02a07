#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "meltctl/benchmarks.hpp"
#include "meltctl/config.hpp"
#include "meltctl/driver.hpp"
#include "meltctl/errors.hpp"
#include "meltctl/records.hpp"
#include "meltctl/state.hpp"

using namespace meltctl;
namespace fs = std::filesystem;

namespace {

const char* kExample1 = R"(# comment
[mesh]
dimension = 1
extents = 4.0
cells = 400
[time]
tau = 0.01
steps = 300
[physics]
kappa = 1.0
velocity = 0.0
[control]
nu = 1e-4
benchmark = example1
[schedule]
gamma0 = 1e-3
growth = 1.5
count = 40
epsilon_rule = 1/(1e3+gamma^4)
[output]
dir = out/e1
write_fields_every = 50
)";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("meltctl_test_" + name);
  fs::remove_all(p);
  return p;
}

SimulationConfig small_slab(int steps) {
  SimulationConfig cfg = example1_config();
  cfg.mesh.extents = {1.0, 0.0};
  cfg.mesh.cells = {40, 0};
  cfg.steps = steps;
  return cfg;
}

}  // namespace

TEST(Config, ParsesFullFile) {
  const SimulationConfig c = parse_config(kExample1);
  EXPECT_EQ(c.mesh.dimension, 1);
  EXPECT_EQ(c.mesh.cells[0], 400);
  EXPECT_DOUBLE_EQ(c.mesh.extents[0], 4.0);
  EXPECT_DOUBLE_EQ(c.tau, 0.01);
  EXPECT_EQ(c.steps, 300);
  EXPECT_EQ(c.benchmark, Benchmark::Example1);
  EXPECT_DOUBLE_EQ(c.epsilon_rule.offset, 1e3);
  EXPECT_DOUBLE_EQ(c.epsilon_rule.power, 4.0);
  EXPECT_EQ(c.output_dir, "out/e1");
  EXPECT_EQ(c.write_fields_every, 50);
  const PathSchedule s = c.schedule();
  EXPECT_EQ(s.size(), 40);
}

TEST(Config, ParsesTwoDimensionalVelocities) {
  const std::string base = "[mesh]\ndimension = 2\nextents = 2 4\ncells = 50 100\n[time]\ntau = 0.1\nsteps = 15\n"
                           "[control]\nbenchmark = example2\n[physics]\n";
  const SimulationConfig c = parse_config(base + "velocity = -0.5 0\n");
  EXPECT_EQ(c.velocity.kind, VelocitySpec::Kind::Constant);
  EXPECT_DOUBLE_EQ(c.velocity.value[0], -0.5);
  const SimulationConfig r = parse_config(base + "velocity = rotation 0.25\n");
  EXPECT_EQ(r.velocity.kind, VelocitySpec::Kind::Rotation);
  EXPECT_DOUBLE_EQ(r.velocity.omega, 0.25);
  const SimulationConfig f = fast_variant(c);
  EXPECT_EQ(f.mesh.cells[0], 25);
  EXPECT_EQ(f.mesh.cells[1], 50);
}

TEST(Config, RejectsInvalidInput) {
  const std::string ok(kExample1);
  auto replace = [&](const std::string& from, const std::string& to) {
    std::string s = ok;
    s.replace(s.find(from), from.size(), to);
    return s;
  };
  EXPECT_THROW(parse_config(ok + "[extra]\nfoo = 1\n"), ConfigError);
  EXPECT_THROW(parse_config(replace("kappa = 1.0", "conductivity = 1.0")), ConfigError);
  EXPECT_THROW(parse_config(replace("tau = 0.01", "tau = -1")), ConfigError);
  EXPECT_THROW(parse_config(replace("tau = 0.01", "tau = fast")), ConfigError);
  EXPECT_THROW(parse_config(replace("cells = 400", "cells = 1")), ConfigError);
  EXPECT_THROW(parse_config(replace("benchmark = example1", "benchmark = example3")), ConfigError);
  EXPECT_THROW(parse_config(replace("benchmark = example1", "benchmark = example2")), ConfigError);
  EXPECT_THROW(parse_config(replace("growth = 1.5", "growth = 0.9")), ConfigError);
  EXPECT_THROW(parse_config(replace("1/(1e3+gamma^4)", "gamma^-4")), ConfigError);
  EXPECT_THROW(parse_config(replace("steps = 300\n", "")), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/config.ini"), ConfigError);
}

TEST(Records, HeaderOnlyForEmptyList) {
  const fs::path dir = scratch("records_empty");
  fs::create_directories(dir);
  write_records({}, (dir / "r.csv").string());
  const std::string text = slurp(dir / "r.csv");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1);
  EXPECT_EQ(text.rfind("step,time,J,J_state_term,J_xi_term,J_u_term,penalty_end,comp_residual,kkt_r1", 0), 0u);
  EXPECT_NE(text.find("err_y_l2,err_u_rel,wall_ms"), std::string::npos);
}

TEST(Records, RoundTripAtFullPrecision) {
  const fs::path dir = scratch("records_rt");
  fs::create_directories(dir);
  std::vector<TimeStepRecord> recs(3);
  for (int k = 0; k < 3; ++k) {
    recs[k].step = k + 1;
    recs[k].time = 0.1 * (k + 1);
    recs[k].J = std::exp(-1.0 / 3.0 * k) / 7.0;
    recs[k].J_state = 1.0 / 3.0;
    recs[k].penalty_end = 1e-300 * (k + 1);
    recs[k].kkt.r[2] = M_PI;
    recs[k].err_y_l2 = k == 1 ? NAN : 0.1;
    recs[k].wall_ms = 12.5;
  }
  const std::string path = (dir / "r.csv").string();
  write_records(recs, path);
  const std::string text = slurp(path);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4);
  const std::vector<TimeStepRecord> back = read_records(path);
  ASSERT_EQ(back.size(), 3u);
  for (int k = 0; k < 3; ++k) {
    EXPECT_EQ(back[k].step, recs[k].step);
    EXPECT_EQ(back[k].time, recs[k].time);
    EXPECT_EQ(back[k].J, recs[k].J);
    EXPECT_EQ(back[k].J_state, recs[k].J_state);
    EXPECT_EQ(back[k].penalty_end, recs[k].penalty_end);
    EXPECT_EQ(back[k].kkt.r[2], recs[k].kkt.r[2]);
    EXPECT_EQ(std::isnan(back[k].err_y_l2), std::isnan(recs[k].err_y_l2));
  }
  EXPECT_THROW(write_records(recs, (dir / "missing" / "r.csv").string()), IoError);
  EXPECT_THROW(read_records((dir / "none.csv").string()), IoError);
}

TEST(Benchmarks, ExampleOneFields) {
  const StructuredMesh m = build_interval_mesh(4.0, 400);
  const DesiredState d0 = example1_fields(0.0, m);
  EXPECT_EQ(d0.y_d.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(d0.xi_d.minCoeff(), 1.0);
  EXPECT_NEAR(example1_temperature(0.0, 3.0), std::exp(3.0) - 1.0, 1e-12);
  EXPECT_NEAR(example1_control(3.0), std::exp(3.0), 1e-12);
  EXPECT_EQ(example1_temperature(1.0, 1.0), 0.0);
  EXPECT_EQ(example1_solid_fraction(1.0, 1.0), 1.0);
  EXPECT_EQ(example1_solid_fraction(0.999, 1.0), 0.0);
}

TEST(Benchmarks, ExampleTwoFields) {
  const StructuredMesh m = build_rectangle_mesh(2.0, 4.0, 4, 8);
  const DesiredState d = example2_fields(m);
  const int apex = m.node_index(0, 4);   // (0, 2)
  const int beyond = m.node_index(3, 4);  // (1.5, 2)
  EXPECT_NEAR(d.y_d[apex], std::exp(1.0) - 1.0, 1e-14);
  EXPECT_EQ(d.xi_d[apex], 0.0);
  EXPECT_EQ(d.y_d[beyond], 0.0);
  EXPECT_EQ(d.xi_d[beyond], 1.0);
  EXPECT_EQ(example2_front(0.0), 0.0);
  EXPECT_EQ(example2_front(4.0), 0.0);
  EXPECT_DOUBLE_EQ(example2_front(2.0), 1.0);
}

TEST(Driver, RestConfigStaysAtTarget) {
  SimulationConfig cfg = small_slab(5);
  cfg.benchmark = Benchmark::Rest;
  RunOptions ro;
  ro.write_files = false;
  const SimulationResult r = run_simulation(cfg, ro);
  ASSERT_EQ(r.records.size(), 5u);
  for (const TimeStepRecord& rec : r.records) {
    EXPECT_LE(rec.J, 1e-10);
    EXPECT_LE(rec.u.norm(), 1e-8);
  }
}

TEST(Driver, StoredStateIsHandedOffUnchanged) {
  SimulationConfig cfg = small_slab(6);
  RunOptions ro;
  ro.write_files = false;
  Vector y_prev, xi_prev;
  int checked = 0;
  run_simulation(cfg, ro, [&](const StepView& v) {
    if (y_prev.size() > 0) {
      // Zero velocity: the advected pair is the previous stored state.
      EXPECT_EQ(v.advected.y_bar, y_prev);
      EXPECT_EQ(v.advected.xi_bar, xi_prev);
      ++checked;
    }
    y_prev = v.y;
    xi_prev = v.xi;
    EXPECT_TRUE(check_maximum_principle(v.y, v.xi).ok);
  });
  EXPECT_EQ(checked, 5);
}

TEST(Driver, EnthalpyIsConservedWithoutControl) {
  // All-Neumann slab, u = 0, v = 0: sum M_L (y - xi) is constant.
  const StructuredMesh m = build_interval_mesh(1.0, 30, {BoundaryTag::Neumann, BoundaryTag::Neumann});
  const StateOperators ops = assemble_operators(m, 1.0, 0.05);
  AdvectedPair adv{Vector::Zero(m.num_nodes()), Vector::Ones(m.num_nodes()), 0.0};
  for (int i = 0; i < m.num_nodes(); ++i) {
    if (m.nodes[i][0] < 0.4) {
      adv.y_bar[i] = 2.0 * (0.4 - m.nodes[i][0]);
      adv.xi_bar[i] = 0.0;
    }
  }
  const double h0 = ops.lumped_mass.dot(adv.y_bar - adv.xi_bar);
  for (int n = 0; n < 10; ++n) {
    const StateSolution s = solve_state(ops, Vector::Zero(0), adv);
    const double h = ops.lumped_mass.dot(s.y - s.xi);
    EXPECT_NEAR(h, h0, 1e-10 * std::abs(h0));
    adv = {s.y, s.xi, 0.0};
  }
}

TEST(Driver, WritesFilesAndIsDeterministic) {
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  SimulationConfig cfg = small_slab(8);
  cfg.write_fields_every = 4;
  RunOptions ro;
  ro.record_timing = false;
  cfg.output_dir = a.string();
  run_simulation(cfg, ro);
  cfg.output_dir = b.string();
  run_simulation(cfg, ro);
  const std::string ra = slurp(a / "records.csv");
  EXPECT_EQ(ra, slurp(b / "records.csv"));
  EXPECT_EQ(std::count(ra.begin(), ra.end(), '\n'), 9);
  EXPECT_TRUE(fs::exists(a / "fields_4.csv"));
  EXPECT_TRUE(fs::exists(a / "fields_8.csv"));
  EXPECT_TRUE(fs::exists(a / "control_8.csv"));
  EXPECT_EQ(read_records((a / "records.csv").string()).size(), 8u);
}
