#include "meltctl/driver.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <ostream>

#include "meltctl/benchmarks.hpp"
#include "meltctl/errors.hpp"
#include "meltctl/state.hpp"

namespace meltctl {

StructuredMesh build_mesh(const MeshSpec& spec) {
  if (spec.dimension == 1) {
    return build_interval_mesh(spec.extents[0], spec.cells[0], {BoundaryTag::Control, BoundaryTag::Dirichlet});
  }
  return build_rectangle_mesh(spec.extents[0], spec.extents[1], spec.cells[0], spec.cells[1],
                              {BoundaryTag::Control, BoundaryTag::Neumann, BoundaryTag::Dirichlet,
                               BoundaryTag::Dirichlet});
}

VelocityField build_velocity(const SimulationConfig& cfg, const StructuredMesh& mesh) {
  if (cfg.velocity.kind == VelocitySpec::Kind::Rotation) {
    return rotation_velocity(cfg.velocity.omega,
                             {0.5 * (mesh.lower[0] + mesh.upper[0]), 0.5 * (mesh.lower[1] + mesh.upper[1])});
  }
  return constant_velocity(cfg.velocity.value);
}

namespace {

DesiredState desired_at(const SimulationConfig& cfg, const StructuredMesh& mesh, double t,
                        const DesiredState* file_state) {
  switch (cfg.benchmark) {
    case Benchmark::Example1: return example1_fields(t, mesh);
    case Benchmark::Example2: return example2_fields(mesh);
    case Benchmark::Rest: return rest_fields(mesh);
    case Benchmark::File: return *file_state;
  }
  return rest_fields(mesh);
}

std::string step_file(const std::filesystem::path& dir, const char* stem, int n) {
  char name[64];
  std::snprintf(name, sizeof name, "%s_%d.csv", stem, n);
  return (dir / name).string();
}

}  // namespace

SimulationResult run_simulation(const SimulationConfig& cfg, const RunOptions& opts,
                                const std::function<void(const StepView&)>& on_step) {
  cfg.validate();
  SimulationResult res;
  res.mesh = build_mesh(cfg.mesh);
  const StructuredMesh& mesh = res.mesh;
  const StateOperators ops = assemble_operators(mesh, cfg.kappa, cfg.tau);
  const VelocityField velocity = build_velocity(cfg, mesh);
  const PathSchedule schedule = cfg.schedule();

  std::unique_ptr<DesiredState> file_state;
  if (cfg.benchmark == Benchmark::File) {
    file_state = std::make_unique<DesiredState>(load_desired_state(cfg.benchmark_file, mesh));
  }

  std::filesystem::path dir(cfg.output_dir);
  std::unique_ptr<RecordWriter> writer;
  if (opts.write_files) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
    writer = std::make_unique<RecordWriter>((dir / "records.csv").string());
  }

  Vector y = Vector::Zero(mesh.num_nodes());
  Vector xi = Vector::Constant(mesh.num_nodes(), cfg.xi0);
  Vector u = Vector::Zero(ops.num_controls());
  std::vector<ActiveSets> hints;

  for (int n = 1; n <= cfg.steps; ++n) {
    const auto start = std::chrono::steady_clock::now();
    const double t = n * cfg.tau;
    const Feet feet = characteristic_feet(mesh, velocity, t, cfg.tau);
    const AdvectedPair adv = advect(mesh, feet, y, xi);
    const DesiredState desired = desired_at(cfg, mesh, t, file_state.get());

    ControlProblemData data{desired.y_d, desired.xi_d, cfg.nu, adv};
    const PathResult path = solve_penalized_step(data, ops, schedule, &u, &hints, cfg.path);
    hints = path.sets;
    u = path.state.u.cwiseMax(0.0);

    const StateSolution st = solve_state(ops, u, adv);
    const MaximumPrincipleReport mp = check_maximum_principle(st);
    res.worst_sign_violation = std::max(res.worst_sign_violation, mp.worst_violation);
    if (!mp.ok) {
      throw SolverError("step " + std::to_string(n) + ": stored state violates the maximum principle at node " +
                        std::to_string(mp.worst_node) + " (" + mp.field + ")");
    }
    y = st.y;
    xi = st.xi;

    TimeStepRecord rec;
    rec.step = n;
    rec.time = t;
    rec.u = u;
    const JTerms jt = evaluate_J_terms(data, ops, y, xi, u);
    rec.J = jt.total();
    rec.J_state = jt.state;
    rec.J_xi = jt.xi;
    rec.J_u = jt.control;
    rec.penalty_end = path.trace.back().penalty;
    rec.comp_residual = st.complementarity_residual;
    rec.kkt = path.trace.back().residuals;
    if (cfg.benchmark == Benchmark::Example1) {
      const double ref = std::sqrt(l2_norm_sq(ops, desired.y_d));
      rec.err_y_l2 = ref > 0.0 ? std::sqrt(l2_norm_sq(ops, y - desired.y_d)) / ref : NAN;
      const Vector uex = Vector::Constant(u.size(), example1_control(t));
      const Vector& w = ops.control_weights;
      rec.err_u_rel = std::sqrt((u - uex).cwiseAbs2().dot(w)) / std::sqrt(uex.cwiseAbs2().dot(w));
    }
    const auto stop = std::chrono::steady_clock::now();
    rec.wall_ms = opts.record_timing ? std::chrono::duration<double, std::milli>(stop - start).count() : 0.0;

    if (writer) {
      writer->append(rec);
      if (cfg.write_fields_every > 0 && (n % cfg.write_fields_every == 0 || n == cfg.steps)) {
        write_fields(step_file(dir, "fields", n), mesh, y, xi);
        write_control(step_file(dir, "control", n), mesh, ops.control_nodes, u);
      }
    }
    if (opts.log) {
      char line[256];
      std::snprintf(line, sizeof line, "step %4d  t=%-8.4g J=%-12.6g penalty=%-10.3g kkt=%-10.3g %8.1f ms\n", n, t,
                    rec.J, rec.penalty_end, rec.kkt.max(),
                    std::chrono::duration<double, std::milli>(stop - start).count());
      *opts.log << line << std::flush;
    }
    if (on_step) on_step(StepView{rec, y, xi, desired.y_d, desired.xi_d, path, adv});
    res.records.push_back(std::move(rec));
  }
  res.y = y;
  res.xi = xi;
  res.u = u;
  return res;
}

}  // namespace meltctl
