#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "meltctl/config.hpp"
#include "meltctl/control.hpp"
#include "meltctl/fem.hpp"
#include "meltctl/mesh.hpp"
#include "meltctl/records.hpp"
#include "meltctl/semilag.hpp"

namespace meltctl {

struct RunOptions {
  bool write_files = true;
  bool record_timing = true;  // false writes wall_ms = 0 for byte-stable output
  std::ostream* log = nullptr;  // per-step summary lines; nullptr disables
};

// Everything a caller may want to inspect after a step.
struct StepView {
  const TimeStepRecord& record;
  const Vector& y;
  const Vector& xi;
  const Vector& y_desired;
  const Vector& xi_desired;
  const PathResult& path;
  const AdvectedPair& advected;
};

struct SimulationResult {
  StructuredMesh mesh;
  std::vector<TimeStepRecord> records;
  Vector y;
  Vector xi;
  Vector u;
  double worst_sign_violation = 0.0;  // over all stored states
};

StructuredMesh build_mesh(const MeshSpec& spec);
VelocityField build_velocity(const SimulationConfig& cfg, const StructuredMesh& mesh);

// Instantaneous-control time loop: advect, fetch desired state, path-solve,
// store the state response to the computed control, record. Records are
// streamed to <output_dir>/records.csv when write_files is set; on failure the
// rows written so far remain on disk and the exception propagates.
SimulationResult run_simulation(const SimulationConfig& cfg, const RunOptions& opts = {},
                                const std::function<void(const StepView&)>& on_step = {});

}  // namespace meltctl
