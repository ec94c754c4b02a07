#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "meltctl/control.hpp"
#include "meltctl/mesh.hpp"
#include "meltctl/types.hpp"

namespace meltctl {

struct TimeStepRecord {
  int step = 0;
  double time = 0.0;
  Vector u;
  double J = 0.0;
  double J_state = 0.0;
  double J_xi = 0.0;
  double J_u = 0.0;
  double penalty_end = 0.0;
  double comp_residual = 0.0;
  KktResiduals kkt;
  double err_y_l2 = NAN;
  double err_u_rel = NAN;
  double wall_ms = 0.0;
};

const std::vector<std::string>& record_columns();

// Formats a double with 17 significant digits; NaN prints as "nan".
std::string format_value(double v);

// Streams records.csv, flushing after every row so partial runs stay readable.
class RecordWriter {
 public:
  explicit RecordWriter(const std::string& path);
  void append(const TimeStepRecord& rec);
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ofstream out_;
};

void write_records(const std::vector<TimeStepRecord>& records, const std::string& path);
// Reads the scalar columns back (u is not part of records.csv).
std::vector<TimeStepRecord> read_records(const std::string& path);

void write_fields(const std::string& path, const StructuredMesh& mesh, const Vector& y, const Vector& xi);
void write_control(const std::string& path, const StructuredMesh& mesh, const std::vector<int>& control_nodes,
                   const Vector& u);

}  // namespace meltctl
