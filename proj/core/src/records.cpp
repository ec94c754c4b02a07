#include "meltctl/records.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "meltctl/errors.hpp"

namespace meltctl {

const std::vector<std::string>& record_columns() {
  static const std::vector<std::string> cols = {
      "step",   "time",   "J",      "J_state_term", "J_xi_term", "J_u_term",   "penalty_end", "comp_residual",
      "kkt_r1", "kkt_r2", "kkt_r3", "kkt_r4",       "kkt_r5",    "err_y_l2",   "err_u_rel",   "wall_ms"};
  return cols;
}

std::string format_value(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string header_line() {
  std::string line;
  for (const auto& c : record_columns()) {
    if (!line.empty()) line += ',';
    line += c;
  }
  return line;
}

std::string row_line(const TimeStepRecord& r) {
  std::string line = std::to_string(r.step);
  for (double v : {r.time, r.J, r.J_state, r.J_xi, r.J_u, r.penalty_end, r.comp_residual, r.kkt.r[0], r.kkt.r[1],
                   r.kkt.r[2], r.kkt.r[3], r.kkt.r[4], r.err_y_l2, r.err_u_rel, r.wall_ms}) {
    line += ',';
    line += format_value(v);
  }
  return line;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::out | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

void check(std::ostream& out, const std::string& path) {
  if (!out) throw IoError("write to '" + path + "' failed");
}

}  // namespace

RecordWriter::RecordWriter(const std::string& path) : path_(path), out_(open_out(path)) {
  out_ << header_line() << '\n';
  out_.flush();
  check(out_, path_);
}

void RecordWriter::append(const TimeStepRecord& rec) {
  out_ << row_line(rec) << '\n';
  out_.flush();
  check(out_, path_);
}

void write_records(const std::vector<TimeStepRecord>& records, const std::string& path) {
  RecordWriter w(path);
  for (const auto& r : records) w.append(r);
}

std::vector<TimeStepRecord> read_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != header_line()) throw IoError("'" + path + "' has an unexpected header");
  std::vector<TimeStepRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> v;
    std::istringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) v.push_back(std::strtod(cell.c_str(), nullptr));
    if (v.size() != record_columns().size()) throw IoError("'" + path + "': malformed row");
    TimeStepRecord r;
    r.step = static_cast<int>(v[0]);
    r.time = v[1];
    r.J = v[2];
    r.J_state = v[3];
    r.J_xi = v[4];
    r.J_u = v[5];
    r.penalty_end = v[6];
    r.comp_residual = v[7];
    for (int k = 0; k < 5; ++k) r.kkt.r[k] = v[8 + k];
    r.err_y_l2 = v[13];
    r.err_u_rel = v[14];
    r.wall_ms = v[15];
    out.push_back(r);
  }
  return out;
}

void write_fields(const std::string& path, const StructuredMesh& mesh, const Vector& y, const Vector& xi) {
  auto out = open_out(path);
  out << (mesh.dimension == 1 ? "node_index,x,temperature,solid_fraction\n"
                              : "node_index,x,y,temperature,solid_fraction\n");
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    out << i << ',' << format_value(mesh.nodes[i][0]);
    if (mesh.dimension == 2) out << ',' << format_value(mesh.nodes[i][1]);
    out << ',' << format_value(y[i]) << ',' << format_value(xi[i]) << '\n';
  }
  out.flush();
  check(out, path);
}

void write_control(const std::string& path, const StructuredMesh& mesh, const std::vector<int>& control_nodes,
                   const Vector& u) {
  auto out = open_out(path);
  out << (mesh.dimension == 1 ? "node_index,x,u\n" : "node_index,x,y,u\n");
  for (std::size_t k = 0; k < control_nodes.size(); ++k) {
    const int i = control_nodes[k];
    out << i << ',' << format_value(mesh.nodes[i][0]);
    if (mesh.dimension == 2) out << ',' << format_value(mesh.nodes[i][1]);
    out << ',' << format_value(u[k]) << '\n';
  }
  out.flush();
  check(out, path);
}

}  // namespace meltctl
