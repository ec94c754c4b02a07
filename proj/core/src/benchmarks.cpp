#include "meltctl/benchmarks.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "meltctl/errors.hpp"

namespace meltctl {

namespace {
constexpr double kFrontTol = 1e-12;
}

double example1_temperature(double x, double t) { return x < t - kFrontTol ? std::exp(t - x) - 1.0 : 0.0; }

double example1_solid_fraction(double x, double t) { return x >= t - kFrontTol ? 1.0 : 0.0; }

double example1_control(double t) { return std::exp(t); }

DesiredState example1_fields(double t, const StructuredMesh& mesh) {
  if (t < 0.0) throw InvalidArgument("example1_fields: t must be non-negative");
  DesiredState d;
  d.y_d.resize(mesh.num_nodes());
  d.xi_d.resize(mesh.num_nodes());
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    const double x = mesh.nodes[i][0];
    d.y_d[i] = example1_temperature(x, t);
    d.xi_d[i] = example1_solid_fraction(x, t);
  }
  return d;
}

double example2_front(double x2) { return 0.25 * (4.0 - x2) * x2; }

DesiredState example2_fields(const StructuredMesh& mesh) {
  if (mesh.dimension != 2) throw InvalidArgument("example2_fields: needs a 2D mesh");
  DesiredState d;
  d.y_d.resize(mesh.num_nodes());
  d.xi_d.resize(mesh.num_nodes());
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    const double x1 = mesh.nodes[i][0];
    const double front = example2_front(mesh.nodes[i][1]);
    const bool solid = x1 >= front - kFrontTol;
    d.y_d[i] = solid ? 0.0 : std::exp(front - x1) - 1.0;
    d.xi_d[i] = solid ? 1.0 : 0.0;
  }
  return d;
}

DesiredState rest_fields(const StructuredMesh& mesh) {
  return {Vector::Zero(mesh.num_nodes()), Vector::Ones(mesh.num_nodes())};
}

DesiredState load_desired_state(const std::string& path, const StructuredMesh& mesh) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open desired-state file '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw IoError("desired-state file '" + path + "' is empty");
  DesiredState d{Vector::Constant(mesh.num_nodes(), NAN), Vector::Constant(mesh.num_nodes(), NAN)};
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string a, b, c;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c)) {
      throw IoError(path + ":" + std::to_string(row) + ": expected node_index,y_d,xi_d");
    }
    int node = 0;
    try {
      node = std::stoi(a);
      if (node < 0 || node >= mesh.num_nodes()) throw std::out_of_range("node");
      d.y_d[node] = std::stod(b);
      d.xi_d[node] = std::stod(c);
    } catch (const std::exception&) {
      throw IoError(path + ":" + std::to_string(row) + ": malformed row");
    }
  }
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    if (std::isnan(d.y_d[i]) || std::isnan(d.xi_d[i])) {
      throw IoError(path + ": missing values for node " + std::to_string(i));
    }
  }
  return d;
}

}  // namespace meltctl
