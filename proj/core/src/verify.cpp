#include "meltctl/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "meltctl/benchmarks.hpp"
#include "meltctl/driver.hpp"
#include "meltctl/state.hpp"

namespace meltctl {

namespace {

CheckResult upper_bound(std::string name, double value, double tol, std::string detail = {}) {
  return {std::move(name), std::isfinite(value) && value <= tol, value, tol, std::move(detail)};
}

}  // namespace

std::vector<CheckResult> verify_first_step(const SimulationConfig& base) {
  SimulationConfig cfg = base;
  cfg.steps = 1;
  RunOptions ro;
  ro.write_files = false;
  ro.record_timing = false;

  std::vector<CheckResult> out;
  run_simulation(cfg, ro, [&](const StepView& v) {
    const StructuredMesh mesh = build_mesh(cfg.mesh);
    const StateOperators ops = assemble_operators(mesh, cfg.kappa, cfg.tau);
    const ControlProblemData data{v.y_desired, v.xi_desired, cfg.nu, v.advected};
    const PathResult& path = v.path;

    const MaximumPrincipleReport mp = check_maximum_principle(v.y, v.xi);
    out.push_back(upper_bound("maximum principle", mp.worst_violation, 1e-12, mp.field));

    const double scale = std::max(1.0, ops.lumped_mass.sum());
    out.push_back(upper_bound("complementarity", std::abs(v.record.comp_residual) / scale, 1e-10));

    out.push_back(upper_bound("kkt residual at path end", path.trace.back().residuals.max(), 1e-6));

    const double first = path.trace.front().penalty;
    const double last = path.trace.back().penalty;
    out.push_back(upper_bound("penalty decay", last - first, 0.0));

    double worst_gap = 0.0;
    for (const PathTraceEntry& e : path.trace) worst_gap = std::max(worst_gap, e.J - e.J_gamma);
    out.push_back(upper_bound("J_gamma >= J", worst_gap, 1e-12 * std::max(1.0, path.trace.back().J)));

    const KktState& s = path.state;
    Vector p_control(ops.num_controls());
    for (int j = 0; j < ops.num_controls(); ++j) p_control[j] = s.p[ops.control_nodes[j]];
    const Vector proj = project_u(p_control, ops.tau, cfg.nu);
    const double proj_err = (proj - s.u).lpNorm<Eigen::Infinity>() / std::max(1.0, s.u.lpNorm<Eigen::Infinity>());
    const double idem = (project_u(cfg.nu / ops.tau * proj, ops.tau, cfg.nu) - proj).lpNorm<Eigen::Infinity>();
    out.push_back(upper_bound("control projection", std::max(proj_err, idem), 1e-6));

    // Central differences of the reduced functional on the converged face,
    // where it is quadratic, in a few random directions.
    const double gamma = s.gamma;
    const double eps = s.epsilon;
    const ActiveSets& face = path.sets.back();
    const Vector u0 = s.u + Vector::Constant(s.u.size(), 0.05);
    const ReducedEvaluation ev = evaluate_reduced(data, ops, u0, gamma, eps, &face);
    std::mt19937_64 rng(7);
    std::normal_distribution<double> N(0.0, 1.0);
    double worst = 0.0;
    for (int k = 0; k < 5; ++k) {
      Vector d(u0.size());
      for (int j = 0; j < d.size(); ++j) d[j] = N(rng);
      d /= d.norm();
      const double h = 1e-3;
      const double vp = evaluate_reduced(data, ops, u0 + h * d, gamma, eps, &face).value;
      const double vm = evaluate_reduced(data, ops, u0 - h * d, gamma, eps, &face).value;
      const double fd = (vp - vm) / (2.0 * h);
      const double an = ev.gradient.dot(d);
      worst = std::max(worst, std::abs(fd - an) / std::max(1e-8, std::abs(an)));
    }
    out.push_back(upper_bound("reduced gradient vs differences", worst, 1e-5));
  });
  return out;
}

}  // namespace meltctl
