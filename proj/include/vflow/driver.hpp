#pragma once

#include <iostream>
#include <string>
#include <vector>

#include "vflow/io.hpp"

namespace vflow {

// Command implementations shared by the CLI binary and the test suites.
// Exit codes: 0 ok, 2 parse error (raised by the caller), 3 topology stop,
// 4 numerical failure, 5 certification fail.

struct SimulateResult {
  int exit_code = 0;
  double stop_time = -1;
  int steps_done = 0;
};

inline SimulateResult cmd_simulate(const Scenario& scn,
                                   const std::string& outdir) {
  SimulateResult res;
  const Materials mat = scenario_materials(scn);
  SimState s = scenario_state(scn);
  SeriesWriter writer(outdir, scn);
  std::string diag = diagnostics_header();
  const int steps = static_cast<int>(std::llround(scn.cfg.t_end / scn.cfg.dt));
  writer.add(s);
  diag += diagnostics_row(s, mat, scn.cfg);
  try {
    for (int i = 1; i <= steps; ++i) {
      s = step(s, mat, scn.cfg);
      diag += diagnostics_row(s, mat, scn.cfg);
      if (i % scn.snapshot_every == 0 || i == steps) writer.add(s);
      res.steps_done = i;
    }
  } catch (const SelfIntersection&) {
    res.exit_code = 3;
    res.stop_time = s.time;
    writer.stop_at(s.time);
  } catch (const std::runtime_error&) {
    res.exit_code = 4;
  }
  writer.finish();
  detail::write_file_atomic(outdir + "/diagnostics.csv", diag);
  return res;
}

inline int cmd_certify(const std::string& manifest_path, int n_tests,
                       std::uint64_t seed) {
  const Trajectory traj = load_trajectory(manifest_path);
  const ResidualReport rep = certify_all(traj, n_tests, seed);
  const std::string dir =
      std::filesystem::path(manifest_path).parent_path().string();
  const std::string base = dir.empty() ? "." : dir;
  detail::write_file_atomic(base + "/report.txt", encode_report_text(rep));
  detail::write_file_atomic(base + "/report.csv", encode_report_csv(rep));
  return rep.verdict ? 0 : 5;
}

// Convergence study: levels of simultaneous refinement n -> 2n, dt -> dt/2
// (same t_end, same snapshot cadence in steps so the snapshot gap halves
// too), certified against one fixed set of analytic test functions so the
// residuals are comparable across levels.
struct ConvergenceLevel {
  int n = 0;
  double dt = 0, h = 0;
  double ds5 = 0;         // worst transport residual
  double ds6 = 0;         // worst mass residual
  double energy_neg = 0;  // positive part of the energy-inequality defect
};

struct ConvergenceResult {
  std::vector<ConvergenceLevel> levels;
  double order_ds5 = 0, order_ds6 = 0, order_energy = 0;
};

namespace detail {

// Least-squares slope of log(res) vs log(h + dt); residuals at the
// floor (< 1e-13) report a large order.
inline double fitted_order(const std::vector<double>& hd,
                           const std::vector<double>& res) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const int n = static_cast<int>(hd.size());
  bool floored = true;
  for (double r : res) floored = floored && r < 1e-13;
  if (floored) return 99.0;
  for (int i = 0; i < n; ++i) {
    const double x = std::log(hd[i]);
    const double y = std::log(std::max(res[i], 1e-300));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

inline SampledScalarTest sample_scalar_terms(const Trajectory& traj,
                                             const std::vector<ModeTerm>& terms,
                                             int id) {
  SampledScalarTest out;
  out.id = id;
  const PeriodicGrid g = traj.grid();
  for (const auto& s : traj.snaps) {
    out.value.push_back(sample_terms(g, terms, s.time, false));
    out.dtv.push_back(sample_terms(g, terms, s.time, true));
  }
  return out;
}

}  // namespace detail

inline ConvergenceResult convergence_study(const Scenario& base, int levels,
                                           std::uint64_t seed = 17) {
  ConvergenceResult res;
  // Fixed analytic test functions, drawn once: the coarsest level's
  // snapshot gap caps the temporal frequencies for every level.
  std::mt19937_64 rng(seed);
  const double gap0 = base.snapshot_every * base.cfg.dt;
  std::vector<std::vector<detail::ModeTerm>> scalar_terms;
  for (int t = 0; t < 3; ++t)
    scalar_terms.push_back(
        detail::random_terms(rng, std::max(1, base.cfg.N / 2), base.cfg.t_end,
                             gap0));

  std::vector<double> hd, r5, r6, re;
  for (int lvl = 0; lvl < levels; ++lvl) {
    Scenario scn = base;
    scn.n = base.n << lvl;
    scn.cfg.dt = base.cfg.dt / (1 << lvl);
    const Materials mat = scenario_materials(scn);
    SimState s = scenario_state(scn);
    Trajectory traj;
    traj.cfg = scn.cfg;
    traj.mat = mat;
    traj.rho_lo = scn.rho_lo;
    traj.rho_hi = scn.rho_hi;
    traj.snaps.push_back({s.time, s.rho, s.chi, s.u, s.curve});
    const int steps = static_cast<int>(std::llround(scn.cfg.t_end / scn.cfg.dt));
    for (int i = 1; i <= steps; ++i) {
      s = step(s, mat, scn.cfg);
      if (i % scn.snapshot_every == 0 || i == steps)
        traj.snaps.push_back({s.time, s.rho, s.chi, s.u, s.curve});
    }

    ConvergenceLevel row;
    row.n = scn.n;
    row.dt = scn.cfg.dt;
    row.h = traj.grid().h();
    for (size_t t = 0; t < scalar_terms.size(); ++t) {
      const auto sc = detail::sample_scalar_terms(traj, scalar_terms[t],
                                                  static_cast<int>(t) + 1);
      for (double v : residual_transport(traj, sc))
        row.ds5 = std::max(row.ds5, std::abs(v));
      for (double v : residual_mass(traj, sc))
        row.ds6 = std::max(row.ds6, std::abs(v));
    }
    for (double v : inequality_momentum_energy(traj, zero_vector_test(traj)))
      row.energy_neg = std::max(row.energy_neg, std::max(0.0, -v));
    res.levels.push_back(row);
    hd.push_back(row.h + row.dt);
    r5.push_back(row.ds5);
    r6.push_back(row.ds6);
    re.push_back(row.energy_neg);
  }
  res.order_ds5 = detail::fitted_order(hd, r5);
  res.order_ds6 = detail::fitted_order(hd, r6);
  res.order_energy = detail::fitted_order(hd, re);
  return res;
}

inline std::string encode_convergence_csv(const ConvergenceResult& r) {
  std::ostringstream out;
  out << "level,n,dt,h,ds5_residual,ds6_residual,energy_defect\n";
  for (size_t i = 0; i < r.levels.size(); ++i) {
    const auto& l = r.levels[i];
    out << i << "," << l.n << "," << detail::fmt_double(l.dt) << ","
        << detail::fmt_double(l.h) << "," << detail::fmt_double(l.ds5) << ","
        << detail::fmt_double(l.ds6) << "," << detail::fmt_double(l.energy_neg)
        << "\n";
  }
  out << "order,,,," << detail::fmt_double(r.order_ds5) << ","
      << detail::fmt_double(r.order_ds6) << ","
      << detail::fmt_double(r.order_energy) << "\n";
  return out.str();
}

// Prox diagnostic table over a sample grid of symmetric tensors, written
// as rows (d_dev, d_tr, eps, F, F_eps, stress_norm).  Infinite F prints
// "inf"; the envelope stays finite everywhere.
inline std::string prox_table(const DissipationPotential& f,
                              const std::vector<double>& eps_list) {
  std::ostringstream out;
  out << "d_dev,d_tr,eps,F,F_eps,stress_norm\n";
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (int ir = 0; ir <= 8; ++ir)
    for (int it = -4; it <= 4; ++it) {
      const double rd = 0.25 * ir;
      const double tau = 0.5 * it;
      const SymTensor2 d{0.5 * tau + rd * inv_sqrt2, 0.0,
                         0.5 * tau - rd * inv_sqrt2};
      const double fv = eval_potential(f, d);
      for (double eps : eps_list) {
        const ProxResult pr = prox(f, d, eps);
        out << detail::fmt_double(rd) << "," << detail::fmt_double(tau) << ","
            << detail::fmt_double(eps) << ","
            << (fv == kInf ? "inf" : detail::fmt_double(fv)) << ","
            << detail::fmt_double(pr.envelope_value) << ","
            << detail::fmt_double(pr.stress.norm()) << "\n";
      }
    }
  return out.str();
}

}  // namespace vflow
