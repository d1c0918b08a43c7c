#include "thermiga/driver.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

namespace thermiga {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double edge_length_of_face(const NurbsVolume& vol, FaceId f, double v) {
  const auto t = face_tangent_axes(f);
  const auto bp = vol.knots(t[0]).breakpoints();
  const auto& g = gauss_rule(5);
  double len = 0.0;
  for (std::size_t s = 0; s + 1 < bp.size(); ++s) {
    const double h = 0.5 * (bp[s + 1] - bp[s]), m = 0.5 * (bp[s + 1] + bp[s]);
    for (std::size_t a = 0; a < g.nodes.size(); ++a) {
      const auto pm = vol.map_point(face_param(f, m + h * g.nodes[a], v));
      const Vec3 du{pm.jac(0, t[0]), pm.jac(1, t[0]), pm.jac(2, t[0])};
      len += g.weights[a] * h * du.norm();
    }
  }
  return len;
}

std::string time_tag(double t) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6e", t);
  return buf;
}

}  // namespace

NurbsVolume refine_for_spec(const NurbsVolume& base, const MeshSpec& spec) {
  std::array<std::vector<double>, 3> knots;
  std::array<int, 3> counts = spec.elements;

  if (spec.target_face) {
    const int d = face_tangent_axes(*spec.target_face)[0];
    const double len = edge_length_of_face(base, *spec.target_face, 1.0);
    counts[d] = std::max(1, static_cast<int>(std::ceil(len / spec.target_min_size - 1e-9)));
  }

  for (int d = 0; d < 3; ++d) {
    if (!spec.explicit_knots[d].empty()) {
      knots[d] = spec.explicit_knots[d];
    } else if (counts[d] > 0) {
      knots[d] =
          graded_refinement_knots(base.knots(d), counts[d], spec.grading[d], spec.focus[d]);
    }
  }
  return base.refined(knots);
}

Simulation prepare_simulation(RunConfig cfg, int n_threads) {
  const auto t0 = Clock::now();

  NurbsVolume refined = refine_for_spec(cfg.geometry, cfg.mesh);
  Mesh mesh = build_mesh(std::move(refined), cfg.mesh.quad_order);
  DofMap dofs = make_dof_map(mesh.volume(), cfg.tags);
  BoundarySets boundary =
      classify_boundary(mesh, cfg.tags, cfg.mesh.boundary_quad_multiplier);
  std::vector<PointSource> sources = discretize_scan(cfg.scan, cfg.laser, cfg.material);

  FaceId stats_face = FaceId::etamin;
  if (cfg.outputs.profile_face)
    stats_face = *cfg.outputs.profile_face;
  else if (cfg.mesh.target_face)
    stats_face = *cfg.mesh.target_face;
  else if (!boundary.lateral.empty())
    stats_face = boundary.lateral.front().face;
  MeshStats stats = mesh_stats(mesh, dofs, stats_face, cfg.laser.spot_radius);

  SystemMatrices matrices = assemble_system(mesh, cfg.material, n_threads);

  Simulation sim{std::move(cfg), std::move(mesh),       std::move(dofs),
                 std::move(boundary), std::move(sources), stats,
                 std::move(matrices)};
  sim.threads = n_threads;
  sim.dt_solver = sim.cfg.stepping.dt / sim.cfg.stepping.substeps;
  sim.n_steps = static_cast<int>(std::ceil(sim.cfg.stepping.t_end / sim.dt_solver - 1e-9));
  sim.time_assembly = seconds_since(t0);
  return sim;
}

int step_for_time(const Simulation& sim, double t) {
  const int s = static_cast<int>(std::lround(t / sim.dt_solver));
  if (s < 0 || s > sim.n_steps)
    throw config_error("requested output time " + fmt_full(t) +
                       " s lies beyond the simulated range");
  return s;
}

void run_time_loop(Simulation& sim, const StepCallback& on_state) {
  const RunConfig& cfg = sim.cfg;
  DirichletSystem dsys(sim.matrices, sim.dofs, cfg.stepping.theta, sim.dt_solver);
  const PcgOptions pcg{cfg.stepping.solver_tol, cfg.stepping.max_iter};

  State state;
  state.free_coeffs.assign(sim.dofs.n_free(), 0.0);
  state.constrained_values = dirichlet_values(sim.volume(), sim.dofs, cfg.tags, sim.sources,
                                              cfg.material, 0.0, cfg.superpose);

  const int n_full = sim.mesh.n_functions();
  std::vector<double> load_n(n_full), load_np1(n_full), full;

  auto tl = Clock::now();
  assemble_flux_load(sim.boundary, sim.sources, cfg.material, 0.0, cfg.mesh.elevate_radius,
                     load_n, cfg.superpose, sim.threads);
  sim.time_loads += seconds_since(tl);

  dsys.expand(state.free_coeffs, state.constrained_values, full);
  on_state(state, full);

  for (int s = 1; s <= sim.n_steps; ++s) {
    const double t1 = s * sim.dt_solver;

    tl = Clock::now();
    assemble_flux_load(sim.boundary, sim.sources, cfg.material, t1, cfg.mesh.elevate_radius,
                       load_np1, cfg.superpose, sim.threads);
    const std::vector<double> g1 = dirichlet_values(
        sim.volume(), sim.dofs, cfg.tags, sim.sources, cfg.material, t1, cfg.superpose);
    sim.time_loads += seconds_since(tl);

    tl = Clock::now();
    PcgResult res;
    state = theta_step(dsys, state, load_n, load_np1, g1, pcg, &res);
    sim.time_solve += seconds_since(tl);
    sim.cg_iterations += res.iterations;

    std::swap(load_n, load_np1);
    dsys.expand(state.free_coeffs, state.constrained_values, full);
    on_state(state, full);
  }
}

namespace {

std::filesystem::path ensure_output_dir(const RunConfig& cfg, const RunOptions& opts) {
  std::filesystem::path dir =
      opts.output_dir.empty() ? cfg.outputs.directory : opts.output_dir;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw io_error("cannot create output directory '" + dir.string() + "'");
  return dir;
}

void write_metrics_csv(const std::filesystem::path& path,
                       const std::vector<std::pair<double, FluxMetrics>>& rows) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot open " + path.string());
  out << "t_s,I_net_W_m,I_ana_W_m,ratio\n";
  for (const auto& [t, m] : rows) {
    out << fmt_full(t) << "," << fmt_full(m.integral_net) << ","
        << fmt_full(m.integral_analytic) << ",";
    if (m.ratio) out << fmt_full(*m.ratio);
    out << "\n";
  }
}

void write_summary(const std::filesystem::path& path, const Simulation& sim,
                   double wall_seconds) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot open " + path.string());
  out << "degrees of freedom: " << sim.stats.n_dofs << "\n";
  out << "free / constrained: " << sim.dofs.n_free() << " / " << sim.dofs.n_constrained()
      << "\n";
  out << "elements:           " << sim.stats.n_elements << "\n";
  out << "l_min (m):          " << fmt_full(sim.stats.l_min) << "\n";
  out << "l_e:                " << fmt_full(sim.stats.l_e) << "\n";
  out << "sources:            " << sim.sources.size() << "\n";
  out << "steps:              " << sim.n_steps << " x " << fmt_full(sim.dt_solver) << " s\n";
  out << "cg iterations:      " << sim.cg_iterations << "\n";
  out << "time assembly (s):  " << sim.time_assembly << "\n";
  out << "time loads (s):     " << sim.time_loads << "\n";
  out << "time solves (s):    " << sim.time_solve << "\n";
  out << "time total (s):     " << wall_seconds << "\n";
}

}  // namespace

void cmd_simulate(const RunConfig& cfg, const RunOptions& opts) {
  const auto t0 = Clock::now();
  const auto dir = ensure_output_dir(cfg, opts);

  Simulation sim = prepare_simulation(cfg, opts.threads);
  if (opts.verbose)
    std::cout << "mesh: " << sim.stats.n_dofs << " DOFs, " << sim.stats.n_elements
              << " elements, l_e = " << sim.stats.l_e << "\n";

  // probe bookkeeping: fixed physical positions, spline evaluation per state
  struct ProbeFile {
    ProbeSpec spec;
    Vec3 x;
    std::ofstream file;
  };
  std::vector<ProbeFile> probes;
  for (const auto& p : sim.cfg.outputs.probes) {
    ProbeFile pf{p, sim.volume().map_point(p.xi).x,
                 std::ofstream(dir / ("probe_" + p.name + ".csv"))};
    if (!pf.file) throw io_error("cannot open probe file for '" + p.name + "'");
    pf.file << "t_s,T_tilde_C,T_hat_C,T_total_C\n";
    probes.push_back(std::move(pf));
  }

  std::map<int, double> field_steps, profile_steps;
  for (double t : sim.cfg.outputs.field_times) field_steps[step_for_time(sim, t)] = t;
  for (double t : sim.cfg.outputs.profile_times) profile_steps[step_for_time(sim, t)] = t;
  if (!profile_steps.empty() && !sim.cfg.outputs.profile_face)
    throw config_error("profile output requested without a profile face");

  std::vector<std::pair<double, FluxMetrics>> metric_rows;
  const Material& mat = sim.cfg.material;

  run_time_loop(sim, [&](const State& state, const std::vector<double>& full) {
    const double t = state.time;
    if (state.step % sim.cfg.outputs.probe_interval == 0 || state.step == sim.n_steps) {
      for (auto& p : probes) {
        const double t_tilde = superpose(sim.sources, mat, p.x, t, sim.cfg.superpose).value;
        const double t_hat = sim.volume().field_at(full, p.spec.xi).value;
        p.file << fmt_full(t) << "," << fmt_full(t_tilde) << "," << fmt_full(t_hat) << ","
               << fmt_full(mat.platform_temperature + t_tilde + t_hat) << "\n";
        p.file.flush();
      }
    }
    if (auto it = field_steps.find(state.step); it != field_steps.end())
      export_field(sim.volume(), full, sim.sources, mat, sim.cfg.outputs.field_grid, t,
                   (dir / ("field_t" + time_tag(it->second) + ".vtk")).string(),
                   sim.cfg.superpose);
    if (auto it = profile_steps.find(state.step); it != profile_steps.end()) {
      const FluxProfile profile = boundary_flux_profile(
          sim.volume(), full, sim.sources, mat, *sim.cfg.outputs.profile_face,
          sim.cfg.outputs.profile_samples, t, sim.cfg.outputs.theta_center,
          sim.cfg.outputs.profile_edge_v, sim.cfg.superpose);
      export_profile_csv(profile,
                         (dir / ("profile_" + std::string(face_name(*sim.cfg.outputs.profile_face)) +
                                 "_t" + time_tag(it->second) + ".csv"))
                             .string());
      metric_rows.emplace_back(t, integrated_abs_flux(profile));
    }
    if (opts.verbose && state.step % 50 == 0)
      std::cout << "  step " << state.step << "/" << sim.n_steps << "\r" << std::flush;
  });

  if (!metric_rows.empty()) write_metrics_csv(dir / "metrics.csv", metric_rows);
  write_summary(dir / "summary.txt", sim, seconds_since(t0));
  if (opts.verbose) std::cout << "\ndone, outputs in " << dir << "\n";
}

void cmd_convergence(const RunConfig& cfg, std::vector<std::array<int, 3>> levels,
                     const RunOptions& opts) {
  if (levels.empty()) levels = cfg.convergence.levels;
  if (levels.size() < 2)
    throw config_error("convergence study needs at least 2 refinement levels");
  if (cfg.outputs.probes.empty())
    throw config_error("convergence study needs a probe (outputs.probe)");

  std::string probe_name = cfg.convergence.probe.empty() ? cfg.outputs.probes.front().name
                                                         : cfg.convergence.probe;
  const ProbeSpec* probe = nullptr;
  for (const auto& p : cfg.outputs.probes)
    if (p.name == probe_name) probe = &p;
  if (!probe) throw config_error("convergence.probe '" + probe_name + "' is not defined");

  const double t_eval = cfg.convergence.eval_time.value_or(cfg.stepping.t_end);

  struct Row {
    std::array<int, 3> level;
    double l_e;
    int dofs;
    double t_hat;
  };
  std::vector<Row> rows;

  for (const auto& lv : levels) {
    RunConfig level_cfg = cfg;
    level_cfg.mesh.target_face.reset();
    level_cfg.mesh.target_min_size = 0.0;
    level_cfg.mesh.elements = lv;
    level_cfg.stepping.t_end = t_eval;
    level_cfg.outputs.field_times.clear();
    level_cfg.outputs.profile_times.clear();

    Simulation sim = prepare_simulation(std::move(level_cfg), opts.threads);
    const int eval_step = step_for_time(sim, t_eval);
    double t_hat = 0.0;
    run_time_loop(sim, [&](const State& state, const std::vector<double>& full) {
      if (state.step == eval_step) t_hat = sim.volume().field_at(full, probe->xi).value;
    });
    rows.push_back({lv, sim.stats.l_e, sim.stats.n_dofs, t_hat});
    if (opts.verbose)
      std::cout << "level " << lv[0] << ":" << lv[1] << ":" << lv[2] << " done, T_hat = "
                << t_hat << " degC\n";
  }

  const double reference = rows.back().t_hat;
  const auto dir = ensure_output_dir(cfg, opts);
  std::ofstream csv(dir / "convergence.csv");
  if (!csv) throw io_error("cannot open convergence.csv");
  csv << "l_e,dofs,T_hat_C,dT_abs_C,e_r\n";
  std::printf("%10s %10s %14s %12s %10s\n", "l_e", "DOFs", "T_hat (degC)", "|dT| (degC)",
              "e_r");
  for (const auto& row : rows) {
    const double d_abs = std::abs(row.t_hat - reference);
    const double e_r = relative_error(row.t_hat, reference);
    csv << fmt_full(row.l_e) << "," << row.dofs << "," << fmt_full(row.t_hat) << ","
        << fmt_full(d_abs) << "," << fmt_full(e_r) << "\n";
    std::printf("%10.3f %10d %14.5f %12.5f %10.3e\n", row.l_e, row.dofs, row.t_hat, d_abs,
                e_r);
  }
}

void cmd_flux_report(const RunConfig& cfg, std::vector<double> times, const RunOptions& opts) {
  if (times.empty()) times = cfg.outputs.profile_times;
  if (times.empty())
    throw config_error("flux report needs at least one time (outputs.profile_time)");
  if (!cfg.outputs.profile_face)
    throw config_error("flux report needs outputs.profile_face");

  RunConfig run_cfg = cfg;
  run_cfg.outputs.field_times.clear();
  Simulation sim = prepare_simulation(std::move(run_cfg), opts.threads);

  std::map<int, double> steps;
  for (double t : times) steps[step_for_time(sim, t)] = t;

  const auto dir = ensure_output_dir(cfg, opts);
  std::vector<std::pair<double, FluxMetrics>> rows;
  run_time_loop(sim, [&](const State& state, const std::vector<double>& full) {
    auto it = steps.find(state.step);
    if (it == steps.end()) return;
    const FluxProfile profile = boundary_flux_profile(
        sim.volume(), full, sim.sources, sim.cfg.material, *sim.cfg.outputs.profile_face,
        sim.cfg.outputs.profile_samples, state.time, sim.cfg.outputs.theta_center,
        sim.cfg.outputs.profile_edge_v, sim.cfg.superpose);
    export_profile_csv(profile,
                       (dir / ("profile_" + std::string(face_name(*sim.cfg.outputs.profile_face)) +
                               "_t" + time_tag(it->second) + ".csv"))
                           .string());
    rows.emplace_back(state.time, integrated_abs_flux(profile));
  });

  write_metrics_csv(dir / "metrics.csv", rows);
  for (const auto& [t, m] : rows) {
    std::printf("t = %.4e s: I_net = %.6e W/m, I_ana = %.6e W/m", t, m.integral_net,
                m.integral_analytic);
    if (m.ratio)
      std::printf(", ratio = %.2f%%\n", 100.0 * *m.ratio);
    else
      std::printf(", ratio undefined\n");
  }
}

}  // namespace thermiga
