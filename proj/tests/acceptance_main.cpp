// End-to-end acceptance harness.
//
// Phase 1 runs the numeric oracle gates: analytic identities and independent
// cross-checks (finite differences, bisection, closed forms) that the library
// primitives must satisfy before any closed-loop number is worth reading.
// Phase 2 runs the shipped scenarios and checks the headline closed-loop
// properties: tracking accuracy under force budgets, the ability-aware vs
// ability-agnostic gap, the posture-optimization ablation, capability gain
// from null-space re-posturing, robustness to mid-run events, and the
// decentralization hygiene of the broadcast bus.
//
// One PASS/FAIL line is printed per check; the exit status is nonzero when
// anything fails. If an oracle gate fails the scenario checks are skipped:
// their numbers would not be trustworthy.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <comanip/adaptive_control.hpp>
#include <comanip/capability.hpp>
#include <comanip/ellipsoid.hpp>
#include <comanip/kinematics.hpp>
#include <comanip/manipulability.hpp>
#include <comanip/object_model.hpp>
#include <comanip/scenario.hpp>
#include <comanip/sim_harness.hpp>
#include <comanip/types.hpp>

namespace fs = std::filesystem;
using namespace comanip;

namespace {

int g_failures = 0;

void report(const std::string& name, bool ok, const std::string& detail) {
  std::printf("[%s] %s (%s)\n", ok ? "PASS" : "FAIL", name.c_str(),
              detail.c_str());
  if (!ok) ++g_failures;
}

std::string scenario_path(const std::string& file) {
  return std::string(COMANIP_SCENARIO_DIR) + "/" + file;
}

fs::path fresh_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / "comanip_accept" / tag;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> read_lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

std::vector<std::vector<double>> numeric_rows(const fs::path& p) {
  auto lines = read_lines(p);
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cells = split(lines[i]);
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(std::stod(c));
    rows.push_back(std::move(row));
  }
  return rows;
}

ManipulatorModel four_link() {
  ManipulatorModel m;
  m.link_lengths = (Vec(4) << 1.0, 0.9, 0.8, 0.7).finished();
  m.link_masses = (Vec(4) << 1.0, 0.8, 0.6, 0.4).finished();
  m.link_inertias = (Vec(4) << 0.1, 0.08, 0.06, 0.04).finished();
  m.torque_limits = (Vec(4) << 0.8, 0.8, 0.8, 0.8).finished();
  m.base_pose = PlanarPose{0.2, -0.1, 0.3};
  return m;
}

Vec random_q(std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.4, 1.4);
  Vec q(4);
  for (int i = 0; i < 4; ++i) q(i) = u(rng);
  return q;
}

// Draw a posture comfortably away from singularities so finite differences
// and polytope solves stay well conditioned.
Vec regular_q(const ManipulatorModel& m, std::mt19937& rng, double min_sv) {
  for (int attempt = 0; attempt < 200; ++attempt) {
    const Vec q = random_q(rng);
    if (min_singular_value(jacobian(m, q, 2)) >= min_sv) return q;
  }
  throw std::runtime_error("no regular posture found");
}

// Independent directional-capability oracle: grow then bisect the largest
// alpha with alpha * d still inside the polytope.
double bisect_scale(const ForcePolytope& poly, const Eigen::Vector2d& d) {
  double hi = 1.0;
  int guard = 0;
  while (poly.contains(hi * Vec(d), 0.0) && guard++ < 60) hi *= 2.0;
  double lo = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (poly.contains(mid * Vec(d), 0.0) ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Oracle gates
// ---------------------------------------------------------------------------

bool gate_jacobian_fd() {
  std::mt19937 rng(11);
  const auto m = four_link();
  const double h = 1e-6;
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Vec q = random_q(rng);
    const Mat J = jacobian(m, q, 3);
    for (int k = 0; k < 4; ++k) {
      Vec qp = q, qm = q;
      qp(k) += h;
      qm(k) -= h;
      const PlanarPose fp = forward_kinematics(m, qp);
      const PlanarPose fm = forward_kinematics(m, qm);
      const Vec fd = (Vec(3) << (fp.x - fm.x) / (2 * h),
                      (fp.y - fm.y) / (2 * h),
                      (fp.theta - fm.theta) / (2 * h))
                         .finished();
      worst = std::max(worst, (J.col(k) - fd).cwiseAbs().maxCoeff());
    }
  }
  report("oracle: task jacobian matches central differences", worst <= 1e-6,
         "max dev " + fmt(worst) + " <= 1e-6 over 20 postures");
  return worst <= 1e-6;
}

bool gate_manip_jacobian_fd() {
  std::mt19937 rng(13);
  const auto m = four_link();
  const Vec w = torque_limit_weights(m.torque_limits);
  const double h = 1e-6;
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const Vec q = regular_q(m, rng, 0.2);
    const Mat J = jacobian(m, q, 2);
    const SpdEllipsoid Mf = wfme(J, w);
    const auto slices = wfme_jacobian(J, jacobian_partials(m, q, 2), w, Mf);
    for (int k = 0; k < 4; ++k) {
      Vec qp = q, qm = q;
      qp(k) += h;
      qm(k) -= h;
      const Mat fd = (wfme(jacobian(m, qp, 2), w).matrix -
                      wfme(jacobian(m, qm, 2), w).matrix) /
                     (2 * h);
      const double rel =
          (slices[k] - fd).norm() / std::max(1.0, fd.norm());
      worst = std::max(worst, rel);
    }
  }
  report("oracle: manipulability jacobian matches central differences",
         worst <= 1e-4, "max rel dev " + fmt(worst) + " <= 1e-4");
  return worst <= 1e-4;
}

bool gate_spd_roundtrip() {
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> ang(-3.14, 3.14);
  std::uniform_real_distribution<double> lam(0.3, 3.0);
  auto random_spd = [&]() {
    const double a = ang(rng);
    Mat R(2, 2);
    R << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
    const Mat D = (Vec(2) << lam(rng), lam(rng)).finished().asDiagonal();
    return SpdEllipsoid{R * D * R.transpose()};
  };
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const SpdEllipsoid base = random_spd();
    const SpdEllipsoid target = random_spd();
    const Mat back = spd_exp(base, spd_log(base, target)).matrix;
    worst = std::max(worst, (back - target.matrix).norm());
    const Mat sym = 0.5 * (target.matrix + target.matrix.transpose());
    worst = std::max(worst, (sym_exp(sym_log(sym)) - sym).norm());
  }
  report("oracle: spd log/exp roundtrip", worst <= 1e-9,
         "max dev " + fmt(worst) + " <= 1e-9 over 50 pairs");
  return worst <= 1e-9;
}

bool gate_mandel_isometry() {
  std::mt19937 rng(19);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    for (int d : {2, 3}) {
      Mat A(d, d);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) A(i, j) = u(rng);
      const Mat S = 0.5 * (A + A.transpose());
      const Vec v = mandel_vec(S);
      worst = std::max(worst, std::abs(v.norm() - S.norm()));
      worst = std::max(worst, (mandel_unvec(v) - S).norm());
    }
  }
  report("oracle: mandel vectorization is an isometry", worst <= 1e-12,
         "max dev " + fmt(worst) + " <= 1e-12");
  return worst <= 1e-12;
}

bool gate_capability_bisection() {
  std::mt19937 rng(23);
  std::uniform_real_distribution<double> ang(-3.14159, 3.14159);
  std::uniform_real_distribution<double> bias_u(-0.4, 0.4);
  const auto m = four_link();
  double worst = 0.0;
  int done = 0;
  while (done < 100) {
    const Vec q = regular_q(m, rng, 0.05);
    const Mat J = jacobian(m, q, 2);
    Vec bias(4);
    for (int i = 0; i < 4; ++i) bias(i) = bias_u(rng) * m.torque_limits(i);
    const double a = ang(rng);
    const Eigen::Vector2d d(std::cos(a), std::sin(a));
    const auto res = max_force_along(J, m.torque_limits, bias, Vec(d));
    if (res.unbounded) continue;
    const auto poly = force_polytope(J, m.torque_limits, bias);
    worst = std::max(worst, std::abs(res.f_max - bisect_scale(poly, d)));
    ++done;
  }
  report("oracle: directional capability matches bisection", worst <= 1e-9,
         "max dev " + fmt(worst) + " <= 1e-9 over 100 solves");
  return worst <= 1e-9;
}

bool gate_lyapunov() {
  std::mt19937 rng(29);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  bool spd_ok = true;
  for (int trial = 0; trial < 20; ++trial) {
    Mat A(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) A(i, j) = u(rng);
    A -= 3.0 * Mat::Identity(3, 3);  // safely Hurwitz
    const Mat Q = Mat::Identity(3, 3);
    const Mat P = lyapunov_solve(A, Q);
    worst = std::max(worst, (A.transpose() * P + P * A + Q).norm());
    worst = std::max(worst, (P - P.transpose()).norm());
    Eigen::SelfAdjointEigenSolver<Mat> eig(P);
    spd_ok = spd_ok && eig.eigenvalues().minCoeff() > 0.0;
  }
  report("oracle: lyapunov solver residual", worst <= 1e-9 && spd_ok,
         "max residual " + fmt(worst) + " <= 1e-9, P positive definite");
  return worst <= 1e-9 && spd_ok;
}

bool gate_wfme_inscribed() {
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> ang(-3.14159, 3.14159);
  const auto m = four_link();
  const Vec w = torque_limit_weights(m.torque_limits);
  bool ok = true;
  for (int trial = 0; trial < 100; ++trial) {
    const Vec q = regular_q(m, rng, 0.05);
    const Mat J = jacobian(m, q, 2);
    const SpdEllipsoid Mf = wfme(J, w);
    const auto poly = force_polytope(J, m.torque_limits, Vec::Zero(4));
    for (int s = 0; s < 16; ++s) {
      const double a = ang(rng);
      const Vec u = (Vec(2) << std::cos(a), std::sin(a)).finished();
      // Boundary point of the ellipsoid along u: alpha u with
      // alpha^2 u^T Mf^{-1} u = 1.
      const double alpha =
          1.0 / std::sqrt(u.dot(Mf.matrix.ldlt().solve(u)));
      ok = ok && poly.contains(alpha * u, 1e-9);
    }
  }
  report("oracle: force ellipsoid inscribed in the exact polytope", ok,
         "1600 boundary points over 100 postures");
  return ok;
}

bool gate_decay_closed_form() {
  ObjectModel model;
  model.mass = 20.0;
  model.inertia = 0.2;
  model.mu_linear = 20.0;
  model.mu_rotational = 0.2;
  ObjectState st;
  st.velocity = (Vec(3) << 0.3, -0.2, 0.4).finished();
  const Vec v0 = st.velocity;
  const double dt = 1e-5;
  for (int i = 0; i < 20000; ++i)
    st = step_object(model, st, Vec::Zero(3), dt);
  const double t = 0.2;
  double worst = 0.0;
  for (int i = 0; i < 3; ++i)
    worst = std::max(worst, std::abs(st.velocity(i) - v0(i) * std::exp(-t)));
  report("oracle: free decay matches the closed form", worst <= 1e-6,
         "max dev " + fmt(worst) + " <= 1e-6");
  return worst <= 1e-6;
}

bool gate_determinism() {
  ScenarioConfig cfg = load_scenario(scenario_path("ablation_ability.json"));
  cfg.duration = 5.0;
  const fs::path d1 = fresh_dir("det1");
  const fs::path d2 = fresh_dir("det2");
  run_scenario(cfg, d1.string());
  run_scenario(cfg, d2.string());
  bool ok = true;
  for (const char* f : {"object.csv", "robot_A.csv", "bus.csv"})
    ok = ok && read_file(d1 / f) == read_file(d2 / f);
  report("oracle: repeated runs are bitwise identical", ok,
         "object/robot/bus logs byte-compared");
  return ok;
}

// ---------------------------------------------------------------------------
// Scenario criteria
// ---------------------------------------------------------------------------

void criterion_budget_tracking(RunMetrics& aware_out) {
  const ScenarioConfig cfg =
      load_scenario(scenario_path("ablation_ability.json"));
  const fs::path dir = fresh_dir("ability_aware");
  const auto t0 = std::chrono::steady_clock::now();
  const RunMetrics m = run_scenario(cfg, dir.string());
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  aware_out = m;
  const double ex = m.error_vs_modified(0);
  const double ey = m.error_vs_modified(1);
  const bool ok = ex <= 0.02 && ey <= 0.02 && wall < 60.0;
  report("saturated team tracks its modified reference", ok,
         "mean |dv| = (" + fmt(ex) + ", " + fmt(ey) +
             ") m/s <= 0.02, wall " + fmt(wall) + " s < 60");
}

void criterion_aware_vs_agnostic(const RunMetrics& aware) {
  ScenarioConfig cfg = load_scenario(scenario_path("ablation_ability.json"));
  cfg.controller.kind = ControllerConfig::Kind::AbilityAgnostic;
  const fs::path dir = fresh_dir("ability_agnostic");
  const RunMetrics m = run_scenario(cfg, dir.string());
  double min_ratio = 1e300;
  for (int i = 0; i < 2; ++i)
    min_ratio = std::min(min_ratio,
                         m.error_vs_original(i) / aware.error_vs_modified(i));
  report("budget-blind control at least doubles the tracking error",
         min_ratio >= 2.0, "min axis ratio " + fmt(min_ratio) + " >= 2");
}

void criterion_posture_ablation() {
  ScenarioConfig on_cfg =
      load_scenario(scenario_path("ablation_da3c_manip.json"));
  ScenarioConfig off_cfg = on_cfg;
  on_cfg.controller.manip_opt = true;
  off_cfg.controller.manip_opt = false;
  const RunMetrics on =
      run_scenario(on_cfg, fresh_dir("manip_on").string());
  const RunMetrics off =
      run_scenario(off_cfg, fresh_dir("manip_off").string());
  // Compare tracking of the task trajectory (the original reference): the
  // modified reference bends away under saturation precisely to stay easy to
  // follow, so it cannot expose the capability difference.
  const double ratio_y = on.error_vs_original(1) / off.error_vs_original(1);
  const double x_on = on.error_vs_original(0);
  const double x_off = off.error_vs_original(0);
  const double x_gap = std::abs(x_on - x_off) / std::max(x_on, x_off);
  const bool ok = ratio_y <= 0.75 && x_gap <= 0.2;
  report("posture optimization shrinks the scarce-axis error", ok,
         "y ratio " + fmt(ratio_y) + " <= 0.75, x gap " + fmt(x_gap) +
             " <= 0.2");
}

void criterion_capability_gain() {
  const ScenarioConfig cfg =
      load_scenario(scenario_path("ablation_manip.json"));
  const Eigen::Vector2d d2 = cfg.task.goal.normalized();
  const Vec d = Vec(d2);
  const Mat K_M = Mat::Identity(3, 3);
  bool ok = true;
  std::string detail;
  for (const auto& spec : cfg.robots) {
    const Vec tau = spec.model.torque_limits;
    Vec q = spec.joints0;
    const Eigen::Vector2d anchor =
        forward_kinematics(spec.model, q).translation();
    const double alpha0 =
        max_force_along(jacobian(spec.model, q, 2), tau, Vec::Zero(q.size()),
                        d)
            .f_max;
    const double dt = 0.002;
    for (int i = 0; i < 2500; ++i) {  // 5 s of re-posturing
      const Mat J = jacobian(spec.model, q, 2);
      const Eigen::Vector2d tip =
          forward_kinematics(spec.model, q).translation();
      const Vec xdot = Vec(cfg.controller.clik_gain * (anchor - tip));
      const Vec qdot_task = dls_velocity(J, xdot, 1e-6);
      const Vec w = torque_limit_weights(tau);
      const SpdEllipsoid Mf = wfme(J, w);
      const auto slices =
          wfme_jacobian(J, jacobian_partials(spec.model, q, 2), w, Mf);
      TaskEllipsoidSpec espec;
      espec.desired_force = d;
      espec.shape_coefficient = 1.0;  // isotropic target
      espec.reference_axis = d;
      espec.scale = trace_matched_scale(Mf, 1.0);
      const SpdEllipsoid Mt = nominal_task_ellipsoid(espec);
      q += dt * nullspace_tracking_velocity(J, qdot_task, slices, Mf, Mt, K_M);
    }
    const double alpha5 =
        max_force_along(jacobian(spec.model, q, 2), tau, Vec::Zero(q.size()),
                        d)
            .f_max;
    const double gain = alpha5 / alpha0;
    ok = ok && gain >= 1.2;
    detail += spec.id + " " + fmt(gain) + "x ";
  }
  report("null-space re-posturing raises capability along the transport",
         ok, detail + ">= 1.2");
}

void criterion_event_robustness() {
  const ScenarioConfig cfg =
      load_scenario(scenario_path("adaptation_events.json"));
  const fs::path dir = fresh_dir("events");
  const RunMetrics m = run_scenario(cfg, dir.string());  // throws if unbounded

  const auto object = numeric_rows(dir / "object.csv");
  double vmax = 0.0;
  double post_gap = 0.0;
  int post_n = 0;
  for (const auto& row : object) {
    for (int i = 4; i <= 6; ++i) vmax = std::max(vmax, std::abs(row[i]));
    if (row[0] > 75.0) {
      for (int i = 0; i < 3; ++i)
        post_gap += std::abs(row[10 + i] - row[7 + i]);
      ++post_n;
    }
  }
  post_gap /= std::max(post_n, 1);

  // Budget compliance outside a 5 s transient after each event.
  auto in_transient = [](double t) {
    for (double e : {30.0, 50.0, 70.0})
      if (t >= e && t <= e + 5.0) return true;
    return false;
  };
  bool budget_ok = true;
  for (const char* f : {"robot_A.csv", "robot_B.csv", "robot_C.csv"}) {
    for (const auto& row : numeric_rows(dir / f)) {
      if (in_transient(row[0])) continue;
      budget_ok = budget_ok && std::abs(row[3]) <= row[7] + 1e-9 &&
                  std::abs(row[4]) <= row[8] + 1e-9;
    }
  }

  // The disabled robot must go silent: zero force and no broadcasts.
  bool c_silent = true;
  for (const auto& row : numeric_rows(dir / "robot_C.csv"))
    if (row[0] >= 70.0 - 1e-9)
      c_silent = c_silent && row[3] == 0.0 && row[4] == 0.0 && row[9] == 0.0;
  const auto bus = read_lines(dir / "bus.csv");
  const long disable_tick = static_cast<long>(70.0 / cfg.dt);
  for (std::size_t i = 1; i < bus.size(); ++i) {
    const auto cells = split(bus[i]);
    if (cells[1] == "C" && std::stol(cells[0]) >= disable_tick)
      c_silent = false;
  }

  const bool ok =
      vmax < 10.0 && budget_ok && post_gap > 1e-3 && c_silent;
  report("mid-run faults stay bounded, budgeted and graceful", ok,
         "max |v| " + fmt(vmax) + ", budgets hold outside 5 s transients, "
         "post-fault reference gap " + fmt(post_gap) +
             " > 1e-3, disabled robot silent");
  (void)m;
}

void criterion_decentralized_interface() {
  // 1) Nothing saturates -> the bus stays empty and the modified reference
  //    never leaves the original one (the broadcast term is the only
  //    cross-robot channel).
  ScenarioConfig ample = load_scenario(scenario_path("ablation_ability.json"));
  ample.duration = 20.0;
  for (auto& r : ample.robots)
    r.f_max_fixed = (Vec(2) << 100.0, 100.0).finished();
  const fs::path adir = fresh_dir("ample");
  const RunMetrics am = run_scenario(ample, adir.string());
  bool silent = am.broadcast_count == 0 &&
                read_lines(adir / "bus.csv").size() == 1;
  for (const auto& line : read_lines(adir / "object.csv")) {
    const auto cells = split(line);
    if (cells[0] == "time") continue;
    for (int i = 0; i < 3; ++i) silent = silent && cells[7 + i] == cells[10 + i];
  }

  // 2) A delayed bus is still deterministic while broadcasts are flowing.
  ScenarioConfig delayed =
      load_scenario(scenario_path("ablation_ability.json"));
  delayed.duration = 20.0;
  delayed.bus_delay_ticks = 3;
  const fs::path d1 = fresh_dir("delay1");
  const fs::path d2 = fresh_dir("delay2");
  const RunMetrics dm = run_scenario(delayed, d1.string());
  run_scenario(delayed, d2.string());
  bool delay_ok = dm.broadcast_count > 0;
  for (const char* f : {"object.csv", "robot_A.csv", "bus.csv"})
    delay_ok = delay_ok && read_file(d1 / f) == read_file(d2 / f);

  report("broadcasts are the only coupling and tolerate bus delay",
         silent && delay_ok,
         "silent bus without saturation; delayed bus bitwise deterministic, "
         "count " + std::to_string(dm.broadcast_count));
}

}  // namespace

int main() {
  std::printf("== numeric oracle gates ==\n");
  bool gates = true;
  gates &= gate_jacobian_fd();
  gates &= gate_manip_jacobian_fd();
  gates &= gate_spd_roundtrip();
  gates &= gate_mandel_isometry();
  gates &= gate_capability_bisection();
  gates &= gate_lyapunov();
  gates &= gate_wfme_inscribed();
  gates &= gate_decay_closed_form();
  gates &= gate_determinism();

  std::printf("== scenario criteria ==\n");
  if (!gates) {
    std::printf("[SKIP] scenario criteria: oracle gates failed\n");
    return 1;
  }

  try {
    RunMetrics aware;
    criterion_budget_tracking(aware);
    criterion_aware_vs_agnostic(aware);
    criterion_posture_ablation();
    criterion_capability_gain();
    criterion_event_robustness();
    criterion_decentralized_interface();
  } catch (const std::exception& e) {
    std::printf("[FAIL] scenario criteria aborted: %s\n", e.what());
    ++g_failures;
  }

  if (g_failures == 0) {
    std::printf("all acceptance checks passed\n");
    return 0;
  }
  std::printf("%d acceptance check(s) failed\n", g_failures);
  return 1;
}
