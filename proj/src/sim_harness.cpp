#include "comanip/sim_harness.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <memory>
#include <sstream>
#include <utility>

#include "comanip/capability.hpp"
#include "comanip/manipulability.hpp"
#include "comanip/object_model.hpp"

namespace comanip {
namespace {

namespace fs = std::filesystem;

// Shortest double representation that still round-trips, so repeated runs
// produce bitwise-identical logs.
std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

constexpr double kBlowUpNorm = 1e6;
constexpr double kCapabilityFloor = 1e-6;

struct Agent {
  RobotSpec spec;  // mutable copy; events rescale limits in here
  Vec q;
  AdaptiveGains gains;
  ReferenceModel ref;  // this agent's (possibly modified) reference
  bool alive = true;
  Eigen::Vector2d base_offset = Eigen::Vector2d::Zero();  // carriage mount

  // Per-tick scratch, filled in the control phase and consumed afterwards.
  Vec f_cmd = Vec::Zero(2);
  Vec f_applied = Vec::Zero(2);
  Vec delta_f = Vec::Zero(2);
  Vec f_max = Vec::Zero(2);
  Vec qdot_cmd;
  Vec phi;
  Eigen::Vector2d r_world = Eigen::Vector2d::Zero();
  bool saturated = false;

  // Accumulators for metrics.
  long saturated_ticks = 0;
  double energy = 0.0;
};

struct CsvFile {
  std::ofstream out;
  explicit CsvFile(const fs::path& p, const std::string& header) : out(p) {
    if (!out) throw ValidationError("cannot open log file " + p.string());
    out << header << '\n';
  }
};

void check_finite_bounded(const Vec& v, const std::string& what, long tick) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i]) || std::abs(v[i]) > kBlowUpNorm) {
      throw NumericalError("numerical blow-up in " + what + " at tick " +
                           std::to_string(tick) + " (value " +
                           std::to_string(v[i]) + ")");
    }
  }
}

}  // namespace

MessageBus::MessageBus(int delay_ticks) : delay_(delay_ticks) {
  if (delay_ticks < 0) {
    throw ValidationError("MessageBus: delay must be non-negative");
  }
}

std::vector<BroadcastMessage> MessageBus::broadcast_round(
    std::vector<BroadcastMessage> posted, long tick) {
  posted_total_ += static_cast<long>(posted.size());
  auto& slot = pending_[tick + delay_];
  for (auto& m : posted) slot.push_back(std::move(m));
  std::vector<BroadcastMessage> inbox;
  auto due = pending_.find(tick);
  if (due != pending_.end()) {
    inbox = std::move(due->second);
    pending_.erase(due);
  }
  return inbox;
}

RunMetrics run_scenario(const ScenarioConfig& config,
                        const std::string& out_dir) {
  config.validate();
  fs::create_directories(out_dir);

  const double dt = config.dt;
  const long ticks = std::llround(config.duration / dt);
  const bool aware =
      config.controller.kind == ControllerConfig::Kind::AbilityAware;

  ObjectModel plant = config.object;
  ObjectState object = config.initial_state;
  const GraspMap grasp{[&] {
    std::vector<Eigen::Vector2d> offs;
    for (const auto& r : config.robots) offs.push_back(r.grasp_offset);
    return offs;
  }()};

  // Original (unmodified) reference; profile tasks start it on the profile so
  // the inverted reference input reproduces the profile exactly.
  ReferenceModel original = make_planar_reference_model(
      config.nominal_mass, config.nominal_inertia, config.nominal_mu_linear,
      config.nominal_mu_rotational, config.object.gravity2,
      config.initial_state.velocity);
  if (config.task.type != TaskSpec::Type::DirectForce) {
    original.reference_state =
        sample_task(config.task, original, 0.0).xdot_des;
  }

  const RbfNetwork net =
      make_grid_rbf(config.controller.rbf_per_axis,
                    config.controller.rbf_half_range,
                    config.controller.rbf_width);
  const Mat Q = config.controller.q_lyapunov * Mat::Identity(3, 3);
  const Mat P = lyapunov_solve(original.A_star, Q);
  const Mat K_M =
      config.controller.tracking_gain * Mat::Identity(3, 3);  // Mandel dim

  std::vector<Agent> agents;
  for (std::size_t k = 0; k < config.robots.size(); ++k) {
    Agent a;
    a.spec = config.robots[k];
    a.q = a.spec.joints0;
    a.ref = original;
    a.gains = make_adaptive_gains(
        net.feature_count(), config.controller.rate_x, config.controller.rate_r,
        config.controller.rate_n, config.controller.rate_f,
        config.controller.rate_phi, P);
    a.gains.norm_cap = config.controller.gain_norm_cap;
    const Eigen::Vector2d r0 =
        grasp_offset_world(grasp, k, object.orientation);
    const Mat B0 = force_input_matrix(r0, config.nominal_mass,
                                      config.nominal_inertia);
    a.gains.K_r = equal_split_kr(B0, original.B_star,
                                 static_cast<int>(config.robots.size()),
                                 config.controller.kr_init_scale);
    // Certainty-equivalent deficiency gain: the matching condition
    // B* K_f^T = B_k has the nominal solution K_f^T = B*^{-1} B_k-hat, which
    // uses only quantities the agent already knows.  Starting there instead of
    // at zero removes most of the parameter-error budget the adaptive law
    // would otherwise have to burn down mid-run.
    a.gains.K_f = config.controller.kf_init_scale *
                  (original.B_star.inverse() * B0).transpose();
    a.base_offset = a.spec.model.base_pose.translation() -
                    config.initial_state.position;
    agents.push_back(std::move(a));
  }

  // Log files.
  CsvFile object_csv(fs::path(out_dir) / "object.csv",
                     "time,x,y,theta,vx,vy,wz,vx_ref,vy_ref,wz_ref,"
                     "vx_ref_mod,vy_ref_mod,wz_ref_mod");
  CsvFile bus_csv(fs::path(out_dir) / "bus.csv", "tick,sender,p0,p1,p2");
  std::vector<std::unique_ptr<CsvFile>> robot_csv;
  std::vector<std::unique_ptr<CsvFile>> joints_csv;
  for (const auto& a : agents) {
    robot_csv.push_back(std::make_unique<CsvFile>(
        fs::path(out_dir) / ("robot_" + a.spec.id + ".csv"),
        "time,fx_cmd,fy_cmd,fx_bar,fy_bar,dfx,dfy,fmax_x,fmax_y,saturated"));
    if (config.outputs.log_joints) {
      std::string header = "time";
      for (Eigen::Index i = 0; i < a.q.size(); ++i) {
        header += ",q" + std::to_string(i);
      }
      joints_csv.push_back(std::make_unique<CsvFile>(
          fs::path(out_dir) / ("robot_" + a.spec.id + "_joints.csv"), header));
    }
  }
  std::unique_ptr<CsvFile> gains_csv;
  if (config.outputs.gain_log_decimation > 0) {
    gains_csv = std::make_unique<CsvFile>(
        fs::path(out_dir) / "gains.csv",
        "time,robot_id,gain_name,row,col,value");
  }
  std::unique_ptr<CsvFile> poly_csv;
  if (config.outputs.dump_polytopes) {
    poly_csv = std::make_unique<CsvFile>(
        fs::path(out_dir) / "polytopes.csv", "robot_id,time,vertex_x,vertex_y");
  }

  MessageBus bus(config.bus_delay_ticks);
  RunMetrics metrics;
  metrics.duration = config.duration;
  metrics.dt = dt;
  Vec err_mod = Vec::Zero(3);
  Vec err_orig = Vec::Zero(3);

  const Vec ncg = ncg_vector(config.nominal_mass, config.object.gravity2);
  std::size_t next_event = 0;

  for (long tick = 0; tick < ticks; ++tick) {
    const double t = tick * dt;

    // Events fire at the first tick whose time reaches them.
    while (next_event < config.events.size() &&
           config.events[next_event].time <= t + 1e-12) {
      const Event& ev = config.events[next_event++];
      switch (ev.type) {
        case Event::Type::SetObjectMass:
          plant.mass = ev.value;
          break;
        case Event::Type::SetFriction:
          plant.mu_linear = ev.value;
          plant.mu_rotational = ev.value;
          break;
        case Event::Type::ScaleRobotCapability:
          for (auto& a : agents) {
            if (a.spec.id != ev.robot_id) continue;
            if (a.spec.capability_mode == CapabilityMode::Fixed) {
              a.spec.f_max_fixed *= ev.value;
            } else {
              a.spec.model.torque_limits *= ev.value;
            }
          }
          break;
        case Event::Type::DisableRobot:
          for (auto& a : agents) {
            if (a.spec.id == ev.robot_id) a.alive = false;
          }
          break;
      }
    }

    const TaskSample task = sample_task(config.task, original, t);
    const Vec xdot_o = object.velocity;

    // ---- control phase: each agent sees only (object state, own grasp) ----
    std::vector<BroadcastMessage> posted;
    for (std::size_t k = 0; k < agents.size(); ++k) {
      Agent& a = agents[k];
      a.r_world = grasp_offset_world(grasp, k, object.orientation);
      if (!a.alive) {
        a.f_cmd.setZero();
        a.f_applied.setZero();
        a.delta_f.setZero();
        a.f_max.setZero();
        a.saturated = false;
        a.qdot_cmd = Vec::Zero(a.q.size());
        continue;
      }

      if (a.spec.base_follows_object) {
        a.spec.model.base_pose.x = object.position[0] + a.base_offset[0];
        a.spec.model.base_pose.y = object.position[1] + a.base_offset[1];
      }
      const Mat J = jacobian(a.spec.model, a.q, 2);

      // Follow the grasp point (rigid attachment) with a drift correction.
      // A carriage-mounted arm only sees the rotation-induced part of the
      // grasp motion; its translation is absorbed by the base.
      const Eigen::Vector2d p_target = object.position + a.r_world;
      const Eigen::Vector2d tip =
          forward_kinematics(a.spec.model, a.q).translation();
      Vec xk_dot = grasp_velocity(a.r_world, xdot_o).head(2);
      if (a.spec.base_follows_object) xk_dot -= xdot_o.head(2);
      xk_dot += config.controller.clik_gain * (p_target - tip);
      const Vec qdot_task = dls_velocity(J, xk_dot, 1e-6);

      a.qdot_cmd = qdot_task;
      if (aware && config.controller.manip_opt) {
        try {
          const Vec w = torque_limit_weights(a.spec.model.torque_limits);
          const SpdEllipsoid Mf = wfme(J, w);
          const auto dJ = jacobian_partials(a.spec.model, a.q, 2);
          const auto slices = wfme_jacobian(J, dJ, w, Mf);
          TaskEllipsoidSpec espec;
          espec.desired_force = task.f_star.head(2);
          espec.shape_coefficient = config.task.shape_coefficient;
          espec.reference_axis = Vec(2);
          espec.reference_axis << config.task.fallback_axis[0],
              config.task.fallback_axis[1];
          if (espec.desired_force.norm() < 1e-9) {
            espec.desired_force = espec.reference_axis;  // fallback direction
          }
          espec.scale = config.task.scale_mode == TaskSpec::ScaleMode::Fixed
                            ? config.task.scale
                            : trace_matched_scale(
                                  Mf, config.task.shape_coefficient);
          const SpdEllipsoid Mt = nominal_task_ellipsoid(espec);
          a.qdot_cmd = nullspace_tracking_velocity(J, qdot_task, slices, Mf,
                                                   Mt, K_M);
        } catch (const SingularityError&) {
          // Singular posture: skip the shaping term this tick.
        }
      }

      // Capability: fixed limit, or the inscribed-box solve on the polytope.
      if (a.spec.capability_mode == CapabilityMode::Fixed) {
        a.f_max = a.spec.f_max_fixed;
      } else {
        try {
          a.f_max = f_kmax_vector(J, a.spec.model.torque_limits,
                                  Vec::Zero(a.q.size()));
        } catch (const EmptyPolytopeError&) {
          a.f_max = Vec::Zero(2);
        }
        a.f_max = a.f_max.cwiseMax(kCapabilityFloor);
      }

      a.phi = rbf_features(net, xdot_o);
      a.f_cmd = adaptive_input(a.gains, xdot_o, task.f_star, ncg, a.phi);
      if (aware) {
        SaturationSpec sat;
        sat.f_max = a.f_max;
        sat.delta = a.spec.delta_fraction * a.f_max;
        sat.mu = config.controller.mu;
        const MuModResult m = mu_modification(a.f_cmd, sat);
        a.f_applied = m.applied;
        a.delta_f = m.deficiency;
      } else {
        a.f_applied = a.f_cmd.cwiseMin(a.f_max).cwiseMax(-a.f_max);
        a.delta_f = a.f_applied - a.f_cmd;
      }
      a.saturated = a.delta_f.cwiseAbs().maxCoeff() > 0.0;
      if (aware && a.saturated) {
        BroadcastMessage msg;
        msg.sender = a.spec.id;
        msg.payload = a.gains.K_f.transpose() * a.delta_f;
        msg.tick = tick;
        posted.push_back(std::move(msg));
      }
    }

    // ---- bus round ----
    const std::vector<BroadcastMessage> inbox =
        bus.broadcast_round(std::move(posted), tick);
    for (const auto& m : inbox) {
      bus_csv.out << m.tick << ',' << m.sender << ',' << fmt(m.payload[0])
                  << ',' << fmt(m.payload[1]) << ',' << fmt(m.payload[2])
                  << '\n';
    }
    std::vector<Vec> payloads;
    if (aware) {
      for (const auto& m : inbox) payloads.push_back(m.payload);
    }

    // ---- logging (state, references and forces all at time t) ----
    if (tick % config.outputs.log_decimation == 0) {
      const Vec& ro = original.reference_state;
      const Vec& rm = agents.front().ref.reference_state;
      object_csv.out << fmt(t) << ',' << fmt(object.position[0]) << ','
                     << fmt(object.position[1]) << ','
                     << fmt(object.orientation) << ',' << fmt(xdot_o[0]) << ','
                     << fmt(xdot_o[1]) << ',' << fmt(xdot_o[2]) << ','
                     << fmt(ro[0]) << ',' << fmt(ro[1]) << ',' << fmt(ro[2])
                     << ',' << fmt(rm[0]) << ',' << fmt(rm[1]) << ','
                     << fmt(rm[2]) << '\n';
      for (std::size_t k = 0; k < agents.size(); ++k) {
        const Agent& a = agents[k];
        robot_csv[k]->out << fmt(t) << ',' << fmt(a.f_cmd[0]) << ','
                          << fmt(a.f_cmd[1]) << ',' << fmt(a.f_applied[0])
                          << ',' << fmt(a.f_applied[1]) << ','
                          << fmt(a.delta_f[0]) << ',' << fmt(a.delta_f[1])
                          << ',' << fmt(a.f_max[0]) << ',' << fmt(a.f_max[1])
                          << ',' << (a.saturated ? 1 : 0) << '\n';
        if (config.outputs.log_joints) {
          joints_csv[k]->out << fmt(t);
          for (Eigen::Index i = 0; i < a.q.size(); ++i) {
            joints_csv[k]->out << ',' << fmt(a.q[i]);
          }
          joints_csv[k]->out << '\n';
        }
      }
    }
    if (gains_csv && tick % config.outputs.gain_log_decimation == 0) {
      for (const auto& a : agents) {
        const std::pair<const char*, const Mat*> mats[] = {
            {"K_x", &a.gains.K_x}, {"K_r", &a.gains.K_r},
            {"K_n", &a.gains.K_n}, {"K_f", &a.gains.K_f},
            {"W_phi", &a.gains.W_phi}};
        for (const auto& [name, M] : mats) {
          for (Eigen::Index r = 0; r < M->rows(); ++r) {
            for (Eigen::Index c = 0; c < M->cols(); ++c) {
              gains_csv->out << fmt(t) << ',' << a.spec.id << ',' << name
                             << ',' << r << ',' << c << ','
                             << fmt((*M)(r, c)) << '\n';
            }
          }
        }
      }
    }
    if (poly_csv && tick % std::max(1, config.outputs.gain_log_decimation) ==
                        0) {
      for (const auto& a : agents) {
        if (!a.alive) continue;
        try {
          const Mat J = jacobian(a.spec.model, a.q, 2);
          write_polytope_csv(poly_csv->out, a.spec.id, t,
                             force_polytope(J, a.spec.model.torque_limits,
                                            Vec::Zero(a.q.size())));
        } catch (const EmptyPolytopeError&) {
        }
      }
    }

    // ---- metrics at time t ----
    err_mod += (xdot_o - agents.front().ref.reference_state).cwiseAbs();
    err_orig += (xdot_o - original.reference_state).cwiseAbs();
    metrics.broadcast_count += static_cast<long>(inbox.size());
    for (auto& a : agents) {
      if (a.saturated) ++a.saturated_ticks;
      a.energy += a.f_applied.squaredNorm() * dt;
    }

    // ---- adaptation + reference updates (t -> t + dt) ----
    for (auto& a : agents) {
      if (!a.alive) continue;
      const Vec e = xdot_o - a.ref.reference_state;
      const Mat B_k = force_input_matrix(a.r_world, config.nominal_mass,
                                         config.nominal_inertia);
      a.gains = adaptive_law_step(a.gains, e, xdot_o, task.f_star, ncg, a.phi,
                                  a.delta_f, B_k, original.B_star, dt);
      modified_reference_step(a.ref, task.f_star, payloads, ncg, dt);
    }
    modified_reference_step(original, task.f_star, {}, ncg, dt);

    // ---- plant + arm integration (t -> t + dt) ----
    std::vector<Eigen::Vector2d> offsets, forces;
    for (const auto& a : agents) {
      offsets.push_back(a.r_world);
      forces.push_back(Eigen::Vector2d(a.f_applied[0], a.f_applied[1]));
    }
    object = step_object(plant, object, wrench_from_forces(offsets, forces),
                         dt);
    for (auto& a : agents) {
      if (a.alive) a.q += dt * a.qdot_cmd;
    }

    check_finite_bounded(object.velocity, "object velocity", tick);
    for (const auto& a : agents) {
      check_finite_bounded(a.q, "joints of robot " + a.spec.id, tick);
      check_finite_bounded(a.ref.reference_state,
                           "reference of robot " + a.spec.id, tick);
    }
  }

  metrics.error_vs_modified = err_mod / static_cast<double>(ticks);
  metrics.error_vs_original = err_orig / static_cast<double>(ticks);
  for (const auto& a : agents) {
    metrics.saturation_duty[a.spec.id] =
        static_cast<double>(a.saturated_ticks) / static_cast<double>(ticks);
    metrics.force_energy[a.spec.id] = a.energy;
  }
  write_metrics_json(metrics, (fs::path(out_dir) / "metrics.json").string());
  return metrics;
}

namespace {

std::vector<std::vector<double>> read_csv_numeric(
    const fs::path& p, std::vector<std::string>* header_out,
    std::vector<std::vector<std::string>>* raw_out = nullptr) {
  std::ifstream in(p);
  if (!in) throw ValidationError("metrics_report: missing log " + p.string());
  std::string line;
  if (!std::getline(in, line)) {
    throw ValidationError("metrics_report: empty log " + p.string());
  }
  if (header_out) {
    header_out->clear();
    std::stringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) header_out->push_back(cell);
  }
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    std::vector<std::string> raw;
    while (std::getline(ss, cell, ',')) {
      raw.push_back(cell);
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        row.push_back(std::numeric_limits<double>::quiet_NaN());
      }
    }
    rows.push_back(std::move(row));
    if (raw_out) raw_out->push_back(std::move(raw));
  }
  return rows;
}

}  // namespace

RunMetrics metrics_report(const std::string& out_dir, double warmup) {
  RunMetrics m;
  m.warmup = warmup;
  std::vector<std::string> header;
  const auto object_rows =
      read_csv_numeric(fs::path(out_dir) / "object.csv", &header);
  if (header.size() != 13 || object_rows.empty()) {
    throw ValidationError("metrics_report: object.csv truncated or malformed");
  }
  m.dt = object_rows.size() > 1 ? object_rows[1][0] - object_rows[0][0] : 0.0;
  m.duration = object_rows.back()[0] + m.dt;
  Vec err_mod = Vec::Zero(3), err_orig = Vec::Zero(3);
  long counted = 0;
  for (const auto& row : object_rows) {
    if (row.size() != 13) {
      throw ValidationError("metrics_report: ragged object.csv row");
    }
    if (row[0] < warmup) continue;
    for (int ax = 0; ax < 3; ++ax) {
      err_mod[ax] += std::abs(row[4 + ax] - row[10 + ax]);
      err_orig[ax] += std::abs(row[4 + ax] - row[7 + ax]);
    }
    ++counted;
  }
  if (counted == 0) {
    throw ValidationError("metrics_report: warmup excludes every sample");
  }
  m.error_vs_modified = err_mod / static_cast<double>(counted);
  m.error_vs_original = err_orig / static_cast<double>(counted);

  for (const auto& entry : fs::directory_iterator(out_dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("robot_", 0) != 0 || entry.path().extension() != ".csv" ||
        name.find("_joints") != std::string::npos) {
      continue;
    }
    const std::string id =
        name.substr(6, name.size() - 6 - 4);  // robot_<id>.csv
    const auto rows = read_csv_numeric(entry.path(), &header);
    if (header.size() != 10) {
      throw ValidationError("metrics_report: bad robot log " + name);
    }
    long sat = 0, n = 0;
    double energy = 0.0;
    for (const auto& row : rows) {
      if (row.size() != 10) {
        throw ValidationError("metrics_report: ragged row in " + name);
      }
      if (row[0] < warmup) continue;
      sat += row[9] != 0.0 ? 1 : 0;
      energy += (row[3] * row[3] + row[4] * row[4]) * m.dt;
      ++n;
    }
    m.saturation_duty[id] = n ? static_cast<double>(sat) / n : 0.0;
    m.force_energy[id] = energy;
  }

  std::vector<std::vector<std::string>> bus_raw;
  const auto bus_rows = read_csv_numeric(fs::path(out_dir) / "bus.csv",
                                         &header, &bus_raw);
  m.broadcast_count = static_cast<long>(bus_rows.size());
  return m;
}

void write_metrics_json(const RunMetrics& metrics, const std::string& path) {
  nlohmann::json j;
  j["duration"] = metrics.duration;
  j["dt"] = metrics.dt;
  j["warmup"] = metrics.warmup;
  j["mean_abs_velocity_error"]["vs_modified_reference"] = {
      {"vx", metrics.error_vs_modified[0]},
      {"vy", metrics.error_vs_modified[1]},
      {"wz", metrics.error_vs_modified[2]}};
  j["mean_abs_velocity_error"]["vs_original_reference"] = {
      {"vx", metrics.error_vs_original[0]},
      {"vy", metrics.error_vs_original[1]},
      {"wz", metrics.error_vs_original[2]}};
  j["saturation_duty"] = metrics.saturation_duty;
  j["broadcast_count"] = metrics.broadcast_count;
  double total = 0.0;
  for (const auto& [id, e] : metrics.force_energy) {
    j["applied_force_energy"][id] = e;
    total += e;
  }
  j["applied_force_energy"]["total"] = total;
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  out << j.dump(2) << '\n';
}

std::string metrics_summary(const RunMetrics& m) {
  std::ostringstream os;
  os << "velocity tracking error (mean |.|, m/s and rad/s)\n";
  os << "  vs modified reference:  vx " << m.error_vs_modified[0] << "  vy "
     << m.error_vs_modified[1] << "  wz " << m.error_vs_modified[2] << "\n";
  os << "  vs original reference:  vx " << m.error_vs_original[0] << "  vy "
     << m.error_vs_original[1] << "  wz " << m.error_vs_original[2] << "\n";
  os << "saturation duty:";
  for (const auto& [id, d] : m.saturation_duty) os << "  " << id << " " << d;
  os << "\nbroadcasts: " << m.broadcast_count << "\n";
  os << "applied-force energy:";
  for (const auto& [id, e] : m.force_energy) os << "  " << id << " " << e;
  os << "\n";
  return os.str();
}

}  // namespace comanip
