#include "comanip/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <json.hpp>

namespace comanip {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ValidationError("scenario: " + where + ": " + what);
}

double get_num(const json& j, const std::string& key, double fallback,
               bool required = false) {
  if (!j.contains(key)) {
    if (required) fail(key, "missing required number");
    return fallback;
  }
  if (!j[key].is_number()) fail(key, "expected a number");
  return j[key].get<double>();
}

std::string get_str(const json& j, const std::string& key,
                    const std::string& fallback, bool required = false) {
  if (!j.contains(key)) {
    if (required) fail(key, "missing required string");
    return fallback;
  }
  if (!j[key].is_string()) fail(key, "expected a string");
  return j[key].get<std::string>();
}

Vec get_vec(const json& j, const std::string& key, bool required = false) {
  if (!j.contains(key)) {
    if (required) fail(key, "missing required array");
    return Vec();
  }
  if (!j[key].is_array()) fail(key, "expected an array of numbers");
  Vec v(j[key].size());
  Eigen::Index i = 0;
  for (const auto& e : j[key]) {
    if (!e.is_number()) fail(key, "expected numeric entries");
    v[i++] = e.get<double>();
  }
  return v;
}

Eigen::Vector2d get_vec2(const json& j, const std::string& key,
                         const Eigen::Vector2d& fallback,
                         bool required = false) {
  if (!j.contains(key)) {
    if (required) fail(key, "missing required 2-vector");
    return fallback;
  }
  const Vec v = get_vec(j, key, true);
  if (v.size() != 2) fail(key, "expected exactly 2 entries");
  return {v[0], v[1]};
}

TaskSpec parse_task(const json& j) {
  TaskSpec t;
  const std::string kind = get_str(j, "type", "", true);
  if (kind == "direct_force") {
    t.type = TaskSpec::Type::DirectForce;
    t.force_amplitude = get_vec2(j, "force_amplitude", {0, 0}, true);
    t.force_frequency = get_vec2(j, "force_frequency", {0, 0}, true);
  } else if (kind == "circle") {
    t.type = TaskSpec::Type::Circle;
    t.circle_radius = get_num(j, "radius", 0.1, true);
    t.circle_omega = get_num(j, "omega", 0.5, true);
  } else if (kind == "point_to_point") {
    t.type = TaskSpec::Type::PointToPoint;
    t.goal = get_vec2(j, "goal", {0, 0}, true);
    t.travel_time = get_num(j, "travel_time", 10.0, true);
    if (t.travel_time <= 0.0) fail("task.travel_time", "must be positive");
  } else {
    fail("task.type", "unknown kind '" + kind + "'");
  }
  if (j.contains("ellipsoid")) {
    const json& e = j["ellipsoid"];
    t.shape_coefficient = get_num(e, "shape_coefficient", 1.0);
    t.fallback_axis = get_vec2(e, "reference_axis", {1, 0});
    const std::string mode = get_str(e, "scale_mode", "match_trace");
    if (mode == "fixed") {
      t.scale_mode = TaskSpec::ScaleMode::Fixed;
    } else if (mode == "match_trace") {
      t.scale_mode = TaskSpec::ScaleMode::MatchTrace;
    } else {
      fail("task.ellipsoid.scale_mode", "expected fixed|match_trace");
    }
    t.scale = get_num(e, "scale", 1.0);
  }
  return t;
}

RobotSpec parse_robot(const json& j, const ObjectState& object_state) {
  RobotSpec r;
  r.id = get_str(j, "id", "", true);
  const Vec base = get_vec(j, "base", true);
  if (base.size() != 3) fail("robots[].base", "expected [x, y, theta]");
  r.model.base_pose = PlanarPose{base[0], base[1], base[2]};
  r.model.link_lengths = get_vec(j, "links", true);
  const Eigen::Index n = r.model.link_lengths.size();
  r.model.link_masses =
      j.contains("masses") ? get_vec(j, "masses") : Vec::Ones(n);
  r.model.link_inertias =
      j.contains("inertias") ? get_vec(j, "inertias") : 0.01 * Vec::Ones(n);
  r.model.torque_limits = get_vec(j, "torque_limits", true);
  r.model.validate();
  r.grasp_offset = get_vec2(j, "grasp_offset", {0, 0}, true);
  r.base_follows_object = j.value("base_follows_object", false);

  // Joint start: either explicit or solved from a guess so the tip lands on
  // the grasp point at t = 0.
  const Eigen::Vector2d target =
      object_state.position +
      planar_rotation(object_state.orientation) * r.grasp_offset;
  if (j.contains("joints0")) {
    r.joints0 = get_vec(j, "joints0");
    if (r.joints0.size() != n) fail("robots[].joints0", "size != link count");
    const PlanarPose tip = forward_kinematics(r.model, r.joints0);
    if ((tip.translation() - target).norm() > 1e-6) {
      fail("robots[].joints0", "tip misses the grasp point for robot " + r.id);
    }
  } else if (j.contains("joints0_guess")) {
    Vec guess = get_vec(j, "joints0_guess");
    if (guess.size() != n) fail("robots[].joints0_guess", "size mismatch");
    r.joints0 = solve_position_ik(r.model, guess, target);
  } else {
    fail("robots[]", "need joints0 or joints0_guess for robot " + r.id);
  }

  if (j.contains("capability")) {
    const json& c = j["capability"];
    const std::string mode = get_str(c, "mode", "fixed");
    if (mode == "fixed") {
      r.capability_mode = CapabilityMode::Fixed;
      r.f_max_fixed = get_vec(c, "f_max", true);
      if (r.f_max_fixed.size() != 2) fail("capability.f_max", "expected 2-D");
      if (r.f_max_fixed.minCoeff() <= 0.0) {
        fail("capability.f_max", "must be positive");
      }
    } else if (mode == "computed") {
      r.capability_mode = CapabilityMode::Computed;
    } else {
      fail("capability.mode", "expected fixed|computed");
    }
    r.delta_fraction = get_num(c, "delta_fraction", 0.1);
    if (r.delta_fraction <= 0.0 || r.delta_fraction >= 1.0) {
      fail("capability.delta_fraction", "must lie in (0, 1)");
    }
    r.quasi_static = c.value("quasi_static", true);
  } else {
    fail("robots[]", "missing capability block for robot " + r.id);
  }

  r.joint_gains.kp = get_num(j, "kp", 100.0) * Vec::Ones(n);
  r.joint_gains.kv = get_num(j, "kv", 20.0) * Vec::Ones(n);
  return r;
}

ControllerConfig parse_controller(const json& j) {
  ControllerConfig c;
  const std::string kind = get_str(j, "kind", "ability_aware");
  if (kind == "ability_aware") {
    c.kind = ControllerConfig::Kind::AbilityAware;
  } else if (kind == "ability_agnostic") {
    c.kind = ControllerConfig::Kind::AbilityAgnostic;
  } else {
    fail("controller.kind", "expected ability_aware|ability_agnostic");
  }
  c.manip_opt = j.value("manip_opt", true);
  c.mu = get_num(j, "mu", 1.0);
  if (j.contains("rates")) {
    const json& r = j["rates"];
    c.rate_x = get_num(r, "x", c.rate_x);
    c.rate_r = get_num(r, "r", c.rate_r);
    c.rate_n = get_num(r, "n", c.rate_n);
    c.rate_f = get_num(r, "f", c.rate_f);
    c.rate_phi = get_num(r, "phi", c.rate_phi);
  }
  c.q_lyapunov = get_num(j, "q_lyapunov", 1.0);
  c.gain_norm_cap = get_num(j, "gain_norm_cap", 1e3);
  if (j.contains("rbf")) {
    const json& r = j["rbf"];
    c.rbf_per_axis = static_cast<int>(get_num(r, "per_axis", 5));
    c.rbf_half_range = get_num(r, "half_range", 0.5);
    c.rbf_width = get_num(r, "width", 0.25);
  }
  c.tracking_gain = get_num(j, "tracking_gain", 1.0);
  c.kr_init_scale = get_num(j, "kr_init_scale", 0.8);
  c.kf_init_scale = get_num(j, "kf_init_scale", 1.0);
  c.clik_gain = get_num(j, "clik_gain", 20.0);
  return c;
}

Event parse_event(const json& j) {
  Event e;
  e.time = get_num(j, "time", 0.0, true);
  const std::string kind = get_str(j, "type", "", true);
  if (kind == "set_object_mass") {
    e.type = Event::Type::SetObjectMass;
    e.value = get_num(j, "value", 0.0, true);
  } else if (kind == "set_friction") {
    e.type = Event::Type::SetFriction;
    e.value = get_num(j, "value", 0.0, true);
  } else if (kind == "scale_robot_capability") {
    e.type = Event::Type::ScaleRobotCapability;
    e.robot_id = get_str(j, "robot", "", true);
    e.value = get_num(j, "factor", 1.0, true);
  } else if (kind == "disable_robot") {
    e.type = Event::Type::DisableRobot;
    e.robot_id = get_str(j, "robot", "", true);
  } else {
    fail("events[].type", "unknown event '" + kind + "'");
  }
  return e;
}

}  // namespace

void ScenarioConfig::validate() const {
  if (dt <= 0.0) throw ValidationError("scenario: dt must be positive");
  if (duration <= 0.0) {
    throw ValidationError("scenario: duration must be positive");
  }
  if (robots.empty()) {
    throw ValidationError("scenario: at least one robot required");
  }
  object.validate();
  if (nominal_mass <= 0.0 || nominal_inertia <= 0.0 ||
      nominal_mu_linear <= 0.0 || nominal_mu_rotational <= 0.0) {
    throw ValidationError("scenario: nominal parameters must be positive");
  }
  std::set<std::string> ids;
  for (const auto& r : robots) {
    if (r.id.empty()) throw ValidationError("scenario: empty robot id");
    if (!ids.insert(r.id).second) {
      throw ValidationError("scenario: duplicate robot id " + r.id);
    }
    r.model.validate();
    if (r.capability_mode == CapabilityMode::Fixed &&
        (r.f_max_fixed.size() != 2 || r.f_max_fixed.minCoeff() <= 0.0)) {
      throw ValidationError("scenario: fixed capability needs positive f_max");
    }
  }
  for (std::size_t i = 0; i < robots.size(); ++i) {
    for (std::size_t j = i + 1; j < robots.size(); ++j) {
      if ((robots[i].grasp_offset - robots[j].grasp_offset).norm() < 1e-9) {
        throw ValidationError("scenario: grasp offsets must be distinct");
      }
    }
  }
  double prev = 0.0;
  for (const auto& e : events) {
    if (e.time < 0.0 || e.time > duration) {
      throw ValidationError("scenario: event time outside [0, duration]");
    }
    if (e.time < prev) throw ValidationError("scenario: events must be sorted");
    prev = e.time;
    if (e.type == Event::Type::ScaleRobotCapability ||
        e.type == Event::Type::DisableRobot) {
      if (ids.find(e.robot_id) == ids.end()) {
        throw ValidationError("scenario: event names unknown robot " +
                              e.robot_id);
      }
    }
    if (e.type == Event::Type::SetObjectMass && e.value <= 0.0) {
      throw ValidationError("scenario: event mass must be positive");
    }
    if (e.type == Event::Type::SetFriction && e.value < 0.0) {
      throw ValidationError("scenario: event friction must be non-negative");
    }
    if (e.type == Event::Type::ScaleRobotCapability && e.value <= 0.0) {
      throw ValidationError("scenario: capability factor must be positive");
    }
  }
  if (outputs.log_decimation < 1) {
    throw ValidationError("scenario: log_decimation must be >= 1");
  }
  if (controller.clik_gain < 0.0 || controller.tracking_gain < 0.0) {
    throw ValidationError("scenario: controller gains must be non-negative");
  }
  if (task.shape_coefficient <= 0.0 || task.shape_coefficient > 1.0) {
    throw ValidationError("scenario: shape coefficient must be in (0, 1]");
  }
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("scenario: cannot open " + path);
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& err) {
    throw ValidationError("scenario: JSON parse error in " + path + ": " +
                          err.what());
  }

  ScenarioConfig cfg;
  cfg.name = get_str(j, "name", path);
  cfg.dt = get_num(j, "dt", 0.002, true);
  cfg.duration = get_num(j, "duration", 10.0, true);
  cfg.seed = static_cast<unsigned int>(get_num(j, "seed", 0.0));

  if (!j.contains("object")) fail("object", "missing block");
  const json& jo = j["object"];
  cfg.object.mass = get_num(jo, "mass", 1.0, true);
  cfg.object.inertia = get_num(jo, "inertia", 1.0, true);
  cfg.object.mu_linear = get_num(jo, "mu_linear", 0.0, true);
  cfg.object.mu_rotational = get_num(jo, "mu_rotational", 0.0, true);
  cfg.object.gravity2 = get_vec2(jo, "gravity", {0, 0});
  cfg.initial_state.position = get_vec2(jo, "position", {0, 0});
  cfg.initial_state.orientation = get_num(jo, "orientation", 0.0);
  if (jo.contains("velocity")) {
    const Vec v = get_vec(jo, "velocity");
    if (v.size() != 3) fail("object.velocity", "expected [vx, vy, wz]");
    cfg.initial_state.velocity = v;
  }

  if (!j.contains("nominal")) fail("nominal", "missing block");
  const json& jn = j["nominal"];
  cfg.nominal_mass = get_num(jn, "mass", 1.0, true);
  cfg.nominal_inertia = get_num(jn, "inertia", 1.0, true);
  cfg.nominal_mu_linear = get_num(jn, "mu_linear", 0.1, true);
  cfg.nominal_mu_rotational = get_num(jn, "mu_rotational", 0.1, true);

  if (!j.contains("task")) fail("task", "missing block");
  cfg.task = parse_task(j["task"]);

  if (j.contains("communication")) {
    cfg.bus_delay_ticks = static_cast<int>(
        get_num(j["communication"], "bus_delay_ticks", 0.0));
    if (cfg.bus_delay_ticks < 0) fail("communication", "negative bus delay");
  }
  cfg.controller = j.contains("controller") ? parse_controller(j["controller"])
                                            : ControllerConfig{};

  if (!j.contains("robots") || !j["robots"].is_array()) {
    fail("robots", "missing robot list");
  }
  for (const auto& jr : j["robots"]) {
    cfg.robots.push_back(parse_robot(jr, cfg.initial_state));
  }

  if (j.contains("events")) {
    for (const auto& je : j["events"]) cfg.events.push_back(parse_event(je));
  }

  if (j.contains("outputs")) {
    const json& out = j["outputs"];
    cfg.outputs.log_decimation =
        static_cast<int>(get_num(out, "log_decimation", 1.0));
    cfg.outputs.gain_log_decimation =
        static_cast<int>(get_num(out, "gain_log_decimation", 0.0));
    cfg.outputs.log_joints = out.value("log_joints", false);
    cfg.outputs.dump_polytopes = out.value("dump_polytopes", false);
  }

  cfg.validate();
  return cfg;
}

TaskSample sample_task(const TaskSpec& task, const ReferenceModel& ref,
                       double t) {
  TaskSample s;
  switch (task.type) {
    case TaskSpec::Type::DirectForce:
      s.f_star[0] = task.force_amplitude[0] *
                    std::sin(task.force_frequency[0] * t);
      s.f_star[1] = task.force_amplitude[1] *
                    std::sin(task.force_frequency[1] * t);
      return s;
    case TaskSpec::Type::Circle: {
      const double w = task.circle_omega;
      const double v = task.circle_radius * w;
      s.xdot_des[0] = -v * std::sin(w * t);
      s.xdot_des[1] = v * std::cos(w * t);
      s.xddot_des[0] = -v * w * std::cos(w * t);
      s.xddot_des[1] = -v * w * std::sin(w * t);
      break;
    }
    case TaskSpec::Type::PointToPoint: {
      const double T = task.travel_time;
      if (t < T) {
        const double u = t / T;
        // quintic blend: rest-to-rest, zero end acceleration
        const double sd = (30.0 * u * u - 60.0 * u * u * u +
                           30.0 * u * u * u * u) / T;
        const double sdd = (60.0 * u - 180.0 * u * u + 120.0 * u * u * u) /
                           (T * T);
        s.xdot_des.head<2>() = task.goal * sd;
        s.xddot_des.head<2>() = task.goal * sdd;
      }
      break;
    }
  }
  s.f_star = reference_input(ref, s.xdot_des, s.xddot_des);
  return s;
}

Vec solve_position_ik(const ManipulatorModel& model, const Vec& guess,
                      const Eigen::Vector2d& target) {
  require(guess.size() == model.joints(), "solve_position_ik: guess size");
  Vec q = guess;
  for (int iter = 0; iter < 300; ++iter) {
    const PlanarPose tip = forward_kinematics(model, q);
    const Eigen::Vector2d err = target - tip.translation();
    if (err.norm() < 1e-12) break;
    const Mat J = jacobian(model, q, 2);
    Vec e2(2);
    e2 << err[0], err[1];
    Vec step = dls_velocity(J, e2, 1e-6);
    if (step.norm() > 0.5) step *= 0.5 / step.norm();  // damp large jumps
    q += step;
  }
  const PlanarPose tip = forward_kinematics(model, q);
  if ((tip.translation() - target).norm() > 1e-8) {
    throw ValidationError(
        "solve_position_ik: target unreachable from the given guess");
  }
  return q;
}

}  // namespace comanip
