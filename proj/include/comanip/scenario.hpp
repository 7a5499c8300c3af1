#pragma once

#include <string>
#include <vector>

#include "comanip/adaptive_control.hpp"
#include "comanip/ellipsoid.hpp"
#include "comanip/kinematics.hpp"
#include "comanip/object_model.hpp"
#include "comanip/types.hpp"

namespace comanip {

/// What the team is asked to do. direct_force drives the reference model with
/// an explicit F_t*(t); the profile kinds prescribe a desired object velocity
/// and derive F_t* by inverting the reference dynamics.
struct TaskSpec {
  enum class Type { DirectForce, Circle, PointToPoint };
  Type type = Type::DirectForce;

  // direct_force: F_t* = amplitude .* sin(frequency * t), zero torque.
  Eigen::Vector2d force_amplitude = Eigen::Vector2d::Zero();
  Eigen::Vector2d force_frequency = Eigen::Vector2d::Zero();

  // circle: v = radius * omega * (-sin(omega t), cos(omega t)), w = 0.
  double circle_radius = 0.1;
  double circle_omega = 0.5;

  // point_to_point: quintic-profiled translation to goal over travel_time.
  Eigen::Vector2d goal = Eigen::Vector2d::Zero();
  double travel_time = 10.0;

  // Nominal ellipsoid shaping: aspect, fallback axis when F_t* ~ 0, and how
  // the overall size is chosen (fixed value or matched to the robot's current
  // ellipsoid trace).
  double shape_coefficient = 1.0;
  Eigen::Vector2d fallback_axis = Eigen::Vector2d::UnitX();
  enum class ScaleMode { Fixed, MatchTrace };
  ScaleMode scale_mode = ScaleMode::MatchTrace;
  double scale = 1.0;
};

/// Desired trajectory sample at one instant (3-D twist/wrench convention).
struct TaskSample {
  Vec f_star = Vec::Zero(3);
  Vec xdot_des = Vec::Zero(3);
  Vec xddot_des = Vec::Zero(3);
};

/// How a robot's force limit vector is obtained each tick.
enum class CapabilityMode { Fixed, Computed };

struct RobotSpec {
  std::string id;
  ManipulatorModel model;
  Eigen::Vector2d grasp_offset = Eigen::Vector2d::Zero();  // object frame
  // Carriage mount: the arm base translates rigidly with the object (think
  // mobile platform tracking the transport), so long hauls stay in reach.
  bool base_follows_object = false;
  Vec joints0;
  CapabilityMode capability_mode = CapabilityMode::Fixed;
  Vec f_max_fixed;               // Fixed mode limit per axis
  double delta_fraction = 0.1;   // saturation band as a fraction of f_max
  bool quasi_static = true;      // zero torque bias in the capability solve
  RobotControlGains joint_gains;
};

struct ControllerConfig {
  enum class Kind { AbilityAware, AbilityAgnostic };
  Kind kind = Kind::AbilityAware;
  bool manip_opt = true;
  double mu = 1.0;
  double rate_x = 1.0, rate_r = 1.0, rate_n = 1.0, rate_f = 1.0,
         rate_phi = 0.5;
  double q_lyapunov = 1.0;    // Q = q I in the Lyapunov equation
  double gain_norm_cap = 1e3;
  int rbf_per_axis = 5;
  double rbf_half_range = 0.5;
  double rbf_width = 0.25;
  double tracking_gain = 1.0;  // K_M = k I on Mandel coordinates
  double kr_init_scale = 0.8;  // fraction of the ideal split loaded at t=0
  double kf_init_scale = 1.0;  // fraction of the nominal matched deficiency
                               // gain B*^{-1} B_k-hat loaded at t=0
  double clik_gain = 20.0;     // grasp-point position correction, 1/s
};

struct Event {
  enum class Type {
    SetObjectMass,
    SetFriction,
    ScaleRobotCapability,
    DisableRobot
  };
  Type type = Type::SetObjectMass;
  double time = 0.0;
  double value = 0.0;       // mass / friction / scale factor
  std::string robot_id;     // capability + disable events
};

struct OutputConfig {
  int log_decimation = 1;        // keep every Nth tick in the CSVs
  int gain_log_decimation = 0;   // 0 disables the gain trace
  bool log_joints = false;
  bool dump_polytopes = false;
};

struct ScenarioConfig {
  std::string name;
  double dt = 0.002;
  double duration = 10.0;
  unsigned int seed = 0;

  ObjectModel object;
  ObjectState initial_state;

  // Controller-side beliefs about the plant (shared by every robot).
  double nominal_mass = 1.0;
  double nominal_inertia = 1.0;
  double nominal_mu_linear = 0.1;
  double nominal_mu_rotational = 0.1;

  TaskSpec task;
  int bus_delay_ticks = 0;
  ControllerConfig controller;
  std::vector<RobotSpec> robots;
  std::vector<Event> events;
  OutputConfig outputs;

  void validate() const;  // throws ValidationError
};

/// Parse a scenario JSON file. Resolves joints0 (running a position IK when
/// only joints0_guess is given) and validates. Throws ValidationError with a
/// path-annotated message on any schema problem.
ScenarioConfig load_scenario(const std::string& path);

/// Desired trajectory / reference input at time t, using the scenario's
/// nominal reference dynamics for the profile-driven kinds.
TaskSample sample_task(const TaskSpec& task, const ReferenceModel& ref,
                       double t);

/// Joint angles placing the arm tip at a world target, via damped-least-
/// squares iterations from the guess. Throws ValidationError when the target
/// is unreachable (residual above 1e-8 after the iteration budget).
Vec solve_position_ik(const ManipulatorModel& model, const Vec& guess,
                      const Eigen::Vector2d& target);

}  // namespace comanip
