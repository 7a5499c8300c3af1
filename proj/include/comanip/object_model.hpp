#pragma once

#include <vector>

#include "comanip/types.hpp"

namespace comanip {

/// Planar rigid body with viscous damping on both the linear and angular
/// channels. gravity2 is the in-plane gravity acceleration (usually zero for
/// a tabletop task, or {0, -9.81} for a vertical plane).
struct ObjectModel {
  double mass = 1.0;
  double inertia = 1.0;
  double mu_linear = 0.0;
  double mu_rotational = 0.0;
  Eigen::Vector2d gravity2 = Eigen::Vector2d::Zero();

  void validate() const;
};

struct ObjectState {
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  double orientation = 0.0;
  Vec velocity = Vec::Zero(3);  // (vx, vy, wz)
};

/// Grasp point offsets in the object body frame, one per robot.
struct GraspMap {
  std::vector<Eigen::Vector2d> offsets;
};

/// World-frame grasp offset for robot k at the current orientation.
Eigen::Vector2d grasp_offset_world(const GraspMap& grasp, std::size_t k,
                                   double orientation);

/// G^T mapping object twist (vx, vy, wz) to grasp-point twist:
/// [1 0 -r_y; 0 1 r_x; 0 0 1] with r the world-frame offset.
Mat grasp_matrix_transpose(const Eigen::Vector2d& r_world);

/// Time derivative of G^T given r rotating at omega: rdot = omega (-r_y, r_x).
Mat grasp_matrix_transpose_dot(const Eigen::Vector2d& r_world, double omega);

/// Twist of the grasp point.
Vec grasp_velocity(const Eigen::Vector2d& r_world, const Vec& object_twist);

/// Acceleration of the grasp point: G^T xddot + Gdot^T xdot.
Vec grasp_acceleration(const Eigen::Vector2d& r_world, const Vec& object_twist,
                       const Vec& object_accel);

/// Total wrench (fx, fy, torque) about the object center from point forces
/// applied at world-frame grasp offsets.
Vec wrench_from_forces(const std::vector<Eigen::Vector2d>& r_world,
                       const std::vector<Eigen::Vector2d>& forces);

/// Object acceleration under an applied wrench: damping, gravity and the
/// applied wrench divided by mass/inertia. Planar, so no gyroscopic term.
Vec object_acceleration(const ObjectModel& model, const ObjectState& state,
                        const Vec& wrench);

/// One semi-implicit Euler step: velocity first (from the acceleration at the
/// old velocity), then pose with the updated velocity.
ObjectState step_object(const ObjectModel& model, const ObjectState& state,
                        const Vec& wrench, double dt);

}  // namespace comanip
