#include "comanip/object_model.hpp"

#include <cmath>

namespace comanip {

void ObjectModel::validate() const {
  require_valid(mass > 0.0, "ObjectModel: mass must be positive");
  require_valid(inertia > 0.0, "ObjectModel: inertia must be positive");
  require_valid(mu_linear >= 0.0 && mu_rotational >= 0.0,
          "ObjectModel: damping coefficients must be non-negative");
}

Eigen::Vector2d grasp_offset_world(const GraspMap& grasp, std::size_t k,
                                   double orientation) {
  require(k < grasp.offsets.size(), "grasp_offset_world: robot index");
  return planar_rotation(orientation) * grasp.offsets[k];
}

Mat grasp_matrix_transpose(const Eigen::Vector2d& r_world) {
  Mat G = Mat::Identity(3, 3);
  G(0, 2) = -r_world[1];
  G(1, 2) = r_world[0];
  return G;
}

Mat grasp_matrix_transpose_dot(const Eigen::Vector2d& r_world, double omega) {
  Mat Gd = Mat::Zero(3, 3);
  // rdot = omega * (-r_y, r_x)
  Gd(0, 2) = -omega * r_world[0];
  Gd(1, 2) = -omega * r_world[1];
  return Gd;
}

Vec grasp_velocity(const Eigen::Vector2d& r_world, const Vec& object_twist) {
  require(object_twist.size() == 3, "grasp_velocity: twist must be 3-D");
  return grasp_matrix_transpose(r_world) * object_twist;
}

Vec grasp_acceleration(const Eigen::Vector2d& r_world, const Vec& object_twist,
                       const Vec& object_accel) {
  require(object_twist.size() == 3 && object_accel.size() == 3,
          "grasp_acceleration: vectors must be 3-D");
  return grasp_matrix_transpose(r_world) * object_accel +
         grasp_matrix_transpose_dot(r_world, object_twist[2]) * object_twist;
}

Vec wrench_from_forces(const std::vector<Eigen::Vector2d>& r_world,
                       const std::vector<Eigen::Vector2d>& forces) {
  require(r_world.size() == forces.size(),
          "wrench_from_forces: one offset per force");
  Vec w = Vec::Zero(3);
  for (std::size_t k = 0; k < forces.size(); ++k) {
    w[0] += forces[k][0];
    w[1] += forces[k][1];
    w[2] += cross2(r_world[k], forces[k]);
  }
  return w;
}

Vec object_acceleration(const ObjectModel& model, const ObjectState& state,
                        const Vec& wrench) {
  require(wrench.size() == 3, "object_acceleration: wrench must be 3-D");
  Vec a(3);
  a[0] = (wrench[0] - model.mu_linear * state.velocity[0]) / model.mass +
         model.gravity2[0];
  a[1] = (wrench[1] - model.mu_linear * state.velocity[1]) / model.mass +
         model.gravity2[1];
  a[2] = (wrench[2] - model.mu_rotational * state.velocity[2]) / model.inertia;
  return a;
}

ObjectState step_object(const ObjectModel& model, const ObjectState& state,
                        const Vec& wrench, double dt) {
  require_valid(dt > 0.0, "step_object: dt must be positive");
  const Vec a = object_acceleration(model, state, wrench);
  ObjectState next = state;
  next.velocity = state.velocity + dt * a;
  next.position += dt * next.velocity.head<2>();
  next.orientation += dt * next.velocity[2];
  return next;
}

}  // namespace comanip
