#pragma once

#include <vector>

#include "comanip/types.hpp"

namespace comanip {

/// A planar serial manipulator with revolute joints. Link frames follow the
/// usual convention: joint i rotates the chain of links i..n-1, the center of
/// mass of each link sits at mid-link.
struct ManipulatorModel {
  Vec link_lengths;    // m
  Vec link_masses;     // kg
  Vec link_inertias;   // kg m^2 about the link COM
  Vec torque_limits;   // N m, per joint
  PlanarPose base_pose{};

  int joints() const { return static_cast<int>(link_lengths.size()); }

  /// Checks the structural invariants (at least two joints, strictly positive
  /// lengths/masses/inertias/limits, consistent vector sizes).
  void validate() const;
};

struct JointState {
  Vec angles;      // rad
  Vec velocities;  // rad/s
};

struct RobotControlGains {
  Vec kp;  // 1/s^2
  Vec kv;  // 1/s
};

PlanarPose forward_kinematics(const ManipulatorModel& model, const Vec& q);

/// Task Jacobian with task_dims rows: 2 for translation only, 3 for
/// translation plus end-effector rotation rate.
Mat jacobian(const ManipulatorModel& model, const Vec& q, int task_dims = 2);

/// Slice k of the result is dJ/dq_k (task_dims x n).
std::vector<Mat> jacobian_partials(const ManipulatorModel& model, const Vec& q,
                                   int task_dims = 2);

/// Jdot = sum_k dJ/dq_k * qdot_k.
Mat jacobian_dot(const ManipulatorModel& model, const Vec& q, const Vec& qdot,
                 int task_dims = 2);

/// Joint-space dynamics H(q) qddot + C_mat(q,qdot) qdot + G(q) = tau with the
/// Coriolis matrix in Christoffel form, so Hdot - 2 C_mat is skew-symmetric.
/// gravity is the in-plane gravity vector (zero for tabletop scenarios).
void dynamics_matrices(const ManipulatorModel& model, const Vec& q,
                       const Vec& qdot, const Eigen::Vector2d& gravity, Mat& H,
                       Mat& C_mat, Vec& G);

/// Same as dynamics_matrices but returns the Coriolis/centrifugal VECTOR
/// C = C_mat * qdot.
void dynamics_terms(const ManipulatorModel& model, const Vec& q,
                    const Vec& qdot, const Eigen::Vector2d& gravity, Mat& H,
                    Vec& C, Vec& G);

/// Moore-Penrose pseudo-inverse by SVD; singular values below
/// rel_tol * sigma_max are treated as zero.
Mat pseudo_inverse(const Mat& A, double rel_tol = 1e-8);

double min_singular_value(const Mat& A);

/// Minimum-norm joint velocity solving J qdot = xdot_task. Throws
/// SingularityError (carrying sigma_min) when J loses row rank.
Vec ik_velocity(const Mat& J, const Vec& xdot_task);

/// Damped least-squares fallback near singularities.
Vec dls_velocity(const Mat& J, const Vec& xdot_task, double damping = 1e-6);

/// qddot = J^+ (xddot_task - Jdot qdot), with Jdot qdot passed in.
Vec ik_acceleration(const Mat& J, const Vec& jdot_qdot, const Vec& xddot_task);

/// Computed-torque law
///   tau = H (qddot_ref + Kp e + Kv edot) + C + G + J^T wrench
/// with e = q_ref - q. The wrench dimension selects the Jacobian rows.
Vec computed_torque(const ManipulatorModel& model, const Vec& q,
                    const Vec& qdot, const Vec& q_ref, const Vec& qdot_ref,
                    const Vec& qddot_ref, const RobotControlGains& gains,
                    const Vec& wrench,
                    const Eigen::Vector2d& gravity = Eigen::Vector2d::Zero());

}  // namespace comanip
