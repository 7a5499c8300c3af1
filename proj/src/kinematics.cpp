#include "comanip/kinematics.hpp"

#include <Eigen/SVD>

#include <cmath>

namespace comanip {

void ManipulatorModel::validate() const {
  const auto n = link_lengths.size();
  if (n < 2) throw ValidationError("manipulator needs at least 2 joints");
  if (link_masses.size() != n || link_inertias.size() != n ||
      torque_limits.size() != n) {
    throw ValidationError("manipulator vectors must all have length n_joints");
  }
  auto positive = [](const Vec& v) { return (v.array() > 0.0).all(); };
  if (!positive(link_lengths) || !positive(link_masses) ||
      !positive(link_inertias) || !positive(torque_limits)) {
    throw ValidationError(
        "link lengths, masses, inertias and torque limits must be > 0");
  }
}

namespace {

// Cumulative link angles c_i = base.theta + q_0 + ... + q_i.
Vec cumulative_angles(const ManipulatorModel& model, const Vec& q) {
  Vec c(q.size());
  double acc = model.base_pose.theta;
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    acc += q[i];
    c[i] = acc;
  }
  return c;
}

void check_q(const ManipulatorModel& model, const Vec& q) {
  require(q.size() == model.joints(), "q length must equal n_joints");
}

void check_task_dims(int task_dims) {
  require(task_dims == 2 || task_dims == 3, "task_dims must be 2 or 3");
}

}  // namespace

PlanarPose forward_kinematics(const ManipulatorModel& model, const Vec& q) {
  check_q(model, q);
  const Vec c = cumulative_angles(model, q);
  PlanarPose pose;
  pose.x = model.base_pose.x;
  pose.y = model.base_pose.y;
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    pose.x += model.link_lengths[i] * std::cos(c[i]);
    pose.y += model.link_lengths[i] * std::sin(c[i]);
  }
  pose.theta = c[q.size() - 1];
  return pose;
}

Mat jacobian(const ManipulatorModel& model, const Vec& q, int task_dims) {
  check_q(model, q);
  check_task_dims(task_dims);
  const int n = model.joints();
  const Vec c = cumulative_angles(model, q);
  Mat J = Mat::Zero(task_dims, n);
  // Column j: velocity of the end effector from unit rate at joint j; only
  // links j..n-1 move.
  for (int j = 0; j < n; ++j) {
    double jx = 0.0, jy = 0.0;
    for (int i = j; i < n; ++i) {
      jx -= model.link_lengths[i] * std::sin(c[i]);
      jy += model.link_lengths[i] * std::cos(c[i]);
    }
    J(0, j) = jx;
    J(1, j) = jy;
    if (task_dims == 3) J(2, j) = 1.0;
  }
  return J;
}

std::vector<Mat> jacobian_partials(const ManipulatorModel& model, const Vec& q,
                                   int task_dims) {
  check_q(model, q);
  check_task_dims(task_dims);
  const int n = model.joints();
  const Vec c = cumulative_angles(model, q);
  std::vector<Mat> partials(n, Mat::Zero(task_dims, n));
  // d/dq_k of column j: terms with link index i >= max(j, k) pick up the
  // angle derivative; the rotation row is constant.
  for (int k = 0; k < n; ++k) {
    Mat& dJ = partials[k];
    for (int j = 0; j < n; ++j) {
      double dx = 0.0, dy = 0.0;
      for (int i = std::max(j, k); i < n; ++i) {
        dx -= model.link_lengths[i] * std::cos(c[i]);
        dy -= model.link_lengths[i] * std::sin(c[i]);
      }
      dJ(0, j) = dx;
      dJ(1, j) = dy;
    }
  }
  return partials;
}

Mat jacobian_dot(const ManipulatorModel& model, const Vec& q, const Vec& qdot,
                 int task_dims) {
  require(qdot.size() == model.joints(), "qdot length must equal n_joints");
  const auto partials = jacobian_partials(model, q, task_dims);
  Mat Jdot = Mat::Zero(task_dims, model.joints());
  for (int k = 0; k < model.joints(); ++k) Jdot += partials[k] * qdot[k];
  return Jdot;
}

namespace {

// COM position Jacobians (2 x n, one per link) and their partials wrt q_k.
// COM of link i sits at joint i plus half a link along angle c_i.
std::vector<Mat> com_jacobians(const ManipulatorModel& model, const Vec& c) {
  const int n = model.joints();
  std::vector<Mat> Jv(n, Mat::Zero(2, n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double jx = 0.0, jy = 0.0;
      for (int m = j; m < i; ++m) {
        jx -= model.link_lengths[m] * std::sin(c[m]);
        jy += model.link_lengths[m] * std::cos(c[m]);
      }
      jx -= 0.5 * model.link_lengths[i] * std::sin(c[i]);
      jy += 0.5 * model.link_lengths[i] * std::cos(c[i]);
      Jv[i](0, j) = jx;
      Jv[i](1, j) = jy;
    }
  }
  return Jv;
}

std::vector<std::vector<Mat>> com_jacobian_partials(
    const ManipulatorModel& model, const Vec& c) {
  const int n = model.joints();
  std::vector<std::vector<Mat>> dJv(n, std::vector<Mat>(n, Mat::Zero(2, n)));
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) {
      for (int j = 0; j <= i; ++j) {
        double dx = 0.0, dy = 0.0;
        for (int m = std::max(j, k); m < i; ++m) {
          dx -= model.link_lengths[m] * std::cos(c[m]);
          dy -= model.link_lengths[m] * std::sin(c[m]);
        }
        if (i >= k && i >= j) {
          dx -= 0.5 * model.link_lengths[i] * std::cos(c[i]);
          dy -= 0.5 * model.link_lengths[i] * std::sin(c[i]);
        }
        dJv[i][k](0, j) = dx;
        dJv[i][k](1, j) = dy;
      }
    }
  }
  return dJv;
}

}  // namespace

void dynamics_matrices(const ManipulatorModel& model, const Vec& q,
                       const Vec& qdot, const Eigen::Vector2d& gravity, Mat& H,
                       Mat& C_mat, Vec& G) {
  check_q(model, q);
  require(qdot.size() == model.joints(), "qdot length must equal n_joints");
  const int n = model.joints();
  const Vec c = cumulative_angles(model, q);
  const auto Jv = com_jacobians(model, c);
  const auto dJv = com_jacobian_partials(model, c);

  H = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    H += model.link_masses[i] * Jv[i].transpose() * Jv[i];
    // Angular part: link i spins with rate sum(qdot_0..i); Jw_i is a row of
    // ones up to column i, so Jw^T Jw is a block of ones.
    for (int a = 0; a <= i; ++a)
      for (int b = 0; b <= i; ++b) H(a, b) += model.link_inertias[i];
  }

  // dH/dq_k, then Christoffel symbols for the Coriolis matrix.
  std::vector<Mat> dH(n, Mat::Zero(n, n));
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      dH[k] += model.link_masses[i] * (dJv[i][k].transpose() * Jv[i] +
                                       Jv[i].transpose() * dJv[i][k]);
    }
  }
  C_mat = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double cij = 0.0;
      for (int k = 0; k < n; ++k) {
        cij += 0.5 * (dH[k](i, j) + dH[j](i, k) - dH[i](j, k)) * qdot[k];
      }
      C_mat(i, j) = cij;
    }
  }

  G = Vec::Zero(n);
  if (!gravity.isZero()) {
    for (int i = 0; i < n; ++i) {
      G -= model.link_masses[i] * Jv[i].transpose() * gravity;
    }
  }
}

void dynamics_terms(const ManipulatorModel& model, const Vec& q,
                    const Vec& qdot, const Eigen::Vector2d& gravity, Mat& H,
                    Vec& C, Vec& G) {
  Mat C_mat;
  dynamics_matrices(model, q, qdot, gravity, H, C_mat, G);
  C = C_mat * qdot;
}

Mat pseudo_inverse(const Mat& A, double rel_tol) {
  Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const double cutoff = s.size() > 0 ? rel_tol * s(0) : 0.0;
  Vec inv = Vec::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > cutoff) inv(i) = 1.0 / s(i);
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

double min_singular_value(const Mat& A) {
  Eigen::JacobiSVD<Mat> svd(A);
  const auto& s = svd.singularValues();
  return s(s.size() - 1);
}

Vec ik_velocity(const Mat& J, const Vec& xdot_task) {
  require(xdot_task.size() == J.rows(), "xdot dimension mismatch");
  Eigen::JacobiSVD<Mat> svd(J, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const double sigma_min = s(s.size() - 1);
  if (s.size() < J.rows() || sigma_min <= 1e-8 * s(0)) {
    throw SingularityError("rank-deficient Jacobian in ik_velocity",
                           sigma_min);
  }
  Vec inv(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) inv(i) = 1.0 / s(i);
  return svd.matrixV() * inv.asDiagonal() *
         (svd.matrixU().transpose() * xdot_task);
}

Vec dls_velocity(const Mat& J, const Vec& xdot_task, double damping) {
  require(xdot_task.size() == J.rows(), "xdot dimension mismatch");
  const Mat JJt = J * J.transpose() +
                  damping * Mat::Identity(J.rows(), J.rows());
  return J.transpose() * JJt.ldlt().solve(xdot_task);
}

Vec ik_acceleration(const Mat& J, const Vec& jdot_qdot,
                    const Vec& xddot_task) {
  require(jdot_qdot.size() == J.rows() && xddot_task.size() == J.rows(),
          "acceleration dimension mismatch");
  return ik_velocity(J, xddot_task - jdot_qdot);
}

Vec computed_torque(const ManipulatorModel& model, const Vec& q,
                    const Vec& qdot, const Vec& q_ref, const Vec& qdot_ref,
                    const Vec& qddot_ref, const RobotControlGains& gains,
                    const Vec& wrench, const Eigen::Vector2d& gravity) {
  const int n = model.joints();
  require(q.size() == n && qdot.size() == n && q_ref.size() == n &&
              qdot_ref.size() == n && qddot_ref.size() == n,
          "joint vector length mismatch");
  require(gains.kp.size() == n && gains.kv.size() == n,
          "gain vector length mismatch");
  require(wrench.size() == 2 || wrench.size() == 3,
          "wrench must be 2- or 3-dimensional");
  Mat H;
  Vec C, G;
  dynamics_terms(model, q, qdot, gravity, H, C, G);
  const Vec e = q_ref - q;
  const Vec edot = qdot_ref - qdot;
  const Vec qddot_cmd =
      qddot_ref + gains.kp.cwiseProduct(e) + gains.kv.cwiseProduct(edot);
  const Mat J = jacobian(model, q, static_cast<int>(wrench.size()));
  return H * qddot_cmd + C + G + J.transpose() * wrench;
}

}  // namespace comanip
