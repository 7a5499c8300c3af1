#include "comanip/manipulability.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "comanip/kinematics.hpp"

namespace comanip {

Vec torque_limit_weights(const Vec& tau_max) {
  require(tau_max.size() > 0, "torque_limit_weights: empty limits");
  Vec w(tau_max.size());
  for (Eigen::Index i = 0; i < tau_max.size(); ++i) {
    require_valid(tau_max[i] > 0.0,
                  "torque_limit_weights: limits must be positive");
    w[i] = 1.0 / tau_max[i];
  }
  return w;
}

SpdEllipsoid wfme(const Mat& J, const Vec& weights) {
  require(J.cols() == weights.size(), "wfme: weight count != joint count");
  const Mat Jw = J * weights.array().square().matrix().asDiagonal();
  const Mat A = Jw * J.transpose();  // J W^T W J^T, symmetric PSD
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (A + A.transpose()));
  const double lmax = es.eigenvalues().maxCoeff();
  const double lmin = es.eigenvalues().minCoeff();
  if (lmin <= 1e-12 * std::max(lmax, 1.0)) {
    throw SingularityError("wfme: J W^T W J^T is singular",
                           std::sqrt(std::max(lmin, 0.0)));
  }
  const Mat Minv = es.eigenvectors() *
                   es.eigenvalues().cwiseInverse().asDiagonal() *
                   es.eigenvectors().transpose();
  SpdEllipsoid out;
  out.matrix = 0.5 * (Minv + Minv.transpose());
  return out;
}

std::vector<Mat> wfme_jacobian(const Mat& J, const std::vector<Mat>& dJ,
                               const Vec& weights, const SpdEllipsoid& M_f) {
  require(static_cast<Eigen::Index>(dJ.size()) == J.cols(),
          "wfme_jacobian: need one Jacobian partial per joint");
  const Mat W2 = weights.array().square().matrix().asDiagonal();
  const Mat Jw = J * W2;
  std::vector<Mat> slices(dJ.size());
  for (std::size_t k = 0; k < dJ.size(); ++k) {
    // d/dq_k (J W^2 J^T) = dJ_k W^2 J^T + J W^2 dJ_k^T, pushed through the
    // inverse: dM = -M (dA) M.
    const Mat dA = dJ[k] * Jw.transpose() + Jw * dJ[k].transpose();
    Mat slice = -M_f.matrix * dA * M_f.matrix;
    slices[k] = 0.5 * (slice + slice.transpose());
  }
  return slices;
}

Mat mandel_matricize(const std::vector<Mat>& slices) {
  require(!slices.empty(), "mandel_matricize: no slices");
  const Eigen::Index d = slices.front().rows();
  const Eigen::Index m = d * (d + 1) / 2;
  Mat T(m, static_cast<Eigen::Index>(slices.size()));
  for (std::size_t k = 0; k < slices.size(); ++k) {
    require(slices[k].rows() == d && slices[k].cols() == d,
            "mandel_matricize: inconsistent slice shape");
    T.col(static_cast<Eigen::Index>(k)) = mandel_vec(slices[k]);
  }
  return T;
}

Vec nullspace_tracking_velocity(const Mat& J, const Vec& qdot_task,
                                const std::vector<Mat>& manip_jacobian,
                                const SpdEllipsoid& M_f,
                                const SpdEllipsoid& M_t, const Mat& K_M,
                                double singular_guard) {
  require(J.cols() == qdot_task.size(),
          "nullspace_tracking_velocity: qdot_task size mismatch");
  if (min_singular_value(J) < singular_guard) return qdot_task;

  const Mat Jpinv = pseudo_inverse(J);
  const Mat N = Mat::Identity(J.cols(), J.cols()) - Jpinv * J;
  const Mat T = mandel_matricize(manip_jacobian);
  const Vec residual = mandel_vec(spd_log(M_f, M_t));
  require(K_M.rows() == residual.size() && K_M.cols() == residual.size(),
          "nullspace_tracking_velocity: K_M shape mismatch");
  const Vec step = pseudo_inverse(T) * (K_M * residual);
  return qdot_task + N * step;
}

}  // namespace comanip
