#pragma once

#include <vector>

#include "comanip/ellipsoid.hpp"
#include "comanip/types.hpp"

namespace comanip {

/// Weighted force manipulability ellipsoid of one robot together with the
/// torque-limit weighting that produced it.
struct WfmeState {
  SpdEllipsoid ellipsoid;  // M^f
  Vec weights;             // diagonal of W, entries 1/tau_max_i
};

/// Scaling matrix applied in Mandel coordinates by the tracking law.
struct TrackingGains {
  Mat K_M;
};

/// Diagonal weighting from joint torque limits: w_i = 1 / tau_max_i.
Vec torque_limit_weights(const Vec& tau_max);

/// M^f = (J W^T W J^T)^{-1}. Throws SingularityError at rank-deficient J.
SpdEllipsoid wfme(const Mat& J, const Vec& weights);

/// Derivative tensor of M^f wrt joint angles; slice k is the symmetric d x d
/// matrix dM^f/dq_k, computed as
///   -M^f (dJ_k Jw^T + Jw dJ_k^T) M^f  with  Jw = J diag(w^2).
std::vector<Mat> wfme_jacobian(const Mat& J, const std::vector<Mat>& dJ,
                               const Vec& weights, const SpdEllipsoid& M_f);

/// Stacks mandel_vec of each slice as a column: d(d+1)/2 x n.
Mat mandel_matricize(const std::vector<Mat>& slices);

/// Joint velocity command combining the task solution with a null-space step
/// toward the nominal ellipsoid:
///   qdot = qdot_task + (I - J^+ J) T^+ K_M vec(Log_{M^f} M_t)
/// where T is the Mandel-matricized manipulability Jacobian. If the smallest
/// singular value of J drops below singular_guard the null-space term is
/// dropped and qdot_task is returned unchanged.
Vec nullspace_tracking_velocity(const Mat& J, const Vec& qdot_task,
                                const std::vector<Mat>& manip_jacobian,
                                const SpdEllipsoid& M_f,
                                const SpdEllipsoid& M_t, const Mat& K_M,
                                double singular_guard = 1e-4);

}  // namespace comanip
