#pragma once

#include <optional>
#include <string>
#include <vector>

#include "comanip/types.hpp"

namespace comanip {

/// One face a . F <= b of the achievable-force region.
struct Halfspace {
  Vec normal;
  double offset = 0.0;
};

/// Achievable end-effector force set {F : -tau_max <= J^T F + bias <= tau_max}
/// expressed as halfspaces. The bias term carries torques already spent on
/// dynamics/gravity so the set shrinks under load. Vertices are computed
/// lazily for the planar (2-D force) case.
class ForcePolytope {
 public:
  ForcePolytope(std::vector<Halfspace> faces, Eigen::Index force_dim);

  Eigen::Index force_dim() const { return force_dim_; }
  const std::vector<Halfspace>& faces() const { return faces_; }

  /// True when a . F <= b + tol for every face.
  bool contains(const Vec& force, double tol = 1e-9) const;

  /// Counter-clockwise vertex list; only available for 2-D force spaces.
  const std::vector<Vec>& vertices() const;

 private:
  std::vector<Halfspace> faces_;
  Eigen::Index force_dim_ = 0;
  mutable std::optional<std::vector<Vec>> vertices_;
};

/// Largest scale and the force itself along one direction, plus which torque
/// bounds were active at the optimum.
struct CapabilityResult {
  double f_max = 0.0;
  Vec force;
  std::vector<Eigen::Index> active_constraints;
  bool unbounded = false;
};

/// Build the polytope from the Jacobian, torque limits and a torque bias.
/// Throws EmptyPolytopeError when the bias alone exhausts some joint
/// (|bias_i| >= tau_max_i), i.e. no force margin is left on that joint.
ForcePolytope force_polytope(const Mat& J, const Vec& tau_max,
                             const Vec& torque_bias);

/// Maximum alpha with -tau <= alpha J^T d + bias <= tau for a unit direction
/// d. Closed form: each joint contributes an interval of admissible alpha;
/// the answer is the smallest positive upper bound. unbounded=true when no
/// joint torque responds to the direction (J^T d = 0).
CapabilityResult max_force_along(const Mat& J, const Vec& tau_max,
                                 const Vec& torque_bias, const Vec& direction);

/// Conservative per-axis capability vector F_kmax: component j is the worse of
/// the +e_j and -e_j directional maxima, then the whole vector is shrunk so
/// the axis-aligned box [-F_kmax, F_kmax] fits inside the polytope.
Vec f_kmax_vector(const Mat& J, const Vec& tau_max, const Vec& torque_bias);

/// Append one CSV row per vertex: robot_id,time,vertex_x,vertex_y.
void write_polytope_csv(std::ostream& os, const std::string& robot_id,
                        double time, const ForcePolytope& poly);

}  // namespace comanip
