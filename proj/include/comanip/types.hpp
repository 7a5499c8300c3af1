#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace comanip {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Pose of a rigid body in the plane: position plus heading.
struct PlanarPose {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  Eigen::Vector2d translation() const { return {x, y}; }
};

inline Eigen::Matrix2d planar_rotation(double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  Eigen::Matrix2d r;
  r << c, -s, s, c;
  return r;
}

/// z-component of the planar cross product a x b.
inline double cross2(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return a.x() * b.y() - a.y() * b.x();
}

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a Jacobian (or derived operator) loses row rank.
struct SingularityError : std::runtime_error {
  explicit SingularityError(const std::string& what, double sigma_min)
      : std::runtime_error(what), min_singular_value(sigma_min) {}
  double min_singular_value;
};

struct EmptyPolytopeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised by the simulation loop when a state norm exceeds the blow-up bound.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Argument size/shape precondition: mismatches are DimensionError.
inline void require(bool cond, const std::string& msg) {
  if (!cond) throw DimensionError(msg);
}

/// Value/invariant precondition: violations are ValidationError.
inline void require_valid(bool cond, const std::string& msg) {
  if (!cond) throw ValidationError(msg);
}

}  // namespace comanip
