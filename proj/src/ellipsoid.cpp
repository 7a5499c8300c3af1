#include "comanip/ellipsoid.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace comanip {

namespace {

Mat symmetrize(const Mat& S) { return 0.5 * (S + S.transpose()); }

void check_symmetric(const Mat& S, double tol, const char* who) {
  if (S.rows() != S.cols() || (S - S.transpose()).cwiseAbs().maxCoeff() > tol)
    throw ValidationError(std::string(who) + ": matrix must be symmetric");
}

Mat spd_function(const Mat& S, double (*f)(double), const char* who,
                 bool require_positive) {
  check_symmetric(S, 1e-9, who);
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(S));
  Vec vals = es.eigenvalues();
  for (Eigen::Index i = 0; i < vals.size(); ++i) {
    if (require_positive && vals(i) <= 0.0)
      throw ValidationError(std::string(who) + ": matrix must be SPD");
    vals(i) = f(vals(i));
  }
  return es.eigenvectors() * vals.asDiagonal() * es.eigenvectors().transpose();
}

Mat skew3(const Eigen::Vector3d& u) {
  Mat s = Mat::Zero(3, 3);
  s(0, 1) = -u.z();
  s(0, 2) = u.y();
  s(1, 0) = u.z();
  s(1, 2) = -u.x();
  s(2, 0) = -u.y();
  s(2, 1) = u.x();
  return s;
}

Mat rodrigues(const Eigen::Vector3d& axis, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return c * Mat::Identity(3, 3) + (1.0 - c) * (axis * axis.transpose()) +
         skew3(axis) * s;
}

}  // namespace

void SpdEllipsoid::validate(double tol) const {
  check_symmetric(matrix, tol, "SpdEllipsoid");
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(matrix));
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw ValidationError("SpdEllipsoid: all eigenvalues must be > 0");
}

void TaskEllipsoidSpec::validate() const {
  if (!(shape_coefficient > 0.0 && shape_coefficient <= 1.0))
    throw ValidationError("shape_coefficient must be in (0, 1]");
  if (scale <= 0.0) throw ValidationError("ellipsoid scale must be > 0");
  if (std::abs(reference_axis.norm() - 1.0) > 1e-12)
    throw ValidationError("reference_axis must be a unit vector");
  if (desired_force.size() != reference_axis.size())
    throw ValidationError("desired_force / reference_axis dimension mismatch");
}

Mat rotation_aligning(const Vec& f, const Vec& a) {
  const auto d = f.size();
  require(a.size() == d && (d == 2 || d == 3),
          "rotation_aligning expects matching 2- or 3-vectors");
  const double fn = f.norm();
  if (fn <= 0.0) throw ValidationError("rotation_aligning: zero-norm force");
  const Vec fu = f / fn;
  const Vec au = a / a.norm();

  if (d == 2) {
    const double angle = std::atan2(cross2(au.head<2>(), fu.head<2>()),
                                    au.dot(fu));
    Mat r(2, 2);
    r = planar_rotation(angle);
    return r;
  }

  const Eigen::Vector3d f3 = fu.head<3>();
  const Eigen::Vector3d a3 = au.head<3>();
  const Eigen::Vector3d axis_raw = a3.cross(f3);
  const double cos_phi = std::clamp(a3.dot(f3), -1.0, 1.0);
  if (axis_raw.norm() < 1e-12) {
    if (cos_phi > 0.0) return Mat::Identity(3, 3);
    // Antiparallel: rotate 180 deg about the coordinate axis most orthogonal
    // to a (smallest |a_i|, lowest index on ties), projected onto a's
    // orthogonal complement.
    int best = 0;
    for (int i = 1; i < 3; ++i)
      if (std::abs(a3[i]) < std::abs(a3[best])) best = i;
    Eigen::Vector3d u = Eigen::Vector3d::Unit(best);
    u = (u - u.dot(a3) * a3).normalized();
    return rodrigues(u, M_PI);
  }
  return rodrigues(axis_raw.normalized(), std::acos(cos_phi));
}

SpdEllipsoid nominal_task_ellipsoid(const TaskEllipsoidSpec& spec) {
  spec.validate();
  const auto d = spec.reference_axis.size();
  Vec axes = Vec::Constant(d, spec.shape_coefficient * spec.scale);
  axes(0) = spec.scale;

  if (spec.shape_coefficient == 1.0) {
    // Isotropic: orientation is irrelevant and a zero force is permitted.
    return SpdEllipsoid{spec.scale * spec.scale * Mat::Identity(d, d)};
  }
  if (spec.desired_force.norm() <= 0.0)
    throw ValidationError(
        "anisotropic task ellipsoid needs a nonzero desired force");

  const Mat R_r = rotation_aligning(spec.desired_force, spec.reference_axis);
  const Mat C = R_r * axes.asDiagonal();
  return SpdEllipsoid{C * C.transpose()};
}

Mat spd_sqrt(const Mat& S) {
  return spd_function(S, [](double x) { return std::sqrt(x); }, "spd_sqrt",
                      true);
}

Mat sym_log(const Mat& S) {
  return spd_function(S, [](double x) { return std::log(x); }, "sym_log",
                      true);
}

Mat sym_exp(const Mat& S) {
  return spd_function(S, [](double x) { return std::exp(x); }, "sym_exp",
                      false);
}

Mat spd_log(const SpdEllipsoid& base, const SpdEllipsoid& target) {
  require(base.dim() == target.dim(), "spd_log dimension mismatch");
  base.validate(1e-9);
  target.validate(1e-9);
  const Mat half = spd_sqrt(base.matrix);
  const Mat half_inv = half.inverse();
  const Mat inner = symmetrize(half_inv * target.matrix * half_inv);
  return symmetrize(half * sym_log(inner) * half);
}

SpdEllipsoid spd_exp(const SpdEllipsoid& base, const Mat& tangent) {
  require(base.dim() == tangent.rows(), "spd_exp dimension mismatch");
  const Mat half = spd_sqrt(base.matrix);
  const Mat half_inv = half.inverse();
  const Mat inner = symmetrize(half_inv * tangent * half_inv);
  return SpdEllipsoid{symmetrize(half * sym_exp(inner) * half)};
}

Vec mandel_vec(const Mat& S) {
  check_symmetric(S, 1e-10, "mandel_vec");
  const double r2 = std::sqrt(2.0);
  if (S.rows() == 2) {
    Vec v(3);
    v << S(0, 0), S(1, 1), r2 * S(0, 1);
    return v;
  }
  if (S.rows() == 3) {
    Vec v(6);
    v << S(0, 0), S(1, 1), S(2, 2), r2 * S(1, 2), r2 * S(0, 2), r2 * S(0, 1);
    return v;
  }
  throw DimensionError("mandel_vec supports 2x2 and 3x3 matrices");
}

Mat mandel_unvec(const Vec& v) {
  const double r2 = std::sqrt(2.0);
  if (v.size() == 3) {
    Mat S(2, 2);
    S << v(0), v(2) / r2, v(2) / r2, v(1);
    return S;
  }
  if (v.size() == 6) {
    Mat S(3, 3);
    S << v(0), v(5) / r2, v(4) / r2,  //
        v(5) / r2, v(1), v(3) / r2,   //
        v(4) / r2, v(3) / r2, v(2);
    return S;
  }
  throw DimensionError("mandel_unvec expects a 3- or 6-vector");
}

double trace_matched_scale(const SpdEllipsoid& current,
                           double shape_coefficient) {
  const int d = current.dim();
  const double cf2 = shape_coefficient * shape_coefficient;
  // trace(M_t) = l^2 (1 + (d-1) c_f^2); match it to trace of the current
  // ellipsoid.
  return std::sqrt(current.matrix.trace() / (1.0 + (d - 1) * cf2));
}

}  // namespace comanip
