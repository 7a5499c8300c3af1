#pragma once

#include "comanip/types.hpp"

namespace comanip {

/// A (task or manipulability) ellipsoid stored as its SPD matrix:
/// { F : F^T M^{-1} F <= 1 }.
struct SpdEllipsoid {
  Mat matrix;

  int dim() const { return static_cast<int>(matrix.rows()); }

  /// Throws ValidationError unless symmetric (within tol) with all
  /// eigenvalues > 0.
  void validate(double tol = 1e-12) const;
};

/// Parameters of the nominal task ellipsoid: longest axis of length `scale`
/// aligned with `desired_force`, remaining axes scaled by shape_coefficient.
struct TaskEllipsoidSpec {
  Vec desired_force;           // N, d-dimensional
  double shape_coefficient;    // c_f in (0, 1]
  Vec reference_axis;          // unit vector the unrotated long axis points along
  double scale;                // axis length of the longest axis

  void validate() const;
};

/// Rotation R with R * a parallel to f (same direction), built from the
/// angle-axis form. Handles parallel (identity) and antiparallel (180 deg
/// about a deterministic orthogonal axis) inputs. Throws on zero-norm f.
Mat rotation_aligning(const Vec& f, const Vec& a);

SpdEllipsoid nominal_task_ellipsoid(const TaskEllipsoidSpec& spec);

/// Principal square root of an SPD matrix.
Mat spd_sqrt(const Mat& S);

/// Matrix logarithm / exponential of a symmetric matrix via
/// eigendecomposition. Inputs are symmetrized first.
Mat sym_log(const Mat& S);
Mat sym_exp(const Mat& S);

/// Affine-invariant log map:
/// Log_base(target) = base^{1/2} logm(base^{-1/2} target base^{-1/2}) base^{1/2}.
Mat spd_log(const SpdEllipsoid& base, const SpdEllipsoid& target);

/// Inverse of spd_log at the same base point.
SpdEllipsoid spd_exp(const SpdEllipsoid& base, const Mat& tangent);

/// Mandel vectorization of a symmetric matrix: off-diagonals scaled by
/// sqrt(2) so the Euclidean norm equals the Frobenius norm.
/// d=2: (S11, S22, sqrt2 S12); d=3: (S11, S22, S33, sqrt2 S23, sqrt2 S13,
/// sqrt2 S12). Throws on asymmetric input (tol 1e-10).
Vec mandel_vec(const Mat& S);
Mat mandel_unvec(const Vec& v);

/// Scale for the nominal ellipsoid's long axis so that the resulting M_t has
/// the same trace as `current`. Used to put the tracking target in the same
/// units as the robot's manipulability ellipsoid.
double trace_matched_scale(const SpdEllipsoid& current,
                           double shape_coefficient);

}  // namespace comanip
