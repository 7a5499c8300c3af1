#pragma once

#include <vector>

#include "comanip/types.hpp"

namespace comanip {

/// Ideal object dynamics used as the tracking target. A_star/B_star are built
/// from the nominal (believed) mass, inertia and damping; reference_state is
/// the twist this model currently predicts.
struct ReferenceModel {
  Mat A_star;                        // diag(-mu_l*/m*, -mu_l*/m*, -mu_r*/I*)
  Mat B_star;                        // diag(1/m*, 1/m*, 1/I*)
  double nominal_mass = 1.0;
  double nominal_inertia = 1.0;
  Eigen::Vector2d gravity2 = Eigen::Vector2d::Zero();
  Vec reference_state = Vec::Zero(3);

  void validate() const;  // A_star Hurwitz, B_star invertible
};

ReferenceModel make_planar_reference_model(double nominal_mass,
                                           double nominal_inertia,
                                           double nominal_mu_linear,
                                           double nominal_mu_rotational,
                                           const Eigen::Vector2d& gravity2,
                                           const Vec& initial_state);

/// Gravity / nonlinear compensation vector: (-m* g, 0) for a planar body
/// (scalar inertia, so the gyroscopic part vanishes).
Vec ncg_vector(double nominal_mass, const Eigen::Vector2d& gravity2);

/// 3x2 map from a point force at world-frame grasp offset r to object
/// acceleration: rows (1/m, 1/m) then torque arm (-r_y, r_x)/I.
Mat force_input_matrix(const Eigen::Vector2d& r_world, double mass,
                       double inertia);

/// Gaussian RBF grid over planar velocity with a trailing constant bias.
struct RbfNetwork {
  Mat centers;  // one center per column, rows = center dimension
  double width = 0.25;

  Eigen::Index feature_count() const { return centers.cols() + 1; }
  void validate() const;
};

/// per_axis x per_axis grid spanning [-half_range, half_range]^2.
RbfNetwork make_grid_rbf(int per_axis, double half_range, double width);

/// Feature vector: exp(-|v - c_i|^2 / (2 sigma^2)) per center (using the
/// leading center-dimension components of xdot), then a constant 1.
Vec rbf_features(const RbfNetwork& net, const Vec& xdot);

/// All per-robot adaptive state: gain matrices, their learning rates and the
/// Lyapunov matrix used in the update laws. Column counts follow the force
/// dimension (2), row counts the driving signal.
struct AdaptiveGains {
  Mat K_x;    // 3x2, multiplies measured object twist
  Mat K_r;    // 3x2, multiplies the reference input F_t*
  Mat K_n;    // 3x2, multiplies N_cg
  Mat K_f;    // 2x3, maps own deficiency into the reference modification
  Mat W_phi;  // n_features x 2, RBF output weights
  Mat G_x, G_r, G_n, G_f, G_phi;  // SPD learning rates
  Mat P;                          // solves P A* + A*^T P = -Q
  double norm_cap = 1e3;          // Frobenius cap per gain matrix

  void validate() const;
};

/// Zero-initialized gains with identity-scaled learning rates.
AdaptiveGains make_adaptive_gains(Eigen::Index n_features, double rate_x,
                                  double rate_r, double rate_n, double rate_f,
                                  double rate_phi, const Mat& P);

/// K_r that splits the reference input evenly across num_robots robots of
/// input matrix B_k_hat: K_r^T = scale * (1/K) * B_k_hat^+ B_star.
Mat equal_split_kr(const Mat& B_k_hat, const Mat& B_star, int num_robots,
                   double scale);

/// F_t* that would drive the reference model along a desired velocity
/// profile: B*^{-1}(xddot - A* xdot) + N_cg.
Vec reference_input(const ReferenceModel& ref, const Vec& xdot_desired,
                    const Vec& xddot_desired);

/// Unconstrained control force of one robot:
/// F_k = K_x^T xdot_o + K_r^T F_t* + K_n^T N_cg + W_phi^T Phi.
Vec adaptive_input(const AdaptiveGains& gains, const Vec& xdot_o,
                   const Vec& f_star, const Vec& ncg, const Vec& phi);

/// Force limits with the smoothing band. delta is the band width below f_max;
/// mu sets how hard over-demand is bent back toward f_max - delta.
struct SaturationSpec {
  Vec f_max;
  Vec delta;
  double mu = 1.0;

  void validate() const;
};

struct MuModResult {
  Vec applied;     // force actually exerted, |.| <= f_max componentwise
  Vec deficiency;  // applied - commanded
};

/// Componentwise: inside the band [-(f_max-delta), f_max-delta] the force
/// passes through; outside it is pulled to (F + mu*sign(F)*(f_max-delta)) /
/// (1+mu), then hard-clamped to [-f_max, f_max]. deficiency = applied - F.
MuModResult mu_modification(const Vec& force, const SaturationSpec& sat);

/// Unique SPD solution of P A + A^T P = -Q. Throws ValidationError when A is
/// not Hurwitz or Q not SPD, NumericalError when the residual exceeds 1e-9.
Mat lyapunov_solve(const Mat& A, const Mat& Q);

/// One Euler step of the gain dynamics:
///   Kdot_x = -G_x xdot_o e^T P B_k,   Kdot_r = -G_r F_t* e^T P B_k,
///   Kdot_n = -G_n N_cg e^T P B_k,     Wdot_phi = -G_phi Phi e^T P B_k,
///   Kdot_f = +G_f dF e^T P B*.
/// Each matrix is then rescaled onto the Frobenius ball of radius norm_cap.
AdaptiveGains adaptive_law_step(const AdaptiveGains& gains, const Vec& e,
                                const Vec& xdot_o, const Vec& f_star,
                                const Vec& ncg, const Vec& phi,
                                const Vec& delta_f, const Mat& B_k_hat,
                                const Mat& B_star, double dt);

/// Advance the (possibly modified) reference model one step:
///   xddot* = A* xdot* + B*(F_t* + sum(broadcasts) - N_cg)
/// where each broadcast is a robot's K_f^T dF vector. Empty list gives the
/// plain reference dynamics. Returns the new reference state.
Vec modified_reference_step(ReferenceModel& ref, const Vec& f_star,
                            const std::vector<Vec>& broadcasts, const Vec& ncg,
                            double dt);

}  // namespace comanip
