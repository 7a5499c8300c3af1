#include "comanip/adaptive_control.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "comanip/kinematics.hpp"

namespace comanip {
namespace {

bool is_hurwitz(const Mat& A) {
  Eigen::EigenSolver<Mat> es(A);
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    if (es.eigenvalues()[i].real() >= 0.0) return false;
  }
  return true;
}

bool is_spd(const Mat& M, double tol = 1e-12) {
  if (M.rows() != M.cols()) return false;
  if ((M - M.transpose()).cwiseAbs().maxCoeff() >
      1e-9 * std::max(1.0, M.cwiseAbs().maxCoeff())) {
    return false;
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (M + M.transpose()));
  return es.eigenvalues().minCoeff() > tol;
}

Mat cap_norm(const Mat& M, double cap) {
  const double n = M.norm();
  if (n > cap && n > 0.0) return (cap / n) * M;
  return M;
}

}  // namespace

void ReferenceModel::validate() const {
  require_valid(A_star.rows() == A_star.cols() &&
                    B_star.rows() == B_star.cols() &&
                    A_star.rows() == B_star.rows(),
                "ReferenceModel: A*/B* must be square and same size");
  require_valid(reference_state.size() == A_star.rows(),
                "ReferenceModel: state size mismatch");
  require_valid(nominal_mass > 0.0 && nominal_inertia > 0.0,
          "ReferenceModel: nominal parameters must be positive");
  if (!is_hurwitz(A_star)) {
    throw ValidationError("ReferenceModel: A* is not Hurwitz");
  }
  Eigen::FullPivLU<Mat> lu(B_star);
  if (!lu.isInvertible()) {
    throw ValidationError("ReferenceModel: B* is not invertible");
  }
}

ReferenceModel make_planar_reference_model(double nominal_mass,
                                           double nominal_inertia,
                                           double nominal_mu_linear,
                                           double nominal_mu_rotational,
                                           const Eigen::Vector2d& gravity2,
                                           const Vec& initial_state) {
  require_valid(nominal_mass > 0.0 && nominal_inertia > 0.0,
                "make_planar_reference_model: mass/inertia must be positive");
  require_valid(nominal_mu_linear > 0.0 && nominal_mu_rotational > 0.0,
                "make_planar_reference_model: damping must be positive for a "
                "Hurwitz reference");
  require(initial_state.size() == 3,
          "make_planar_reference_model: state must be 3-D");
  ReferenceModel ref;
  ref.A_star = Eigen::Vector3d{-nominal_mu_linear / nominal_mass,
                               -nominal_mu_linear / nominal_mass,
                               -nominal_mu_rotational / nominal_inertia}
                   .asDiagonal();
  ref.B_star = Eigen::Vector3d{1.0 / nominal_mass, 1.0 / nominal_mass,
                               1.0 / nominal_inertia}
                   .asDiagonal();
  ref.nominal_mass = nominal_mass;
  ref.nominal_inertia = nominal_inertia;
  ref.gravity2 = gravity2;
  ref.reference_state = initial_state;
  ref.validate();
  return ref;
}

Vec ncg_vector(double nominal_mass, const Eigen::Vector2d& gravity2) {
  Vec n = Vec::Zero(3);
  n.head<2>() = -nominal_mass * gravity2;
  return n;  // planar: scalar inertia, gyroscopic part is zero
}

Mat force_input_matrix(const Eigen::Vector2d& r_world, double mass,
                       double inertia) {
  require_valid(mass > 0.0 && inertia > 0.0,
          "force_input_matrix: mass/inertia must be positive");
  Mat B = Mat::Zero(3, 2);
  B(0, 0) = 1.0 / mass;
  B(1, 1) = 1.0 / mass;
  B(2, 0) = -r_world[1] / inertia;
  B(2, 1) = r_world[0] / inertia;
  return B;
}

void RbfNetwork::validate() const {
  require_valid(centers.cols() >= 0, "RbfNetwork: bad centers");
  require_valid(width > 0.0, "RbfNetwork: width must be positive");
}

RbfNetwork make_grid_rbf(int per_axis, double half_range, double width) {
  require_valid(per_axis >= 1,
                "make_grid_rbf: need at least one center per axis");
  require_valid(half_range > 0.0 && width > 0.0,
                "make_grid_rbf: positive sizes");
  RbfNetwork net;
  net.width = width;
  net.centers.resize(2, per_axis * per_axis);
  Eigen::Index col = 0;
  for (int i = 0; i < per_axis; ++i) {
    for (int j = 0; j < per_axis; ++j) {
      const double x =
          (per_axis == 1)
              ? 0.0
              : -half_range + 2.0 * half_range * i / (per_axis - 1);
      const double y =
          (per_axis == 1)
              ? 0.0
              : -half_range + 2.0 * half_range * j / (per_axis - 1);
      net.centers(0, col) = x;
      net.centers(1, col) = y;
      ++col;
    }
  }
  return net;
}

Vec rbf_features(const RbfNetwork& net, const Vec& xdot) {
  const Eigen::Index cdim = net.centers.rows();
  require(xdot.size() >= cdim, "rbf_features: input shorter than center dim");
  Vec phi(net.feature_count());
  const Vec v = xdot.head(cdim);
  const double inv2s2 = 1.0 / (2.0 * net.width * net.width);
  for (Eigen::Index i = 0; i < net.centers.cols(); ++i) {
    phi[i] = std::exp(-(v - net.centers.col(i)).squaredNorm() * inv2s2);
  }
  phi[net.centers.cols()] = 1.0;  // output bias
  return phi;
}

void AdaptiveGains::validate() const {
  require_valid(K_x.cols() == K_r.cols() && K_x.cols() == K_n.cols() &&
                    K_x.cols() == W_phi.cols() && K_f.rows() == K_x.cols(),
                "AdaptiveGains: force dimension inconsistent across gains");
  require_valid(K_x.rows() == P.rows() && K_r.rows() == P.rows() &&
                    K_n.rows() == P.rows() && K_f.cols() == P.rows(),
                "AdaptiveGains: twist dimension inconsistent with P");
  for (const Mat* g : {&G_x, &G_r, &G_n, &G_f, &G_phi}) {
    if (!is_spd(*g)) throw ValidationError("AdaptiveGains: rates must be SPD");
  }
  if (!is_spd(P)) throw ValidationError("AdaptiveGains: P must be SPD");
  require_valid(norm_cap > 0.0,
                "AdaptiveGains: norm cap must be positive");
}

AdaptiveGains make_adaptive_gains(Eigen::Index n_features, double rate_x,
                                  double rate_r, double rate_n, double rate_f,
                                  double rate_phi, const Mat& P) {
  require_valid(n_features >= 1,
                "make_adaptive_gains: need at least one feature");
  require_valid(rate_x > 0.0 && rate_r > 0.0 && rate_n > 0.0 &&
                    rate_f > 0.0 && rate_phi > 0.0,
                "make_adaptive_gains: learning rates must be positive");
  AdaptiveGains g;
  g.K_x = Mat::Zero(3, 2);
  g.K_r = Mat::Zero(3, 2);
  g.K_n = Mat::Zero(3, 2);
  g.K_f = Mat::Zero(2, 3);
  g.W_phi = Mat::Zero(n_features, 2);
  g.G_x = rate_x * Mat::Identity(3, 3);
  g.G_r = rate_r * Mat::Identity(3, 3);
  g.G_n = rate_n * Mat::Identity(3, 3);
  g.G_f = rate_f * Mat::Identity(2, 2);
  g.G_phi = rate_phi * Mat::Identity(n_features, n_features);
  g.P = P;
  return g;
}

Mat equal_split_kr(const Mat& B_k_hat, const Mat& B_star, int num_robots,
                   double scale) {
  require_valid(num_robots >= 1,
                "equal_split_kr: need at least one robot");
  require(B_k_hat.rows() == B_star.rows(), "equal_split_kr: row mismatch");
  // K_r^T = scale/K * B_k^+ B_star  (rows = force dim, cols = state dim)
  const Mat KrT = (scale / num_robots) * pseudo_inverse(B_k_hat) * B_star;
  return KrT.transpose();
}

Vec reference_input(const ReferenceModel& ref, const Vec& xdot_desired,
                    const Vec& xddot_desired) {
  require(xdot_desired.size() == ref.A_star.rows() &&
              xddot_desired.size() == ref.A_star.rows(),
          "reference_input: state size mismatch");
  const Vec ncg = ncg_vector(ref.nominal_mass, ref.gravity2);
  return ref.B_star.fullPivLu().solve(xddot_desired -
                                      ref.A_star * xdot_desired) +
         ncg;
}

Vec adaptive_input(const AdaptiveGains& gains, const Vec& xdot_o,
                   const Vec& f_star, const Vec& ncg, const Vec& phi) {
  require(xdot_o.size() == gains.K_x.rows(), "adaptive_input: xdot size");
  require(f_star.size() == gains.K_r.rows(), "adaptive_input: F_t* size");
  require(ncg.size() == gains.K_n.rows(), "adaptive_input: N_cg size");
  require(phi.size() == gains.W_phi.rows(), "adaptive_input: feature size");
  return gains.K_x.transpose() * xdot_o + gains.K_r.transpose() * f_star +
         gains.K_n.transpose() * ncg + gains.W_phi.transpose() * phi;
}

void SaturationSpec::validate() const {
  require_valid(f_max.size() == delta.size(),
                "SaturationSpec: size mismatch");
  for (Eigen::Index i = 0; i < f_max.size(); ++i) {
    require_valid(delta[i] > 0.0 && delta[i] < f_max[i],
            "SaturationSpec: need 0 < delta < f_max componentwise");
  }
  require_valid(mu > 0.0, "SaturationSpec: mu must be positive");
}

MuModResult mu_modification(const Vec& force, const SaturationSpec& sat) {
  require(force.size() == sat.f_max.size(), "mu_modification: size mismatch");
  MuModResult out;
  out.applied = Vec(force.size());
  out.deficiency = Vec(force.size());
  for (Eigen::Index i = 0; i < force.size(); ++i) {
    const double f = force[i];
    const double band = sat.f_max[i] - sat.delta[i];  // F^delta
    double fbar = f;
    if (f > band) {
      fbar = (f + sat.mu * band) / (1.0 + sat.mu);
    } else if (f < -band) {
      fbar = (f - sat.mu * band) / (1.0 + sat.mu);
    }
    const double applied = std::clamp(fbar, -sat.f_max[i], sat.f_max[i]);
    out.applied[i] = applied;
    out.deficiency[i] = applied - f;
  }
  return out;
}

Mat lyapunov_solve(const Mat& A, const Mat& Q) {
  const Eigen::Index n = A.rows();
  require(A.cols() == n && Q.rows() == n && Q.cols() == n,
          "lyapunov_solve: A and Q must be square and same size");
  if (!is_hurwitz(A)) {
    throw ValidationError("lyapunov_solve: A is not Hurwitz");
  }
  if (!is_spd(Q)) {
    throw ValidationError("lyapunov_solve: Q is not SPD");
  }
  // vec(P A) = (A^T kron I) vec(P); vec(A^T P) = (I kron A^T) vec(P).
  Mat M = Mat::Zero(n * n, n * n);
  const Mat At = A.transpose();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      // (A^T kron I): block (i,j) is At(i,j) * I
      M.block(i * n, j * n, n, n) += At(i, j) * Mat::Identity(n, n);
      // (I kron A^T): block (i,i) is At
      if (i == j) M.block(i * n, j * n, n, n) += At;
    }
  }
  Vec q(n * n);
  for (Eigen::Index c = 0; c < n; ++c) q.segment(c * n, n) = -Q.col(c);
  const Vec p = M.fullPivLu().solve(q);
  Mat P(n, n);
  for (Eigen::Index c = 0; c < n; ++c) P.col(c) = p.segment(c * n, n);
  P = 0.5 * (P + P.transpose());
  const double residual = (P * A + A.transpose() * P + Q).norm();
  if (residual > 1e-9) {
    throw NumericalError("lyapunov_solve: residual " +
                         std::to_string(residual) + " exceeds tolerance");
  }
  if (!is_spd(P)) {
    throw NumericalError("lyapunov_solve: solution not SPD");
  }
  return P;
}

AdaptiveGains adaptive_law_step(const AdaptiveGains& gains, const Vec& e,
                                const Vec& xdot_o, const Vec& f_star,
                                const Vec& ncg, const Vec& phi,
                                const Vec& delta_f, const Mat& B_k_hat,
                                const Mat& B_star, double dt) {
  require_valid(dt > 0.0, "adaptive_law_step: dt must be positive");
  require(e.size() == gains.P.rows(), "adaptive_law_step: error size");
  const Eigen::RowVectorXd ePBk = e.transpose() * gains.P * B_k_hat;   // 1 x 2
  const Eigen::RowVectorXd ePBs = e.transpose() * gains.P * B_star;    // 1 x 3
  AdaptiveGains g = gains;
  g.K_x = cap_norm(gains.K_x - dt * (gains.G_x * xdot_o) * ePBk, g.norm_cap);
  g.K_r = cap_norm(gains.K_r - dt * (gains.G_r * f_star) * ePBk, g.norm_cap);
  g.K_n = cap_norm(gains.K_n - dt * (gains.G_n * ncg) * ePBk, g.norm_cap);
  g.W_phi = cap_norm(gains.W_phi - dt * (gains.G_phi * phi) * ePBk,
                     g.norm_cap);
  g.K_f = cap_norm(gains.K_f + dt * (gains.G_f * delta_f) * ePBs, g.norm_cap);
  return g;
}

Vec modified_reference_step(ReferenceModel& ref, const Vec& f_star,
                            const std::vector<Vec>& broadcasts, const Vec& ncg,
                            double dt) {
  require_valid(dt > 0.0,
                "modified_reference_step: dt must be positive");
  require(f_star.size() == ref.B_star.rows() && ncg.size() == f_star.size(),
          "modified_reference_step: input size mismatch");
  Vec input = f_star - ncg;
  for (const Vec& b : broadcasts) {
    require(b.size() == input.size(), "modified_reference_step: payload size");
    input += b;
  }
  const Vec xddot = ref.A_star * ref.reference_state + ref.B_star * input;
  ref.reference_state += dt * xddot;
  return ref.reference_state;
}

}  // namespace comanip
