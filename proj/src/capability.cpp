#include "comanip/capability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace comanip {
namespace {

// Intersection of two halfspace boundary lines in 2-D; nullopt if parallel.
std::optional<Vec> line_intersection(const Halfspace& a, const Halfspace& b) {
  const double det = a.normal[0] * b.normal[1] - a.normal[1] * b.normal[0];
  const double scale = std::max({std::abs(a.normal[0]), std::abs(a.normal[1]),
                                 std::abs(b.normal[0]), std::abs(b.normal[1]),
                                 1e-30});
  if (std::abs(det) < 1e-12 * scale * scale) return std::nullopt;
  Vec p(2);
  p[0] = (a.offset * b.normal[1] - b.offset * a.normal[1]) / det;
  p[1] = (a.normal[0] * b.offset - b.normal[0] * a.offset) / det;
  return p;
}

}  // namespace

ForcePolytope::ForcePolytope(std::vector<Halfspace> faces,
                             Eigen::Index force_dim)
    : faces_(std::move(faces)), force_dim_(force_dim) {
  require_valid(force_dim_ > 0,
                "ForcePolytope: force dimension must be positive");
  for (const auto& f : faces_) {
    require(f.normal.size() == force_dim_,
            "ForcePolytope: face normal dimension mismatch");
  }
}

bool ForcePolytope::contains(const Vec& force, double tol) const {
  require(force.size() == force_dim_, "ForcePolytope::contains: bad force dim");
  for (const auto& f : faces_) {
    if (f.normal.dot(force) > f.offset + tol) return false;
  }
  return true;
}

const std::vector<Vec>& ForcePolytope::vertices() const {
  if (vertices_) return *vertices_;
  require(force_dim_ == 2, "ForcePolytope::vertices: only 2-D supported");
  std::vector<Vec> verts;
  for (std::size_t i = 0; i < faces_.size(); ++i) {
    for (std::size_t j = i + 1; j < faces_.size(); ++j) {
      auto p = line_intersection(faces_[i], faces_[j]);
      if (!p) continue;
      if (!contains(*p, 1e-9)) continue;
      bool duplicate = false;
      for (const auto& v : verts) {
        if ((v - *p).norm() < 1e-9) {
          duplicate = true;
          break;
        }
      }
      if (!duplicate) verts.push_back(*p);
    }
  }
  // CCW order around the centroid.
  if (verts.size() > 2) {
    Vec c = Vec::Zero(2);
    for (const auto& v : verts) c += v;
    c /= static_cast<double>(verts.size());
    std::sort(verts.begin(), verts.end(), [&c](const Vec& a, const Vec& b) {
      return std::atan2(a[1] - c[1], a[0] - c[0]) <
             std::atan2(b[1] - c[1], b[0] - c[0]);
    });
  }
  vertices_ = std::move(verts);
  return *vertices_;
}

ForcePolytope force_polytope(const Mat& J, const Vec& tau_max,
                             const Vec& torque_bias) {
  const Eigen::Index n = J.cols();
  const Eigen::Index d = J.rows();
  require(tau_max.size() == n && torque_bias.size() == n,
          "force_polytope: torque vector sizes must match joint count");
  for (Eigen::Index i = 0; i < n; ++i) {
    require_valid(tau_max[i] > 0.0,
                  "force_polytope: torque limits must be positive");
    if (std::abs(torque_bias[i]) >= tau_max[i]) {
      throw EmptyPolytopeError(
          "force_polytope: torque bias saturates joint " + std::to_string(i));
    }
  }
  // J^T F + bias <= tau  and  -(J^T F + bias) <= tau.
  std::vector<Halfspace> faces;
  faces.reserve(static_cast<std::size_t>(2 * n));
  for (Eigen::Index i = 0; i < n; ++i) {
    Halfspace hi;
    hi.normal = J.col(i);
    hi.offset = tau_max[i] - torque_bias[i];
    faces.push_back(hi);
    Halfspace lo;
    lo.normal = -J.col(i);
    lo.offset = tau_max[i] + torque_bias[i];
    faces.push_back(lo);
  }
  return ForcePolytope(std::move(faces), d);
}

CapabilityResult max_force_along(const Mat& J, const Vec& tau_max,
                                 const Vec& torque_bias, const Vec& direction) {
  const Eigen::Index n = J.cols();
  require(tau_max.size() == n && torque_bias.size() == n,
          "max_force_along: torque vector sizes must match joint count");
  require(direction.size() == J.rows(), "max_force_along: direction dim");
  const double dnorm = direction.norm();
  require_valid(dnorm > 0.0, "max_force_along: zero direction");
  const Vec d = direction / dnorm;
  const Vec g = J.transpose() * d;  // torque per unit force along d

  for (Eigen::Index i = 0; i < n; ++i) {
    require_valid(tau_max[i] > 0.0,
                  "max_force_along: torque limits must be positive");
    if (std::abs(torque_bias[i]) >= tau_max[i]) {
      throw EmptyPolytopeError(
          "max_force_along: torque bias saturates joint " + std::to_string(i));
    }
  }

  // Joint i admits alpha with -tau_i <= alpha g_i + bias_i <= tau_i which for
  // g_i != 0 caps alpha at (tau_i - sign(g_i) bias_i) / |g_i|.
  double alpha = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(g[i]) < 1e-14) continue;
    const double cap = (g[i] > 0.0) ? (tau_max[i] - torque_bias[i]) / g[i]
                                    : (-tau_max[i] - torque_bias[i]) / g[i];
    alpha = std::min(alpha, cap);
  }

  CapabilityResult out;
  if (!std::isfinite(alpha)) {
    out.unbounded = true;
    out.f_max = std::numeric_limits<double>::infinity();
    out.force = d;
    return out;
  }
  out.f_max = alpha;
  out.force = alpha * d;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = alpha * g[i] + torque_bias[i];
    if (std::abs(std::abs(t) - tau_max[i]) < 1e-9) {
      out.active_constraints.push_back(i);
    }
  }
  return out;
}

Vec f_kmax_vector(const Mat& J, const Vec& tau_max, const Vec& torque_bias) {
  const Eigen::Index d = J.rows();
  Vec box(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    Vec e = Vec::Zero(d);
    e[j] = 1.0;
    const auto plus = max_force_along(J, tau_max, torque_bias, e);
    const auto minus = max_force_along(J, tau_max, torque_bias, -e);
    box[j] = std::min(plus.f_max, minus.f_max);
  }
  // Per-axis maxima only bound the box corners when faces are axis aligned; in
  // general the corner (±box_x, ±box_y, ...) can poke outside, so shrink the
  // whole box until every corner satisfies every face. For face a.F <= b the
  // worst corner contributes sum_j |a_j| box_j.
  double shrink = 1.0;
  const Eigen::Index n = J.cols();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (const double s : {1.0, -1.0}) {
      // face: s * J.col(i) . F <= tau_i - s * bias_i
      const double b = tau_max[i] - s * torque_bias[i];
      double worst = 0.0;
      for (Eigen::Index j = 0; j < d; ++j) {
        const double a = std::abs(J(j, i));
        if (a > 0.0) worst += a * box[j];  // skip 0 * inf on unbounded axes
      }
      if (worst > b && worst > 0.0) {
        shrink = std::min(shrink, b / worst);
      }
    }
  }
  return shrink * box;
}

void write_polytope_csv(std::ostream& os, const std::string& robot_id,
                        double time, const ForcePolytope& poly) {
  for (const auto& v : poly.vertices()) {
    os << robot_id << ',' << time << ',' << v[0] << ',' << v[1] << '\n';
  }
}

}  // namespace comanip
