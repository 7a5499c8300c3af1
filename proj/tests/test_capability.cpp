#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include <comanip/capability.hpp>
#include <comanip/kinematics.hpp>

using namespace comanip;

namespace {

ManipulatorModel four_link(double tau = 0.8) {
  ManipulatorModel m;
  m.link_lengths = (Vec(4) << 1.0, 0.9, 0.8, 0.7).finished();
  m.link_masses = (Vec(4) << 1.0, 0.8, 0.6, 0.4).finished();
  m.link_inertias = (Vec(4) << 0.1, 0.08, 0.06, 0.04).finished();
  m.torque_limits = tau * Vec::Ones(4);
  return m;
}

Vec random_q(int n, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.3, 1.3);
  Vec q(n);
  for (int i = 0; i < n; ++i) q(i) = u(rng);
  return q;
}

Vec unit2(double angle) {
  return (Vec(2) << std::cos(angle), std::sin(angle)).finished();
}

// Scale oracle: largest alpha with alpha*d inside the polytope, by bisection.
double bisect_scale(const ForcePolytope& poly, const Vec& d) {
  double lo = 0.0, hi = 1.0;
  while (poly.contains(hi * d, 0.0)) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (poly.contains(mid * d, 0.0) ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("identity Jacobian gives a plain torque box") {
  const Mat J = Mat::Identity(2, 2);
  const Vec tau = (Vec(2) << 2.0, 1.0).finished();
  const auto poly = force_polytope(J, tau, Vec::Zero(2));
  CHECK(poly.faces().size() == 4);
  CHECK(poly.contains((Vec(2) << 1.99, 0.99).finished()));
  CHECK(!poly.contains((Vec(2) << 2.01, 0.0).finished()));
  const auto& verts = poly.vertices();
  REQUIRE(verts.size() == 4);
  // Corners of [-2,2] x [-1,1].
  double area = 0.0;
  for (std::size_t i = 0; i < verts.size(); ++i) {
    const Vec& a = verts[i];
    const Vec& b = verts[(i + 1) % verts.size()];
    area += 0.5 * (a(0) * b(1) - b(0) * a(1));
  }
  CHECK(area == doctest::Approx(8.0).epsilon(1e-9));
}

TEST_CASE("polytope vertices are ordered counter-clockwise") {
  const auto m = four_link();
  std::mt19937 rng(3);
  const Mat J = jacobian(m, random_q(4, rng), 2);
  const auto poly = force_polytope(J, m.torque_limits, Vec::Zero(4));
  const auto& verts = poly.vertices();
  REQUIRE(verts.size() >= 3);
  for (std::size_t i = 0; i < verts.size(); ++i) {
    const Vec& a = verts[i];
    const Vec& b = verts[(i + 1) % verts.size()];
    const Vec& c = verts[(i + 2) % verts.size()];
    const double cross =
        (b(0) - a(0)) * (c(1) - b(1)) - (b(1) - a(1)) * (c(0) - b(0));
    CHECK(cross >= -1e-9);
  }
}

TEST_CASE("directional capability matches the bisection oracle") {
  const auto m = four_link();
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> ang(0.0, 2.0 * M_PI);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec q = random_q(4, rng);
    const Mat J = jacobian(m, q, 2);
    const Vec d = unit2(ang(rng));
    const auto cap = max_force_along(J, m.torque_limits, Vec::Zero(4), d);
    if (cap.unbounded) continue;
    const auto poly = force_polytope(J, m.torque_limits, Vec::Zero(4));
    const double oracle = bisect_scale(poly, d);
    CHECK(cap.f_max == doctest::Approx(oracle).epsilon(1e-9));
    CHECK((cap.force - cap.f_max * d).norm() <= 1e-9);
  }
}

TEST_CASE("radial force on a stretched arm is unbounded") {
  const auto m = four_link();
  const Mat J = jacobian(m, Vec::Zero(4), 2);  // along +x
  const auto cap = max_force_along(J, m.torque_limits, Vec::Zero(4),
                                   (Vec(2) << 1.0, 0.0).finished());
  CHECK(cap.unbounded);
}

TEST_CASE("active constraints are tight at the optimum") {
  const auto m = four_link();
  std::mt19937 rng(7);
  const Vec q = random_q(4, rng);
  const Mat J = jacobian(m, q, 2);
  const Vec d = unit2(1.1);
  const auto cap = max_force_along(J, m.torque_limits, Vec::Zero(4), d);
  REQUIRE(!cap.active_constraints.empty());
  const Vec torque = J.transpose() * cap.force;
  for (const auto idx : cap.active_constraints) {
    CHECK(std::abs(torque(idx)) ==
          doctest::Approx(m.torque_limits(idx)).epsilon(1e-9));
  }
}

TEST_CASE("torque bias shifts the admissible interval asymmetrically") {
  const Mat J = Mat::Identity(2, 2);
  const Vec tau = (Vec(2) << 1.0, 1.0).finished();
  const Vec bias = (Vec(2) << 0.5, 0.0).finished();
  const auto up = max_force_along(J, tau, bias, (Vec(2) << 1.0, 0.0).finished());
  const auto dn =
      max_force_along(J, tau, bias, (Vec(2) << -1.0, 0.0).finished());
  CHECK(up.f_max == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(dn.f_max == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("a joint saturated by bias alone empties the polytope") {
  const Mat J = Mat::Identity(2, 2);
  const Vec tau = (Vec(2) << 1.0, 1.0).finished();
  const Vec bias = (Vec(2) << 1.0, 0.0).finished();
  CHECK_THROWS_AS(force_polytope(J, tau, bias), EmptyPolytopeError);
}

TEST_CASE("capability box fits inside the polytope") {
  const auto m = four_link();
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int tested = 0;
  while (tested < 50) {
    const Vec q = random_q(4, rng);
    const Mat J = jacobian(m, q, 2);
    if (min_singular_value(J) < 0.05) continue;
    ++tested;
    const Vec box = f_kmax_vector(J, m.torque_limits, Vec::Zero(4));
    REQUIRE(box.size() == 2);
    CHECK(box.minCoeff() > 0.0);
    const auto poly = force_polytope(J, m.torque_limits, Vec::Zero(4));
    for (const double sx : {-1.0, 1.0}) {
      for (const double sy : {-1.0, 1.0}) {
        CHECK(poly.contains((Vec(2) << sx * box(0), sy * box(1)).finished(),
                            1e-9));
      }
    }
    for (int s = 0; s < 50; ++s) {
      const Vec p =
          (Vec(2) << u(rng) * box(0), u(rng) * box(1)).finished();
      CHECK(poly.contains(p, 1e-9));
    }
  }
}

TEST_CASE("capability box never exceeds the per-axis directional maxima") {
  const auto m = four_link();
  std::mt19937 rng(11);
  const Vec q = random_q(4, rng);
  const Mat J = jacobian(m, q, 2);
  const Vec box = f_kmax_vector(J, m.torque_limits, Vec::Zero(4));
  for (int axis = 0; axis < 2; ++axis) {
    for (const double sign : {-1.0, 1.0}) {
      Vec d = Vec::Zero(2);
      d(axis) = sign;
      const auto cap = max_force_along(J, m.torque_limits, Vec::Zero(4), d);
      if (!cap.unbounded) CHECK(box(axis) <= cap.f_max + 1e-9);
    }
  }
}

TEST_CASE("polytope CSV dump lists the vertices") {
  const Mat J = Mat::Identity(2, 2);
  const Vec tau = (Vec(2) << 1.0, 1.0).finished();
  const auto poly = force_polytope(J, tau, Vec::Zero(2));
  std::ostringstream os;
  write_polytope_csv(os, "A", 0.25, poly);
  const std::string out = os.str();
  CHECK(out.find("A,") != std::string::npos);
  int lines = 0;
  for (const char c : out)
    if (c == '\n') ++lines;
  CHECK(lines == 4);
}
