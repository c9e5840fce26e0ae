#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "igabem/geometry.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace igabem;

namespace {

constexpr double kPi = std::numbers::pi;
const double kW = std::sqrt(0.5);

// Quarter cylinder of radius 1 along x in [0, 1]: quadratic arc times linear axis.
NurbsSurface quarter_cylinder() {
  const KnotVector kx({0, 0, 0, 1, 1, 1}, 2);
  const KnotVector ke({0, 0, 1, 1}, 1);
  std::vector<Vec3> pts = {Vec3(0, 1, 0), Vec3(0, 1, 1), Vec3(0, 0, 1),
                           Vec3(1, 1, 0), Vec3(1, 1, 1), Vec3(1, 0, 1)};
  std::vector<double> w = {1, kW, 1, 1, kW, 1};
  return NurbsSurface(kx, ke, pts, w);
}

// Full cylinder radius 1 about the z axis, z in [0, h], as 4 quarter patches.
std::vector<Patch> cylinder_patches(double h) {
  std::vector<Patch> out;
  for (int q = 0; q < 4; ++q) {
    const double a0 = q * kPi / 2;
    const ArcControls arc = arc_control_points(Vec2(0, 0), 1.0, a0, a0 + kPi / 2);
    std::vector<Vec3> pts;
    std::vector<double> w;
    for (int j = 0; j < 2; ++j)
      for (int i = 0; i < 3; ++i) {
        Vec3 p = arc.points[i];
        p.z() = j * h;
        pts.push_back(p);
        w.push_back(arc.weights[i]);
      }
    out.push_back(Patch::finite(NurbsSurface(KnotVector({0, 0, 0, 1, 1, 1}, 2),
                                             KnotVector({0, 0, 1, 1}, 1), pts, w)));
    out.back().set_id(q);
  }
  return out;
}

NurbsSurface flat_triangle() {
  const KnotVector kx({0, 0, 0, 1, 1, 1}, 2);
  const KnotVector ke({0, 0, 1, 1}, 1);
  std::vector<Vec3> pts = {Vec3(0, 0, 0),   Vec3(0.5, 0, 0), Vec3(1, 0, 0),
                           Vec3(0.5, 1, 0), Vec3(0.5, 1, 0), Vec3(0.5, 1, 0)};
  std::vector<double> w(6, 1.0);
  return NurbsSurface(kx, ke, pts, w);
}

void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w);

// 30-point Gauss-Legendre on [0,1] via Newton on Legendre polynomials; test-local
// quadrature oracle.
void gauss01(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double t = std::cos(kPi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = t;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double dp = n * (t * p1 - p0) / (t * t - 1.0);
      const double dt = p1 / dp;
      t -= dt;
      if (std::abs(dt) < 1e-15) break;
    }
    double p0 = 1.0, p1 = t;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    const double dp = n * (t * p1 - p0) / (t * t - 1.0);
    x[i] = 0.5 * (1.0 + t);
    w[i] = 1.0 / ((1.0 - t * t) * dp * dp);
  }
}

}  // namespace

TEST_CASE("arc control points for a quarter circle") {
  const ArcControls arc = arc_control_points(Vec2(0, 0), 1.0, 0.0, kPi / 2);
  CHECK(arc.points[0].isApprox(Vec3(1, 0, 0)));
  CHECK(arc.points[1].isApprox(Vec3(1, 1, 0)));
  CHECK(arc.points[2].head<2>().isApprox(Vec2(0, 1), 1e-15));
  CHECK(arc.weights[0] == 1.0);
  CHECK(arc.weights[1] == doctest::Approx(kW).epsilon(1e-15));
  CHECK(arc.weights[2] == 1.0);

  const NurbsCurve c = arc.curve();
  for (int k = 0; k <= 1000; ++k) {
    const Vec3 x = c.point(k / 1000.0);
    CHECK(std::abs(x.norm() - 1.0) < 1e-13);
  }
  CHECK_THROWS_AS(arc_control_points(Vec2(0, 0), 1.0, 0.0, kPi), DomainError);
  CHECK_THROWS_AS(arc_control_points(Vec2(0, 0), 1.0, 0.5, 0.5), DomainError);
}

TEST_CASE("natm profile arcs join and stay on their circles") {
  Eigen::Matrix<double, 2, 3> m;
  const double phi = std::asin(1.0 / 3.0);
  m.col(0) = Vec2(0, 0);                          // crown, R 4
  m.col(1) = Vec2(1, 0);                          // side, R 3
  m.col(2) = Vec2(0, 3 * std::cos(phi));          // invert, R 6
  const auto arcs = natm_profile(m, Vec3(4, 3, 6));

  for (int a = 0; a < 3; ++a) {
    const NurbsCurve c = arcs[a].curve();
    const Vec2 center = m.col(a);
    const double r = Vec3(4, 3, 6)[a];
    for (int k = 0; k <= 200; ++k) {
      const Vec3 x = c.point(k / 200.0);
      CHECK(std::abs((x.head<2>() - center).norm() - r) < 1e-12);
    }
  }
  CHECK((arcs[1].points[2] - arcs[0].points[0]).norm() < 1e-10);
  CHECK((arcs[2].points[2] - arcs[1].points[0]).norm() < 1e-10);

  Eigen::Matrix<double, 2, 3> bad = m;
  bad.col(2) = bad.col(1);  // identical side/invert centers: dy = 0
  CHECK_THROWS_AS(natm_profile(bad, Vec3(4, 3, 6)), DomainError);
}

TEST_CASE("quarter-cylinder surface point") {
  const Patch p = Patch::finite(quarter_cylinder());
  const Vec3 x = p.position(0.5, 0.5);
  CHECK(x.x() == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(x.y() == doctest::Approx(1 / std::sqrt(2.0)).epsilon(1e-13));
  CHECK(x.z() == doctest::Approx(1 / std::sqrt(2.0)).epsilon(1e-13));
}

TEST_CASE("frames satisfy orthogonality and match finite differences") {
  const Patch p = Patch::finite(quarter_cylinder());
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(0.02, 0.98);
  const double h = 1e-6;
  for (int trial = 0; trial < 25; ++trial) {
    const double xi = u(rng), eta = u(rng);
    const SurfaceFrame f = p.frame(xi, eta);
    CHECK(std::abs(f.n.norm() - 1.0) < 1e-12);
    CHECK(std::abs(f.n.dot(f.v_xi)) < 1e-10 * f.v_xi.norm());
    CHECK(std::abs(f.n.dot(f.v_eta)) < 1e-10 * f.v_eta.norm());
    CHECK(f.jacobian == doctest::Approx(f.v_xi.cross(f.v_eta).norm()));
    const Vec3 fd_xi = (p.position(xi + h, eta) - p.position(xi - h, eta)) / (2 * h);
    const Vec3 fd_eta = (p.position(xi, eta + h) - p.position(xi, eta - h)) / (2 * h);
    CHECK((f.v_xi - fd_xi).norm() < 1e-5 * f.v_xi.norm());
    CHECK((f.v_eta - fd_eta).norm() < 1e-5 * std::max(1.0, f.v_eta.norm()));
  }
}

TEST_CASE("reversing a control row flips the normal") {
  const NurbsSurface s = quarter_cylinder();
  std::vector<Vec3> pts;
  std::vector<double> w;
  for (int j = 1; j >= 0; --j)
    for (int i = 0; i < 3; ++i) {
      pts.push_back(s.control(i, j));
      w.push_back(s.weight(i, j));
    }
  const Patch a = Patch::finite(s);
  const Patch b =
      Patch::finite(NurbsSurface(s.knots_xi(), s.knots_eta(), pts, w));
  const SurfaceFrame fa = a.frame(0.3, 0.4);
  const SurfaceFrame fb = b.frame(0.3, 1.0 - 0.4);
  CHECK((fa.n + fb.n).norm() < 1e-12);
  CHECK(fa.jacobian == doctest::Approx(fb.jacobian).epsilon(1e-12));
}

TEST_CASE("infinite patch evaluation") {
  // Half-strip: edge curve = quarter arc at z = 0, extending along +z.
  const ArcControls arc = arc_control_points(Vec2(0, 0), 2.0, 0.0, kPi / 2);
  std::vector<Vec3> pts;
  std::vector<double> w;
  for (int j = 0; j < 2; ++j)
    for (int i = 0; i < 3; ++i) {
      Vec3 p = arc.points[i];
      p.z() = 3.0 * j;
      pts.push_back(p);
      w.push_back(arc.weights[i]);
    }
  const Patch p = Patch::infinite(NurbsSurface(KnotVector({0, 0, 0, 1, 1, 1}, 2),
                                               KnotVector({0, 0, 1, 1}, 1), pts, w));

  // eta = 0 reproduces the edge curve, eta = 0.5 the second control row.
  const NurbsCurve edge = arc.curve();
  for (const double xi : {0.0, 0.25, 0.6, 1.0}) {
    CHECK((p.position(xi, 0.0) - edge.point(xi)).norm() < 1e-13);
    const Vec3 x_half = p.position(xi, 0.5);
    CHECK(x_half.z() == doctest::Approx(3.0).epsilon(1e-13));
    CHECK((x_half.head<2>() - edge.point(xi).head<2>()).norm() < 1e-13);
  }

  // The map stays on the cylinder all the way out and the Jacobian grows.
  const SurfaceFrame f1 = p.frame(0.5, 0.8);
  CHECK(std::abs(f1.x.head<2>().norm() - 2.0) < 1e-12);
  CHECK(f1.x.z() == doctest::Approx(3.0 * 0.8 / 0.2).epsilon(1e-12));
  const SurfaceFrame f2 = p.frame(0.5, 0.9);
  CHECK(f2.jacobian > f1.jacobian);
  CHECK_THROWS_AS(p.frame(0.5, 1.0), DomainError);

  const double h = 1e-7;
  const Vec3 fd_eta = (p.position(0.4, 0.7 + h) - p.position(0.4, 0.7 - h)) / (2 * h);
  CHECK((p.frame(0.4, 0.7).v_eta - fd_eta).norm() < 1e-4 * fd_eta.norm());

  CHECK_THROWS_AS(Patch::infinite(quarter_cylinder().elevate_eta(2)), DomainError);
}

TEST_CASE("degenerate patch: jacobian vanishes only at the collapsed edge") {
  const Patch p = Patch::degenerate(flat_triangle());
  REQUIRE(p.degenerate_edge() == PatchEdge::EtaMax);

  double last = 1e300;
  for (const double eta : {0.5, 0.7, 0.9, 0.99}) {
    const double j = p.frame(0.5, eta).jacobian;
    CHECK(j < last);
    CHECK(j > 0.0);
    last = j;
  }
  CHECK_THROWS_AS(p.frame(0.5, 1.0), DomainError);
  CHECK((p.position(0.2, 1.0) - Vec3(0.5, 1, 0)).norm() < 1e-14);

  // 20x20 Gauss product: area of the flat triangle (0,0)-(1,0)-(0.5,1) is 1/2.
  std::vector<double> gx, gw;
  gauss01(20, gx, gw);
  double area = 0.0;
  for (int a = 0; a < 20; ++a)
    for (int b = 0; b < 20; ++b)
      area += gw[a] * gw[b] * p.frame(gx[a], gx[b]).jacobian;
  CHECK(area == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("trimmed patch composition") {
  const NurbsSurface carrier = quarter_cylinder();
  const KnotVector lin({0, 0, 1, 1}, 1);

  // Identity re-map: same frames as the carrier.
  const TrimMap ident(lin, lin, {Vec2(0, 0), Vec2(1, 0), Vec2(0, 1), Vec2(1, 1)},
                      {1, 1, 1, 1});
  const Patch pt = Patch::trimmed(carrier, ident);
  const Patch pc = Patch::finite(carrier);
  const SurfaceFrame a = pt.frame(0.37, 0.81);
  const SurfaceFrame b = pc.frame(0.37, 0.81);
  CHECK((a.x - b.x).norm() < 1e-13);
  CHECK((a.n - b.n).norm() < 1e-12);
  CHECK(a.jacobian == doctest::Approx(b.jacobian).epsilon(1e-12));

  // A shrunk re-map keeps points on the carrier and scales the Jacobian by det.
  const TrimMap inner(lin, lin,
                      {Vec2(0.2, 0.1), Vec2(0.8, 0.1), Vec2(0.2, 0.7), Vec2(0.8, 0.7)},
                      {1, 1, 1, 1});
  const Patch ps = Patch::trimmed(carrier, inner);
  for (const double q : {0.0, 0.3, 0.77, 1.0}) {
    const Vec3 x = ps.position(q, 1.0 - q);
    CHECK(std::abs(x.tail<2>().norm() - 1.0) < 1e-12);  // on the cylinder
  }
  const double det = 0.6 * 0.6;
  const SurfaceFrame fs = ps.frame(0.5, 0.5);
  const SurfaceFrame fc = pc.frame(0.2 + 0.6 * 0.5, 0.1 + 0.6 * 0.5);
  CHECK(fs.jacobian == doctest::Approx(fc.jacobian * det).epsilon(1e-10));

  // Off-square trim maps are rejected.
  CHECK_THROWS_AS(TrimMap(lin, lin,
                          {Vec2(-0.2, 0), Vec2(1, 0), Vec2(0, 1), Vec2(1, 1)},
                          {1, 1, 1, 1}),
                  GeometryError);
}

TEST_CASE("ray-surface intersection") {
  const auto patches = cylinder_patches(1.0);

  // Perpendicular ray through the axis: one hit per patch it faces.
  const auto hits =
      ray_surface_intersection(patches[0], Vec3(0, 0, 0.5), Vec3(1, 1, 0).normalized());
  REQUIRE(hits.size() == 1);
  CHECK(hits[0].t == doctest::Approx(1.0).epsilon(1e-9));
  CHECK((patches[0].position(hits[0].xi, hits[0].eta) -
         Vec3(kW, kW, 0.5)).norm() < 1e-8);

  // Ray missing the bounding box.
  CHECK(ray_surface_intersection(patches[0], Vec3(5, 5, 5), Vec3(1, 0, 0)).empty());

  // A transversal line crosses the closed section exactly twice (line-circle
  // algebra: y = 0.3 hits x = +-sqrt(1 - 0.09)).
  int count = 0;
  std::vector<Vec3> pts;
  for (const Patch& p : patches)
    for (const RayHit& h :
         ray_surface_intersection(p, Vec3(-3, 0.3, 0.5), Vec3(1, 0, 0))) {
      ++count;
      pts.push_back(p.position(h.xi, h.eta));
    }
  CHECK(count == 2);
  const double xs = std::sqrt(1.0 - 0.09);
  for (const Vec3& x : pts)
    CHECK(std::min((x - Vec3(xs, 0.3, 0.5)).norm(), (x - Vec3(-xs, 0.3, 0.5)).norm()) <
          1e-8);
}

TEST_CASE("closest point projection") {
  const auto patches = cylinder_patches(1.0);
  const Vec3 x(2.0, 0.5, 0.5);
  const ClosestPoint cp = closest_point(patches[0], x);
  CHECK(cp.distance == doctest::Approx(x.head<2>().norm() - 1.0).epsilon(1e-7));
  const Vec3 proj = patches[0].position(cp.xi, cp.eta);
  CHECK(std::abs(proj.head<2>().norm() - 1.0) < 1e-10);
}

TEST_CASE("unknown-basis refinement is independent of the geometry") {
  Patch p = Patch::finite(quarter_cylinder());
  CHECK(p.num_field_params() == 6);
  p.refine_insert_eta(0.5);
  p.refine_insert_eta(0.7);
  CHECK(p.num_field_params() == 3 * 4);
  CHECK(p.geometry().count() == 6);  // geometry untouched
  const Vec2 a = p.anchor(3);        // first anchor of the second eta row
  CHECK(a.x() == doctest::Approx(0.0));
  CHECK(a.y() == doctest::Approx(0.5));

  // Field basis forms a partition of unity after refinement.
  const auto fb = p.field_basis(0.4, 0.6);
  double s = 0.0;
  for (const double v : fb.value) s += v;
  CHECK(s == doctest::Approx(1.0).epsilon(1e-13));

  Patch q = Patch::finite(quarter_cylinder());
  q.refine_elevate_eta(3);
  CHECK(q.num_field_params() == 3 * 4);
  q.refine_insert_eta(0.75);
  CHECK(q.num_field_params() == 3 * 5);
}
