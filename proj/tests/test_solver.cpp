#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "igabem/mesher.hpp"
#include "igabem/models.hpp"
#include "igabem/solver.hpp"

#include <cmath>
#include <numbers>

using namespace igabem;

namespace {

constexpr double kPi = std::numbers::pi;

MaterialModel elastic_mat(double e, double nu) {
  MaterialModel m;
  m.kind = MaterialKind::Elastic;
  m.E = e;
  m.nu = nu;
  return m;
}

MaterialModel mc_mat(double e, double nu, double phi_deg, double c, double pw) {
  MaterialModel m;
  m.kind = MaterialKind::MohrCoulomb;
  m.E = e;
  m.nu = nu;
  m.friction_angle = phi_deg * kPi / 180.0;
  m.cohesion = c;
  m.pore_pressure = pw;
  return m;
}

struct SmallModel {
  std::vector<Patch> patches;
  CollocationSet colloc;
  std::vector<Cell> cells;
  GridPointSet grid;
  Loading load;
  ElasticConstants domain{10.0, 0.25};
  PrecomputedSystem pre;
};

// Spherical cavity of radius 1 with a thin scanned shell of cells around it.
// Built once; the precompute is the expensive part.
SmallModel build_sphere_model(double pressure) {
  SmallModel m;
  m.patches = models::sphere(1.0);
  m.colloc = generate_collocation(m.patches);
  m.load.sigma_v << -pressure, -pressure, -pressure, 0, 0, 0;

  ScanRegion region;
  region.box.min = Vec3(-1.7, -1.7, -1.7);
  region.box.max = Vec3(1.7, 1.7, 1.7);
  region.lines = {5, 5, 5};
  const MeshResult mesh = scan_mesh(region, m.patches);
  m.cells = mesh.cells;
  m.grid = mesh.grid;
  m.pre = precompute(m.patches, m.colloc, m.cells, m.grid, m.load, m.domain);
  return m;
}

const SmallModel& sphere_model(double pressure) {
  static const SmallModel cached = build_sphere_model(pressure);
  return cached;
}

}  // namespace

TEST_CASE("yield function closed forms") {
  const MaterialModel mat = mc_mat(10.0, 0.25, 30.0, 2.0, 0.0);

  // Zero effective stress: F = -2 c cos(phi).
  VoigtStress zero = VoigtStress::Zero();
  CHECK(mc_yield(zero, mat) ==
        doctest::Approx(-2.0 * 2.0 * std::cos(mat.friction_angle)).epsilon(1e-13));

  // Uniaxial compressive strength 2 c cos(phi) / (1 - sin(phi)).
  const double strength = 2.0 * mat.cohesion * std::cos(mat.friction_angle) /
                          (1.0 - std::sin(mat.friction_angle));
  VoigtStress uniax = VoigtStress::Zero();
  uniax[2] = -strength;
  CHECK(std::abs(mc_yield(uniax, mat)) < 1e-10);

  // Pore pressure shifts normal components: hydrostatic total -pw is neutral.
  const MaterialModel wet = mc_mat(10.0, 0.25, 30.0, 2.0, 5.0);
  VoigtStress hydro = VoigtStress::Zero();
  hydro[0] = hydro[1] = hydro[2] = -5.0;
  CHECK(mc_yield(hydro, wet) ==
        doctest::Approx(mc_yield(zero, mat)).epsilon(1e-13));

  // General state against a brute-force principal-stress evaluation.
  VoigtStress s;
  s << -121.5, -112.5, -130.5, 4.0, -3.0, 7.0;
  const MaterialModel bore = mc_mat(10000.0, 0.25, 30.0, 16.6, 72.0);
  Eigen::SelfAdjointEigenSolver<Mat3> es(
      voigt_to_matrix(VoigtStress(s + Vec6(72, 72, 72, 0, 0, 0))));
  const double s1 = es.eigenvalues()[2], s3 = es.eigenvalues()[0];
  const double expect = (s1 - s3) + (s1 + s3) * std::sin(bore.friction_angle) -
                        2 * 16.6 * std::cos(bore.friction_angle);
  CHECK(mc_yield(s, bore) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("return mapping: elastic states pass through") {
  const MaterialModel mat = mc_mat(10.0, 0.25, 30.0, 5.0, 0.0);
  VoigtStress inside;
  inside << -1.0, -1.2, -0.8, 0.1, 0.0, -0.05;
  REQUIRE(mc_yield(inside, mat) < 0.0);
  const McReturn rm = mc_return(inside, mat);
  CHECK(!rm.plastic);
  CHECK((rm.sigma - inside).norm() == 0.0);
  CHECK((rm.d_ep - elastic_d(mat.elastic())).norm() == 0.0);
}

TEST_CASE("return mapping: main plane return and associated flow") {
  const MaterialModel mat = mc_mat(10.0, 0.3, 35.0, 1.0, 0.0);
  VoigtStress trial;
  trial << -0.5, -2.0, -9.0, 0.3, 0.2, -0.1;
  REQUIRE(mc_yield(trial, mat) > 0.0);
  const McReturn rm = mc_return(trial, mat);
  CHECK(rm.plastic);
  CHECK(mc_yield(rm.sigma, mat) <=
        1e-8 * 2.0 * mat.cohesion * std::cos(mat.friction_angle));

  // Plastic strain increment parallel to the yield gradient (associated flow).
  const Mat6 dinv = elastic_d(mat.elastic()).inverse();
  const Vec6 deps = dinv * (trial - rm.sigma);
  // Gradient by central differences of the yield function at the return point.
  Vec6 grad;
  for (int i = 0; i < 6; ++i) {
    Vec6 p = rm.sigma, q = rm.sigma;
    p[i] += 1e-7;
    q[i] -= 1e-7;
    grad[i] = (mc_yield(p, mat) - mc_yield(q, mat)) / 2e-7;
  }
  const Vec6 a = deps.normalized();
  const Vec6 b = grad.normalized();
  CHECK((a - b).norm() < 1e-5);

  // Consistent operator annihilates the gradient direction.
  CHECK((rm.d_ep * grad).norm() < 1e-8 * elastic_d(mat.elastic()).norm());
}

TEST_CASE("return mapping: apex return for strong tension") {
  const MaterialModel mat = mc_mat(10.0, 0.25, 30.0, 1.0, 0.0);
  VoigtStress trial;
  trial << 20.0, 18.0, 16.0, 0.5, 0.0, 0.0;
  const McReturn rm = mc_return(trial, mat);
  CHECK(rm.plastic);
  const double apex = mat.cohesion * std::cos(mat.friction_angle) /
                      std::sin(mat.friction_angle);
  Eigen::SelfAdjointEigenSolver<Mat3> es(voigt_to_matrix(rm.sigma));
  for (int i = 0; i < 3; ++i)
    CHECK(es.eigenvalues()[i] == doctest::Approx(apex).epsilon(1e-9));
  CHECK(rm.d_ep.norm() == 0.0);
}

TEST_CASE("elastic initial stress from property contrast") {
  const Mat6 d = elastic_d(ElasticConstants(10.0, 0.25));
  VoigtStrain eps;
  eps << 1e-3, -2e-3, 0.5e-3, 1e-4, 0.0, -2e-4;
  CHECK(initial_stress_elastic(d, d, eps).norm() == 0.0);
  CHECK((initial_stress_elastic(d, Mat6::Zero(), eps) - d * eps).norm() == 0.0);
  const Mat6 half = elastic_d(ElasticConstants(5.0, 0.25));
  CHECK((initial_stress_elastic(d, half, eps) - 0.5 * d * eps).norm() < 1e-14);
}

TEST_CASE("null inclusion reproduces the boundary-only solution") {
  const SmallModel& m = sphere_model(1.0);
  const std::vector<MaterialModel> mats(m.grid.size(), elastic_mat(10.0, 0.25));
  const SolutionState st = solve(m.pre, mats, m.load, m.domain);
  CHECK(st.iterations == 1);
  CHECK(st.sigma0.norm() == 0.0);
  CHECK((st.u - m.pre.u0).norm() <= 1e-10 * m.pre.u0.norm());

  // Grid displacements follow the analytic cavity field p a^3 / (4 G r^2).
  int checked = 0;
  for (int g = 0; g < m.grid.size(); ++g) {
    if (m.grid.points[g].boundary) continue;
    const double r = m.grid.x(g).norm();
    if (r < 1.3) continue;
    const double expected = 1.0 / (4.0 * m.domain.G * r * r);
    const double got = st.u_grid.segment<3>(3 * g).norm();
    CHECK(got == doctest::Approx(expected).epsilon(0.05));
    ++checked;
  }
  CHECK(checked > 10);
}

TEST_CASE("coupled elastic solve matches a dense block oracle") {
  const SmallModel& m = sphere_model(1.0);
  const int nd = m.pre.n_d, ng = m.pre.n_g;
  const std::vector<MaterialModel> stiff(m.grid.size(), elastic_mat(20.0, 0.25));
  const SolutionState st = solve(m.pre, stiff, m.load, m.domain);
  CHECK(st.iterations == 1);

  // Independent composition: one dense block system in (u, sigma0).
  const Mat6 dprime =
      elastic_d(m.domain) - elastic_d(ElasticConstants(20.0, 0.25));
  MatX big = MatX::Zero(nd + 6 * ng, nd + 6 * ng);
  VecX rhs = VecX::Zero(nd + 6 * ng);
  big.topLeftCorner(nd, nd) = m.pre.l;
  big.topRightCorner(nd, 6 * ng) = -m.pre.b0;
  rhs.head(nd) = m.pre.r;
  const MatX s_op = m.pre.b_hat * m.pre.b0_bar;
  for (int g = 0; g < ng; ++g) {
    big.block(nd + 6 * g, 0, 6, nd) = -dprime * m.pre.field_a.middleRows<6>(6 * g);
    big.block(nd + 6 * g, nd, 6, 6 * ng) = -dprime * s_op.middleRows<6>(6 * g);
    big.block(nd + 6 * g, nd + 6 * g, 6, 6) += Mat6::Identity();
    rhs.segment<6>(nd + 6 * g) = dprime * m.pre.field_b.segment<6>(6 * g);
  }
  const VecX sol = big.partialPivLu().solve(rhs);
  CHECK((st.u - sol.head(nd)).norm() < 1e-8 * std::max(1.0, sol.head(nd).norm()));
  CHECK((st.sigma0 - sol.tail(6 * ng)).norm() <
        1e-8 * std::max(1.0, sol.tail(6 * ng).norm()));

  // Stiff inclusions reduce interior strains against soft ones.
  const std::vector<MaterialModel> soft(m.grid.size(), elastic_mat(5.0, 0.25));
  const SolutionState soft_state = solve(m.pre, soft, m.load, m.domain);
  CHECK(st.strain.norm() < soft_state.strain.norm());
}

TEST_CASE("plastic shell converges and satisfies the yield bound") {
  // Pressurised circular tunnel with a graded shell grown from the wall: thin
  // first layer resolves the wall strains that drive yielding.
  SmallModel m;
  m.patches = models::circular_tunnel(1.0, 3.0);
  m.colloc = generate_collocation(m.patches);
  m.load.sigma_v << -1.0, -1.0, -1.0, 0, 0, 0;
  SuperCell sc;
  int corner = 0;
  for (const double z : {-3.2, 3.2})
    for (const Vec2 xy :
         {Vec2(-3, -3), Vec2(3, -3), Vec2(3, 3), Vec2(-3, 3)})
      sc.corners[corner++] = Vec3(xy.x(), xy.y(), z);
  GrowSpec spec;
  spec.sub_u = 2;
  spec.sub_v = 3;
  spec.layers = 3;
  spec.grading = 3.0;
  const MeshResult mesh = grow_mesh(m.patches, {0, 1, 2, 3}, sc, spec);
  m.cells = mesh.cells;
  m.grid = mesh.grid;
  m.pre = precompute(m.patches, m.colloc, m.cells, m.grid, m.load, m.domain);

  const std::vector<MaterialModel> mats(m.grid.size(),
                                        mc_mat(10.0, 0.25, 30.0, 0.2, 0.0));
  const SolutionState st = solve(m.pre, mats, m.load, m.domain);
  CHECK(st.iterations > 1);

  int plastic_points = 0;
  const double scale = 2.0 * 0.2 * std::cos(30.0 * kPi / 180.0);
  for (int g = 0; g < m.grid.size(); ++g) {
    if (st.plastic[g]) ++plastic_points;
    CHECK(st.yield_value[g] <= 1e-6 * std::max(scale, 1.0));
  }
  CHECK(plastic_points > 0);

  // The plastic zone hugs the tunnel wall.
  for (int g = 0; g < m.grid.size(); ++g)
    if (st.plastic[g]) CHECK(m.grid.x(g).head<2>().norm() < 1.6);

  // Fixed-point consistency: recomputing sigma0 from the final strains changes
  // nothing beyond the convergence tolerance.
  const Mat6 d = elastic_d(m.domain);
  const Mat6 di = elastic_d(ElasticConstants(10.0, 0.25));
  double worst = 0.0;
  for (int g = 0; g < m.grid.size(); ++g) {
    const Vec6 eps = st.strain.segment<6>(6 * g);
    const Vec6 trial = m.load.sigma_v + di * eps;
    Vec6 s0 = (d - di) * eps;
    const McReturn rm = mc_return(trial, mats[g]);
    if (rm.plastic) s0 += trial - rm.sigma;
    worst = std::max(worst,
                     (s0 - st.sigma0.segment<6>(6 * g)).cwiseAbs().maxCoeff());
  }
  CHECK(worst < 5e-6);

  // Full Newton-Raphson reaches the same state.
  SolverOptions nr;
  nr.full_newton = true;
  const SolutionState st_nr = solve(m.pre, mats, m.load, m.domain, nr);
  CHECK((st_nr.sigma0 - st.sigma0).cwiseAbs().maxCoeff() < 2e-5);
  CHECK(st_nr.iterations <= st.iterations);
}

TEST_CASE("precompute checksum is reproducible") {
  const SmallModel& a = sphere_model(1.0);
  const PrecomputedSystem again =
      precompute(a.patches, a.colloc, a.cells, a.grid, a.load, a.domain);
  CHECK(again.checksum == a.pre.checksum);
  CHECK(again.n_d == a.pre.n_d);
}
