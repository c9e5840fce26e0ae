#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "igabem/mesher.hpp"
#include "igabem/models.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace igabem;

namespace {

// Large flat wall: the half-space above the plane through `origin` with normal
// `n` (pointing into the void) is excavated.
Patch wall_patch(const Vec3& origin, const Vec3& u, const Vec3& v, const Vec3& n) {
  std::vector<Vec3> pts = {origin, origin + u, origin + v, origin + u + v};
  Patch p = Patch::finite(NurbsSurface(KnotVector({0, 0, 1, 1}, 1),
                                       KnotVector({0, 0, 1, 1}, 1), pts,
                                       {1, 1, 1, 1}));
  p.set_id(0);
  const SurfaceFrame f = p.frame(0.5, 0.5);
  if (f.n.dot(n) < 0) p.set_normal_sign(-1.0);
  return p;
}

ScanRegion box_region(const Vec3& lo, const Vec3& hi, int nx, int ny, int nz) {
  ScanRegion r;
  r.box.min = lo;
  r.box.max = hi;
  r.lines = {nx, ny, nz};
  return r;
}

}  // namespace

TEST_CASE("scan without boundary gives the structured box mesh") {
  const auto mesh = scan_mesh(box_region(Vec3(0, 0, 0), Vec3(2, 3, 1), 3, 4, 2), {});
  CHECK(mesh.cells.size() == 2 * 3 * 1);
  CHECK(mesh.grid.size() == 3 * 4 * 2);
  CHECK(mesh_volume(mesh) == doctest::Approx(6.0).epsilon(1e-12));
  for (const auto& gp : mesh.grid.points) CHECK(!gp.boundary.has_value());
}

TEST_CASE("cell classification from corner states") {
  std::array<bool, 8> all_void;
  all_void.fill(true);
  std::array<bool, 8> none{};
  std::array<bool, 8> half{};
  for (int i = 0; i < 4; ++i) half[i] = true;
  CHECK(classify_cell_corners(all_void, false) == CellClass::Void);
  CHECK(classify_cell_corners(none, false) == CellClass::InsideDomain);
  CHECK(classify_cell_corners(none, true) == CellClass::Intersected);
  CHECK(classify_cell_corners(half, true) == CellClass::Intersected);
}

TEST_CASE("void test flips with the boundary orientation") {
  Patch up = wall_patch(Vec3(-5, -5, 1), Vec3(10, 0, 0), Vec3(0, 10, 0),
                        Vec3(0, 0, 1));
  CHECK(point_in_void(Vec3(0, 0, 2), {up}));
  CHECK(!point_in_void(Vec3(0, 0, 0), {up}));
  up.set_normal_sign(-up.normal_sign());
  CHECK(!point_in_void(Vec3(0, 0, 2), {up}));
  CHECK(point_in_void(Vec3(0, 0, 0), {up}));
}

TEST_CASE("planar 45-degree cut reproduces the prism volume") {
  // Void above the plane z = x (normal (−1,0,1)/sqrt(2) points up into it).
  const Vec3 origin(-1, -4, -1);
  const Patch wall = wall_patch(origin, Vec3(8, 0, 8), Vec3(0, 8, 0),
                                Vec3(-1, 0, 1).normalized());
  // One cube [0,1]^3: the plane cuts it along the diagonal; material below keeps
  // volume 1/2 exactly.
  const auto mesh =
      scan_mesh(box_region(Vec3(0, 0, 0), Vec3(1, 1, 1), 2, 2, 2), {wall});
  CHECK(mesh_volume(mesh) == doctest::Approx(0.5).epsilon(1e-3));
}

TEST_CASE("cut along a cell face keeps cells untouched") {
  const Patch wall = wall_patch(Vec3(-5, -5, 0.5), Vec3(10, 0, 0), Vec3(0, 10, 0),
                                Vec3(0, 0, 1));
  const auto mesh =
      scan_mesh(box_region(Vec3(0, 0, 0), Vec3(1, 1, 1), 3, 3, 3), {wall});
  // Void is z > 0.5: the lower layer of 4 cells remains, bit-exact corners.
  CHECK(mesh.cells.size() == 4);
  CHECK(mesh_volume(mesh) == doctest::Approx(0.5).epsilon(1e-12));
  for (const auto& c : mesh.cells) CHECK(c.node_count() == 8);
}

TEST_CASE("cylindrical wall: trimmed mid-sides land on the cylinder") {
  const auto tunnel = models::circular_tunnel(1.0, 4.0);
  const auto mesh = scan_mesh(
      box_region(Vec3(0, 0, -1.0), Vec3(2.2, 2.2, 1.0), 4, 4, 3), tunnel);
  int on_wall = 0;
  for (const auto& gp : mesh.grid.points) {
    if (!gp.boundary) continue;
    ++on_wall;
    CHECK(std::abs(gp.x.head<2>().norm() - 1.0) < 1e-6);
  }
  CHECK(on_wall > 4);

  bool any_quadratic = false;
  for (const auto& c : mesh.cells)
    if (c.node_count() > 8) any_quadratic = true;
  CHECK(any_quadratic);

  // No grid point intrudes into the tunnel.
  for (const auto& gp : mesh.grid.points)
    CHECK(gp.x.head<2>().norm() > 1.0 - 1e-6);
}

TEST_CASE("scan volume balances the excavated cylinder (Monte-Carlo oracle)") {
  const auto tunnel = models::circular_tunnel(1.0, 6.0);
  const Vec3 lo(-2, -2, -2), hi(2, 2, 2);
  const auto mesh = scan_mesh(box_region(lo, hi, 7, 7, 5), tunnel);

  std::mt19937 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int samples = 200000;
  int material = 0;
  for (int s = 0; s < samples; ++s) {
    const Vec3 x(lo.x() + u(rng) * (hi.x() - lo.x()),
                 lo.y() + u(rng) * (hi.y() - lo.y()),
                 lo.z() + u(rng) * (hi.z() - lo.z()));
    if (x.head<2>().norm() > 1.0) ++material;
  }
  const double box_vol = (hi - lo).prod();
  const double expected = box_vol * material / samples;
  CHECK(mesh_volume(mesh) == doctest::Approx(expected).epsilon(0.02));
}

TEST_CASE("too coarse scan grids are rejected with a diagnostic") {
  const auto tunnel = models::circular_tunnel(0.2, 4.0);
  CHECK_THROWS_AS(
      scan_mesh(box_region(Vec3(-3, -3, -3), Vec3(3, 3, 3), 2, 2, 2), tunnel),
      MeshError);
}

TEST_CASE("grown mesh hugs the seed surface with graded layers") {
  const auto tunnel = models::circular_tunnel(1.0, 2.0);
  SuperCell sc;
  int c = 0;
  for (const double z : {-2.2, 2.2})
    for (const Vec2 xy : {Vec2(-0.1, -0.1), Vec2(3.0, -0.1), Vec2(3.0, 3.0),
                          Vec2(-0.1, 3.0)})
      sc.corners[c++] = Vec3(xy.x(), xy.y(), z);

  GrowSpec spec;
  spec.sub_u = 1;
  spec.sub_v = 1;
  spec.layers = 1;
  const auto single = grow_mesh(tunnel, {0}, sc, spec);
  CHECK(single.cells.size() == 1);

  spec.sub_u = 3;
  spec.sub_v = 2;
  spec.layers = 3;
  spec.grading = 1.5;
  const auto mesh = grow_mesh(tunnel, {0}, sc, spec);
  CHECK(mesh.cells.size() == 3 * 2 * 3);

  int on_wall = 0;
  for (const auto& gp : mesh.grid.points)
    if (gp.boundary) {
      ++on_wall;
      CHECK(std::abs(gp.x.head<2>().norm() - 1.0) < 1e-6);
    }
  CHECK(on_wall == (3 + 1) * (2 + 1) + 3 * (2 + 1) + (3 + 1) * 2);

  // Layer thickness grows monotonically outward.
  const auto& g = mesh.grid;
  auto cell_radial_size = [&](const Cell& cell) {
    return ((g.x(cell.nodes[4]) - g.x(cell.nodes[0])).norm() +
            (g.x(cell.nodes[6]) - g.x(cell.nodes[2])).norm()) /
           2.0;
  };
  for (int col = 0; col < 6; ++col) {
    double last = 0.0;
    for (int l = 0; l < 3; ++l) {
      const double s = cell_radial_size(mesh.cells[col * 3 + l]);
      CHECK(s > last);
      last = s;
    }
  }
}

TEST_CASE("super-cell that misses its seeds is rejected") {
  const auto tunnel = models::circular_tunnel(1.0, 2.0);
  SuperCell sc;
  int c = 0;
  for (const double z : {5.0, 6.0})
    for (const Vec2 xy :
         {Vec2(2, 2), Vec2(3, 2), Vec2(3, 3), Vec2(2, 3)})
      sc.corners[c++] = Vec3(xy.x(), xy.y(), z);
  CHECK_THROWS_AS(grow_mesh(tunnel, {0}, sc, GrowSpec{}), MeshError);
}

TEST_CASE("skewing a cell to a super-cell moves only its vertical column") {
  auto mesh = scan_mesh(box_region(Vec3(0, 0, 0), Vec3(3, 3, 3), 4, 4, 4), {});
  const auto before = mesh.grid.points;

  // Zero skew: identity.
  auto copy = mesh;
  skew_to_supercell(copy, 13, Vec3::Zero(), 2);
  for (int g = 0; g < copy.grid.size(); ++g)
    CHECK((copy.grid.points[g].x - before[g].x).norm() == 0.0);

  // Middle cell skewed along x, column along z.
  const SuperCell sc = skew_to_supercell(mesh, 13, Vec3(0.4, 0, 0), 2);
  CHECK(mesh.cells.size() == 26);
  int moved = 0;
  for (int g = 0; g < mesh.grid.size(); ++g) {
    const Vec3& a = before[g].x;
    const Vec3& b = mesh.grid.points[g].x;
    const bool in_column = a.x() >= 1.0 - 1e-9 && a.x() <= 2.0 + 1e-9 &&
                           a.y() >= 1.0 - 1e-9 && a.y() <= 2.0 + 1e-9;
    if (!in_column) {
      CHECK((b - a).norm() == 0.0);  // lateral nodes bit-exact
    } else if ((b - a).norm() > 0) {
      ++moved;
      CHECK(b.z() == a.z());
    }
  }
  CHECK(moved > 0);

  // The super-cell contains the skewed junction volume.
  CHECK(sc.contains(sc.map(Vec3(0.3, -0.2, 0.5))));

  // Sampled pairwise overlap check across the skewed mesh.
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-0.95, 0.95);
  for (int trial = 0; trial < 200; ++trial) {
    const int c = trial % mesh.cells.size();
    const Vec3 local(u(rng), u(rng), u(rng));
    const Vec3 x = cell_point(mesh.cells[c], mesh.grid, local);
    int owners = 0;
    for (const auto& other : mesh.cells) {
      const auto inv = invert_cell_map(other, mesh.grid, x, 1e-8);
      if (inv && (inv->array().abs() <= 1.0 - 1e-6).all()) ++owners;
    }
    CHECK(owners <= 1);
  }
}

TEST_CASE("merging meshes deduplicates shared grid points") {
  const auto a = scan_mesh(box_region(Vec3(0, 0, 0), Vec3(1, 1, 1), 2, 2, 2), {});
  const auto b = scan_mesh(box_region(Vec3(1, 0, 0), Vec3(2, 1, 1), 2, 2, 2), {});
  const auto m = merge_meshes(a, b);
  CHECK(m.cells.size() == 2);
  CHECK(m.grid.size() == 12);  // 4 nodes shared on the interface
  CHECK(mesh_volume(m) == doctest::Approx(2.0).epsilon(1e-12));
}
