#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "igabem/config.hpp"
#include "igabem/models.hpp"
#include "igabem/runner.hpp"
#include "igabem/vtk.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace igabem;
namespace fs = std::filesystem;

namespace {

std::string minimal_config() {
  return R"({
    "geometry": {"patches": [
      {"id": 0, "kind": "finite",
       "xi": {"order": 1, "knots": [0,0,1,1]},
       "eta": {"order": 1, "knots": [0,0,1,1]},
       "control": [[0,0,0,1],[1,0,0,1],[0,1,0,1],[1,1,0,1]]}
    ]},
    "loading": {"virgin_stress": [0,0,-1,0,0,0]},
    "materials": {"domain": {"E": 10.0, "nu": 0.25}},
    "output": {"directory": "/tmp/igabem_test_out", "vtk": false,
               "monitors": [{"name": "mid", "patch": 0, "xi": 0.5, "eta": 0.5,
                             "quantity": "displacement"}]}
  })";
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("minimal config parses") {
  const ParseResult r = parse_config(minimal_config());
  CHECK(r.errors.empty());
  REQUIRE(r.config.has_value());
  CHECK(r.config->patches.size() == 1);
  CHECK(r.config->loading.sigma_v[2] == -1.0);
  CHECK(r.config->domain.E == 10.0);
}

TEST_CASE("schema violations are collected with paths") {
  std::string bad = minimal_config();
  // Negative cohesion plus an unknown key plus a bad quantity.
  bad.insert(bad.rfind('}'), R"(,
    "mesher": {"bogus": 1},
    "solver": {"newton": "sometimes"})");
  const ParseResult r = parse_config(bad);
  CHECK(!r.config.has_value());
  REQUIRE(r.errors.size() >= 2);
  bool saw_mesher = false, saw_newton = false;
  for (const auto& e : r.errors) {
    if (e.find("$.mesher") != std::string::npos) saw_mesher = true;
    if (e.find("$.solver.newton") != std::string::npos) saw_newton = true;
  }
  CHECK(saw_mesher);
  CHECK(saw_newton);
}

TEST_CASE("negative cohesion is rejected with its field path") {
  std::string bad = minimal_config();
  bad.insert(bad.rfind('}'), R"(,
    "materials2": 0)");
  // Real check: region with negative cohesion.
  std::string cfg = minimal_config();
  cfg.insert(cfg.rfind('}'), R"(,
    "mesher": {"scan": [{"box": {"min": [2,2,2], "max": [3,3,3]},
                          "lines": [2,2,2]}]})");
  std::string with_region = cfg;
  with_region.replace(with_region.find("\"materials\": {\"domain\": {\"E\": 10.0, \"nu\": 0.25}}"),
                      std::string("\"materials\": {\"domain\": {\"E\": 10.0, \"nu\": 0.25}}").size(),
                      R"("materials": {"domain": {"E": 10.0, "nu": 0.25},
        "regions": [{"model": {"kind": "mohr_coulomb", "E": 10.0, "nu": 0.25,
                               "friction_angle_deg": 30, "cohesion": -2.0}}]})");
  const ParseResult r = parse_config(with_region);
  CHECK(!r.config.has_value());
  bool saw = false;
  for (const auto& e : r.errors)
    if (e.find("$.materials.regions[0]") != std::string::npos) saw = true;
  CHECK(saw);
}

TEST_CASE("geometry round-trips through the config writer") {
  RunConfig cfg;
  cfg.patches = models::circular_tunnel(1.0, 2.0);
  cfg.patches[0].refine_insert_eta(0.5);
  cfg.patches[0].refine_insert_eta(0.7);
  cfg.patches[1].refine_elevate_eta(3);
  cfg.loading.sigma_v << 0, 0, -1, 0, 0, 0;
  cfg.domain = ElasticConstants(10.0, 0.25);
  const std::string text = write_config(cfg);

  const ParseResult r = parse_config(text);
  REQUIRE(r.config.has_value());
  REQUIRE(r.config->patches.size() == cfg.patches.size());
  for (std::size_t p = 0; p < cfg.patches.size(); ++p) {
    const Patch& a = cfg.patches[p];
    const Patch& b = r.config->patches[p];
    CHECK(a.kind() == b.kind());
    CHECK(a.num_field_params() == b.num_field_params());
    for (const double s : {0.14, 0.5, 0.83}) {
      const double eta = a.kind() == PatchKind::Infinite ? 0.8 * s : s;
      CHECK((a.position(s, eta) - b.position(s, eta)).norm() < 1e-12);
    }
    const SurfaceFrame fa = a.frame(0.3, 0.4);
    const SurfaceFrame fb = b.frame(0.3, 0.4);
    CHECK((fa.n - fb.n).norm() < 1e-12);
  }
}

TEST_CASE("vtk writer emits parsable legacy files") {
  // Empty mesh: header-only file.
  write_vtk_cells("/tmp/igabem_empty.vtk", {}, GridPointSet{});
  const std::string empty = slurp("/tmp/igabem_empty.vtk");
  CHECK(empty.find("# vtk DataFile Version 3.0") == 0);
  CHECK(empty.find("POINTS 0 double") != std::string::npos);

  // One cube: a single 8-point HEXAHEDRON record.
  GridPointSet grid;
  Cell cell;
  const auto& lc = cell_local_coords();
  for (int c = 0; c < 8; ++c) {
    grid.points.push_back({0.5 * (lc[c] + Vec3::Ones()), 0, std::nullopt});
    cell.nodes[c] = c;
  }
  VtkPointData data;
  for (int c = 0; c < 8; ++c) {
    data.displacement.push_back(Vec3(0.1 * c, 0, 0));
    data.stress.push_back(Vec6::Constant(c));
    data.yield_flag.push_back(c % 2);
  }
  const GridPointSet cube_grid = grid;
  write_vtk_cells("/tmp/igabem_cube.vtk", {cell}, grid, data);
  const std::string cube = slurp("/tmp/igabem_cube.vtk");
  CHECK(cube.find("CELLS 1 9") != std::string::npos);
  CHECK(cube.find("\n12\n") != std::string::npos);  // VTK hexahedron type
  CHECK(cube.find("8 0 1 2 3 4 5 6 7") != std::string::npos);
  CHECK(cube.find("VECTORS displacement double") != std::string::npos);
  CHECK(cube.find("SCALARS yield int 1") != std::string::npos);

  // Quadratic cell: type 25 with 20 point ids.
  Cell quad = cell;
  quad.active_midside[0] = true;
  grid.points.push_back({Vec3(0.5, 0.0, 0.0), 0, std::nullopt});
  quad.nodes[8] = 8;
  write_vtk_cells("/tmp/igabem_quad.vtk", {quad}, grid);
  const std::string q = slurp("/tmp/igabem_quad.vtk");
  CHECK(q.find("\n25\n") != std::string::npos);
  CHECK(q.find("POINTS 20 double") != std::string::npos);

  // Deterministic bytes across runs.
  write_vtk_cells("/tmp/igabem_cube2.vtk", {cell}, cube_grid, data);
  CHECK(slurp("/tmp/igabem_cube2.vtk") == cube);
}

TEST_CASE("run pipeline produces monitors and exit codes") {
  RunConfig cfg;
  cfg.patches = models::sphere(1.0);
  cfg.loading.sigma_v << -2, -2, -2, 0, 0, 0;
  cfg.domain = ElasticConstants(100.0, 0.25);
  cfg.output.directory = "/tmp/igabem_run";
  cfg.output.vtk = true;
  cfg.output.tessellation = 4;
  MonitorPoint m;
  m.name = "wall";
  m.patch_id = 0;
  m.param = Vec2(0.5, 0.5);
  m.quantity = "displacement";
  cfg.output.monitors.push_back(m);

  fs::remove_all(cfg.output.directory);
  const RunOutcome outcome = run_pipeline(cfg);
  CHECK(outcome.exit_code == kOk);

  const std::string csv = slurp("/tmp/igabem_run/monitors.csv");
  CHECK(csv.find("name,quantity,value") == 0);
  CHECK(csv.find("wall,displacement,") != std::string::npos);
  // p a / 4G = 2 / 160
  const double value = std::stod(csv.substr(csv.rfind(',') + 1));
  CHECK(value == doctest::Approx(2.0 / 160.0).epsilon(0.03));
  CHECK(fs::exists("/tmp/igabem_run/boundary.vtk"));
  CHECK(fs::exists("/tmp/igabem_run/run_log.json"));

  // Invalid mesher region: exit code 2, no solver artifacts.
  RunConfig bad = cfg;
  bad.output.directory = "/tmp/igabem_bad";
  ScanConfig scan;
  scan.region.box.min = Vec3(-0.4, -0.4, -0.4);
  scan.region.box.max = Vec3(0.4, 0.4, 0.4);  // inside the cavity: no cells
  scan.region.lines = {2, 2, 2};
  bad.mesher.scans.push_back(scan);
  fs::remove_all(bad.output.directory);
  const RunOutcome bad_outcome = run_pipeline(bad);
  CHECK(bad_outcome.exit_code == kMesherError);
  CHECK(!fs::exists("/tmp/igabem_bad/monitors.csv"));
}
