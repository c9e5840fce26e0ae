#include "igabem/config.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <numbers>
#include <sstream>

namespace igabem {

using nlohmann::json;

namespace {

class Collector {
public:
  void add(const std::string& path, const std::string& message) {
    errors_.push_back(path + ": " + message);
  }
  bool ok() const { return errors_.empty(); }
  std::vector<std::string> take() { return std::move(errors_); }

private:
  std::vector<std::string> errors_;
};

Vec3 to_vec3(const json& j) { return Vec3(j.at(0), j.at(1), j.at(2)); }

bool expect(const json& j, const char* key, const char* type, Collector& errs,
            const std::string& path) {
  if (!j.contains(key)) {
    errs.add(path, std::string("missing key '") + key + "'");
    return false;
  }
  const json& v = j.at(key);
  const std::string t = type;
  if ((t == "array" && !v.is_array()) || (t == "object" && !v.is_object()) ||
      (t == "number" && !v.is_number()) || (t == "string" && !v.is_string()) ||
      (t == "boolean" && !v.is_boolean())) {
    errs.add(path + "." + key, std::string("expected ") + type);
    return false;
  }
  return true;
}

void check_known_keys(const json& j, const std::vector<std::string>& known,
                      Collector& errs, const std::string& path) {
  for (const auto& [key, value] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      errs.add(path, "unknown key '" + key + "'");
}

std::optional<KnotVector> parse_knots(const json& j, Collector& errs,
                                      const std::string& path) {
  if (!j.is_object() || !j.contains("order") || !j.contains("knots")) {
    errs.add(path, "basis needs 'order' and 'knots'");
    return std::nullopt;
  }
  try {
    return KnotVector(j.at("knots").get<std::vector<double>>(),
                      j.at("order").get<int>());
  } catch (const Error& e) {
    errs.add(path, e.what());
    return std::nullopt;
  }
}

std::optional<Patch> parse_patch(const json& j, int expected_id, Collector& errs,
                                 const std::string& path) {
  check_known_keys(j,
                   {"id", "kind", "xi", "eta", "control", "trim", "normal_sign",
                    "discontinuous_edges", "refine"},
                   errs, path);
  if (!expect(j, "kind", "string", errs, path) ||
      !expect(j, "xi", "object", errs, path) ||
      !expect(j, "eta", "object", errs, path) ||
      !expect(j, "control", "array", errs, path))
    return std::nullopt;
  if (j.contains("id") && j.at("id").get<int>() != expected_id)
    errs.add(path + ".id", "patches must be listed in id order starting at 0");

  const auto kx = parse_knots(j.at("xi"), errs, path + ".xi");
  const auto ke = parse_knots(j.at("eta"), errs, path + ".eta");
  if (!kx || !ke) return std::nullopt;

  std::vector<Vec3> points;
  std::vector<double> weights;
  for (const json& row : j.at("control")) {
    if (!row.is_array() || row.size() != 4) {
      errs.add(path + ".control", "each control entry is [x, y, z, w]");
      return std::nullopt;
    }
    points.emplace_back(row.at(0), row.at(1), row.at(2));
    weights.push_back(row.at(3));
  }

  const std::string kind = j.at("kind");
  std::optional<Patch> patch;
  try {
    NurbsSurface surface(*kx, *ke, points, weights);
    if (kind == "finite") {
      patch = Patch::finite(std::move(surface));
    } else if (kind == "infinite") {
      patch = Patch::infinite(std::move(surface));
    } else if (kind == "degenerate") {
      patch = Patch::degenerate(std::move(surface));
    } else if (kind == "trimmed") {
      if (!expect(j, "trim", "object", errs, path)) return std::nullopt;
      const json& tj = j.at("trim");
      const auto tkx = parse_knots(tj.at("xi"), errs, path + ".trim.xi");
      const auto tke = parse_knots(tj.at("eta"), errs, path + ".trim.eta");
      if (!tkx || !tke) return std::nullopt;
      std::vector<Vec2> tp;
      std::vector<double> tw;
      for (const json& row : tj.at("control")) {
        if (!row.is_array() || row.size() != 3) {
          errs.add(path + ".trim.control", "each trim entry is [xi, eta, w]");
          return std::nullopt;
        }
        tp.emplace_back(row.at(0), row.at(1));
        tw.push_back(row.at(2));
      }
      patch = Patch::trimmed(std::move(surface), TrimMap(*tkx, *tke, tp, tw));
    } else {
      errs.add(path + ".kind", "unknown patch kind '" + kind + "'");
      return std::nullopt;
    }
    patch->set_id(expected_id);
    if (j.contains("normal_sign")) patch->set_normal_sign(j.at("normal_sign"));
    if (j.contains("discontinuous_edges"))
      for (const json& e : j.at("discontinuous_edges")) {
        const std::string name = e;
        if (name == "xi_min") patch->mark_discontinuous(PatchEdge::XiMin);
        else if (name == "xi_max") patch->mark_discontinuous(PatchEdge::XiMax);
        else if (name == "eta_min") patch->mark_discontinuous(PatchEdge::EtaMin);
        else if (name == "eta_max") patch->mark_discontinuous(PatchEdge::EtaMax);
        else if (name == "all") patch->mark_discontinuous_all();
        else errs.add(path + ".discontinuous_edges", "unknown edge '" + name + "'");
      }
    if (j.contains("refine")) {
      const json& r = j.at("refine");
      check_known_keys(r, {"elevate_xi", "elevate_eta", "insert_xi", "insert_eta"},
                       errs, path + ".refine");
      if (r.contains("elevate_xi")) patch->refine_elevate_xi(r.at("elevate_xi"));
      if (r.contains("elevate_eta")) patch->refine_elevate_eta(r.at("elevate_eta"));
      if (r.contains("insert_xi"))
        for (const double v : r.at("insert_xi").get<std::vector<double>>())
          patch->refine_insert_xi(v);
      if (r.contains("insert_eta"))
        for (const double v : r.at("insert_eta").get<std::vector<double>>())
          patch->refine_insert_eta(v);
    }
  } catch (const Error& e) {
    errs.add(path, e.what());
    return std::nullopt;
  }
  return patch;
}

std::optional<MaterialModel> parse_material(const json& j, Collector& errs,
                                            const std::string& path) {
  check_known_keys(j,
                   {"kind", "E", "nu", "friction_angle_deg", "cohesion",
                    "pore_pressure"},
                   errs, path);
  MaterialModel m;
  if (!expect(j, "E", "number", errs, path) ||
      !expect(j, "nu", "number", errs, path))
    return std::nullopt;
  m.E = j.at("E");
  m.nu = j.at("nu");
  const std::string kind = j.value("kind", "elastic");
  if (kind == "elastic") {
    m.kind = MaterialKind::Elastic;
  } else if (kind == "mohr_coulomb") {
    m.kind = MaterialKind::MohrCoulomb;
    m.friction_angle =
        j.value("friction_angle_deg", 0.0) * std::numbers::pi / 180.0;
    m.cohesion = j.value("cohesion", 0.0);
    m.pore_pressure = j.value("pore_pressure", 0.0);
  } else {
    errs.add(path + ".kind", "unknown material kind '" + kind + "'");
    return std::nullopt;
  }
  try {
    m.validate();
  } catch (const Error& e) {
    errs.add(path, e.what());
    return std::nullopt;
  }
  return m;
}

Box parse_box(const json& j, Collector& errs, const std::string& path) {
  Box b;
  if (!j.contains("min") || !j.contains("max")) {
    errs.add(path, "box needs 'min' and 'max'");
    return b;
  }
  b.min = to_vec3(j.at("min"));
  b.max = to_vec3(j.at("max"));
  if (!(b.min.array() < b.max.array()).all())
    errs.add(path, "box min must be below max componentwise");
  return b;
}

}  // namespace

ParseResult parse_config(const std::string& text) {
  ParseResult result;
  Collector errs;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    result.errors.push_back(std::string("parse error: ") + e.what());
    return result;
  }

  RunConfig cfg;
  check_known_keys(
      j, {"units", "geometry", "loading", "mesher", "materials", "solver",
          "output"},
      errs, "$");

  if (j.contains("units")) {
    cfg.stress_unit = j.at("units").value("stress", "MPa");
    cfg.length_unit = j.at("units").value("length", "m");
  }

  if (expect(j, "geometry", "object", errs, "$") &&
      expect(j.at("geometry"), "patches", "array", errs, "$.geometry")) {
    const json& patches = j.at("geometry").at("patches");
    for (std::size_t i = 0; i < patches.size(); ++i) {
      auto p = parse_patch(patches.at(i), static_cast<int>(i), errs,
                           "$.geometry.patches[" + std::to_string(i) + "]");
      if (p) cfg.patches.push_back(std::move(*p));
    }
    if (cfg.patches.empty()) errs.add("$.geometry.patches", "no valid patches");
    cfg.geometry_key = j.at("geometry").dump();
  }

  if (expect(j, "loading", "object", errs, "$")) {
    const json& load = j.at("loading");
    check_known_keys(load, {"virgin_stress", "pressure"}, errs, "$.loading");
    if (expect(load, "virgin_stress", "array", errs, "$.loading")) {
      const auto v = load.at("virgin_stress").get<std::vector<double>>();
      if (v.size() != 6)
        errs.add("$.loading.virgin_stress", "expected 6 Voigt components");
      else
        for (int c = 0; c < 6; ++c) cfg.loading.sigma_v[c] = v[c];
    }
    if (load.contains("pressure"))
      for (const json& p : load.at("pressure")) {
        if (p.contains("patch"))
          cfg.loading.patch_pressure[p.at("patch").get<int>()] = p.at("value");
        else
          for (const Patch& patch : cfg.patches)
            cfg.loading.patch_pressure[patch.id()] = p.at("value");
      }
    cfg.loading_key = load.dump();
  }

  if (j.contains("mesher")) {
    const json& mj = j.at("mesher");
    check_known_keys(mj, {"scan", "skew_supercell", "grow"}, errs, "$.mesher");
    if (mj.contains("scan"))
      for (std::size_t i = 0; i < mj.at("scan").size(); ++i) {
        const json& s = mj.at("scan").at(i);
        const std::string path = "$.mesher.scan[" + std::to_string(i) + "]";
        check_known_keys(s, {"box", "lines", "patches"}, errs, path);
        ScanConfig scan;
        scan.region.box =
            parse_box(s.value("box", json::object()), errs, path + ".box");
        if (s.contains("lines")) {
          const auto lines = s.at("lines").get<std::vector<int>>();
          if (lines.size() != 3)
            errs.add(path + ".lines", "expected 3 per-axis counts");
          else {
            scan.region.lines = {lines[0], lines[1], lines[2]};
            for (const int n : lines)
              if (n < 2) errs.add(path + ".lines", "need at least 2 lines per axis");
          }
        }
        if (s.contains("patches")) {
          scan.patch_ids = s.at("patches").get<std::vector<int>>();
          for (const int id : scan.patch_ids)
            if (id < 0 || id >= static_cast<int>(cfg.patches.size()))
              errs.add(path + ".patches", "patch id out of range");
        }
        cfg.mesher.scans.push_back(scan);
      }
    if (mj.contains("skew_supercell")) {
      const json& s = mj.at("skew_supercell");
      check_known_keys(s, {"cell_index", "direction", "axis"}, errs,
                       "$.mesher.skew_supercell");
      SkewConfig skew;
      skew.cell_index = s.value("cell_index", -1);
      if (s.contains("direction")) skew.direction = to_vec3(s.at("direction"));
      skew.axis = s.value("axis", 2);
      if (skew.cell_index < 0)
        errs.add("$.mesher.skew_supercell.cell_index", "required");
      if (skew.axis < 0 || skew.axis > 2)
        errs.add("$.mesher.skew_supercell.axis", "axis must be 0, 1 or 2");
      cfg.mesher.skew = skew;
    }
    if (mj.contains("grow"))
      for (std::size_t i = 0; i < mj.at("grow").size(); ++i) {
        const json& job = mj.at("grow").at(i);
        const std::string path = "$.mesher.grow[" + std::to_string(i) + "]";
        check_known_keys(job,
                         {"patches", "super_cell", "sub_u", "sub_v", "layers",
                          "grading"},
                         errs, path);
        GrowConfig grow;
        if (expect(job, "patches", "array", errs, path))
          grow.patch_ids = job.at("patches").get<std::vector<int>>();
        for (const int id : grow.patch_ids)
          if (id < 0 || id >= static_cast<int>(cfg.patches.size()))
            errs.add(path + ".patches", "patch id out of range");
        if (job.contains("super_cell")) {
          const json& scj = job.at("super_cell");
          if (scj.size() != 8) {
            errs.add(path + ".super_cell", "expected 8 corner points");
          } else {
            std::array<Vec3, 8> corners;
            for (int c = 0; c < 8; ++c) corners[c] = to_vec3(scj.at(c));
            grow.super_cell = corners;
          }
        }
        grow.spec.sub_u = job.value("sub_u", 2);
        grow.spec.sub_v = job.value("sub_v", 2);
        grow.spec.layers = job.value("layers", 2);
        grow.spec.grading = job.value("grading", 1.5);
        if (grow.spec.sub_u < 1 || grow.spec.sub_v < 1 || grow.spec.layers < 1)
          errs.add(path, "subdivision counts must be positive");
        if (!(grow.spec.grading >= 1.0))
          errs.add(path + ".grading", "grading must be >= 1");
        cfg.mesher.grows.push_back(grow);
      }
  }

  if (expect(j, "materials", "object", errs, "$")) {
    const json& mj = j.at("materials");
    check_known_keys(mj, {"domain", "regions"}, errs, "$.materials");
    if (expect(mj, "domain", "object", errs, "$.materials")) {
      const json& d = mj.at("domain");
      const double e = d.value("E", 0.0);
      const double nu = d.value("nu", 0.0);
      try {
        cfg.domain = ElasticConstants(e, nu);
      } catch (const Error& err) {
        errs.add("$.materials.domain", err.what());
      }
    }
    if (mj.contains("regions"))
      for (std::size_t i = 0; i < mj.at("regions").size(); ++i) {
        const json& r = mj.at("regions").at(i);
        const std::string path = "$.materials.regions[" + std::to_string(i) + "]";
        check_known_keys(r, {"box", "model"}, errs, path);
        MaterialRegion region;
        if (r.contains("box")) region.box = parse_box(r.at("box"), errs, path);
        if (expect(r, "model", "object", errs, path)) {
          auto m = parse_material(r.at("model"), errs, path + ".model");
          if (m) region.model = *m;
        }
        cfg.regions.push_back(region);
      }
  }

  if (j.contains("solver")) {
    const json& s = j.at("solver");
    check_known_keys(s, {"tol_rel", "tol_abs", "max_iterations", "newton"}, errs,
                     "$.solver");
    cfg.solver.tol_rel = s.value("tol_rel", 1e-6);
    cfg.solver.tol_abs = s.value("tol_abs", 0.0);
    cfg.solver.max_iterations = s.value("max_iterations", 200);
    const std::string newton = s.value("newton", "modified");
    if (newton == "full") cfg.solver.full_newton = true;
    else if (newton != "modified")
      errs.add("$.solver.newton", "expected 'modified' or 'full'");
    if (cfg.solver.max_iterations < 1)
      errs.add("$.solver.max_iterations", "must be positive");
  }

  if (j.contains("output")) {
    const json& o = j.at("output");
    check_known_keys(o, {"directory", "vtk", "monitors", "tessellation"}, errs,
                     "$.output");
    cfg.output.directory = o.value("directory", "out");
    cfg.output.vtk = o.value("vtk", true);
    cfg.output.tessellation = o.value("tessellation", 8);
    if (o.contains("monitors"))
      for (std::size_t i = 0; i < o.at("monitors").size(); ++i) {
        const json& m = o.at("monitors").at(i);
        const std::string path = "$.output.monitors[" + std::to_string(i) + "]";
        check_known_keys(m, {"name", "patch", "xi", "eta", "quantity"}, errs, path);
        MonitorPoint mp;
        mp.name = m.value("name", "monitor" + std::to_string(i));
        mp.patch_id = m.value("patch", -1);
        mp.param = Vec2(m.value("xi", 0.5), m.value("eta", 0.5));
        mp.quantity = m.value("quantity", "max_compressive_stress");
        if (mp.patch_id < 0 || mp.patch_id >= static_cast<int>(cfg.patches.size()))
          errs.add(path + ".patch", "patch id out of range");
        if (mp.quantity != "max_compressive_stress" && mp.quantity != "displacement")
          errs.add(path + ".quantity", "unknown quantity '" + mp.quantity + "'");
        cfg.output.monitors.push_back(mp);
      }
  }

  if (!errs.ok()) {
    result.errors = errs.take();
    return result;
  }
  result.config = std::move(cfg);
  return result;
}

ParseResult parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

namespace {

json knots_json(const KnotVector& kv) {
  return json{{"order", kv.order()}, {"knots", kv.knots()}};
}

}  // namespace

std::string write_config(const RunConfig& config) {
  json j;
  j["units"] = {{"stress", config.stress_unit}, {"length", config.length_unit}};

  json patches = json::array();
  for (const Patch& p : config.patches) {
    json pj;
    pj["id"] = p.id();
    switch (p.kind()) {
      case PatchKind::Finite: pj["kind"] = "finite"; break;
      case PatchKind::Infinite: pj["kind"] = "infinite"; break;
      case PatchKind::Degenerate: pj["kind"] = "degenerate"; break;
      case PatchKind::Trimmed: pj["kind"] = "trimmed"; break;
    }
    const NurbsSurface& g = p.geometry();
    pj["xi"] = knots_json(g.knots_xi());
    pj["eta"] = knots_json(g.knots_eta());
    json control = json::array();
    for (int k = 0; k < g.count(); ++k) {
      const Vec3& x = g.control_points()[k];
      control.push_back({x.x(), x.y(), x.z(), g.weights()[k]});
    }
    pj["control"] = control;
    if (p.kind() == PatchKind::Trimmed) {
      const TrimMap& t = p.trim();
      json tj;
      tj["xi"] = knots_json(t.knots_xi());
      tj["eta"] = knots_json(t.knots_eta());
      json tc = json::array();
      for (std::size_t k = 0; k < t.control_points().size(); ++k) {
        const Vec2& q = t.control_points()[k];
        tc.push_back({q.x(), q.y(), t.weights()[k]});
      }
      tj["control"] = tc;
      pj["trim"] = tj;
    }
    if (p.normal_sign() != 1.0) pj["normal_sign"] = p.normal_sign();
    if (!p.discontinuous_edges().empty()) {
      json edges = json::array();
      for (const PatchEdge e : p.discontinuous_edges())
        edges.push_back(e == PatchEdge::XiMin    ? "xi_min"
                        : e == PatchEdge::XiMax  ? "xi_max"
                        : e == PatchEdge::EtaMin ? "eta_min"
                                                 : "eta_max");
      pj["discontinuous_edges"] = edges;
    }
    // The unknown basis is emitted as refinement directives relative to the
    // geometry basis when they differ.
    const NurbsSurface& u = p.unknown_surface();
    json refine;
    if (u.knots_xi().order() > g.knots_xi().order())
      refine["elevate_xi"] = u.knots_xi().order();
    if (p.kind() != PatchKind::Infinite &&
        u.knots_eta().order() > g.knots_eta().order())
      refine["elevate_eta"] = u.knots_eta().order();
    auto extra_knots = [](const KnotVector& fine, const KnotVector& coarse) {
      std::vector<double> extra;
      for (const double v : fine.interior_breaks()) {
        bool present = false;
        for (const double w : coarse.interior_breaks())
          if (std::abs(v - w) < 1e-14) present = true;
        if (!present) extra.push_back(v);
      }
      return extra;
    };
    const auto exi = extra_knots(u.knots_xi(), g.knots_xi());
    if (!exi.empty()) refine["insert_xi"] = exi;
    if (p.kind() != PatchKind::Infinite) {
      const auto eeta = extra_knots(u.knots_eta(), g.knots_eta());
      if (!eeta.empty()) refine["insert_eta"] = eeta;
    }
    if (!refine.empty()) pj["refine"] = refine;
    patches.push_back(pj);
  }
  j["geometry"]["patches"] = patches;

  json load;
  load["virgin_stress"] = std::vector<double>(
      config.loading.sigma_v.data(), config.loading.sigma_v.data() + 6);
  if (!config.loading.patch_pressure.empty()) {
    json pressures = json::array();
    for (const auto& [patch, value] : config.loading.patch_pressure)
      pressures.push_back({{"patch", patch}, {"value", value}});
    load["pressure"] = pressures;
  }
  j["loading"] = load;

  json mesher;
  for (const ScanConfig& s : config.mesher.scans) {
    json sj;
    sj["box"] = {{"min",
                  {s.region.box.min.x(), s.region.box.min.y(),
                   s.region.box.min.z()}},
                 {"max",
                  {s.region.box.max.x(), s.region.box.max.y(),
                   s.region.box.max.z()}}};
    sj["lines"] = {s.region.lines[0], s.region.lines[1], s.region.lines[2]};
    if (!s.patch_ids.empty()) sj["patches"] = s.patch_ids;
    mesher["scan"].push_back(sj);
  }
  if (config.mesher.skew) {
    mesher["skew_supercell"] = {
        {"cell_index", config.mesher.skew->cell_index},
        {"direction",
         {config.mesher.skew->direction.x(), config.mesher.skew->direction.y(),
          config.mesher.skew->direction.z()}},
        {"axis", config.mesher.skew->axis}};
  }
  for (const GrowConfig& g : config.mesher.grows) {
    json gj;
    gj["patches"] = g.patch_ids;
    if (g.super_cell) {
      json corners = json::array();
      for (const Vec3& c : *g.super_cell) corners.push_back({c.x(), c.y(), c.z()});
      gj["super_cell"] = corners;
    }
    gj["sub_u"] = g.spec.sub_u;
    gj["sub_v"] = g.spec.sub_v;
    gj["layers"] = g.spec.layers;
    gj["grading"] = g.spec.grading;
    mesher["grow"].push_back(gj);
  }
  if (!mesher.empty()) j["mesher"] = mesher;

  json materials;
  materials["domain"] = {{"E", config.domain.E}, {"nu", config.domain.nu}};
  for (const MaterialRegion& r : config.regions) {
    json rj;
    if (r.box)
      rj["box"] = {{"min", {r.box->min.x(), r.box->min.y(), r.box->min.z()}},
                   {"max", {r.box->max.x(), r.box->max.y(), r.box->max.z()}}};
    json model;
    model["E"] = r.model.E;
    model["nu"] = r.model.nu;
    if (r.model.kind == MaterialKind::MohrCoulomb) {
      model["kind"] = "mohr_coulomb";
      model["friction_angle_deg"] = r.model.friction_angle * 180.0 / std::numbers::pi;
      model["cohesion"] = r.model.cohesion;
      model["pore_pressure"] = r.model.pore_pressure;
    } else {
      model["kind"] = "elastic";
    }
    rj["model"] = model;
    materials["regions"].push_back(rj);
  }
  j["materials"] = materials;

  j["solver"] = {{"tol_rel", config.solver.tol_rel},
                 {"tol_abs", config.solver.tol_abs},
                 {"max_iterations", config.solver.max_iterations},
                 {"newton", config.solver.full_newton ? "full" : "modified"}};

  json output;
  output["directory"] = config.output.directory;
  output["vtk"] = config.output.vtk;
  output["tessellation"] = config.output.tessellation;
  for (const MonitorPoint& m : config.output.monitors)
    output["monitors"].push_back({{"name", m.name},
                                  {"patch", m.patch_id},
                                  {"xi", m.param.x()},
                                  {"eta", m.param.y()},
                                  {"quantity", m.quantity}});
  j["output"] = output;
  return j.dump(2) + "\n";
}

std::vector<MaterialModel> assign_materials(const RunConfig& config,
                                            const GridPointSet& grid) {
  MaterialModel domain_model;
  domain_model.kind = MaterialKind::Elastic;
  domain_model.E = config.domain.E;
  domain_model.nu = config.domain.nu;
  std::vector<MaterialModel> out(grid.size(), domain_model);
  for (const MaterialRegion& region : config.regions)
    for (int g = 0; g < grid.size(); ++g)
      if (!region.box || region.box->contains(grid.x(g))) out[g] = region.model;
  return out;
}

}  // namespace igabem
