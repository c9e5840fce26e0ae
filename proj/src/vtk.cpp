#include "igabem/vtk.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>

namespace igabem {

namespace {

// Fixed-format double: deterministic output independent of locale.
std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

void write_header(std::ofstream& out, const std::string& title) {
  out << "# vtk DataFile Version 3.0\n" << title << "\nASCII\n"
      << "DATASET UNSTRUCTURED_GRID\n";
}

}  // namespace

void write_vtk_cells(const std::string& path, const std::vector<Cell>& cells,
                     const GridPointSet& grid, const VtkPointData& data) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  write_header(out, "cell mesh");

  // Synthesise inactive mid-side points for quadratic cells.
  struct OutCell {
    std::vector<int> ids;
    int type;
  };
  std::vector<Vec3> points;
  std::vector<int> source;  // grid id, or -(a+1)/-(b+1) pair handled via average
  struct Synth {
    int a, b;
  };
  std::vector<Synth> synth_of;
  points.reserve(grid.size());
  for (int g = 0; g < grid.size(); ++g) {
    points.push_back(grid.x(g));
    source.push_back(g);
    synth_of.push_back({-1, -1});
  }

  const auto& edges = cell_edges();
  std::vector<OutCell> out_cells;
  for (const Cell& cell : cells) {
    OutCell oc;
    if (cell.node_count() == 8) {
      oc.type = 12;
      for (int c = 0; c < 8; ++c) oc.ids.push_back(cell.nodes[c]);
    } else {
      oc.type = 25;
      for (int c = 0; c < 8; ++c) oc.ids.push_back(cell.nodes[c]);
      for (int m = 0; m < 12; ++m) {
        if (cell.active_midside[m]) {
          oc.ids.push_back(cell.nodes[8 + m]);
        } else {
          const int a = cell.nodes[edges[m][0]];
          const int b = cell.nodes[edges[m][1]];
          points.push_back(0.5 * (grid.x(a) + grid.x(b)));
          source.push_back(-1);
          synth_of.push_back({a, b});
          oc.ids.push_back(static_cast<int>(points.size()) - 1);
        }
      }
    }
    out_cells.push_back(std::move(oc));
  }

  out << "POINTS " << points.size() << " double\n";
  for (const Vec3& p : points)
    out << num(p.x()) << " " << num(p.y()) << " " << num(p.z()) << "\n";

  std::size_t list_len = 0;
  for (const OutCell& c : out_cells) list_len += c.ids.size() + 1;
  out << "CELLS " << out_cells.size() << " " << list_len << "\n";
  for (const OutCell& c : out_cells) {
    out << c.ids.size();
    for (const int id : c.ids) out << " " << id;
    out << "\n";
  }
  out << "CELL_TYPES " << out_cells.size() << "\n";
  for (const OutCell& c : out_cells) out << c.type << "\n";

  const bool any_data = !data.displacement.empty() || !data.stress.empty() ||
                        !data.yield_flag.empty();
  if (!any_data) return;

  auto value_at = [&](std::size_t pid, auto&& field, auto zero) {
    using T = decltype(zero);
    if (source[pid] >= 0) return T(field[source[pid]]);
    const Synth s = synth_of[pid];
    return T(0.5 * (field[s.a] + field[s.b]));
  };

  out << "POINT_DATA " << points.size() << "\n";
  if (!data.displacement.empty()) {
    out << "VECTORS displacement double\n";
    for (std::size_t p = 0; p < points.size(); ++p) {
      const Vec3 v = value_at(p, data.displacement, Vec3());
      out << num(v.x()) << " " << num(v.y()) << " " << num(v.z()) << "\n";
    }
  }
  if (!data.stress.empty()) {
    out << "FIELD stress_field 1\nstress 6 " << points.size() << " double\n";
    for (std::size_t p = 0; p < points.size(); ++p) {
      const Vec6 s = value_at(p, data.stress, Vec6());
      for (int c = 0; c < 6; ++c) out << (c ? " " : "") << num(s[c]);
      out << "\n";
    }
  }
  if (!data.yield_flag.empty()) {
    out << "SCALARS yield int 1\nLOOKUP_TABLE default\n";
    for (std::size_t p = 0; p < points.size(); ++p) {
      if (source[p] >= 0) {
        out << data.yield_flag[source[p]] << "\n";
      } else {
        const Synth s = synth_of[p];
        out << std::max(data.yield_flag[s.a], data.yield_flag[s.b]) << "\n";
      }
    }
  }
}

void write_vtk_boundary(const std::string& path, const std::vector<Patch>& patches,
                        int samples_per_direction,
                        const std::vector<std::vector<Vec3>>& displacement) {
  if (samples_per_direction < 1) throw IoError("tessellation needs >= 1 sample");
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  write_header(out, "boundary tessellation");

  const int n = samples_per_direction;
  std::vector<Vec3> points;
  std::vector<std::array<int, 4>> quads;
  for (const Patch& p : patches) {
    const double eta_cap = p.kind() == PatchKind::Infinite ? 0.9 : 1.0;
    const int base = static_cast<int>(points.size());
    for (int b = 0; b <= n; ++b)
      for (int a = 0; a <= n; ++a)
        points.push_back(
            p.position(static_cast<double>(a) / n, eta_cap * b / n));
    for (int b = 0; b < n; ++b)
      for (int a = 0; a < n; ++a)
        quads.push_back({base + b * (n + 1) + a, base + b * (n + 1) + a + 1,
                         base + (b + 1) * (n + 1) + a + 1,
                         base + (b + 1) * (n + 1) + a});
  }

  out << "POINTS " << points.size() << " double\n";
  for (const Vec3& p : points)
    out << num(p.x()) << " " << num(p.y()) << " " << num(p.z()) << "\n";
  out << "CELLS " << quads.size() << " " << 5 * quads.size() << "\n";
  for (const auto& q : quads)
    out << "4 " << q[0] << " " << q[1] << " " << q[2] << " " << q[3] << "\n";
  out << "CELL_TYPES " << quads.size() << "\n";
  for (std::size_t q = 0; q < quads.size(); ++q) out << "9\n";

  if (!displacement.empty()) {
    out << "POINT_DATA " << points.size() << "\n";
    out << "VECTORS displacement double\n";
    for (const auto& patch_values : displacement)
      for (const Vec3& v : patch_values)
        out << num(v.x()) << " " << num(v.y()) << " " << num(v.z()) << "\n";
  }
}

}  // namespace igabem
