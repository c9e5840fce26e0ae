#include "igabem/mesher.hpp"

#include <algorithm>
#include <functional>
#include <cmath>
#include <map>
#include <string>
#include <unordered_map>

namespace igabem {

namespace {

struct BoundaryHit {
  Vec3 x;
  int patch_id = -1;
  Vec2 param = Vec2::Zero();
};

// Nearest boundary point over all patches.
struct Projection {
  int patch_id = -1;           // global patch id (for boundary ties)
  const Patch* patch = nullptr;
  Vec2 param = Vec2::Zero();
  Vec3 x = Vec3::Zero();
  double distance = 1e300;
};

double box_distance(const Box& b, const Vec3& x) {
  const Vec3 d = (b.min - x).cwiseMax(x - b.max).cwiseMax(0.0);
  return d.norm();
}

Projection project_to_boundary(const Vec3& x, const std::vector<Patch>& patches) {
  Projection best;
  for (const Patch& p : patches) {
    if (box_distance(p.bounding_box(), x) >= best.distance) continue;
    const ClosestPoint cp = closest_point(p, x);
    if (cp.distance < best.distance) {
      best.distance = cp.distance;
      best.patch_id = p.id();
      best.patch = &p;
      best.param = Vec2(cp.xi, cp.eta);
      best.x = p.position(cp.xi, cp.eta);
    }
  }
  return best;
}

}  // namespace


namespace {
// Cell-map quality: strictly positive Jacobian at interior Gauss points and
// non-negative (collapsed wedges allowed) on the 3x3x3 local lattice.
void validate_cell(const Cell& cell, const GridPointSet& grid) {
  double scale = 0.0;
  std::vector<double> lattice_dets;
  for (int a = -1; a <= 1; ++a)
    for (int b = -1; b <= 1; ++b)
      for (int c = -1; c <= 1; ++c) {
        const ShapeEval se = serendipity_shape(Vec3(a, b, c), cell.active_midside);
        Mat3 j = Mat3::Zero();
        for (const int slot : cell.local_nodes()) {
          const Vec3& x = grid.x(cell.nodes[slot]);
          for (int l = 0; l < 3; ++l)
            for (int g = 0; g < 3; ++g) j(l, g) += se.d[slot][l] * x[g];
        }
        const double det = j.determinant();
        lattice_dets.push_back(det);
        scale = std::max(scale, std::abs(det));
      }
  if (!(scale > 0.0)) throw MeshError("cell mapping fully degenerate");
  for (const double det : lattice_dets)
    if (det < -1e-9 * scale)
      throw MeshError("cell mapping has non-positive Jacobian");
  for (const VolQP& qp : cell_product_rule(3, 3, 3))
    cell_jacobian(cell, grid, qp.local);
}

}  // namespace

bool point_in_void(const Vec3& x, const std::vector<Patch>& patches) {
  const Projection prj = project_to_boundary(x, patches);
  if (!prj.patch) return false;
  const SurfaceFrame f =
      prj.patch->frame(std::clamp(prj.param.x(), 1e-6, 1.0 - 1e-6),
                       std::clamp(prj.param.y(), 1e-6, 1.0 - 1e-6));
  return f.n.dot(x - prj.x) > 0.0;
}

namespace {

// Boundary crossing on the segment a (void) -> b (material): the nearest ray
// hit inside the segment, with a coarse bisection fallback for grazing cuts.
BoundaryHit bisect_to_boundary(const Vec3& a, const Vec3& b,
                               const std::vector<Patch>& patches) {
  const double len = (b - a).norm();
  if (!(len > 0.0)) return {};
  const Vec3 dir = (b - a) / len;
  BoundaryHit best;
  double best_t = 1e300;
  for (const Patch& p : patches) {
    if (box_distance(p.bounding_box(), a) > len) continue;
    for (const RayHit& h : ray_surface_intersection(p, a, dir)) {
      if (h.t < -1e-12 || h.t > len + 1e-12 || h.t >= best_t) continue;
      best_t = h.t;
      best = {p.position(h.xi, h.eta), p.id(), Vec2(h.xi, h.eta)};
    }
  }
  if (best.patch_id >= 0) return best;
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 30; ++it) {
    const double mid = 0.5 * (lo + hi);
    (point_in_void(a + mid * (b - a), patches) ? lo : hi) = mid;
  }
  const Vec3 x = a + 0.5 * (lo + hi) * (b - a);
  const Projection prj = project_to_boundary(x, patches);
  return {prj.x, prj.patch_id, prj.param};
}

}  // namespace

CellClass classify_cell_corners(const std::array<bool, 8>& corner_in_void,
                                bool any_edge_hit) {
  int voids = 0;
  for (const bool v : corner_in_void) voids += v ? 1 : 0;
  if (any_edge_hit || (voids > 0 && voids < 8)) return CellClass::Intersected;
  return voids == 8 ? CellClass::Void : CellClass::InsideDomain;
}

namespace {

struct Lattice {
  std::array<int, 3> n;
  std::array<std::vector<double>, 3> coord;

  int node_id(int i, int j, int k) const { return (k * n[1] + j) * n[0] + i; }
  Vec3 node(int i, int j, int k) const {
    return Vec3(coord[0][i], coord[1][j], coord[2][k]);
  }
};

// Intersections on lattice edges keyed by (node id, axis).
using EdgeHits = std::map<std::pair<int, int>, std::vector<BoundaryHit>>;

EdgeHits intersect_grid_lines(const Lattice& lat, const std::vector<Patch>& patches) {
  EdgeHits hits;
  for (int axis = 0; axis < 3; ++axis) {
    const int a1 = (axis + 1) % 3;
    const int a2 = (axis + 2) % 3;
    for (int p1 = 0; p1 < lat.n[a1]; ++p1)
      for (int p2 = 0; p2 < lat.n[a2]; ++p2) {
        int idx[3];
        idx[a1] = p1;
        idx[a2] = p2;
        idx[axis] = 0;
        const Vec3 origin = lat.node(idx[0], idx[1], idx[2]);
        Vec3 dir = Vec3::Zero();
        dir[axis] = 1.0;
        const double len = lat.coord[axis].back() - lat.coord[axis].front();
        for (const Patch& patch : patches)
          for (const RayHit& h : ray_surface_intersection(patch, origin, dir)) {
            if (h.t < -1e-12 || h.t > len + 1e-12) continue;
            const double pos = lat.coord[axis].front() + h.t;
            // Locate the edge segment containing the hit.
            const auto& cs = lat.coord[axis];
            int seg = -1;
            for (int s = 0; s + 1 < static_cast<int>(cs.size()); ++s)
              if (pos >= cs[s] - 1e-12 && pos <= cs[s + 1] + 1e-12) seg = s;
            if (seg < 0) continue;
            idx[axis] = seg;
            const int nid = lat.node_id(idx[0], idx[1], idx[2]);
            hits[{nid, axis}].push_back(
                {patch.position(h.xi, h.eta), patch.id(), Vec2(h.xi, h.eta)});
          }
      }
  }
  return hits;
}

}  // namespace

MeshResult scan_mesh(const ScanRegion& region, const std::vector<Patch>& patches) {
  for (const int n : region.lines)
    if (n < 2) throw MeshError("scan region needs at least two lines per axis");

  Lattice lat;
  lat.n = region.lines;
  for (int d = 0; d < 3; ++d) {
    lat.coord[d].resize(lat.n[d]);
    for (int i = 0; i < lat.n[d]; ++i)
      lat.coord[d][i] =
          region.box.min[d] +
          (region.box.max[d] - region.box.min[d]) * i / (lat.n[d] - 1);
  }

  const EdgeHits hits = patches.empty() ? EdgeHits{} : intersect_grid_lines(lat, patches);

  // Does any patch cross the box? Then at least one line must have hit it.
  if (!patches.empty() && hits.empty()) {
    bool crossing = false;
    for (const Patch& p : patches) {
      const Box b = p.bounding_box();
      if ((b.min.array() <= region.box.max.array()).all() &&
          (b.max.array() >= region.box.min.array()).all())
        crossing = true;
    }
    if (crossing)
      throw MeshError(
          "scan grid too coarse: no grid line registers the boundary that "
          "crosses the region");
  }

  const int total_nodes = lat.n[0] * lat.n[1] * lat.n[2];
  std::vector<char> in_void(total_nodes, 0);
  if (!patches.empty())
    parallel_for(static_cast<std::size_t>(total_nodes), [&](std::size_t id) {
      const int i = static_cast<int>(id) % lat.n[0];
      const int j = (static_cast<int>(id) / lat.n[0]) % lat.n[1];
      const int k = static_cast<int>(id) / (lat.n[0] * lat.n[1]);
      in_void[id] = point_in_void(lat.node(i, j, k), patches) ? 1 : 0;
    });

  // Move void lattice nodes onto the boundary: preferably onto an intersection of
  // one of their own grid edges, otherwise onto their projection.
  std::vector<Vec3> pos(total_nodes);
  std::vector<std::optional<BoundaryTie>> tie(total_nodes);
  std::vector<char> moved(total_nodes, 0);
  double spacing = 1e300;
  for (int d = 0; d < 3; ++d)
    for (int i = 0; i + 1 < lat.n[d]; ++i)
      spacing = std::min(spacing, lat.coord[d][i + 1] - lat.coord[d][i]);
  for (int k = 0; k < lat.n[2]; ++k)
    for (int j = 0; j < lat.n[1]; ++j)
      for (int i = 0; i < lat.n[0]; ++i)
        pos[lat.node_id(i, j, k)] = lat.node(i, j, k);

  for (int k = 0; k < lat.n[2]; ++k)
    for (int j = 0; j < lat.n[1]; ++j)
      for (int i = 0; i < lat.n[0]; ++i) {
        const int id = lat.node_id(i, j, k);
        if (!in_void[id]) {
          if (patches.empty()) continue;
          // Snap near-boundary material nodes onto the surface (small-cut
          // elimination); exact hits just gain their patch tie.
          const Projection prj = project_to_boundary(pos[id], patches);
          if (prj.patch_id >= 0 && prj.distance <= 0.2 * spacing) {
            if (prj.distance > 1e-12 * spacing) pos[id] = prj.x;
            tie[id] = BoundaryTie{prj.patch_id, prj.param};
            moved[id] = 1;
          }
          continue;
        }
        double best = 1e300;
        std::optional<BoundaryHit> choice;
        const int idx0[3] = {i, j, k};
        for (int axis = 0; axis < 3; ++axis)
          for (const int side : {-1, 0}) {
            int e[3] = {idx0[0], idx0[1], idx0[2]};
            e[axis] += side;
            if (e[axis] < 0 || e[axis] + 1 >= lat.n[axis]) continue;
            const auto it = hits.find({lat.node_id(e[0], e[1], e[2]), axis});
            if (it == hits.end()) continue;
            for (const BoundaryHit& h : it->second) {
              const double d = (h.x - pos[id]).norm();
              if (d < best) {
                best = d;
                choice = h;
              }
            }
          }
        if (!choice) {
          // No grid-line hit recorded: bisect toward a material lattice
          // neighbour so the node still moves along one of its own edges.
          double best_d = 1e300;
          for (int axis = 0; axis < 3; ++axis)
            for (const int side : {-1, 1}) {
              int e[3] = {idx0[0], idx0[1], idx0[2]};
              e[axis] += side;
              if (e[axis] < 0 || e[axis] >= lat.n[axis]) continue;
              if (in_void[lat.node_id(e[0], e[1], e[2])]) continue;
              const BoundaryHit h = bisect_to_boundary(
                  lat.node(idx0[0], idx0[1], idx0[2]),
                  lat.node(e[0], e[1], e[2]), patches);
              const double d = (h.x - pos[id]).norm();
              if (h.patch_id >= 0 && d < best_d) {
                best_d = d;
                choice = h;
              }
            }
        }
        if (choice) {
          pos[id] = choice->x;
          tie[id] = BoundaryTie{choice->patch_id, choice->param};
          moved[id] = 1;
        }
      }

  MeshResult mesh;
  std::unordered_map<std::uint64_t, std::vector<int>> dedupe;
  const double merge_tol = 1e-9 * std::max(region.box.diagonal(), 1e-12);
  auto add_point = [&](const GridPoint& gp) {
    for (const int g : dedupe[point_key(gp.x, merge_tol)])
      if ((mesh.grid.points[g].x - gp.x).norm() <= merge_tol) return g;
    mesh.grid.points.push_back(gp);
    const int gid = mesh.grid.size() - 1;
    dedupe[point_key(gp.x, merge_tol)].push_back(gid);
    return gid;
  };

  struct Corner {
    Vec3 orig;                       // untrimmed lattice/trilinear position
    Vec3 x;                          // possibly moved onto the boundary
    std::optional<BoundaryTie> tie;  // set when x sits on the boundary
    bool void_unmoved = false;       // in the void and not yet rescued
  };

  // Trim-and-commit with bounded octree fallback: unmovable void corners are
  // moved along cell edges; an inverted trim splits the original box and
  // retries per child.
  std::function<void(std::array<Corner, 8>, int)> emit;
  std::function<void(const std::array<Corner, 8>&, int)> subdivide =
      [&](const std::array<Corner, 8>& corner, int level) {
        if (level >= 2) {
          std::string msg =
              "cell trimming failed after two subdivision levels; refine the "
              "scan grid; corners:";
          for (const Corner& c : corner)
            msg += " (" + std::to_string(c.orig.x()) + "," +
                   std::to_string(c.orig.y()) + "," + std::to_string(c.orig.z()) +
                   (c.void_unmoved ? ")v" : ")");
          throw MeshError(msg);
        }
        const auto& lc = cell_local_coords();
        auto blend = [&](const Vec3& local) {
          Vec3 x = Vec3::Zero();
          for (int q = 0; q < 8; ++q) {
            double n = 1.0;
            for (int d = 0; d < 3; ++d) n *= 0.5 * (1.0 + local[d] * lc[q][d]);
            x += n * corner[q].orig;
          }
          return x;
        };
        const int off[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                               {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
        for (int a = 0; a < 2; ++a)
          for (int b = 0; b < 2; ++b)
            for (int c = 0; c < 2; ++c) {
              std::array<Corner, 8> child;
              int child_void = 0;
              for (int q = 0; q < 8; ++q) {
                const Vec3 local(-1.0 + a + off[q][0], -1.0 + b + off[q][1],
                                 -1.0 + c + off[q][2]);
                const Vec3 x = blend(local);
                const bool v = patches.empty() ? false : point_in_void(x, patches);
                child[q] = {x, x, std::nullopt, v};
                child_void += v ? 1 : 0;
              }
              if (child_void == 8) continue;
              if (child_void >= 5 && !patches.empty()) {
                Vec3 centroid = Vec3::Zero();
                for (const Corner& q : child) centroid += q.orig;
                centroid /= 8.0;
                if (point_in_void(centroid, patches)) continue;
              }
              emit(child, level + 1);
            }
      };
  emit = [&](std::array<Corner, 8> corner, int level) {
        double diag = 0.0;
        for (int c = 0; c < 8; ++c)
          diag = std::max(diag, (corner[c].orig - corner[0].orig).norm());

        std::array<Corner, 8> trimmed = corner;
        const auto& cedges = cell_edges();
        (void)cedges;
        if (level > 0 && !patches.empty())
          for (Corner& c : trimmed) {
            if (c.void_unmoved || c.tie) continue;
            const Projection prj = project_to_boundary(c.x, patches);
            if (prj.patch_id >= 0 && prj.distance <= 0.07 * diag) {
              if (prj.distance > 1e-12 * diag) c.x = prj.x;
              c.tie = BoundaryTie{prj.patch_id, prj.param};
            }
          }

        // Partner ladder: cell edges, then face diagonals, then the space
        // diagonal. Corners rescued in one sweep become partners in the next;
        // a crossing landing on another corner collapses the pair exactly
        // (wedge cell).
        static const auto partner_table = [] {
          std::array<std::array<std::vector<int>, 3>, 8> table{};
          const auto& lc = cell_local_coords();
          for (int q = 0; q < 8; ++q)
            for (int o = 0; o < 8; ++o) {
              if (o == q) continue;
              const int changed =
                  static_cast<int>((lc[q] - lc[o]).cwiseAbs().sum() / 2.0 + 0.5);
              table[q][changed - 1].push_back(o);
            }
          return table;
        }();
        int remaining = 0;
        for (const Corner& c : trimmed) remaining += c.void_unmoved ? 1 : 0;
        bool progress = true;
        while (remaining > 0 && progress) {
          progress = false;
          for (int q = 0; q < 8; ++q) {
            Corner& c = trimmed[q];
            if (!c.void_unmoved) continue;
            std::optional<BoundaryHit> choice;
            int collapse_onto = -1;
            for (int rank = 0; rank < 3 && !choice; ++rank) {
              double best_d = 1e300;
              std::optional<BoundaryHit> fallback;
              int fallback_corner = -1;
              double fallback_d = 1e300;
              for (const int other : partner_table[q][rank]) {
                if (trimmed[other].void_unmoved) continue;
                const BoundaryHit h =
                    bisect_to_boundary(c.orig, trimmed[other].x, patches);
                if (h.patch_id < 0) continue;
                const double d = (h.x - c.orig).norm();
                if (d > 1.2 * diag) continue;
                int hits_corner = -1;
                for (int o2 = 0; o2 < 8; ++o2)
                  if (o2 != q && !trimmed[o2].void_unmoved &&
                      (h.x - trimmed[o2].x).norm() < 1e-3 * diag)
                    hits_corner = o2;
                if (hits_corner < 0) {
                  if (d < best_d) {
                    best_d = d;
                    choice = h;
                    collapse_onto = -1;
                  }
                } else if (d < fallback_d) {
                  fallback_d = d;
                  fallback = h;
                  fallback_corner = hits_corner;
                }
              }
              if (!choice && fallback) {
                choice = fallback;
                collapse_onto = fallback_corner;
              }
            }
            if (!choice) continue;
            if (collapse_onto >= 0) {
              c.x = trimmed[collapse_onto].x;
              c.tie = trimmed[collapse_onto].tie
                          ? trimmed[collapse_onto].tie
                          : std::optional<BoundaryTie>(
                                BoundaryTie{choice->patch_id, choice->param});
            } else {
              c.x = choice->x;
              c.tie = BoundaryTie{choice->patch_id, choice->param};
            }
            c.void_unmoved = false;
            --remaining;
            progress = true;
          }
        }
        if (remaining > 0) {
          subdivide(corner, level);
          return;
        }

        // Material volume of the trimmed shape; zero-measure slivers vanish.
        GridPointSet probe;
        Cell shape;
        for (int c = 0; c < 8; ++c) probe.points.push_back({trimmed[c].x, 0, {}});
        for (int c = 0; c < 8; ++c) shape.nodes[c] = c;
        double vol = 0.0;
        for (const VolQP& qp : cell_product_rule(3, 3, 3)) {
          const ShapeEval se = serendipity_shape(qp.local, shape.active_midside);
          Mat3 jm = Mat3::Zero();
          for (int c = 0; c < 8; ++c)
            for (int l = 0; l < 3; ++l)
              for (int g = 0; g < 3; ++g) jm(l, g) += se.d[c][l] * probe.x(c)[g];
          vol += qp.w * std::abs(jm.determinant());
        }
        if (vol < 1e-6 * diag * diag * diag) return;
        try {
          validate_cell(shape, probe);
        } catch (const MeshError&) {
          subdivide(corner, level);
          return;
        }

        // Boundary mid-sides on edges joining moved corners, dry-run first.
        const auto& edges = cell_edges();
        GridPointSet scratch = probe;
        std::array<std::optional<GridPoint>, 12> midside;
        Cell quad = shape;
        for (int m = 0; m < 12; ++m) {
          const Corner& a = trimmed[edges[m][0]];
          const Corner& b = trimmed[edges[m][1]];
          if (!(a.tie && b.tie)) continue;
          const Vec3 mid = 0.5 * (a.x + b.x);
          const double span = (a.x - b.x).norm();
          if (span < 1e-9 * diag) continue;  // collapsed edge
          const Projection prj = project_to_boundary(mid, patches);
          if (prj.distance > 0.35 * span || prj.distance < 1e-14) continue;
          if ((prj.x - a.x).norm() < 0.2 * span || (prj.x - b.x).norm() < 0.2 * span)
            continue;
          midside[m] = GridPoint{prj.x, 0, BoundaryTie{prj.patch_id, prj.param}};
          scratch.points.push_back(*midside[m]);
          quad.nodes[8 + m] = scratch.size() - 1;
          quad.active_midside[m] = true;
        }
        bool use_quadratic = quad.node_count() > 8;
        if (use_quadratic) {
          try {
            validate_cell(quad, scratch);
          } catch (const MeshError&) {
            use_quadratic = false;
          }
        }

        Cell out;
        for (int c = 0; c < 8; ++c) {
          GridPoint gp;
          gp.x = trimmed[c].x;
          gp.boundary = trimmed[c].tie;
          out.nodes[c] = add_point(gp);
        }
        if (use_quadratic)
          for (int m = 0; m < 12; ++m)
            if (midside[m]) {
              out.nodes[8 + m] = add_point(*midside[m]);
              out.active_midside[m] = true;
            }
        try {
          validate_cell(out, mesh.grid);
        } catch (const MeshError&) {
          bool straight_ok = true;
          for (int m = 0; m < 12; ++m) {
            out.nodes[8 + m] = -1;
            out.active_midside[m] = false;
          }
          try {
            validate_cell(out, mesh.grid);
          } catch (const MeshError&) {
            straight_ok = false;
          }
          if (!straight_ok) {
            subdivide(corner, level);
            return;
          }
        }
        mesh.cells.push_back(out);
      };

  const int corner_offset[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                                   {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
  for (int k = 0; k + 1 < lat.n[2]; ++k)
    for (int j = 0; j + 1 < lat.n[1]; ++j)
      for (int i = 0; i + 1 < lat.n[0]; ++i) {
        std::array<Corner, 8> corner;
        int original_void = 0;
        for (int c = 0; c < 8; ++c) {
          const int id = lat.node_id(i + corner_offset[c][0], j + corner_offset[c][1],
                                     k + corner_offset[c][2]);
          corner[c].orig = lat.node(i + corner_offset[c][0], j + corner_offset[c][1],
                                    k + corner_offset[c][2]);
          corner[c].x = pos[id];
          corner[c].tie = tie[id];
          corner[c].void_unmoved = in_void[id] && !moved[id];
          original_void += in_void[id] ? 1 : 0;
        }
        if (original_void == 8) continue;  // cell inside the excavation
        if (!patches.empty()) {
          Vec3 centroid = Vec3::Zero();
          for (const Corner& c : corner) centroid += c.orig;
          centroid /= 8.0;
          const bool centroid_void = point_in_void(centroid, patches);
          if (original_void == 0 && centroid_void) continue;
          if (original_void > 0 && centroid_void && original_void >= 7) continue;
        }
        emit(corner, 0);
      }

  if (mesh.cells.empty()) throw MeshError("scan produced no cells");

  // Drop grid points orphaned by mid-side rollbacks and remap the cells.
  std::vector<int> remap(mesh.grid.size(), -1);
  MeshResult packed;
  for (const Cell& cell : mesh.cells)
    for (const int slot : cell.local_nodes())
      if (remap[cell.nodes[slot]] < 0) {
        remap[cell.nodes[slot]] = packed.grid.size();
        packed.grid.points.push_back(mesh.grid.points[cell.nodes[slot]]);
      }
  for (const Cell& cell : mesh.cells) {
    Cell c = cell;
    for (int s = 0; s < 20; ++s)
      if (c.nodes[s] >= 0) c.nodes[s] = remap[c.nodes[s]];
    packed.cells.push_back(c);
  }
  return packed;
}

Vec3 SuperCell::map(const Vec3& local) const {
  const auto& lc = cell_local_coords();
  Vec3 x = Vec3::Zero();
  for (int c = 0; c < 8; ++c) {
    double n = 0.125;
    for (int d = 0; d < 3; ++d) n *= 1.0 + local[d] * lc[c][d];
    x += n * corners[c];
  }
  return x;
}

bool SuperCell::contains(const Vec3& x, double tol) const {
  GridPointSet grid;
  Cell cell;
  for (int c = 0; c < 8; ++c) {
    grid.points.push_back({corners[c], 0, std::nullopt});
    cell.nodes[c] = c;
  }
  const auto local = invert_cell_map(cell, grid, x, 1e-9);
  if (!local) return false;
  return (local->array().abs() <= 1.0 + tol).all();
}

std::optional<double> SuperCell::exit_distance(const Vec3& origin,
                                               const Vec3& dir) const {
  if (!contains(origin, 1e-6)) return std::nullopt;
  double scale = 0.0;
  for (const Vec3& c : corners) scale = std::max(scale, (c - corners[0]).norm());
  double lo = 0.0, hi = 2.0 * scale;
  if (contains(origin + hi * dir)) return std::nullopt;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    (contains(origin + mid * dir) ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

MeshResult grow_mesh(const std::vector<Patch>& seed_patches,
                     const std::vector<int>& seed_ids, const SuperCell& super_cell,
                     const GrowSpec& spec) {
  if (spec.sub_u < 1 || spec.sub_v < 1 || spec.layers < 1)
    throw MeshError("grow spec needs positive subdivision counts");

  MeshResult mesh;
  std::unordered_map<std::uint64_t, int> dedupe;
  double scale = 0.0;
  for (const Vec3& c : super_cell.corners)
    scale = std::max(scale, (c - super_cell.corners[0]).norm());
  const double tol = 1e-9 * scale;

  auto add_point = [&](const GridPoint& gp) {
    const std::uint64_t key = point_key(gp.x, tol);
    auto it = dedupe.find(key);
    if (it != dedupe.end() && (mesh.grid.points[it->second].x - gp.x).norm() <= tol)
      return it->second;
    for (int g = 0; g < mesh.grid.size(); ++g)
      if ((mesh.grid.points[g].x - gp.x).norm() <= tol) return g;
    mesh.grid.points.push_back(gp);
    const int id = mesh.grid.size() - 1;
    dedupe[key] = id;
    return id;
  };

  for (const int pid : seed_ids) {
    const Patch& patch = seed_patches[pid];
    // Node lattice on the patch surface and along the growth direction.
    const int nu = spec.sub_u + 1, nv = spec.sub_v + 1, nl = spec.layers + 1;
    std::vector<int> ids(nu * nv * nl, -1);
    auto idx = [&](int a, int b, int l) { return (l * nv + b) * nu + a; };

    for (int a = 0; a < nu; ++a)
      for (int b = 0; b < nv; ++b) {
        const double u = static_cast<double>(a) / spec.sub_u;
        const double v = static_cast<double>(b) / spec.sub_v;
        const SurfaceFrame f = patch.frame(std::clamp(u, 1e-9, 1.0 - 1e-9),
                                           std::clamp(v, 1e-9, 1.0 - 1e-9));
        const Vec3 outward = -f.n;  // into the ground
        if (!super_cell.contains(f.x, 1e-3))
          throw MeshError("super-cell does not enclose the seed patch");
        const auto exit = super_cell.exit_distance(f.x, outward);
        if (!exit) throw MeshError("growth direction never leaves the super-cell");
        // Geometric grading toward the boundary.
        double denom = 0.0;
        for (int l = 0; l < spec.layers; ++l) denom += std::pow(spec.grading, l);
        double reach = 0.0;
        for (int l = 0; l < nl; ++l) {
          GridPoint gp;
          gp.x = f.x + (*exit) * (reach / denom) * outward;
          if (l == 0) gp.boundary = BoundaryTie{patch.id(), Vec2(u, v)};
          ids[idx(a, b, l)] = add_point(gp);
          if (l < spec.layers) reach += std::pow(spec.grading, l);
        }
      }

    for (int a = 0; a < spec.sub_u; ++a)
      for (int b = 0; b < spec.sub_v; ++b)
        for (int l = 0; l < spec.layers; ++l) {
          Cell cell;
          cell.nodes[0] = ids[idx(a, b, l)];
          cell.nodes[1] = ids[idx(a + 1, b, l)];
          cell.nodes[2] = ids[idx(a + 1, b + 1, l)];
          cell.nodes[3] = ids[idx(a, b + 1, l)];
          cell.nodes[4] = ids[idx(a, b, l + 1)];
          cell.nodes[5] = ids[idx(a + 1, b, l + 1)];
          cell.nodes[6] = ids[idx(a + 1, b + 1, l + 1)];
          cell.nodes[7] = ids[idx(a, b + 1, l + 1)];
          if (l == 0) {
            // Curved inner face: activate its edge mid-sides on the surface.
            const double u0 = static_cast<double>(a) / spec.sub_u;
            const double u1 = static_cast<double>(a + 1) / spec.sub_u;
            const double v0 = static_cast<double>(b) / spec.sub_v;
            const double v1 = static_cast<double>(b + 1) / spec.sub_v;
            const std::array<std::pair<int, Vec2>, 4> face_mids = {
                {{0, Vec2(0.5 * (u0 + u1), v0)},
                 {1, Vec2(u1, 0.5 * (v0 + v1))},
                 {2, Vec2(0.5 * (u0 + u1), v1)},
                 {3, Vec2(u0, 0.5 * (v0 + v1))}}};
            for (const auto& [edge, uv] : face_mids) {
              GridPoint gp;
              gp.x = patch.position(uv.x(), uv.y());
              gp.boundary = BoundaryTie{patch.id(), uv};
              cell.nodes[8 + edge] = add_point(gp);
              cell.active_midside[edge] = true;
            }
          }
          validate_cell(cell, mesh.grid);
          mesh.cells.push_back(cell);
        }
  }
  return mesh;
}

SuperCell skew_to_supercell(MeshResult& mesh, int cell_index, const Vec3& direction,
                            int axis) {
  if (cell_index < 0 || cell_index >= static_cast<int>(mesh.cells.size()))
    throw MeshError("super-cell index out of range");
  const Cell target = mesh.cells[cell_index];

  // Column footprint and axis range of the target cell.
  Box footprint;
  double a0 = 1e300, a1 = -1e300;
  for (int c = 0; c < 8; ++c) {
    const Vec3& x = mesh.grid.x(target.nodes[c]);
    footprint.extend(x);
    a0 = std::min(a0, x[axis]);
    a1 = std::max(a1, x[axis]);
  }
  const double pad = 1e-9 * footprint.diagonal();

  auto in_column = [&](const Vec3& x) {
    for (int d = 0; d < 3; ++d) {
      if (d == axis) continue;
      if (x[d] < footprint.min[d] - pad || x[d] > footprint.max[d] + pad)
        return false;
    }
    return true;
  };

  // Shear ramp: zero below the cell, full offset above it.
  for (GridPoint& gp : mesh.grid.points) {
    if (!in_column(gp.x)) continue;
    const double f = std::clamp((gp.x[axis] - a0) / (a1 - a0), 0.0, 1.0);
    Vec3 d = direction * f;
    d[axis] = 0.0;
    gp.x += d;
  }

  SuperCell sc;
  for (int c = 0; c < 8; ++c) sc.corners[c] = mesh.grid.x(target.nodes[c]);
  mesh.cells.erase(mesh.cells.begin() + cell_index);

  for (const Cell& cell : mesh.cells) validate_cell(cell, mesh.grid);
  return sc;
}

MeshResult merge_meshes(const MeshResult& a, const MeshResult& b) {
  MeshResult out = a;
  Box box;
  for (const GridPoint& gp : a.grid.points) box.extend(gp.x);
  for (const GridPoint& gp : b.grid.points) box.extend(gp.x);
  const double tol = 1e-9 * std::max(box.diagonal(), 1e-12);

  std::vector<int> remap(b.grid.size(), -1);
  for (int g = 0; g < b.grid.size(); ++g) {
    int found = -1;
    for (int h = 0; h < out.grid.size() && found < 0; ++h)
      if ((out.grid.points[h].x - b.grid.points[g].x).norm() <= tol) found = h;
    if (found < 0) {
      out.grid.points.push_back(b.grid.points[g]);
      found = out.grid.size() - 1;
    }
    remap[g] = found;
  }
  for (const Cell& cell : b.cells) {
    Cell c = cell;
    for (int s = 0; s < 20; ++s)
      if (c.nodes[s] >= 0) c.nodes[s] = remap[c.nodes[s]];
    out.cells.push_back(c);
  }
  return out;
}

double mesh_volume(const MeshResult& mesh) {
  double v = 0.0;
  for (const Cell& c : mesh.cells) v += cell_volume(c, mesh.grid);
  return v;
}

}  // namespace igabem
