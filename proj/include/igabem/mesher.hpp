#pragma once

#include "igabem/cells.hpp"
#include "igabem/core.hpp"
#include "igabem/geometry.hpp"

#include <array>
#include <optional>
#include <vector>

namespace igabem {

/// Scan box: orthogonal grid lines whose intersections with the boundary drive
/// cell trimming.
struct ScanRegion {
  Box box;
  std::array<int, 3> lines = {2, 2, 2};  // lattice nodes per axis
  int subdivide_levels = 0;              // octree splits of intersected cells
};

enum class CellClass { InsideDomain, Void, Intersected };

struct CellClassification {
  std::vector<CellClass> tag;
  std::vector<int> intersected;  // indices of intersected cells
};

struct MeshResult {
  std::vector<Cell> cells;
  GridPointSet grid;
};

/// True when x lies in the excavation void: the nearest boundary point's normal
/// (which points out of the ground) faces it.
bool point_in_void(const Vec3& x, const std::vector<Patch>& patches);

/// Classification of one lattice cell from its corner containment states.
CellClass classify_cell_corners(const std::array<bool, 8>& corner_in_void,
                                bool any_edge_hit);

/// Orthogonal-grid scan: intersect grid lines with the patches, trim intersected
/// cells by moving corner (and mid-side) nodes onto the boundary, drop void
/// cells. Throws MeshError when the grid is too coarse to register the boundary.
MeshResult scan_mesh(const ScanRegion& region, const std::vector<Patch>& patches);

/// Eight-corner super-cell (trilinear hexahedron).
struct SuperCell {
  std::array<Vec3, 8> corners;

  Vec3 map(const Vec3& local) const;
  bool contains(const Vec3& x, double tol = 1e-9) const;
  /// Exit parameter along origin + t*dir (bisection on containment).
  std::optional<double> exit_distance(const Vec3& origin, const Vec3& dir) const;
};

struct GrowSpec {
  int sub_u = 2;       // patch-surface subdivisions
  int sub_v = 2;
  int layers = 2;      // cell layers between the surface and the super-cell
  double grading = 1.5;
};

/// Grows graded hexahedral layers from the seed patches outward (against the
/// patch normal, which points into the excavation) to the super-cell boundary.
MeshResult grow_mesh(const std::vector<Patch>& seed_patches,
                     const std::vector<int>& seed_ids, const SuperCell& super_cell,
                     const GrowSpec& spec);

/// Skews one cell of a mesh into a super-cell along `direction`; nodes of the
/// vertical column above/below follow (shear ramp along `axis`), lateral cells
/// keep their nodes bit-exactly. The skewed cell is removed from the mesh and
/// returned as the super-cell.
SuperCell skew_to_supercell(MeshResult& mesh, int cell_index, const Vec3& direction,
                            int axis);

/// Concatenates meshes, deduplicating coincident grid points.
MeshResult merge_meshes(const MeshResult& a, const MeshResult& b);

double mesh_volume(const MeshResult& mesh);

}  // namespace igabem
