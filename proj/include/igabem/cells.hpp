#pragma once

#include "igabem/bem_assembly.hpp"
#include "igabem/collocation.hpp"
#include "igabem/core.hpp"
#include "igabem/geometry.hpp"
#include "igabem/kernels.hpp"
#include "igabem/quadrature.hpp"

#include <array>
#include <optional>
#include <vector>

namespace igabem {

/// Node ordering follows the 20-node quadratic hexahedron convention: corners
/// 0-7, then the twelve edge mid-sides. Inactive mid-sides carry node id -1 and
/// their edges interpolate linearly.
struct Cell {
  std::array<int, 20> nodes;
  std::array<bool, 12> active_midside{};
  int material = 0;

  Cell() { nodes.fill(-1); }

  int node_count() const;
  std::vector<int> local_nodes() const;  // slots with a grid node attached
};

/// Local coordinates of the 20 node slots in [-1,1]^3.
const std::array<Vec3, 20>& cell_local_coords();
/// Corner pairs of the twelve edges (indices into the corner slots).
const std::array<std::array<int, 2>, 12>& cell_edges();

/// Where a grid point lies on the excavation boundary (interpolation shortcut
/// instead of the singular integral representation).
struct BoundaryTie {
  int patch_id = -1;
  Vec2 param = Vec2::Zero();
};

struct GridPoint {
  Vec3 x = Vec3::Zero();
  int material = 0;
  std::optional<BoundaryTie> boundary;
};

struct GridPointSet {
  std::vector<GridPoint> points;

  int size() const { return static_cast<int>(points.size()); }
  const Vec3& x(int i) const { return points[i].x; }
};

/// Serendipity shape values and local-coordinate derivatives for the active node
/// slots of a cell. Values are indexed by slot (0..19); inactive slots are zero.
struct ShapeEval {
  std::array<double, 20> n{};
  std::array<Vec3, 20> d{};  // dN/d(xi,eta,zeta)
};

ShapeEval serendipity_shape(const Vec3& local, const std::array<bool, 12>& active);

struct CellJacobian {
  Mat3 j;       // rows: d(x,y,z)/d(local_l)
  double det = 0.0;
};

CellJacobian cell_jacobian(const Cell& cell, const GridPointSet& grid,
                           const Vec3& local);

Vec3 cell_point(const Cell& cell, const GridPointSet& grid, const Vec3& local);

/// 6 x (3*node_count) strain-displacement block at a local point, engineering
/// shear rows ordered (x, y, z, xy, yz, xz). Column triples follow
/// cell.local_nodes() order.
MatX strain_operator(const Cell& cell, const GridPointSet& grid, const Vec3& local);

/// Newton inversion of the cell map; empty when x is outside the cell beyond tol.
std::optional<Vec3> invert_cell_map(const Cell& cell, const GridPointSet& grid,
                                    const Vec3& x, double tol = 1e-10);

struct VolumeRuleOptions {
  double proximity_scale = 12.0;
  double singular_ratio = 2.0;  // below this R/L the collapsed-pyramid scheme runs
  int singular_gauss = 5;
};

/// Kernel moment of one cell node: int E(target, x) N_k dOmega with
/// distance-adapted product Gauss. Throws AssemblyError when the target is too
/// close for the capped regular rule (switch to the singular variant).
Mat36 integrate_cell_kernel(const Vec3& target, const Cell& cell,
                            const GridPointSet& grid, int node_slot,
                            const ElasticConstants& mat,
                            const VolumeRuleOptions& opt = {});

/// Same moment with the collapsed-pyramid scheme anchored at local coordinates
/// `target_local` (target on or inside the cell).
Mat36 integrate_cell_singular(const Vec3& target, const Vec3& target_local,
                              const Cell& cell, const GridPointSet& grid,
                              int node_slot, const ElasticConstants& mat,
                              const VolumeRuleOptions& opt = {});

/// All node moments of one cell for one target in a single quadrature sweep,
/// choosing the regular or singular scheme by proximity.
std::vector<Mat36> integrate_cell_all_nodes(const Vec3& target, const Cell& cell,
                                            const GridPointSet& grid,
                                            const ElasticConstants& mat,
                                            const VolumeRuleOptions& opt = {});

/// Pre-assembled volume operators (sizes follow the grid/dof layout).
struct VolumeOperators {
  MatX b0;      // n_d x 6 n_g
  MatX b0_bar;  // 3 n_g x 6 n_g
  MatX b_hat;   // 6 n_g x 3 n_g
  MatX a_hat;   // 3 n_g x n_d
  VecX c_bar;   // 3 n_g
};

/// Wall-clock seconds per operator family, for the run log.
struct VolumeTimings {
  double b0 = 0.0;
  double a_hat = 0.0;
  double b0_bar = 0.0;
  double b_hat = 0.0;
};

VolumeOperators assemble_volume_operators(const std::vector<Patch>& patches,
                                          const CollocationSet& colloc,
                                          const std::vector<Cell>& cells,
                                          const GridPointSet& grid,
                                          const Loading& load,
                                          const ElasticConstants& mat,
                                          const SurfaceRuleOptions& surf_opt = {},
                                          const VolumeRuleOptions& vol_opt = {},
                                          VolumeTimings* timings = nullptr);

double cell_volume(const Cell& cell, const GridPointSet& grid);

}  // namespace igabem
