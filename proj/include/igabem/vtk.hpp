#pragma once

#include "igabem/cells.hpp"
#include "igabem/core.hpp"
#include "igabem/geometry.hpp"

#include <optional>
#include <string>
#include <vector>

namespace igabem {

/// Per-point output fields for the legacy VTK writers; any vector may be empty.
struct VtkPointData {
  std::vector<Vec3> displacement;
  std::vector<Vec6> stress;
  std::vector<int> yield_flag;
};

/// Legacy-text unstructured grid of the cell mesh: plain bricks as 8-node
/// hexahedra, cells with active mid-sides as 20-node quadratic hexahedra
/// (inactive slots synthesised at edge midpoints). Byte-stable output.
void write_vtk_cells(const std::string& path, const std::vector<Cell>& cells,
                     const GridPointSet& grid, const VtkPointData& data = {});

/// Legacy-text tessellation of the boundary patches as quads with optional
/// per-vertex data (infinite patches are sampled up to eta = 0.9).
void write_vtk_boundary(const std::string& path, const std::vector<Patch>& patches,
                        int samples_per_direction,
                        const std::vector<std::vector<Vec3>>& displacement = {});

}  // namespace igabem
