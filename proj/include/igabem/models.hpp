#pragma once

#include "igabem/core.hpp"
#include "igabem/geometry.hpp"

#include <vector>

namespace igabem::models {

/// Semi-infinite horseshoe tunnel along +z, closed by a flat cap at z = 0.
/// Six finite wall patches (one profile arc each), six infinite continuations
/// beyond z = length and six degenerate cap patches fanned to the section
/// centroid. Normals point into the excavation; the cap corner is collocated
/// discontinuously on both sides.
std::vector<Patch> natm_tunnel(const Eigen::Matrix<double, 2, 3>& centers,
                               const Vec3& radii, double length);

/// Profile with tangent-consistent centers for given radii: crown center at the
/// origin, side center on the x axis, invert center on the y axis.
Eigen::Matrix<double, 2, 3> natm_centers(const Vec3& radii);

/// Circular tunnel of the given radius about the z axis, infinite in both
/// directions: four finite wall patches on [-half_length, half_length] plus four
/// infinite continuations on each side.
std::vector<Patch> circular_tunnel(double radius, double half_length);

/// Spherical cavity of the given radius centred at the origin, eight exact
/// rational octant patches with degenerate pole edges.
std::vector<Patch> sphere(double radius);

/// Refinement directives used by the tunnel refinement studies.
void insert_wall_knots(std::vector<Patch>& patches, PatchKind kind,
                       const std::vector<double>& eta_values);
void elevate_wall(std::vector<Patch>& patches, PatchKind kind, int target_order);

/// Vertical main borehole with a smaller bore deviated in the x-z plane.
/// The junction is modelled with trimmed patches: four pieces of the main wall
/// around the opening and four root pieces of the deviated tube (intersection
/// curves fitted numerically); discontinuous collocation at the junction.
struct Borehole {
  std::vector<Patch> patches;
  Vec3 deviated_direction = Vec3::Zero();  // unit vector of the deviated axis
  Vec3 junction_center = Vec3::Zero();     // where the axis pierces the main wall
  double band_half_height = 0.0;           // finite band extent on the main bore
  std::vector<int> root_patch_ids;         // seeds for growing the junction mesh
  std::vector<int> main_patch_ids;         // main-bore wall patches (scan targets)
};

Borehole borehole(double main_radius, double deviated_radius, double tilt_deg);

}  // namespace igabem::models
