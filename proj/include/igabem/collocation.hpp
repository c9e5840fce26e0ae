#pragma once

#include "igabem/core.hpp"
#include "igabem/geometry.hpp"

#include <utility>
#include <vector>

namespace igabem {

/// Location where the boundary integral equation is collocated. Points shared by
/// several patches (conforming interfaces) are merged into one dof triple and
/// remember every (patch, local coordinates) incarnation.
struct CollocationPoint {
  Vec3 x;
  int owner_patch = -1;
  Vec2 owner_param = Vec2::Zero();
  bool discontinuous = false;
  std::vector<std::pair<int, Vec2>> on_patches;

  int dof(int component) const { return 3 * index + component; }
  int index = -1;
};

/// Collocation points plus the map from per-patch field parameters to points.
struct CollocationSet {
  std::vector<CollocationPoint> points;
  /// param_to_point[patch_id][k] = collocation point index carrying parameter k.
  std::vector<std::vector<int>> param_to_point;

  int num_dofs() const { return 3 * static_cast<int>(points.size()); }
};

/// Anchors from the Greville abscissae of each patch's unknown basis. Anchors on
/// edges flagged discontinuous move inward by a quarter of the adjacent knot
/// span; infinite patches collocate only along their finite edge. Coincident
/// anchors are merged at 1e-9 times the model scale.
CollocationSet generate_collocation(const std::vector<Patch>& patches);

}  // namespace igabem
