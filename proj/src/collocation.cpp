#include "igabem/collocation.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace igabem {

namespace {

// Inward offset fraction of the adjacent knot span for discontinuous anchors.
constexpr double kOffsetFraction = 0.25;

double adjacent_span(const KnotVector& kv, bool at_start) {
  const auto uk = kv.unique_knots();
  return at_start ? uk[1] - uk[0] : uk[uk.size() - 1] - uk[uk.size() - 2];
}

Vec2 apply_discontinuous_offset(const Patch& patch, Vec2 a) {
  const auto& edges = patch.discontinuous_edges();
  const KnotVector& kx = patch.unknown_surface().knots_xi();
  const KnotVector& ke = patch.unknown_surface().knots_eta();
  const double tol = 1e-12;
  if (edges.count(PatchEdge::XiMin) && a.x() < tol)
    a.x() += kOffsetFraction * adjacent_span(kx, true);
  if (edges.count(PatchEdge::XiMax) && a.x() > 1.0 - tol)
    a.x() -= kOffsetFraction * adjacent_span(kx, false);
  if (patch.kind() != PatchKind::Infinite) {
    if (edges.count(PatchEdge::EtaMin) && a.y() < tol)
      a.y() += kOffsetFraction * adjacent_span(ke, true);
    if (edges.count(PatchEdge::EtaMax) && a.y() > 1.0 - tol)
      a.y() -= kOffsetFraction * adjacent_span(ke, false);
  } else if (edges.count(PatchEdge::EtaMin)) {
    // Infinite patches collocate on the finite edge; a flagged edge moves the
    // anchors a small way down the strip instead (sharp neighbour below).
    a.y() = 0.03;
  }
  return a;
}

}  // namespace

CollocationSet generate_collocation(const std::vector<Patch>& patches) {
  Box model_box;
  for (const Patch& p : patches) {
    model_box.extend(p.bounding_box().min);
    model_box.extend(p.bounding_box().max);
  }
  const double tol = 1e-9 * model_box.diagonal();

  CollocationSet set;
  set.param_to_point.resize(patches.size());
  std::unordered_map<std::uint64_t, std::vector<int>> buckets;

  for (std::size_t pi = 0; pi < patches.size(); ++pi) {
    const Patch& patch = patches[pi];
    if (patch.id() != static_cast<int>(pi))
      throw AssemblyError("patch ids must match their position in the list");
    const int np = patch.num_field_params();
    set.param_to_point[pi].resize(np, -1);
    for (int k = 0; k < np; ++k) {
      const Vec2 raw = patch.anchor(k);
      const Vec2 a = apply_discontinuous_offset(patch, raw);
      const bool moved = (a - raw).norm() > 0.0;
      const Vec3 x = patch.position(a.x(), a.y());

      int found = -1;
      auto it = buckets.find(point_key(x, std::max(tol, 1e-300)));
      if (it != buckets.end())
        for (const int idx : it->second)
          if ((set.points[idx].x - x).norm() <= tol) found = idx;
      if (found < 0) {
        // Hash buckets can split near-coincident points; fall back to a scan.
        for (int idx = 0; idx < static_cast<int>(set.points.size()) && found < 0;
             ++idx)
          if ((set.points[idx].x - x).norm() <= tol) found = idx;
      }

      if (found < 0) {
        CollocationPoint cp;
        cp.x = x;
        cp.owner_patch = static_cast<int>(pi);
        cp.owner_param = a;
        cp.discontinuous = moved;
        cp.index = static_cast<int>(set.points.size());
        cp.on_patches.emplace_back(static_cast<int>(pi), a);
        set.points.push_back(cp);
        buckets[point_key(x, std::max(tol, 1e-300))].push_back(cp.index);
        found = cp.index;
      } else {
        auto& cp = set.points[found];
        bool seen = false;
        for (const auto& [opi, oa] : cp.on_patches)
          if (opi == static_cast<int>(pi)) seen = true;
        if (!seen) cp.on_patches.emplace_back(static_cast<int>(pi), a);
      }
      set.param_to_point[pi][k] = found;
    }
  }

  for (std::size_t i = 0; i < set.points.size(); ++i)
    for (std::size_t j = i + 1; j < set.points.size(); ++j)
      if ((set.points[i].x - set.points[j].x).norm() < tol)
        throw AssemblyError(
            "distinct collocation points closer than the merge tolerance");
  return set;
}

}  // namespace igabem
