#pragma once

#include "igabem/core.hpp"
#include "igabem/geometry.hpp"

#include <optional>
#include <vector>

namespace igabem {

/// Gauss-Legendre rule on [0,1].
struct GaussRule {
  std::vector<double> x;
  std::vector<double> w;
};
const GaussRule& gauss_rule(int n);

/// Parametric quadrature point on a patch; weight contains the parametric measure
/// (subcell sizes and collapsed-triangle Jacobians), not the surface Jacobian.
struct SurfQP {
  double xi;
  double eta;
  double w;
};

/// Per-direction Gauss count for a proximity ratio, capped at 5; returns 0 when the
/// point is too close and the region has to be subdivided (or treated as singular).
/// `scale` stretches the distance thresholds: scale 1 is the classical
/// {4, 2, 1, 0.5} ladder, the default 8 drives every cell to ~1e-8 accuracy.
int gauss_count_for_proximity(double r_over_l, double scale = 8.0);

struct SurfaceRuleOptions {
  int max_depth = 8;
  int singular_gauss = 5;     // per direction on collapsed triangles
  int infinite_levels = 12;   // eta ladder bands on infinite patches
  double proximity_scale = 8.0;
  double hard_fail_ratio = 0.02;
};

/// Quadrature rule over the whole parameter square of a patch for integrands that
/// are singular at `y` (kernel source point). If singular_param is set, the
/// containing knot-span cells are fanned into collapsed triangles anchored there;
/// all other cells use distance-adapted Gauss counts with recursive subdivision.
/// Infinite patches integrate eta over a fixed shared ladder of bands.
std::vector<SurfQP> surface_rule(const Patch& patch, const Vec3& y,
                                 const std::optional<Vec2>& singular_param,
                                 const SurfaceRuleOptions& opt = {});

/// Volume quadrature point in cell-local coordinates [-1,1]^3.
struct VolQP {
  Vec3 local;
  double w;  // parametric weight including any collapsed-pyramid Jacobian
};

/// Product Gauss rule with the given per-direction counts.
std::vector<VolQP> cell_product_rule(int nx, int ny, int nz);

/// Collapsed-pyramid decomposition for a singular point at local coordinates
/// `s` (each pyramid spans one cube face not containing s; its mapping Jacobian
/// vanishes at s). Gauss points per direction: n.
std::vector<VolQP> cell_singular_rule(const Vec3& s, int n = 5);

}  // namespace igabem
