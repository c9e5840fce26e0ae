#pragma once

#include "igabem/collocation.hpp"
#include "igabem/core.hpp"
#include "igabem/geometry.hpp"
#include "igabem/kernels.hpp"
#include "igabem/quadrature.hpp"

#include <map>
#include <optional>
#include <vector>

namespace igabem {

/// Excavation loading: a uniform virgin stress plus optional internal (fluid)
/// pressure per patch. The load applied to the boundary system is the
/// perturbation traction t = -n sigma_v - p n.
struct Loading {
  VoigtStress sigma_v = VoigtStress::Zero();
  std::map<int, double> patch_pressure;

  double pressure_on(int patch_id) const {
    auto it = patch_pressure.find(patch_id);
    return it == patch_pressure.end() ? 0.0 : it->second;
  }
};

Vec3 excavation_traction(const SurfaceFrame& frame, const Loading& load,
                         int patch_id);

/// Patch contributions to one collocation row: the load integral, one 3x3 block
/// per field parameter and (for non-singular patches) the plain kernel row sum.
/// When `singular_param` is set the parameter blocks carry the regularised
/// integrand T * (R_k(x) - R_k(xi_n)) and `t_sum` must not be used.
struct PatchIntegrals {
  Vec3 u_part = Vec3::Zero();
  std::vector<Mat3> t_blocks;
  Mat3 t_sum = Mat3::Zero();
  bool regularized = false;
};

PatchIntegrals integrate_patch(const Patch& patch, const Vec3& y,
                               const std::optional<Vec2>& singular_param,
                               const Loading& load, const ElasticConstants& mat,
                               const SurfaceRuleOptions& opt = {});

/// Dense collocation system L u = r (+ B0 sigma0 once volume terms join).
struct BoundarySystem {
  MatX L;
  VecX r;
  Mat3 a_n = Mat3::Identity();
  int num_dofs = 0;
};

BoundarySystem assemble(const std::vector<Patch>& patches,
                        const CollocationSet& colloc, const Loading& load,
                        const ElasticConstants& mat,
                        const SurfaceRuleOptions& opt = {});

/// Direct dense solve with residual and conditioning checks.
VecX solve_boundary(const BoundarySystem& system);

/// Row of the interior representation u(x) = a_row * {u} + c_row for a point
/// strictly inside the domain (volume terms enter separately).
struct InteriorRow {
  Eigen::Matrix<double, 3, Eigen::Dynamic> a_row;
  Vec3 c_row = Vec3::Zero();
};

InteriorRow interior_displacement_row(const std::vector<Patch>& patches,
                                      const CollocationSet& colloc, const Vec3& x,
                                      const Loading& load,
                                      const ElasticConstants& mat,
                                      const SurfaceRuleOptions& opt = {});

/// Displacement of the solved boundary field at a patch location.
Vec3 boundary_displacement(const Patch& patch, const Vec2& param,
                           const CollocationSet& colloc, const VecX& u);

/// Total stress at a boundary point: perturbation stress recovered from surface
/// strains plus the traction condition, added to the virgin stress.
VoigtStress boundary_total_stress(const Patch& patch, const Vec2& param,
                                  const CollocationSet& colloc, const VecX& u,
                                  const Loading& load, const ElasticConstants& mat);

/// Largest compressive principal stress magnitude (tension-positive input).
double max_compressive_stress(const VoigtStress& sigma);

}  // namespace igabem
