#include "igabem/bem_assembly.hpp"

#include <cmath>

namespace igabem {

Vec3 excavation_traction(const SurfaceFrame& frame, const Loading& load,
                         int patch_id) {
  Vec3 t = -virgin_traction(frame.n, load.sigma_v);
  const double p = load.pressure_on(patch_id);
  if (p != 0.0) t -= p * frame.n;
  return t;
}

PatchIntegrals integrate_patch(const Patch& patch, const Vec3& y,
                               const std::optional<Vec2>& singular_param,
                               const Loading& load, const ElasticConstants& mat,
                               const SurfaceRuleOptions& opt) {
  PatchIntegrals out;
  out.t_blocks.assign(patch.num_field_params(), Mat3::Zero());
  out.regularized = singular_param.has_value();

  std::vector<double> fb_at_y;
  if (singular_param) {
    fb_at_y = patch.field_basis(singular_param->x(), singular_param->y()).value;
  }

  const auto rule = surface_rule(patch, y, singular_param, opt);
  for (const SurfQP& qp : rule) {
    const SurfaceFrame f = patch.frame(qp.xi, qp.eta);
    const double w = qp.w * f.jacobian;
    const Vec3 t_load = excavation_traction(f, load, patch.id());
    out.u_part += w * (kelvin_u(y, f.x, mat) * t_load);

    const Mat3 t_kernel = kelvin_t(y, f.x, f.n, mat);
    const auto fb = patch.field_basis(qp.xi, qp.eta);
    for (int k = 0; k < patch.num_field_params(); ++k) {
      const double shape = singular_param ? fb.value[k] - fb_at_y[k] : fb.value[k];
      if (shape != 0.0) out.t_blocks[k] += (w * shape) * t_kernel;
    }
    if (!singular_param) out.t_sum += w * t_kernel;
  }
  return out;
}

BoundarySystem assemble(const std::vector<Patch>& patches,
                        const CollocationSet& colloc, const Loading& load,
                        const ElasticConstants& mat,
                        const SurfaceRuleOptions& opt) {
  const int nd = colloc.num_dofs();
  BoundarySystem sys;
  sys.num_dofs = nd;
  sys.L = MatX::Zero(nd, nd);
  sys.r = VecX::Zero(nd);

  parallel_for(colloc.points.size(), [&](std::size_t n) {
    const CollocationPoint& cp = colloc.points[n];
    Eigen::Matrix<double, 3, Eigen::Dynamic> row =
        Eigen::Matrix<double, 3, Eigen::Dynamic>::Zero(3, nd);
    Vec3 rhs = Vec3::Zero();
    Mat3 t_sum_regular = Mat3::Zero();

    for (const Patch& patch : patches) {
      std::optional<Vec2> singular;
      for (const auto& [pid, local] : cp.on_patches)
        if (pid == patch.id()) singular = local;

      const PatchIntegrals pi =
          integrate_patch(patch, cp.x, singular, load, mat, opt);
      rhs += pi.u_part;
      const auto& map = colloc.param_to_point[patch.id()];
      for (int k = 0; k < patch.num_field_params(); ++k)
        row.middleCols<3>(3 * map[k]) += pi.t_blocks[k];
      if (!pi.regularized) t_sum_regular += pi.t_sum;
    }

    const Patch& owner = patches[cp.owner_patch];
    const auto fb = owner.field_basis(cp.owner_param.x(), cp.owner_param.y());
    const auto& owner_map = colloc.param_to_point[cp.owner_patch];
    const Mat3 closure = sys.a_n - t_sum_regular;
    for (int k = 0; k < owner.num_field_params(); ++k)
      if (fb.value[k] != 0.0)
        row.middleCols<3>(3 * owner_map[k]) += fb.value[k] * closure;

    sys.L.middleRows<3>(3 * static_cast<int>(n)) = row;
    sys.r.segment<3>(3 * static_cast<int>(n)) = rhs;
  });
  return sys;
}

VecX solve_boundary(const BoundarySystem& system) {
  Eigen::PartialPivLU<MatX> lu(system.L);
  if (system.L.rows() > 1 && lu.rcond() < 1e-14)
    throw SolverError("boundary operator is numerically singular");
  const VecX u = lu.solve(system.r);
  const double rnorm = system.r.norm();
  if (rnorm > 0.0) {
    const double residual = (system.L * u - system.r).norm() / rnorm;
    if (residual > 1e-10)
      throw SolverError("boundary solve residual above tolerance");
  }
  return u;
}

InteriorRow interior_displacement_row(const std::vector<Patch>& patches,
                                      const CollocationSet& colloc, const Vec3& x,
                                      const Loading& load,
                                      const ElasticConstants& mat,
                                      const SurfaceRuleOptions& opt) {
  InteriorRow out;
  out.a_row = Eigen::Matrix<double, 3, Eigen::Dynamic>::Zero(3, colloc.num_dofs());
  for (const Patch& patch : patches) {
    const PatchIntegrals pi =
        integrate_patch(patch, x, std::nullopt, load, mat, opt);
    out.c_row += pi.u_part;
    const auto& map = colloc.param_to_point[patch.id()];
    for (int k = 0; k < patch.num_field_params(); ++k)
      out.a_row.middleCols<3>(3 * map[k]) -= pi.t_blocks[k];
  }
  return out;
}

Vec3 boundary_displacement(const Patch& patch, const Vec2& param,
                           const CollocationSet& colloc, const VecX& u) {
  const auto fb = patch.field_basis(param.x(), param.y());
  const auto& map = colloc.param_to_point[patch.id()];
  Vec3 d = Vec3::Zero();
  for (int k = 0; k < patch.num_field_params(); ++k)
    d += fb.value[k] * u.segment<3>(3 * map[k]);
  return d;
}

VoigtStress boundary_total_stress(const Patch& patch, const Vec2& param,
                                  const CollocationSet& colloc, const VecX& u,
                                  const Loading& load, const ElasticConstants& mat) {
  const SurfaceFrame f = patch.frame(param.x(), param.y());
  const auto fb = patch.field_basis(param.x(), param.y());
  const auto& map = colloc.param_to_point[patch.id()];

  Vec3 u_xi = Vec3::Zero(), u_eta = Vec3::Zero();
  for (int k = 0; k < patch.num_field_params(); ++k) {
    const Vec3 uk = u.segment<3>(3 * map[k]);
    u_xi += fb.d_xi[k] * uk;
    u_eta += fb.d_eta[k] * uk;
  }

  // Local orthonormal frame (e1, e2, n) and in-plane displacement gradients.
  const Vec3 e1 = f.v_xi.normalized();
  const Vec3 e2 = f.n.cross(e1);
  Eigen::Matrix2d m;
  m << f.v_xi.dot(e1), f.v_xi.dot(e2), f.v_eta.dot(e1), f.v_eta.dot(e2);
  const Eigen::Matrix2d minv = m.inverse();
  const Vec3 du_ds1 = minv(0, 0) * u_xi + minv(1, 0) * u_eta;
  const Vec3 du_ds2 = minv(0, 1) * u_xi + minv(1, 1) * u_eta;

  const double e11 = e1.dot(du_ds1);
  const double e22 = e2.dot(du_ds2);
  const double g12 = e1.dot(du_ds2) + e2.dot(du_ds1);

  // Traction boundary condition supplies the out-of-plane column.
  const Vec3 t = excavation_traction(f, load, patch.id());
  const double s13 = t.dot(e1);
  const double s23 = t.dot(e2);
  const double s33 = t.dot(f.n);

  const double lambda = 2.0 * mat.G * mat.nu / (1.0 - 2.0 * mat.nu);
  const double e33 = (s33 - lambda * (e11 + e22)) / (lambda + 2.0 * mat.G);
  const double tr = e11 + e22 + e33;
  Mat3 local;
  local << lambda * tr + 2 * mat.G * e11, mat.G * g12, s13,
      mat.G * g12, lambda * tr + 2 * mat.G * e22, s23,
      s13, s23, s33;

  Mat3 rot;
  rot.col(0) = e1;
  rot.col(1) = e2;
  rot.col(2) = f.n;
  const Mat3 global = rot * local * rot.transpose();

  VoigtStress total;
  total << global(0, 0) + load.sigma_v[0], global(1, 1) + load.sigma_v[1],
      global(2, 2) + load.sigma_v[2], global(0, 1) + load.sigma_v[3],
      global(1, 2) + load.sigma_v[4], global(0, 2) + load.sigma_v[5];
  return total;
}

double max_compressive_stress(const VoigtStress& sigma) {
  Mat3 s;
  s << sigma[0], sigma[3], sigma[5], sigma[3], sigma[1], sigma[4], sigma[5],
      sigma[4], sigma[2];
  Eigen::SelfAdjointEigenSolver<Mat3> es(s);
  return std::max(0.0, -es.eigenvalues().minCoeff());
}

}  // namespace igabem
