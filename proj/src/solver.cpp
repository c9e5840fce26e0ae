#include "igabem/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cstring>
#include <cmath>
#include <numbers>

namespace igabem {

namespace {

Vec6 pore_shift(double pw) {
  Vec6 s = Vec6::Zero();
  s[0] = s[1] = s[2] = pw;
  return s;
}

// Voigt projector of a principal direction: sigma_p = m . sigma_voigt.
Vec6 principal_projector(const Vec3& n) {
  Vec6 m;
  m << n[0] * n[0], n[1] * n[1], n[2] * n[2], 2 * n[0] * n[1], 2 * n[1] * n[2],
      2 * n[0] * n[2];
  return m;
}

std::uint64_t hash_doubles(std::uint64_t h, const double* data, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t bits;
    std::memcpy(&bits, &data[i], sizeof(bits));
    h ^= bits;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

void MaterialModel::validate() const {
  ElasticConstants check(E, nu);
  (void)check;
  if (kind == MaterialKind::MohrCoulomb) {
    if (!(friction_angle >= 0.0 && friction_angle < std::numbers::pi / 2))
      throw DomainError("material: friction angle must lie in [0, pi/2)");
    if (!(cohesion >= 0.0)) throw DomainError("material: cohesion must be >= 0");
  }
}

double mc_yield(const VoigtStress& sigma_total, const MaterialModel& mat) {
  if (mat.kind != MaterialKind::MohrCoulomb)
    throw DomainError("yield function queried for an elastic material");
  const Vec6 eff = sigma_total + pore_shift(mat.pore_pressure);
  Eigen::SelfAdjointEigenSolver<Mat3> es(voigt_to_matrix(eff));
  const double s1 = es.eigenvalues()[2];
  const double s3 = es.eigenvalues()[0];
  const double sf = std::sin(mat.friction_angle);
  const double cf = std::cos(mat.friction_angle);
  return (s1 - s3) + (s1 + s3) * sf - 2.0 * mat.cohesion * cf;
}

McReturn mc_return(const VoigtStress& sigma_trial_total, const MaterialModel& mat) {
  if (mat.kind != MaterialKind::MohrCoulomb)
    throw DomainError("return mapping queried for an elastic material");
  const Mat6 d = elastic_d(mat.elastic());

  McReturn out;
  out.sigma = sigma_trial_total;
  out.d_ep = d;

  const Vec6 eff = sigma_trial_total + pore_shift(mat.pore_pressure);
  Eigen::SelfAdjointEigenSolver<Mat3> es(voigt_to_matrix(eff));
  // Descending principal order: p[0] >= p[1] >= p[2] (tension positive).
  Vec3 p(es.eigenvalues()[2], es.eigenvalues()[1], es.eigenvalues()[0]);
  const Vec3 n1 = es.eigenvectors().col(2);
  const Vec3 n2 = es.eigenvectors().col(1);
  const Vec3 n3 = es.eigenvectors().col(0);

  const double sf = std::sin(mat.friction_angle);
  const double cf = std::cos(mat.friction_angle);
  const double strength = 2.0 * mat.cohesion * cf;
  auto f13 = [&](const Vec3& s) { return (s[0] - s[2]) + (s[0] + s[2]) * sf - strength; };
  auto f12 = [&](const Vec3& s) { return (s[0] - s[1]) + (s[0] + s[1]) * sf - strength; };
  auto f23 = [&](const Vec3& s) { return (s[1] - s[2]) + (s[1] + s[2]) * sf - strength; };

  if (f13(p) <= 0.0) return out;  // elastic
  out.plastic = true;

  const ElasticConstants ec = mat.elastic();
  const double lambda = 2.0 * ec.G * ec.nu / (1.0 - 2.0 * ec.nu);
  Mat3 dp;
  dp << lambda + 2 * ec.G, lambda, lambda, lambda, lambda + 2 * ec.G, lambda,
      lambda, lambda, lambda + 2 * ec.G;

  const Vec3 a13(1 + sf, 0.0, -(1 - sf));
  const Vec3 a12(1 + sf, -(1 - sf), 0.0);
  const Vec3 a23(0.0, 1 + sf, -(1 - sf));

  Vec3 ret;
  std::vector<Vec3> active;  // principal-space gradients of the active surfaces

  // Main-plane return.
  {
    const double dl = f13(p) / (a13.dot(dp * a13));
    ret = p - dl * (dp * a13);
    active = {a13};
  }
  if (!(ret[0] >= ret[1] - 1e-12 && ret[1] >= ret[2] - 1e-12)) {
    // Edge returns: two active surfaces solved simultaneously.
    const bool compression_edge = ret[1] > ret[0];
    const Vec3 b = compression_edge ? a23 : a12;
    const double fb = compression_edge ? f23(p) : f12(p);
    Eigen::Matrix2d m;
    m << a13.dot(dp * a13), a13.dot(dp * b), b.dot(dp * a13), b.dot(dp * b);
    const Vec2 rhs(f13(p), fb);
    const Vec2 dl = m.fullPivLu().solve(rhs);
    ret = p - dl[0] * (dp * a13) - dl[1] * (dp * b);
    active = {a13, b};
    const bool sane = ret[0] >= ret[1] - 1e-9 * (1 + strength) &&
                      ret[1] >= ret[2] - 1e-9 * (1 + strength);
    if (dl.minCoeff() < 0.0 || !sane || f13(ret) > 1e-8 * (1 + strength)) {
      active.clear();
    }
  }
  if (active.empty() || (mat.friction_angle > 0.0 &&
                         ret.maxCoeff() > mat.cohesion * cf / sf + 1e-9)) {
    // Apex return (hydrostatic tension cap of the cone).
    if (mat.friction_angle <= 0.0)
      throw SolverError("apex return undefined for zero friction angle");
    const double apex = mat.cohesion * cf / sf;
    ret = Vec3::Constant(apex);
    active.clear();  // fully constrained
  }

  const Vec6 m1 = principal_projector(n1);
  const Vec6 m2 = principal_projector(n2);
  const Vec6 m3 = principal_projector(n3);
  Vec6 eff_ret = Vec6::Zero();
  {
    Mat3 t = ret[0] * n1 * n1.transpose() + ret[1] * n2 * n2.transpose() +
             ret[2] * n3 * n3.transpose();
    eff_ret = matrix_to_voigt(t);
  }
  out.sigma = eff_ret - pore_shift(mat.pore_pressure);

  if (active.empty()) {
    out.d_ep = Mat6::Zero();
  } else {
    Eigen::Matrix<double, 6, Eigen::Dynamic> a(6, active.size());
    for (std::size_t k = 0; k < active.size(); ++k)
      a.col(k) = active[k][0] * m1 + active[k][1] * m2 + active[k][2] * m3;
    const MatX da = d * a;
    const MatX core = (a.transpose() * da).fullPivLu().solve(da.transpose());
    out.d_ep = d - da * core;
  }

  const double fret = mc_yield(out.sigma, mat);
  if (fret > 1e-8 * std::max(strength, 1.0))
    throw SolverError("return mapping failed to reach the yield surface");
  return out;
}

VoigtStress initial_stress_elastic(const Mat6& d, const Mat6& d_incl,
                                   const VoigtStrain& eps) {
  return (d - d_incl) * eps;
}

PrecomputedSystem precompute(const std::vector<Patch>& patches,
                             const CollocationSet& colloc,
                             const std::vector<Cell>& cells,
                             const GridPointSet& grid, const Loading& load,
                             const ElasticConstants& domain,
                             const SurfaceRuleOptions& surf_opt,
                             const VolumeRuleOptions& vol_opt,
                             PrecomputeTimings* timings) {
  const auto tick = [] { return std::chrono::steady_clock::now(); };
  const auto seconds = [](auto t0, auto t1) {
    return std::chrono::duration<double>(t1 - t0).count();
  };
  PrecomputedSystem pre;
  pre.n_d = colloc.num_dofs();
  pre.n_g = grid.size();

  auto t0 = tick();
  const BoundarySystem sys = assemble(patches, colloc, load, domain, surf_opt);
  pre.l = sys.L;
  pre.r = sys.r;
  auto t1 = tick();
  if (timings) timings->boundary = seconds(t0, t1);

  const VolumeOperators ops =
      assemble_volume_operators(patches, colloc, cells, grid, load, domain,
                                surf_opt, vol_opt,
                                timings ? &timings->volume : nullptr);
  pre.a_hat = ops.a_hat;
  pre.c_bar = ops.c_bar;
  pre.b0 = ops.b0;
  pre.b0_bar = ops.b0_bar;
  pre.b_hat = ops.b_hat;

  Eigen::PartialPivLU<MatX> lu(pre.l);
  pre.u0 = lu.solve(pre.r);
  pre.x_op = lu.solve(pre.b0);
  pre.field_a = pre.b_hat * pre.a_hat;
  pre.field_b = pre.b_hat * pre.c_bar;
  pre.g_op = pre.field_a * pre.x_op + pre.b_hat * pre.b0_bar;
  pre.h_op = pre.field_a * pre.u0 + pre.field_b;
  if (timings) timings->compositions = seconds(t1, tick());

  std::uint64_t h = 1469598103934665603ull;
  h = hash_doubles(h, pre.l.data(), pre.l.size());
  h = hash_doubles(h, pre.r.data(), pre.r.size());
  h = hash_doubles(h, pre.a_hat.data(), pre.a_hat.size());
  h = hash_doubles(h, pre.b0.data(), pre.b0.size());
  h = hash_doubles(h, pre.b0_bar.data(), pre.b0_bar.size());
  h = hash_doubles(h, pre.b_hat.data(), pre.b_hat.size());
  pre.checksum = h;
  return pre;
}

SolutionState solve(const PrecomputedSystem& pre,
                    const std::vector<MaterialModel>& materials,
                    const Loading& load, const ElasticConstants& domain,
                    const SolverOptions& opts) {
  const int ng = pre.n_g;
  if (static_cast<int>(materials.size()) != ng)
    throw SolverError("one material model per grid point required");
  for (const MaterialModel& m : materials) m.validate();

  const Mat6 d_domain = elastic_d(domain);
  std::vector<Mat6> d_incl(ng), d_contrast(ng);
  bool any_plastic_material = false;
  for (int g = 0; g < ng; ++g) {
    d_incl[g] = elastic_d(materials[g].elastic());
    d_contrast[g] = d_domain - d_incl[g];
    if (materials[g].kind == MaterialKind::MohrCoulomb) any_plastic_material = true;
  }

  auto scaled_rows = [&](const std::vector<Mat6>& blocks, const MatX& m) {
    MatX out(6 * ng, m.cols());
    for (int g = 0; g < ng; ++g)
      out.middleRows<6>(6 * g) = blocks[g] * m.middleRows<6>(6 * g);
    return out;
  };
  auto scaled_vec = [&](const std::vector<Mat6>& blocks, const VecX& v) {
    VecX out(6 * ng);
    for (int g = 0; g < ng; ++g)
      out.segment<6>(6 * g) = blocks[g] * v.segment<6>(6 * g);
    return out;
  };

  // Modified Newton-Raphson: the coupled elastic-contrast operator is factored
  // once; the plastic correction iterates on the right-hand side.
  MatX k = MatX::Identity(6 * ng, 6 * ng) - scaled_rows(d_contrast, pre.g_op);
  Eigen::PartialPivLU<MatX> lu_k(k);

  const double tol =
      opts.tol_abs + opts.tol_rel * load.sigma_v.cwiseAbs().maxCoeff();

  SolutionState state;
  VecX sigma0p = VecX::Zero(6 * ng);
  VecX sigma0 = VecX::Zero(6 * ng);
  VecX eps = VecX::Zero(6 * ng);
  std::vector<Mat6> d_tangent = d_contrast;

  bool converged = false;
  for (int it = 1; it <= opts.max_iterations; ++it) {
    if (opts.full_newton && it > 1) {
      // Tangent contrast at yielded points, with the linearisation shift.
      MatX kt =
          MatX::Identity(6 * ng, 6 * ng) - scaled_rows(d_tangent, pre.g_op);
      VecX shift = VecX::Zero(6 * ng);
      for (int g = 0; g < ng; ++g) {
        const Mat6 m = d_tangent[g] - d_contrast[g];
        shift.segment<6>(6 * g) =
            sigma0p.segment<6>(6 * g) - m * eps.segment<6>(6 * g);
      }
      sigma0 = Eigen::PartialPivLU<MatX>(kt).solve(
          scaled_vec(d_tangent, pre.h_op) + shift);
    } else {
      sigma0 = lu_k.solve(scaled_vec(d_contrast, pre.h_op) + sigma0p);
    }
    eps = pre.h_op + pre.g_op * sigma0;

    double update = 0.0;
    VecX sigma0p_new = VecX::Zero(6 * ng);
    for (int g = 0; g < ng; ++g) {
      const Vec6 eps_g = eps.segment<6>(6 * g);
      Vec6 s0_new = d_contrast[g] * eps_g;
      d_tangent[g] = d_contrast[g];
      if (materials[g].kind == MaterialKind::MohrCoulomb) {
        const Vec6 trial = load.sigma_v + d_incl[g] * eps_g;
        const McReturn rm = mc_return(trial, materials[g]);
        if (rm.plastic) {
          sigma0p_new.segment<6>(6 * g) = trial - rm.sigma;
          s0_new += trial - rm.sigma;
          d_tangent[g] = d_domain - rm.d_ep;
        }
      }
      update = std::max(
          update, (s0_new - sigma0.segment<6>(6 * g)).cwiseAbs().maxCoeff());
    }

    state.iterations = it;
    state.update_history.push_back(update);
    sigma0p = sigma0p_new;
    if (update < tol || (!any_plastic_material && it == 1)) {
      converged = true;
      // Make sigma0 consistent with the final constitutive pass.
      sigma0 = lu_k.solve(scaled_vec(d_contrast, pre.h_op) + sigma0p);
      eps = pre.h_op + pre.g_op * sigma0;
      break;
    }
  }
  if (!converged) {
    std::string msg = "initial-stress iteration did not converge; history:";
    for (const double u : state.update_history) msg += " " + std::to_string(u);
    throw SolverError(msg);
  }

  state.sigma0 = sigma0;
  state.u = pre.u0 + pre.x_op * sigma0;
  state.u_grid = pre.a_hat * state.u + pre.c_bar + pre.b0_bar * sigma0;
  state.strain = pre.b_hat * state.u_grid;
  state.total_stress = VecX(6 * ng);
  state.plastic.assign(ng, 0);
  state.yield_value.assign(ng, 0.0);
  for (int g = 0; g < ng; ++g) {
    const Vec6 eps_g = state.strain.segment<6>(6 * g);
    const Vec6 total =
        load.sigma_v + d_domain * eps_g - state.sigma0.segment<6>(6 * g);
    state.total_stress.segment<6>(6 * g) = total;
    if (materials[g].kind == MaterialKind::MohrCoulomb) {
      const double f = mc_yield(total, materials[g]);
      state.yield_value[g] = f;
      const double scale =
          std::max(2.0 * materials[g].cohesion * std::cos(materials[g].friction_angle),
                   1.0);
      state.plastic[g] = f >= -1e-8 * scale ? 1 : 0;
    }
  }
  return state;
}

ReportField report(const SolutionState& state, const GridPointSet& grid) {
  ReportField out;
  const int ng = grid.size();
  out.displacement_magnitude.resize(ng);
  out.yield_flag.resize(ng);
  for (int g = 0; g < ng; ++g) {
    out.displacement_magnitude[g] = state.u_grid.segment<3>(3 * g).norm();
    out.yield_flag[g] = state.plastic.empty() ? 0 : state.plastic[g];
  }
  return out;
}

}  // namespace igabem
