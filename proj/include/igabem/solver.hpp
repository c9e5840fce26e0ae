#pragma once

#include "igabem/bem_assembly.hpp"
#include "igabem/cells.hpp"
#include "igabem/core.hpp"
#include "igabem/kernels.hpp"

#include <Eigen/LU>

#include <vector>

namespace igabem {

enum class MaterialKind { Elastic, MohrCoulomb };

/// Ground material at a grid point. Stresses are tension-positive; the pore
/// pressure shifts the normal components to effective stresses in the yield
/// function.
struct MaterialModel {
  MaterialKind kind = MaterialKind::Elastic;
  double E = 0.0;
  double nu = 0.0;
  double friction_angle = 0.0;  // radians
  double cohesion = 0.0;
  double pore_pressure = 0.0;

  void validate() const;
  ElasticConstants elastic() const { return ElasticConstants(E, nu); }
};

/// Mohr-Coulomb yield value of a total stress state; F <= 0 is elastic.
double mc_yield(const VoigtStress& sigma_total, const MaterialModel& mat);

struct McReturn {
  VoigtStress sigma;  // total stress returned to the yield surface
  Mat6 d_ep;          // consistent elasto-plastic operator of the active return
  bool plastic = false;
};

/// Associated return mapping in principal-stress space (main plane, edge and
/// apex returns).
McReturn mc_return(const VoigtStress& sigma_trial_total, const MaterialModel& mat);

/// Initial stress from an elastic-property contrast.
VoigtStress initial_stress_elastic(const Mat6& d, const Mat6& d_incl,
                                   const VoigtStrain& eps);

/// Everything the nonlinear runs reuse: raw operators plus the compositions
/// that reduce each iteration to matrix products. Depends only on geometry, the
/// infinite-domain constants and the loading (r, c_bar, h).
struct PrecomputedSystem {
  MatX l;
  VecX r;
  MatX a_hat;
  VecX c_bar;
  MatX b0;
  MatX b0_bar;
  MatX b_hat;

  MatX field_a;   // b_hat * a_hat
  VecX field_b;   // b_hat * c_bar
  MatX x_op;      // L^-1 b0
  MatX g_op;      // field_a * x_op + b_hat * b0_bar
  VecX h_op;      // field_a * u0 + field_b
  VecX u0;        // L^-1 r

  int n_d = 0;
  int n_g = 0;
  std::uint64_t checksum = 0;
};

struct PrecomputeTimings {
  double boundary = 0.0;  // L and r
  VolumeTimings volume;
  double compositions = 0.0;
};

PrecomputedSystem precompute(const std::vector<Patch>& patches,
                             const CollocationSet& colloc,
                             const std::vector<Cell>& cells,
                             const GridPointSet& grid, const Loading& load,
                             const ElasticConstants& domain,
                             const SurfaceRuleOptions& surf_opt = {},
                             const VolumeRuleOptions& vol_opt = {},
                             PrecomputeTimings* timings = nullptr);

struct SolverOptions {
  double tol_rel = 1e-6;
  double tol_abs = 0.0;
  int max_iterations = 200;
  bool full_newton = false;
};

struct SolutionState {
  VecX u;             // boundary parameters (n_d)
  VecX u_grid;        // grid displacements (3 n_g)
  VecX strain;        // grid strains (6 n_g)
  VecX sigma0;        // initial stresses (6 n_g)
  VecX total_stress;  // sigma_v + D eps - sigma0 (6 n_g)
  std::vector<char> plastic;
  std::vector<double> yield_value;
  int iterations = 0;
  std::vector<double> update_history;  // max grid-point |d sigma0| per pass
};

/// Initial-stress solution: elastic inclusions in a single coupled solve,
/// Mohr-Coulomb by (modified) Newton-Raphson on the plastic part of sigma0.
SolutionState solve(const PrecomputedSystem& pre,
                    const std::vector<MaterialModel>& materials,
                    const Loading& load, const ElasticConstants& domain,
                    const SolverOptions& opts = {});

/// Per-point output fields of a converged state.
struct ReportField {
  std::vector<double> displacement_magnitude;
  std::vector<int> yield_flag;
};

ReportField report(const SolutionState& state, const GridPointSet& grid);

}  // namespace igabem
