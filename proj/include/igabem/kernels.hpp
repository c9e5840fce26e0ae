#pragma once

#include "igabem/core.hpp"

namespace igabem {

/// Isotropic elastic constants. Tension is positive throughout the library;
/// compressive stresses are entered as negative numbers.
struct ElasticConstants {
  double E = 0.0;
  double nu = 0.0;
  double G = 0.0;

  ElasticConstants(double modulus, double poisson) : E(modulus), nu(poisson) {
    if (!(E > 0.0)) throw DomainError("elastic constants: E must be positive");
    if (!(nu > -1.0 && nu < 0.5))
      throw DomainError("elastic constants: nu must lie in (-1, 0.5)");
    G = E / (2.0 * (1.0 + nu));
  }
};

/// Voigt 6-vectors, component order (x, y, z, xy, yz, xz).
/// Strains carry engineering shear.
using VoigtStress = Vec6;
using VoigtStrain = Vec6;

Mat3 voigt_to_matrix(const Vec6& v);
Vec6 matrix_to_voigt(const Mat3& m);

/// 3x6 matrix n(x) mapping a Voigt stress to the traction on a plane with unit
/// normal n: rows follow [nx 0 0 ny 0 nz; 0 ny 0 nx nz 0; 0 0 nz 0 ny nx].
Mat36 normal_matrix(const Vec3& n);

/// Traction of a (virgin) stress state on the plane with the given unit normal.
Vec3 virgin_traction(const Vec3& unit_normal, const VoigtStress& sigma);

/// Isotropic Hooke matrix (engineering shear): sigma = D eps.
Mat6 elastic_d(const ElasticConstants& mat);

/// Kelvin displacement kernel: row i = source direction, column j = displacement
/// component at the field point. Symmetric, decays as 1/r.
Mat3 kelvin_u(const Vec3& source, const Vec3& field, const ElasticConstants& mat);

/// Kelvin traction kernel on the plane with unit normal at the field point.
/// Row i = source direction, column j = traction component. Decays as 1/r^2.
Mat3 kelvin_t(const Vec3& source, const Vec3& field, const Vec3& unit_normal,
              const ElasticConstants& mat);

/// Kelvin strain kernel in Voigt packing: row i = source direction, columns pack
/// the strain tensor with the two off-diagonal contributions summed. Decays as 1/r^2.
Mat36 kernel_e(const Vec3& source, const Vec3& field, const ElasticConstants& mat);

}  // namespace igabem
