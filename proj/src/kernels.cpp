#include "igabem/kernels.hpp"

#include <cmath>
#include <numbers>

namespace igabem {

namespace {

constexpr double kPi = std::numbers::pi;

struct Separation {
  double r;
  Vec3 dr;  // unit gradient of r with respect to the field point
};

Separation separation(const Vec3& source, const Vec3& field) {
  const Vec3 d = field - source;
  const double r = d.norm();
  if (!(r > 0.0)) throw DomainError("kernel evaluated at zero distance");
  return {r, d / r};
}

}  // namespace

Mat3 voigt_to_matrix(const Vec6& v) {
  Mat3 m;
  m << v[0], v[3], v[5], v[3], v[1], v[4], v[5], v[4], v[2];
  return m;
}

Vec6 matrix_to_voigt(const Mat3& m) {
  Vec6 v;
  v << m(0, 0), m(1, 1), m(2, 2), m(0, 1), m(1, 2), m(0, 2);
  return v;
}

Mat36 normal_matrix(const Vec3& n) {
  Mat36 m = Mat36::Zero();
  m(0, 0) = n.x();
  m(0, 3) = n.y();
  m(0, 5) = n.z();
  m(1, 1) = n.y();
  m(1, 3) = n.x();
  m(1, 4) = n.z();
  m(2, 2) = n.z();
  m(2, 4) = n.y();
  m(2, 5) = n.x();
  return m;
}

Vec3 virgin_traction(const Vec3& unit_normal, const VoigtStress& sigma) {
  return normal_matrix(unit_normal) * sigma;
}

Mat6 elastic_d(const ElasticConstants& mat) {
  if (!(mat.nu < 0.5)) throw DomainError("elasticity matrix undefined at nu = 0.5");
  const double lambda = 2.0 * mat.G * mat.nu / (1.0 - 2.0 * mat.nu);
  Mat6 d = Mat6::Zero();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) d(i, j) = lambda;
    d(i, i) = lambda + 2.0 * mat.G;
    d(i + 3, i + 3) = mat.G;
  }
  return d;
}

Mat3 kelvin_u(const Vec3& source, const Vec3& field, const ElasticConstants& mat) {
  const auto [r, dr] = separation(source, field);
  const double c = 1.0 / (16.0 * kPi * mat.G * (1.0 - mat.nu) * r);
  const double c2 = 3.0 - 4.0 * mat.nu;
  Mat3 u;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      u(i, j) = c * ((i == j ? c2 : 0.0) + dr[i] * dr[j]);
  return u;
}

Mat3 kelvin_t(const Vec3& source, const Vec3& field, const Vec3& unit_normal,
              const ElasticConstants& mat) {
  const auto [r, dr] = separation(source, field);
  const double c = -1.0 / (8.0 * kPi * (1.0 - mat.nu) * r * r);
  const double c3 = 1.0 - 2.0 * mat.nu;
  const double drdn = dr.dot(unit_normal);
  Mat3 t;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      t(i, j) = c * (drdn * ((i == j ? c3 : 0.0) + 3.0 * dr[i] * dr[j]) -
                     c3 * (dr[i] * unit_normal[j] - dr[j] * unit_normal[i]));
  return t;
}

Mat36 kernel_e(const Vec3& source, const Vec3& field, const ElasticConstants& mat) {
  const auto [r, dr] = separation(source, field);
  const double c = 1.0 / (16.0 * kPi * mat.G * (1.0 - mat.nu));
  const double c3 = 1.0 - 2.0 * mat.nu;
  const double c4 = 3.0;
  auto tensor = [&](int i, int j, int k) {
    return (-c / (r * r)) *
           (c3 * (dr[k] * (i == j ? 1.0 : 0.0) + dr[j] * (i == k ? 1.0 : 0.0)) -
            dr[i] * (j == k ? 1.0 : 0.0) + c4 * dr[i] * dr[j] * dr[k]);
  };
  Mat36 e;
  for (int i = 0; i < 3; ++i) {
    e(i, 0) = tensor(i, 0, 0);
    e(i, 1) = tensor(i, 1, 1);
    e(i, 2) = tensor(i, 2, 2);
    e(i, 3) = tensor(i, 0, 1) + tensor(i, 1, 0);
    e(i, 4) = tensor(i, 1, 2) + tensor(i, 2, 1);
    e(i, 5) = tensor(i, 0, 2) + tensor(i, 2, 0);
  }
  return e;
}

}  // namespace igabem
