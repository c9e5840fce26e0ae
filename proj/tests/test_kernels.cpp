#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "igabem/kernels.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace igabem;

namespace {

constexpr double kPi = std::numbers::pi;

// Strain tensor of the Kelvin displacement field by central differences on
// kelvin_u; independent of the analytic kernel_e / kelvin_t paths it checks.
Eigen::Matrix3d fd_strain(const Vec3& y, const Vec3& x, int i,
                          const ElasticConstants& mat, double h = 1e-6) {
  Eigen::Matrix3d grad;  // grad(j,k) = d u_j / d x_k
  for (int k = 0; k < 3; ++k) {
    Vec3 xp = x, xm = x;
    xp[k] += h;
    xm[k] -= h;
    const Mat3 up = kelvin_u(y, xp, mat);
    const Mat3 um = kelvin_u(y, xm, mat);
    for (int j = 0; j < 3; ++j) grad(j, k) = (up(i, j) - um(i, j)) / (2 * h);
  }
  return 0.5 * (grad + grad.transpose());
}

Eigen::Matrix3d voigt_to_tensor(const Vec6& s) {
  Eigen::Matrix3d t;
  t << s[0], s[3], s[5], s[3], s[1], s[4], s[5], s[4], s[2];
  return t;
}

}  // namespace

TEST_CASE("kelvin U is symmetric and 1/r homogeneous") {
  const ElasticConstants mat(10.0, 0.2);
  const Vec3 y(0.3, -0.2, 1.1), x(1.4, 0.8, -0.5);
  const Mat3 u = kelvin_u(y, x, mat);
  CHECK((u - u.transpose()).norm() == 0.0);
  const Mat3 u2 = kelvin_u(y, y + 2.0 * (x - y), mat);
  CHECK((2.0 * u2 - u).norm() < 1e-15 * u.norm());
}

TEST_CASE("kelvin U closed form at unit distance along x") {
  const ElasticConstants mat(10.0, 0.0);
  CHECK(mat.G == doctest::Approx(5.0));
  const Mat3 u = kelvin_u(Vec3::Zero(), Vec3(1, 0, 0), mat);
  const double c = 1.0 / (80.0 * kPi);
  CHECK(u(0, 0) == doctest::Approx(4.0 * c).epsilon(1e-14));
  CHECK(u(1, 1) == doctest::Approx(3.0 * c).epsilon(1e-14));
  CHECK(u(2, 2) == doctest::Approx(3.0 * c).epsilon(1e-14));
  CHECK(std::abs(u(0, 1)) + std::abs(u(0, 2)) + std::abs(u(1, 2)) == 0.0);
}

TEST_CASE("kelvin T is consistent with differentiated U") {
  const ElasticConstants mat(10.0, 0.25);
  const Mat6 d = elastic_d(mat);
  const Vec3 y(0.1, 0.2, -0.3);
  const Vec3 x = y + Vec3(0.6, -0.5, 0.63).normalized();
  const Vec3 n = Vec3(0.3, 1.0, -0.7).normalized();
  const Mat3 t = kelvin_t(y, x, n, mat);
  for (int i = 0; i < 3; ++i) {
    const Eigen::Matrix3d eps = fd_strain(y, x, i, mat);
    Vec6 ev;
    ev << eps(0, 0), eps(1, 1), eps(2, 2), 2 * eps(0, 1), 2 * eps(1, 2),
        2 * eps(0, 2);
    const Vec3 traction = voigt_to_tensor(d * ev) * n;
    for (int j = 0; j < 3; ++j)
      CHECK(t(i, j) == doctest::Approx(traction[j]).epsilon(1e-6));
  }
}

TEST_CASE("kelvin T 1/r^2 homogeneity and linearity in the normal") {
  const ElasticConstants mat(5.0, 0.3);
  const Vec3 y(0, 0, 0), x(0.2, 0.9, 0.4);
  const Vec3 n = Vec3(1, 2, -1).normalized();
  const Mat3 t1 = kelvin_t(y, x, n, mat);
  const Mat3 t2 = kelvin_t(y, 2.0 * x, n, mat);
  CHECK((4.0 * t2 - t1).norm() < 1e-14 * t1.norm());
  const Mat3 tf = kelvin_t(y, x, -n, mat);
  CHECK((tf + t1).norm() == 0.0);
}

TEST_CASE("kernel E matches finite-difference strains of U") {
  const ElasticConstants mat(10.0, 0.25);
  const Vec3 y(0.4, -0.1, 0.2), x(1.2, 0.7, -0.6);
  const Mat36 e = kernel_e(y, x, mat);
  for (int i = 0; i < 3; ++i) {
    const Eigen::Matrix3d eps = fd_strain(y, x, i, mat);
    CHECK(e(i, 0) == doctest::Approx(eps(0, 0)).epsilon(1e-6));
    CHECK(e(i, 1) == doctest::Approx(eps(1, 1)).epsilon(1e-6));
    CHECK(e(i, 2) == doctest::Approx(eps(2, 2)).epsilon(1e-6));
    CHECK(e(i, 3) == doctest::Approx(2 * eps(0, 1)).epsilon(1e-6));
    CHECK(e(i, 4) == doctest::Approx(2 * eps(1, 2)).epsilon(1e-6));
    CHECK(e(i, 5) == doctest::Approx(2 * eps(0, 2)).epsilon(1e-6));
  }
}

TEST_CASE("kernel E homogeneity and constants for G=5, nu=0") {
  const ElasticConstants mat(10.0, 0.0);
  const Vec3 y(0, 0, 0), x(0.3, -0.8, 0.5);
  const Mat36 e1 = kernel_e(y, x, mat);
  const Mat36 e2 = kernel_e(y, 2.0 * x, mat);
  CHECK((4.0 * e2 - e1).norm() < 1e-14 * e1.norm());

  // r along x at unit distance: E_111 = (-C)(2*C3 - 1 + C4) with C = 1/(80 pi).
  const Mat36 ex = kernel_e(Vec3::Zero(), Vec3(1, 0, 0), mat);
  const double c = 1.0 / (80.0 * kPi);
  CHECK(ex(0, 0) == doctest::Approx(-4.0 * c).epsilon(1e-14));
  CHECK(ex(0, 1) == doctest::Approx(c).epsilon(1e-14));   // -C(0 - 1 + 0)
  CHECK(ex(1, 3) == doctest::Approx(-2.0 * c).epsilon(1e-14));
}

TEST_CASE("kernels are translation invariant") {
  const ElasticConstants mat(7.0, 0.1);
  const Vec3 y(0.2, 0.3, 0.4), x(1.0, -0.5, 0.8), shift(3.0, -2.0, 5.0);
  const Vec3 n = Vec3(0, 1, 1).normalized();
  const Mat3 u = kelvin_u(y, x, mat);
  const Mat3 t = kelvin_t(y, x, n, mat);
  const Mat36 e = kernel_e(y, x, mat);
  CHECK((u - kelvin_u(y + shift, x + shift, mat)).norm() < 1e-13 * u.norm());
  CHECK((t - kelvin_t(y + shift, x + shift, n, mat)).norm() < 1e-13 * t.norm());
  CHECK((e - kernel_e(y + shift, x + shift, mat)).norm() < 1e-13 * e.norm());
}

TEST_CASE("kernels reject zero distance") {
  const ElasticConstants mat(1.0, 0.25);
  const Vec3 p(1, 2, 3);
  CHECK_THROWS_AS(kelvin_u(p, p, mat), DomainError);
  CHECK_THROWS_AS(kernel_e(p, p, mat), DomainError);
}

TEST_CASE("virgin traction from the 3x6 normal matrix") {
  VoigtStress uniax = VoigtStress::Zero();
  uniax[2] = -1.0;
  const Vec3 t1 = virgin_traction(Vec3(0, 0, 1), uniax);
  CHECK(t1.isApprox(Vec3(0, 0, -1)));

  VoigtStress shear = VoigtStress::Zero();
  shear[3] = 1.0;
  const Vec3 t2 = virgin_traction(Vec3(1, 0, 0), shear);
  CHECK(t2.isApprox(Vec3(0, 1, 0)));
}

TEST_CASE("virgin traction matches full tensor contraction for a stress regime") {
  VoigtStress sv;
  sv << -121.5, -112.5, -130.5, 0.0, 0.0, 0.0;
  const Vec3 n = Vec3(1, 2, 3).normalized();
  const Vec3 t = virgin_traction(n, sv);
  const Vec3 ref = voigt_to_tensor(sv) * n;
  CHECK((t - ref).norm() < 1e-12 * ref.norm());

  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 20; ++k) {
    VoigtStress s;
    for (int i = 0; i < 6; ++i) s[i] = u(rng);
    const Vec3 m = Vec3(u(rng), u(rng), u(rng)).normalized();
    CHECK((virgin_traction(m, s) - voigt_to_tensor(s) * m).norm() < 1e-14);
  }
}

TEST_CASE("elasticity matrix") {
  const ElasticConstants nu0(10.0, 0.0);
  const Mat6 d0 = elastic_d(nu0);
  CHECK(d0.isApprox(Vec6(10, 10, 10, 5, 5, 5).asDiagonal().toDenseMatrix()));

  const ElasticConstants mat(10000.0, 0.25);
  const Mat6 d = elastic_d(mat);
  CHECK((d - d.transpose()).norm() == 0.0);
  Eigen::SelfAdjointEigenSolver<Mat6> es(d);
  CHECK(es.eigenvalues().minCoeff() > 0.0);

  // Uniaxial strain recovers the lambda / lambda+2G pattern.
  const double lambda = mat.E * mat.nu / ((1 + mat.nu) * (1 - 2 * mat.nu));
  Vec6 eps = Vec6::Zero();
  eps[0] = 1e-3;
  const Vec6 sig = d * eps;
  CHECK(sig[0] == doctest::Approx((lambda + 2 * mat.G) * 1e-3).epsilon(1e-12));
  CHECK(sig[1] == doctest::Approx(lambda * 1e-3).epsilon(1e-12));
  CHECK(sig[2] == doctest::Approx(lambda * 1e-3).epsilon(1e-12));
  CHECK(sig.tail<3>().norm() == 0.0);

  CHECK_THROWS_AS(ElasticConstants(10.0, 0.5), DomainError);
  CHECK_THROWS_AS(ElasticConstants(-1.0, 0.2), DomainError);
}
