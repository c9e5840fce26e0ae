#include "igabem/splines.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace igabem {

namespace {

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r *= static_cast<double>(n - k + i) / i;
  return r;
}

using Vec4 = Eigen::Vector4d;

std::vector<Vec4> to_homogeneous(const std::vector<Vec3>& pts,
                                 const std::vector<double>& w) {
  std::vector<Vec4> hw(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i)
    hw[i] << pts[i] * w[i], w[i];
  return hw;
}

}  // namespace

KnotVector::KnotVector(std::vector<double> knots, int order)
    : knots_(std::move(knots)), order_(order) {
  if (order_ < 0) throw DomainError("knot vector: negative order");
  if (static_cast<int>(knots_.size()) < 2 * (order_ + 1))
    throw DomainError("knot vector: too few knots for order");
  for (std::size_t i = 1; i < knots_.size(); ++i)
    if (knots_[i] < knots_[i - 1])
      throw DomainError("knot vector: knots must be non-decreasing");
  const double u0 = knots_.front();
  const double u1 = knots_.back();
  if (!(u1 > u0)) throw DomainError("knot vector: zero parameter range");
  if (u0 != 0.0 || u1 != 1.0) {
    for (double& u : knots_) u = (u - u0) / (u1 - u0);
    knots_.front() = 0.0;
    knots_.back() = 1.0;
  }
  const auto mult_front =
      std::count(knots_.begin(), knots_.end(), knots_.front());
  const auto mult_back = std::count(knots_.begin(), knots_.end(), knots_.back());
  if (mult_front != order_ + 1 || mult_back != order_ + 1)
    throw DomainError("knot vector: not open (end multiplicities must equal order+1)");
  if (num_basis() < order_ + 1)
    throw DomainError("knot vector: fewer basis functions than order+1");
}

int KnotVector::find_span(double xi) const {
  const int n = num_basis();
  if (xi >= knots_.back()) return n - 1;
  if (xi <= knots_.front()) return order_;
  auto it = std::upper_bound(knots_.begin(), knots_.end(), xi);
  return static_cast<int>(it - knots_.begin()) - 1;
}

std::vector<double> KnotVector::interior_breaks() const {
  std::vector<double> breaks;
  for (std::size_t i = 1; i + 1 < knots_.size(); ++i) {
    const double u = knots_[i];
    if (u > knots_.front() && u < knots_.back() &&
        (breaks.empty() || u > breaks.back()))
      breaks.push_back(u);
  }
  return breaks;
}

std::vector<double> KnotVector::unique_knots() const {
  std::vector<double> uk{knots_.front()};
  for (const double u : knots_)
    if (u > uk.back()) uk.push_back(u);
  return uk;
}

int KnotVector::multiplicity(double xi, double tol) const {
  int m = 0;
  for (const double u : knots_)
    if (std::abs(u - xi) <= tol) ++m;
  return m;
}

BasisValues basis_and_derivatives(const KnotVector& kv, double xi, int max_deriv) {
  if (xi < kv.front() - 1e-14 || xi > kv.back() + 1e-14)
    throw DomainError("basis evaluation outside knot range");
  xi = std::clamp(xi, kv.front(), kv.back());
  if (max_deriv < 0) throw DomainError("negative derivative order");

  const int p = kv.order();
  const int n = kv.num_basis();
  const auto& u = kv.knots();

  BasisValues out;
  out.d.assign(max_deriv + 1, std::vector<double>(n, 0.0));
  const int span = kv.find_span(xi);
  out.span = span;

  if (p == 0) {
    out.d[0][span] = 1.0;
    return out;
  }

  // Triangular recursion over the p+1 locally supported functions, then the
  // derivative triangle (inverse knot differences stored alongside).
  std::vector<std::vector<double>> ndu(p + 1, std::vector<double>(p + 1, 0.0));
  std::vector<double> left(p + 1, 0.0), right(p + 1, 0.0);
  ndu[0][0] = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = xi - u[span + 1 - j];
    right[j] = u[span + j] - xi;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      ndu[j][r] = right[r + 1] + left[j - r];
      const double temp = ndu[r][j - 1] / ndu[j][r];
      ndu[r][j] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    ndu[j][j] = saved;
  }

  const int base = span - p;
  for (int j = 0; j <= p; ++j) out.d[0][base + j] = ndu[j][p];

  const int nd = std::min(max_deriv, p);  // derivatives beyond order p vanish
  std::vector<std::vector<double>> a(2, std::vector<double>(p + 1, 0.0));
  for (int r = 0; r <= p; ++r) {
    int s1 = 0, s2 = 1;
    a[0][0] = 1.0;
    for (int k = 1; k <= nd; ++k) {
      double d = 0.0;
      const int rk = r - k;
      const int pk = p - k;
      if (r >= k) {
        a[s2][0] = a[s1][0] / ndu[pk + 1][rk];
        d = a[s2][0] * ndu[rk][pk];
      }
      const int j1 = (rk >= -1) ? 1 : -rk;
      const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
      for (int j = j1; j <= j2; ++j) {
        a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][rk + j];
        d += a[s2][j] * ndu[rk + j][pk];
      }
      if (r <= pk) {
        a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
        d += a[s2][k] * ndu[r][pk];
      }
      out.d[k][base + r] = d;
      std::swap(s1, s2);
    }
  }
  double factor = p;
  for (int k = 1; k <= nd; ++k) {
    for (int j = 0; j <= p; ++j) out.d[k][base + j] *= factor;
    factor *= (p - k);
  }
  return out;
}

std::vector<double> greville_abscissae(const KnotVector& kv) {
  const int p = kv.order();
  if (p == 0) throw DomainError("greville abscissae undefined for order 0");
  const auto& u = kv.knots();
  std::vector<double> g(kv.num_basis());
  for (int i = 0; i < kv.num_basis(); ++i) {
    double s = 0.0;
    for (int j = 1; j <= p; ++j) s += u[i + j];
    g[i] = s / p;
  }
  return g;
}

NurbsBasis1d::NurbsBasis1d(KnotVector kv, std::vector<double> weights)
    : kv_(std::move(kv)), weights_(std::move(weights)) {
  if (static_cast<int>(weights_.size()) != kv_.num_basis())
    throw DomainError("weight count must match basis count");
  for (const double w : weights_)
    if (!(w > 0.0)) throw DomainError("weights must be positive");
}

NurbsBasis1d::NurbsBasis1d(KnotVector kv)
    : NurbsBasis1d(std::move(kv),
                   std::vector<double>(static_cast<std::size_t>(kv.num_basis()), 1.0)) {
}

BasisValues NurbsBasis1d::evaluate(double xi, int max_deriv) const {
  const BasisValues bs = basis_and_derivatives(kv_, xi, max_deriv);
  const int n = kv_.num_basis();

  // Derivatives of W(xi) = sum_j N_j w_j, then the generalized quotient rule
  // R^(k) = (A^(k) - sum_{j=1..k} C(k,j) W^(j) R^(k-j)) / W applied per function.
  std::vector<double> W(max_deriv + 1, 0.0);
  for (int k = 0; k <= max_deriv; ++k)
    for (int i = 0; i < n; ++i) W[k] += bs.d[k][i] * weights_[i];
  if (!(W[0] > 0.0)) throw Error("internal: vanishing NURBS denominator");

  BasisValues out;
  out.span = bs.span;
  out.d.assign(max_deriv + 1, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k <= max_deriv; ++k) {
      double v = bs.d[k][i] * weights_[i];
      for (int j = 1; j <= k; ++j) v -= binomial(k, j) * W[j] * out.d[k - j][i];
      out.d[k][i] = v / W[0];
    }
  }
  return out;
}

RefinedCurve insert_knot(const NurbsBasis1d& basis, const std::vector<Vec3>& control,
                         double xi_new) {
  const KnotVector& kv = basis.knot_vector();
  const int p = kv.order();
  const int n = kv.num_basis();
  if (static_cast<int>(control.size()) != n)
    throw DomainError("insert_knot: control count must match basis count");
  if (!(xi_new > kv.front() && xi_new < kv.back()))
    throw DomainError("insert_knot: knot must lie strictly inside the range");
  if (kv.multiplicity(xi_new) >= p)
    throw DomainError("insert_knot: insertion would drop continuity below C0");

  const auto& u = kv.knots();
  const int k = kv.find_span(xi_new);
  const auto hw = to_homogeneous(control, basis.weights());

  std::vector<Vec4> q(n + 1);
  for (int i = 0; i <= k - p; ++i) q[i] = hw[i];
  for (int i = k - p + 1; i <= k; ++i) {
    const double alpha = (xi_new - u[i]) / (u[i + p] - u[i]);
    q[i] = alpha * hw[i] + (1.0 - alpha) * hw[i - 1];
  }
  for (int i = k + 1; i <= n; ++i) q[i] = hw[i - 1];

  std::vector<double> new_knots = u;
  new_knots.insert(new_knots.begin() + k + 1, xi_new);

  std::vector<double> w(n + 1);
  std::vector<Vec3> pts(n + 1);
  for (int i = 0; i <= n; ++i) {
    w[i] = q[i][3];
    pts[i] = q[i].head<3>() / w[i];
  }
  return {NurbsBasis1d(KnotVector(std::move(new_knots), p), std::move(w)),
          std::move(pts)};
}

RefinedCurve elevate_order(const NurbsBasis1d& basis, const std::vector<Vec3>& control,
                           int target_p) {
  const KnotVector& kv = basis.knot_vector();
  const int p = kv.order();
  if (target_p <= p) throw DomainError("elevate_order: target order must exceed current");
  if (static_cast<int>(control.size()) != kv.num_basis())
    throw DomainError("elevate_order: control count must match basis count");
  const int t = target_p - p;

  // Target space: every distinct knot gains multiplicity t, ends get target_p+1.
  // The homogeneous curve lies exactly in that space, so interpolation at the
  // Greville sites of the target basis reproduces it to solver precision.
  std::vector<double> vk;
  for (const double uq : kv.unique_knots()) {
    const int mult =
        (uq == kv.front() || uq == kv.back()) ? target_p + 1 : kv.multiplicity(uq) + t;
    vk.insert(vk.end(), mult, uq);
  }
  KnotVector target(std::move(vk), target_p);
  const int m = target.num_basis();
  const auto sites = greville_abscissae(target);

  const auto hw = to_homogeneous(control, basis.weights());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
  Eigen::MatrixXd rhs(m, 4);
  for (int r = 0; r < m; ++r) {
    const BasisValues tv = basis_and_derivatives(target, sites[r], 0);
    for (int c = 0; c < m; ++c) A(r, c) = tv.d[0][c];
    const BasisValues sv = basis_and_derivatives(kv, sites[r], 0);
    Vec4 cw = Vec4::Zero();
    for (int i = 0; i < kv.num_basis(); ++i) cw += sv.d[0][i] * hw[i];
    rhs.row(r) = cw.transpose();
  }
  Eigen::MatrixXd q = A.partialPivLu().solve(rhs);

  double scale = 1.0;
  for (const auto& h : hw) scale = std::max(scale, h.head<3>().norm());
  const double residual = (A * q - rhs).norm();
  if (residual > 1e-10 * scale)
    throw Error("internal: order elevation interpolation failed");

  std::vector<double> w(m);
  std::vector<Vec3> pts(m);
  for (int i = 0; i < m; ++i) {
    w[i] = q(i, 3);
    if (!(w[i] > 0.0)) throw Error("internal: order elevation produced nonpositive weight");
    pts[i] = q.row(i).head<3>().transpose() / w[i];
  }
  return {NurbsBasis1d(std::move(target), std::move(w)), std::move(pts)};
}

}  // namespace igabem
