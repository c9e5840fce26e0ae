#include "igabem/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace igabem {

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::Vector4d homogeneous(const Vec3& p, double w) {
  Eigen::Vector4d h;
  h << p * w, w;
  return h;
}

}  // namespace

Vec3 NurbsCurve::point(double xi) const {
  const BasisValues r = basis.evaluate(xi, 0);
  Vec3 x = Vec3::Zero();
  for (int i = 0; i < basis.num_basis(); ++i) x += r.d[0][i] * points[i];
  return x;
}

Vec3 NurbsCurve::tangent(double xi) const {
  const BasisValues r = basis.evaluate(xi, 1);
  Vec3 t = Vec3::Zero();
  for (int i = 0; i < basis.num_basis(); ++i) t += r.d[1][i] * points[i];
  return t;
}

NurbsSurface::NurbsSurface(KnotVector kx, KnotVector ke, std::vector<Vec3> points,
                           std::vector<double> weights)
    : kx_(std::move(kx)),
      ke_(std::move(ke)),
      nx_(kx_.num_basis()),
      ne_(ke_.num_basis()),
      points_(std::move(points)),
      weights_(std::move(weights)) {
  if (static_cast<int>(points_.size()) != nx_ * ne_)
    throw DomainError("surface: control grid size must match basis counts");
  if (weights_.size() != points_.size())
    throw DomainError("surface: one weight per control point required");
  for (const double w : weights_)
    if (!(w > 0.0)) throw DomainError("surface: weights must be positive");
}

NurbsSurface::Basis2d NurbsSurface::basis(double xi, double eta, int max_deriv) const {
  const BasisValues bx = basis_and_derivatives(kx_, xi, std::min(max_deriv, 1));
  const BasisValues be = basis_and_derivatives(ke_, eta, std::min(max_deriv, 1));

  double w = 0.0, w_xi = 0.0, w_eta = 0.0;
  for (int j = 0; j < ne_; ++j) {
    if (be.d[0][j] == 0.0 && (max_deriv < 1 || be.d[1][j] == 0.0)) continue;
    for (int i = 0; i < nx_; ++i) {
      const double wij = weights_[j * nx_ + i];
      w += bx.d[0][i] * be.d[0][j] * wij;
      if (max_deriv >= 1) {
        w_xi += bx.d[1][i] * be.d[0][j] * wij;
        w_eta += bx.d[0][i] * be.d[1][j] * wij;
      }
    }
  }

  Basis2d out;
  out.value.assign(nx_ * ne_, 0.0);
  if (max_deriv >= 1) {
    out.d_xi.assign(nx_ * ne_, 0.0);
    out.d_eta.assign(nx_ * ne_, 0.0);
  }
  for (int j = 0; j < ne_; ++j)
    for (int i = 0; i < nx_; ++i) {
      const int k = j * nx_ + i;
      const double wij = weights_[k];
      const double r = bx.d[0][i] * be.d[0][j] * wij / w;
      out.value[k] = r;
      if (max_deriv >= 1) {
        out.d_xi[k] = (bx.d[1][i] * be.d[0][j] * wij - r * w_xi) / w;
        out.d_eta[k] = (bx.d[0][i] * be.d[1][j] * wij - r * w_eta) / w;
      }
    }
  return out;
}

NurbsSurface::Eval NurbsSurface::evaluate(double xi, double eta) const {
  const Basis2d b = basis(xi, eta, 1);
  Eval e{Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
  for (int k = 0; k < nx_ * ne_; ++k) {
    e.x += b.value[k] * points_[k];
    e.d_xi += b.d_xi[k] * points_[k];
    e.d_eta += b.d_eta[k] * points_[k];
  }
  return e;
}

Vec3 NurbsSurface::point(double xi, double eta) const {
  const Basis2d b = basis(xi, eta, 0);
  Vec3 x = Vec3::Zero();
  for (int k = 0; k < nx_ * ne_; ++k) x += b.value[k] * points_[k];
  return x;
}

NurbsSurface NurbsSurface::insert_knot_xi(double value) const {
  std::vector<Vec3> pts;
  std::vector<double> w;
  KnotVector new_kx = kx_;
  for (int j = 0; j < ne_; ++j) {
    std::vector<Vec3> row(nx_);
    std::vector<double> rw(nx_);
    for (int i = 0; i < nx_; ++i) {
      row[i] = control(i, j);
      rw[i] = weight(i, j);
    }
    RefinedCurve rc = insert_knot(NurbsBasis1d(kx_, rw), row, value);
    if (j == 0) new_kx = rc.basis.knot_vector();
    pts.insert(pts.end(), rc.points.begin(), rc.points.end());
    w.insert(w.end(), rc.basis.weights().begin(), rc.basis.weights().end());
  }
  return NurbsSurface(new_kx, ke_, std::move(pts), std::move(w));
}

NurbsSurface NurbsSurface::insert_knot_eta(double value) const {
  std::vector<Vec3> cols_pts;
  std::vector<double> cols_w;
  KnotVector new_ke = ke_;
  const int new_ne = ne_ + 1;
  cols_pts.resize(static_cast<std::size_t>(nx_) * new_ne);
  cols_w.resize(static_cast<std::size_t>(nx_) * new_ne);
  for (int i = 0; i < nx_; ++i) {
    std::vector<Vec3> col(ne_);
    std::vector<double> cw(ne_);
    for (int j = 0; j < ne_; ++j) {
      col[j] = control(i, j);
      cw[j] = weight(i, j);
    }
    RefinedCurve rc = insert_knot(NurbsBasis1d(ke_, cw), col, value);
    if (i == 0) new_ke = rc.basis.knot_vector();
    for (int j = 0; j < new_ne; ++j) {
      cols_pts[j * nx_ + i] = rc.points[j];
      cols_w[j * nx_ + i] = rc.basis.weights()[j];
    }
  }
  return NurbsSurface(kx_, new_ke, std::move(cols_pts), std::move(cols_w));
}

NurbsSurface NurbsSurface::elevate_xi(int target_order) const {
  std::vector<Vec3> pts;
  std::vector<double> w;
  std::optional<KnotVector> new_kx;
  for (int j = 0; j < ne_; ++j) {
    std::vector<Vec3> row(nx_);
    std::vector<double> rw(nx_);
    for (int i = 0; i < nx_; ++i) {
      row[i] = control(i, j);
      rw[i] = weight(i, j);
    }
    RefinedCurve rc = elevate_order(NurbsBasis1d(kx_, rw), row, target_order);
    if (!new_kx) new_kx = rc.basis.knot_vector();
    pts.insert(pts.end(), rc.points.begin(), rc.points.end());
    w.insert(w.end(), rc.basis.weights().begin(), rc.basis.weights().end());
  }
  return NurbsSurface(*new_kx, ke_, std::move(pts), std::move(w));
}

NurbsSurface NurbsSurface::elevate_eta(int target_order) const {
  std::optional<KnotVector> new_ke;
  std::vector<std::vector<Vec3>> cols_pts(nx_);
  std::vector<std::vector<double>> cols_w(nx_);
  for (int i = 0; i < nx_; ++i) {
    std::vector<Vec3> col(ne_);
    std::vector<double> cw(ne_);
    for (int j = 0; j < ne_; ++j) {
      col[j] = control(i, j);
      cw[j] = weight(i, j);
    }
    RefinedCurve rc = elevate_order(NurbsBasis1d(ke_, cw), col, target_order);
    if (!new_ke) new_ke = rc.basis.knot_vector();
    cols_pts[i] = std::move(rc.points);
    cols_w[i] = rc.basis.weights();
  }
  const int new_ne = new_ke->num_basis();
  std::vector<Vec3> pts(static_cast<std::size_t>(nx_) * new_ne);
  std::vector<double> w(static_cast<std::size_t>(nx_) * new_ne);
  for (int i = 0; i < nx_; ++i)
    for (int j = 0; j < new_ne; ++j) {
      pts[j * nx_ + i] = cols_pts[i][j];
      w[j * nx_ + i] = cols_w[i][j];
    }
  return NurbsSurface(kx_, *new_ke, std::move(pts), std::move(w));
}

Box NurbsSurface::bounding_box() const {
  Box box;
  for (const Vec3& p : points_) box.extend(p);
  return box;
}

TrimMap::TrimMap(KnotVector kx, KnotVector ke, std::vector<Vec2> points,
                 std::vector<double> weights)
    : kx_(std::move(kx)),
      ke_(std::move(ke)),
      nx_(kx_.num_basis()),
      ne_(ke_.num_basis()),
      points_(std::move(points)),
      weights_(std::move(weights)) {
  if (static_cast<int>(points_.size()) != nx_ * ne_)
    throw DomainError("trim map: control grid size must match basis counts");
  if (weights_.size() != points_.size())
    throw DomainError("trim map: one weight per control point required");
  for (const double w : weights_)
    if (!(w > 0.0)) throw DomainError("trim map: weights must be positive");
  for (int s = 0; s <= 12; ++s)
    for (int t = 0; t <= 12; ++t) {
      const Vec2 q = evaluate(s / 12.0, t / 12.0).x;
      if (q.x() < -1e-9 || q.x() > 1 + 1e-9 || q.y() < -1e-9 || q.y() > 1 + 1e-9)
        throw GeometryError("trim map image escapes the parameter square");
    }
}

TrimMap::Eval TrimMap::evaluate(double xi, double eta) const {
  const BasisValues bx = basis_and_derivatives(kx_, xi, 1);
  const BasisValues be = basis_and_derivatives(ke_, eta, 1);
  double w = 0.0, w_xi = 0.0, w_eta = 0.0;
  Vec2 a = Vec2::Zero(), a_xi = Vec2::Zero(), a_eta = Vec2::Zero();
  for (int j = 0; j < ne_; ++j)
    for (int i = 0; i < nx_; ++i) {
      const int k = j * nx_ + i;
      const double wij = weights_[k];
      a += bx.d[0][i] * be.d[0][j] * wij * points_[k];
      a_xi += bx.d[1][i] * be.d[0][j] * wij * points_[k];
      a_eta += bx.d[0][i] * be.d[1][j] * wij * points_[k];
      w += bx.d[0][i] * be.d[0][j] * wij;
      w_xi += bx.d[1][i] * be.d[0][j] * wij;
      w_eta += bx.d[0][i] * be.d[1][j] * wij;
    }
  Eval e;
  e.x = a / w;
  e.jacobian.col(0) = (a_xi - e.x * w_xi) / w;
  e.jacobian.col(1) = (a_eta - e.x * w_eta) / w;
  return e;
}

double infinite_shape(int j, double eta) {
  return j == 0 ? (1.0 - 2.0 * eta) / (1.0 - eta) : eta / (1.0 - eta);
}

double infinite_shape_deriv(int j, double eta) {
  const double d = (1.0 - eta) * (1.0 - eta);
  return j == 0 ? -1.0 / d : 1.0 / d;
}

Patch::Patch(PatchKind kind, NurbsSurface geom, std::optional<TrimMap> trim)
    : kind_(kind),
      geom_(std::move(geom)),
      trim_(std::move(trim)),
      unknown_(trim_ ? NurbsSurface(trim_->knots_xi(), trim_->knots_eta(),
                                    [&] {
                                      std::vector<Vec3> p;
                                      for (const Vec2& q : trim_->control_points())
                                        p.emplace_back(q.x(), q.y(), 0.0);
                                      return p;
                                    }(),
                                    trim_->weights())
                     : geom_) {
  // Scale and bounding box from position samples; infinite patches are sampled up
  // to eta = 0.9 so that near-field culling still sees the trunk of the patch.
  const double eta_cap = kind_ == PatchKind::Infinite ? 0.9 : 1.0;
  for (int s = 0; s <= 8; ++s)
    for (int t = 0; t <= 8; ++t)
      bbox_.extend(position(s / 8.0, eta_cap * t / 8.0));
  scale_ = bbox_.diagonal();
  if (!(scale_ > 0.0)) throw GeometryError("patch has zero extent");
}

Patch Patch::finite(NurbsSurface geometry) {
  return Patch(PatchKind::Finite, std::move(geometry), std::nullopt);
}

Patch Patch::infinite(NurbsSurface geometry) {
  if (geometry.count_eta() != 2)
    throw DomainError("infinite patch: exactly two control rows required");
  for (int i = 0; i < geometry.count_xi(); ++i)
    if (std::abs(geometry.weight(i, 0) - geometry.weight(i, 1)) > 1e-12)
      throw DomainError("infinite patch: weights must match between the two rows");
  return Patch(PatchKind::Infinite, std::move(geometry), std::nullopt);
}

Patch Patch::degenerate(NurbsSurface geometry) {
  Patch p(PatchKind::Degenerate, std::move(geometry), std::nullopt);
  const auto& g = p.geom_;
  const double tol = 1e-12 * std::max(1.0, g.bounding_box().diagonal());
  auto coincident_row = [&](int j) {
    for (int i = 1; i < g.count_xi(); ++i)
      if ((g.control(i, j) - g.control(0, j)).norm() > tol) return false;
    return g.count_xi() >= 3;
  };
  auto coincident_col = [&](int i) {
    for (int j = 1; j < g.count_eta(); ++j)
      if ((g.control(i, j) - g.control(i, 0)).norm() > tol) return false;
    return g.count_eta() >= 3;
  };
  if (coincident_row(g.count_eta() - 1))
    p.degenerate_edge_ = PatchEdge::EtaMax;
  else if (coincident_row(0))
    p.degenerate_edge_ = PatchEdge::EtaMin;
  else if (coincident_col(g.count_xi() - 1))
    p.degenerate_edge_ = PatchEdge::XiMax;
  else if (coincident_col(0))
    p.degenerate_edge_ = PatchEdge::XiMin;
  else
    throw DomainError("degenerate patch: no coincident control edge found");
  return p;
}

Patch Patch::trimmed(NurbsSurface carrier, TrimMap trim) {
  return Patch(PatchKind::Trimmed, std::move(carrier), std::move(trim));
}

const TrimMap& Patch::trim() const {
  if (!trim_) throw DomainError("patch has no trim map");
  return *trim_;
}

void Patch::set_normal_sign(double s) {
  if (s != 1.0 && s != -1.0) throw DomainError("normal sign must be +1 or -1");
  normal_sign_ = s;
}

void Patch::mark_discontinuous_all() {
  for (const PatchEdge e :
       {PatchEdge::XiMin, PatchEdge::XiMax, PatchEdge::EtaMin, PatchEdge::EtaMax})
    discontinuous_.insert(e);
}

Vec3 Patch::position(double xi, double eta) const {
  switch (kind_) {
    case PatchKind::Infinite: {
      if (eta >= 1.0) throw DomainError("infinite patch evaluated at eta = 1");
      std::vector<double> rw(geom_.count_xi());
      for (int i = 0; i < geom_.count_xi(); ++i) rw[i] = geom_.weight(i, 0);
      const BasisValues bx = NurbsBasis1d(geom_.knots_xi(), rw).evaluate(xi, 0);
      Vec3 x = Vec3::Zero();
      for (int j = 0; j < 2; ++j) {
        const double m = infinite_shape(j, eta);
        for (int i = 0; i < geom_.count_xi(); ++i)
          x += bx.d[0][i] * m * geom_.control(i, j);
      }
      return x;
    }
    case PatchKind::Trimmed: {
      const Vec2 q = trim_->evaluate(xi, eta).x;
      return geom_.point(std::clamp(q.x(), 0.0, 1.0), std::clamp(q.y(), 0.0, 1.0));
    }
    default:
      return geom_.point(xi, eta);
  }
}

SurfaceFrame Patch::frame(double xi, double eta) const {
  SurfaceFrame f;
  switch (kind_) {
    case PatchKind::Infinite: {
      if (eta >= 1.0 - 1e-12)
        throw DomainError("infinite patch frame at eta = 1 (Jacobian unbounded)");
      std::vector<double> rw(geom_.count_xi());
      for (int i = 0; i < geom_.count_xi(); ++i) rw[i] = geom_.weight(i, 0);
      const BasisValues bx = NurbsBasis1d(geom_.knots_xi(), rw).evaluate(xi, 1);
      f.x = f.v_xi = f.v_eta = Vec3::Zero();
      for (int j = 0; j < 2; ++j) {
        const double m = infinite_shape(j, eta);
        const double dm = infinite_shape_deriv(j, eta);
        for (int i = 0; i < geom_.count_xi(); ++i) {
          const Vec3& c = geom_.control(i, j);
          f.x += bx.d[0][i] * m * c;
          f.v_xi += bx.d[1][i] * m * c;
          f.v_eta += bx.d[0][i] * dm * c;
        }
      }
      break;
    }
    case PatchKind::Trimmed: {
      const TrimMap::Eval t = trim_->evaluate(xi, eta);
      if (t.x.x() < -1e-9 || t.x.x() > 1 + 1e-9 || t.x.y() < -1e-9 ||
          t.x.y() > 1 + 1e-9)
        throw GeometryError("trim image escapes the carrier square");
      const NurbsSurface::Eval s = geom_.evaluate(std::clamp(t.x.x(), 0.0, 1.0),
                                                  std::clamp(t.x.y(), 0.0, 1.0));
      f.x = s.x;
      f.v_xi = s.d_xi * t.jacobian(0, 0) + s.d_eta * t.jacobian(1, 0);
      f.v_eta = s.d_xi * t.jacobian(0, 1) + s.d_eta * t.jacobian(1, 1);
      break;
    }
    default: {
      const NurbsSurface::Eval s = geom_.evaluate(xi, eta);
      f.x = s.x;
      f.v_xi = s.d_xi;
      f.v_eta = s.d_eta;
      break;
    }
  }
  const Vec3 cross = f.v_xi.cross(f.v_eta);
  f.jacobian = cross.norm();
  if (kind_ == PatchKind::Degenerate && f.jacobian <= 1e-12 * scale_ * scale_)
    throw DomainError("frame evaluated at the degenerate point");
  if (!(f.jacobian > 0.0)) throw GeometryError("vanishing surface Jacobian");
  f.n = normal_sign_ * cross / f.jacobian;
  return f;
}

Patch::FieldBasis Patch::field_basis(double xi, double eta) const {
  FieldBasis fb;
  if (kind_ == PatchKind::Infinite) {
    std::vector<double> rw(unknown_.count_xi());
    for (int i = 0; i < unknown_.count_xi(); ++i) rw[i] = unknown_.weight(i, 0);
    const BasisValues bx = NurbsBasis1d(unknown_.knots_xi(), rw).evaluate(xi, 1);
    fb.value = bx.d[0];
    fb.d_xi = bx.d[1];
    fb.d_eta.assign(fb.value.size(), 0.0);
    return fb;
  }
  const NurbsSurface::Basis2d b = unknown_.basis(xi, eta, 1);
  fb.value = b.value;
  fb.d_xi = b.d_xi;
  fb.d_eta = b.d_eta;
  return fb;
}

int Patch::num_field_params() const {
  return kind_ == PatchKind::Infinite ? unknown_.count_xi() : unknown_.count();
}

Vec2 Patch::anchor(int k) const {
  const auto gx = greville_abscissae(unknown_.knots_xi());
  if (kind_ == PatchKind::Infinite) return Vec2(gx[k], 0.0);
  const auto ge = greville_abscissae(unknown_.knots_eta());
  const int i = k % unknown_.count_xi();
  const int j = k / unknown_.count_xi();
  return Vec2(gx[i], ge[j]);
}

void Patch::refine_insert_xi(double value) { unknown_ = unknown_.insert_knot_xi(value); }

void Patch::refine_insert_eta(double value) {
  if (kind_ == PatchKind::Infinite)
    throw DomainError("infinite patch: unknown basis refinable in xi only");
  unknown_ = unknown_.insert_knot_eta(value);
}

void Patch::refine_elevate_xi(int target_order) {
  unknown_ = unknown_.elevate_xi(target_order);
}

void Patch::refine_elevate_eta(int target_order) {
  if (kind_ == PatchKind::Infinite)
    throw DomainError("infinite patch: unknown basis refinable in xi only");
  unknown_ = unknown_.elevate_eta(target_order);
}

NurbsCurve ArcControls::curve() const {
  return NurbsCurve{
      NurbsBasis1d(KnotVector({0, 0, 0, 1, 1, 1}, 2),
                   {weights[0], weights[1], weights[2]}),
      {points[0], points[1], points[2]}};
}

ArcControls arc_control_points(const Vec2& center, double radius, double alpha1,
                               double alpha2) {
  if (!(radius > 0.0)) throw DomainError("arc: radius must be positive");
  const double sweep = alpha2 - alpha1;
  if (!(sweep > 0.0 && sweep < kPi))
    throw DomainError("arc: sweep must lie strictly between 0 and pi");
  const double alpha = 0.5 * sweep;
  ArcControls arc;
  const Vec2 c1(center.x() + radius * std::cos(alpha1),
                center.y() + radius * std::sin(alpha1));
  const Vec2 c2(c1.x() - radius * std::tan(alpha) * std::sin(alpha1),
                c1.y() + radius * std::tan(alpha) * std::cos(alpha1));
  const Vec2 c3(center.x() + radius * std::cos(alpha2),
                center.y() + radius * std::sin(alpha2));
  arc.points = {Vec3(c1.x(), c1.y(), 0.0), Vec3(c2.x(), c2.y(), 0.0),
                Vec3(c3.x(), c3.y(), 0.0)};
  arc.weights = {1.0, std::cos(alpha), 1.0};
  return arc;
}

std::array<ArcControls, 3> natm_profile(const Eigen::Matrix<double, 2, 3>& m,
                                        const Vec3& radii) {
  for (int i = 0; i < 3; ++i)
    if (!(radii[i] > 0.0)) throw DomainError("natm profile: radii must be positive");
  const double dx = m(0, 1) - m(0, 2);
  const double dy = m(1, 1) - m(1, 2);
  if (dy == 0.0)
    throw DomainError("natm profile: side and invert centers may not share y");
  const double phi = std::abs(std::atan(dx / dy));
  if (!std::isfinite(phi) || phi <= 0.0 || phi >= kPi / 2)
    throw DomainError("natm profile: invalid junction angle");

  std::array<ArcControls, 3> arcs = {
      arc_control_points(m.col(0), radii[0], 0.0, kPi / 2),
      arc_control_points(m.col(1), radii[1], 1.5 * kPi + phi, 2.0 * kPi),
      arc_control_points(m.col(2), radii[2], 1.5 * kPi, 1.5 * kPi + phi)};

  const double tol = 1e-10 * std::max(1.0, radii.maxCoeff());
  if ((arcs[1].points[2] - arcs[0].points[0]).norm() > tol ||
      (arcs[2].points[2] - arcs[1].points[0]).norm() > tol)
    throw DomainError("natm profile: arcs do not join (inconsistent centers/radii)");
  return arcs;
}

namespace {

// Parameter clamp boxes keep Newton away from non-evaluable points.
void clamp_params(const Patch& patch, double& xi, double& eta) {
  xi = std::clamp(xi, 0.0, 1.0);
  double eta_max = 1.0;
  if (patch.kind() == PatchKind::Infinite) eta_max = 0.97;
  eta = std::clamp(eta, 0.0, eta_max);
  if (patch.kind() == PatchKind::Degenerate) {
    const double d = 1e-6;
    switch (*patch.degenerate_edge()) {
      case PatchEdge::EtaMax: eta = std::min(eta, 1.0 - d); break;
      case PatchEdge::EtaMin: eta = std::max(eta, d); break;
      case PatchEdge::XiMax: xi = std::min(xi, 1.0 - d); break;
      case PatchEdge::XiMin: xi = std::max(xi, d); break;
    }
  }
}

bool ray_hits_box(const Box& box, const Vec3& origin, const Vec3& dir) {
  double t0 = 0.0, t1 = 1e300;
  for (int a = 0; a < 3; ++a) {
    if (std::abs(dir[a]) < 1e-300) {
      if (origin[a] < box.min[a] || origin[a] > box.max[a]) return false;
      continue;
    }
    double lo = (box.min[a] - origin[a]) / dir[a];
    double hi = (box.max[a] - origin[a]) / dir[a];
    if (lo > hi) std::swap(lo, hi);
    t0 = std::max(t0, lo);
    t1 = std::min(t1, hi);
    if (t0 > t1) return false;
  }
  return true;
}

}  // namespace

std::vector<RayHit> ray_surface_intersection(const Patch& patch, const Vec3& origin,
                                             const Vec3& direction) {
  const double dnorm = direction.norm();
  if (!(dnorm > 0.0)) throw DomainError("ray direction must be non-zero");
  const Vec3 d = direction / dnorm;

  Box box = patch.bounding_box();
  box.inflate(0.05 * patch.scale());
  std::vector<RayHit> hits;
  if (!ray_hits_box(box, origin, d)) return hits;

  const double tol = 1e-10 * std::max(1.0, patch.scale());
  for (int si = 0; si < 4; ++si)
    for (int sj = 0; sj < 4; ++sj) {
      double xi = 0.125 + 0.25 * si;
      double eta = 0.125 + 0.25 * sj;
      clamp_params(patch, xi, eta);
      double t = (patch.position(xi, eta) - origin).dot(d);
      bool converged = false;
      Vec3 residual = Vec3::Zero();
      for (int it = 0; it < 60; ++it) {
        SurfaceFrame f;
        try {
          f = patch.frame(xi, eta);
        } catch (const Error&) {
          break;
        }
        residual = f.x - origin - t * d;
        if (residual.norm() < tol) {
          converged = true;
          break;
        }
        Mat3 jac;
        jac.col(0) = f.v_xi;
        jac.col(1) = f.v_eta;
        jac.col(2) = -d;
        const Vec3 step = jac.fullPivLu().solve(-residual);
        if (!step.allFinite()) break;
        double lambda = 1.0;
        const double base = residual.norm();
        for (int cut = 0; cut < 8; ++cut) {
          double nxi = xi + lambda * step[0];
          double neta = eta + lambda * step[1];
          double nt = t + lambda * step[2];
          clamp_params(patch, nxi, neta);
          Vec3 r2;
          try {
            r2 = patch.position(nxi, neta) - origin - nt * d;
          } catch (const Error&) {
            lambda *= 0.5;
            continue;
          }
          if (r2.norm() < base || lambda < 1e-3) {
            xi = nxi;
            eta = neta;
            t = nt;
            break;
          }
          lambda *= 0.5;
        }
      }
      if (!converged) continue;
      if (t < -1e-9 * patch.scale()) continue;
      t = std::max(t, 0.0);
      bool duplicate = false;
      for (const RayHit& h : hits)
        if (std::hypot(h.xi - xi, h.eta - eta) < 1e-7) duplicate = true;
      if (duplicate) continue;
      RayHit hit{t, xi, eta, false};
      try {
        hit.grazing = std::abs(patch.frame(xi, eta).n.dot(d)) < 1e-3;
      } catch (const Error&) {
      }
      hits.push_back(hit);
    }
  std::sort(hits.begin(), hits.end(),
            [](const RayHit& a, const RayHit& b) { return a.t < b.t; });
  return hits;
}

ClosestPoint closest_point(const Patch& patch, const Vec3& x) {
  ClosestPoint best;
  best.distance = 1e300;
  for (int si = 0; si <= 2; ++si)
    for (int sj = 0; sj <= 2; ++sj) {
      double xi = si / 2.0;
      double eta = sj / 2.0;
      clamp_params(patch, xi, eta);
      for (int it = 0; it < 30; ++it) {
        SurfaceFrame f;
        try {
          f = patch.frame(xi, eta);
        } catch (const Error&) {
          break;
        }
        const Vec3 r = x - f.x;
        Eigen::Matrix<double, 3, 2> a;
        a.col(0) = f.v_xi;
        a.col(1) = f.v_eta;
        Vec2 step = (a.transpose() * a).ldlt().solve(a.transpose() * r);
        if (!step.allFinite() || step.norm() < 1e-14) break;
        if (step.norm() > 0.5) step *= 0.5 / step.norm();
        double lambda = 1.0;
        bool moved = false;
        for (int cut = 0; cut < 10; ++cut) {
          double nxi = xi + lambda * step[0];
          double neta = eta + lambda * step[1];
          clamp_params(patch, nxi, neta);
          if ((x - patch.position(nxi, neta)).norm() <= r.norm()) {
            moved = std::abs(nxi - xi) > 1e-15 || std::abs(neta - eta) > 1e-15;
            xi = nxi;
            eta = neta;
            break;
          }
          lambda *= 0.5;
        }
        if (!moved) break;
      }
      try {
        const double dist = (patch.position(xi, eta) - x).norm();
        if (dist < best.distance) best = {xi, eta, dist};
      } catch (const Error&) {
      }
    }
  return best;
}

}  // namespace igabem
