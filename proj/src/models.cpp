#include "igabem/models.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace igabem::models {

namespace {

constexpr double kPi = std::numbers::pi;

struct SectionCurve {
  std::array<Vec3, 3> points;  // z = 0 plane
  std::array<double, 3> weights;
};

// Full horseshoe loop: right-half arcs from the profile plus their mirror images,
// ordered tip-to-tail (invert-right, side-right, crown-right, crown-left, ...).
std::vector<SectionCurve> horseshoe_loop(const Eigen::Matrix<double, 2, 3>& centers,
                                         const Vec3& radii) {
  const auto arcs = natm_profile(centers, radii);
  std::vector<SectionCurve> loop;
  for (const int a : {2, 1, 0})
    loop.push_back({arcs[a].points, arcs[a].weights});
  for (const int a : {0, 1, 2}) {
    SectionCurve m;
    for (int i = 0; i < 3; ++i) {
      Vec3 p = arcs[a].points[2 - i];
      p.x() = -p.x();
      m.points[i] = p;
      m.weights[i] = arcs[a].weights[2 - i];
    }
    loop.push_back(m);
  }
  return loop;
}

NurbsSurface extrude(const SectionCurve& c, double z0, double z1) {
  std::vector<Vec3> pts;
  std::vector<double> w;
  for (const double z : {z0, z1})
    for (int i = 0; i < 3; ++i) {
      Vec3 p = c.points[i];
      p.z() = z;
      pts.push_back(p);
      w.push_back(c.weights[i]);
    }
  return NurbsSurface(KnotVector({0, 0, 0, 1, 1, 1}, 2), KnotVector({0, 0, 1, 1}, 1),
                      pts, w);
}

// Flat cap triangle: arc edge blended radially toward the centre, quadratic in the
// radial direction (middle control ring at half radius), collapsed at the centre.
NurbsSurface cap_triangle(const SectionCurve& c, const Vec3& center) {
  std::vector<Vec3> pts;
  std::vector<double> w;
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < 3; ++i) {
      const Vec3 p = c.points[i];
      pts.push_back(j == 0 ? p : (j == 1 ? Vec3(0.5 * (p + center)) : center));
      w.push_back(c.weights[i]);
    }
  return NurbsSurface(KnotVector({0, 0, 0, 1, 1, 1}, 2),
                      KnotVector({0, 0, 0, 1, 1, 1}, 2), pts, w);
}

// Flip the normal sign so n points toward the target at a probe location.
void orient_toward(Patch& p, const Vec3& target) {
  const SurfaceFrame f = p.frame(0.45, 0.45);
  if (f.n.dot(target - f.x) < 0.0) p.set_normal_sign(-p.normal_sign());
}

void orient_along(Patch& p, const Vec3& direction) {
  const SurfaceFrame f = p.frame(0.45, 0.45);
  if (f.n.dot(direction) < 0.0) p.set_normal_sign(-p.normal_sign());
}

// Normals of a tube wall point at the axis through `origin` along `dir`.
void orient_toward_axis(Patch& p, const Vec3& origin, const Vec3& dir) {
  const SurfaceFrame f = p.frame(0.45, 0.45);
  const Vec3 d = dir.normalized();
  const Vec3 foot = origin + d.dot(f.x - origin) * d;
  if (f.n.dot(foot - f.x) < 0.0) p.set_normal_sign(-p.normal_sign());
}

}  // namespace

Eigen::Matrix<double, 2, 3> natm_centers(const Vec3& radii) {
  // Tangency puts the side/invert junction on the line of centers; with the side
  // center on the x axis and the invert center on the y axis this fixes both.
  const double r1 = radii[0], r2 = radii[1], r3 = radii[2];
  if (!(r3 > r2)) throw DomainError("natm centers: invert radius must exceed side");
  const double cx = r1 - r2;  // crown/side tangency on the x axis
  if (!(cx > 0.0)) throw DomainError("natm centers: crown radius must exceed side");
  const double cy = std::sqrt((r3 - r2) * (r3 - r2) - cx * cx);
  Eigen::Matrix<double, 2, 3> m;
  m.col(0) = Vec2(0.0, 0.0);
  m.col(1) = Vec2(cx, 0.0);
  m.col(2) = Vec2(0.0, cy);
  return m;
}

std::vector<Patch> natm_tunnel(const Eigen::Matrix<double, 2, 3>& centers,
                               const Vec3& radii, double length) {
  if (!(length > 0.0)) throw DomainError("natm tunnel: length must be positive");
  const auto loop = horseshoe_loop(centers, radii);

  // Section centroid (mid-height on the symmetry axis) anchors the cap fans.
  const double top = centers(1, 0) + radii[0];
  const double bottom = centers(1, 2) - radii[2];
  const Vec3 center(0.0, 0.5 * (top + bottom), 0.0);

  std::vector<Patch> patches;
  for (const SectionCurve& c : loop) {
    Patch wall = Patch::finite(extrude(c, 0.0, length));
    wall.mark_discontinuous(PatchEdge::EtaMin);
    patches.push_back(std::move(wall));
  }
  for (const SectionCurve& c : loop)
    patches.push_back(Patch::infinite(extrude(c, length, 2.0 * length)));
  for (const SectionCurve& c : loop) {
    Patch cap = Patch::degenerate(cap_triangle(c, center));
    cap.mark_discontinuous(PatchEdge::EtaMin);
    patches.push_back(std::move(cap));
  }

  for (std::size_t i = 0; i < patches.size(); ++i) patches[i].set_id(i);
  for (std::size_t i = 0; i < 12; ++i)
    orient_toward_axis(patches[i], center, Vec3(0, 0, 1));
  for (std::size_t i = 12; i < 18; ++i) orient_along(patches[i], Vec3(0, 0, 1));
  return patches;
}

std::vector<Patch> circular_tunnel(double radius, double half_length) {
  if (!(radius > 0.0 && half_length > 0.0))
    throw DomainError("circular tunnel: radius and length must be positive");
  std::vector<SectionCurve> loop;
  for (int q = 0; q < 4; ++q) {
    const ArcControls arc =
        arc_control_points(Vec2(0, 0), radius, q * kPi / 2, (q + 1) * kPi / 2);
    loop.push_back({arc.points, arc.weights});
  }

  std::vector<Patch> patches;
  for (const SectionCurve& c : loop)
    patches.push_back(Patch::finite(extrude(c, -half_length, half_length)));
  for (const SectionCurve& c : loop)
    patches.push_back(Patch::infinite(extrude(c, half_length, 3.0 * half_length)));
  for (const SectionCurve& c : loop)
    patches.push_back(Patch::infinite(extrude(c, -half_length, -3.0 * half_length)));

  for (std::size_t i = 0; i < patches.size(); ++i) {
    patches[i].set_id(i);
    orient_toward_axis(patches[i], Vec3::Zero(), Vec3(0, 0, 1));
  }
  return patches;
}

std::vector<Patch> sphere(double radius) {
  if (!(radius > 0.0)) throw DomainError("sphere: radius must be positive");
  const double w = std::sqrt(0.5);
  std::vector<Patch> patches;
  for (const double sx : {1.0, -1.0})
    for (const double sy : {1.0, -1.0})
      for (const double sz : {1.0, -1.0}) {
        const Vec3 ex(sx, 0, 0), ey(0, sy, 0), ez(0, 0, sz);
        std::vector<Vec3> pts = {
            ex, ex + ey, ey,                      // equators
            ex + ez, ex + ey + ez, ey + ez,       // mid ring
            ez, ez, ez};                          // pole (collapsed)
        std::vector<double> ws = {1, w, 1, w, 0.5, w, 1, w, 1};
        for (Vec3& p : pts) p *= radius;
        Patch p = Patch::degenerate(NurbsSurface(KnotVector({0, 0, 0, 1, 1, 1}, 2),
                                                 KnotVector({0, 0, 0, 1, 1, 1}, 2),
                                                 pts, ws));
        p.set_id(static_cast<int>(patches.size()));
        orient_toward(p, Vec3::Zero());
        patches.push_back(std::move(p));
      }
  return patches;
}


namespace {

// Quadratic Bezier interpolating three points at t = 0, 0.5, 1.
template <typename V>
std::array<V, 3> quadratic_through(const V& p0, const V& pm, const V& p1) {
  return {p0, V(2.0 * pm - 0.5 * (p0 + p1)), p1};
}

}  // namespace

Borehole borehole(double main_radius, double deviated_radius, double tilt_deg) {
  const double rm = main_radius;
  const double rd = deviated_radius;
  if (!(rm > 0.0 && rd > 0.0 && rd < rm))
    throw DomainError("borehole: radii must satisfy 0 < deviated < main");
  const double alpha = tilt_deg * kPi / 180.0;
  const double s = std::sin(alpha);
  const double c = std::cos(alpha);
  if (!(s > 0.05)) throw DomainError("borehole: tilt too shallow");

  Borehole model;
  model.deviated_direction = Vec3(s, 0.0, c);
  const double zj = rm * c / s;  // deviated axis pierces the wall near here
  model.junction_center = Vec3(rm, 0.0, zj);

  // Hole extent on the main wall (z roots at theta = 0 give the vertical span).
  const auto wall_z = [&](double theta, double sign) {
    const double disc =
        s * s * (rm * rm * std::cos(theta) * std::cos(theta) - rm * rm + rd * rd);
    if (disc < 0.0) return std::numeric_limits<double>::quiet_NaN();
    return (s * c * rm * std::cos(theta) + sign * std::sqrt(disc)) / (s * s);
  };
  const double z_top = wall_z(0.0, 1.0);
  const double z_bot = wall_z(0.0, -1.0);
  const double h = 1.6 * 0.5 * (z_top - z_bot);  // band half-height
  const double z_lo = zj - h, z_hi = zj + h;
  model.band_half_height = h;

  auto extrude_arc = [&](double a0, double a1, double z0, double z1) {
    const ArcControls arc = arc_control_points(Vec2(0, 0), rm, a0, a1);
    std::vector<Vec3> pts;
    std::vector<double> w;
    for (const double z : {z0, z1})
      for (int i = 0; i < 3; ++i) {
        Vec3 p = arc.points[i];
        p.z() = z;
        pts.push_back(p);
        w.push_back(arc.weights[i]);
      }
    return NurbsSurface(KnotVector({0, 0, 0, 1, 1, 1}, 2),
                        KnotVector({0, 0, 1, 1}, 1), pts, w);
  };

  std::vector<Patch>& patches = model.patches;

  // Clean main-wall quarters of the junction band (the +x quarter holds the
  // opening and is covered by trimmed pieces below).
  for (int q = 0; q < 3; ++q) {
    const double a0 = kPi / 4 + q * kPi / 2;
    Patch p = Patch::finite(extrude_arc(a0, a0 + kPi / 2, z_lo, z_hi));
    p.mark_discontinuous(PatchEdge::XiMin);
    p.mark_discontinuous(PatchEdge::XiMax);
    model.main_patch_ids.push_back(static_cast<int>(patches.size()));
    patches.push_back(std::move(p));
  }

  // Opening rim in the parameter square of the +x quarter band.
  const NurbsSurface holed_carrier = extrude_arc(-kPi / 4, kPi / 4, z_lo, z_hi);
  const double theta_max = std::asin(rd / rm);
  auto rim_param = [&](double theta, double sign) {
    const double z = wall_z(theta, sign);
    return Vec2((theta + kPi / 4) / (kPi / 2), (z - z_lo) / (z_hi - z_lo));
  };
  const Vec2 rim_center(0.5, (zj - z_lo) / (z_hi - z_lo));
  // Dense rim sampling (both z branches) for direction anchors.
  std::vector<Vec2> rim;
  const int nrim = 720;
  for (int i = 0; i <= nrim; ++i) {
    const double theta = -theta_max + 2.0 * theta_max * i / nrim;
    for (const double sign : {1.0, -1.0}) {
      const Vec2 p = rim_param(theta, sign);
      if (p.allFinite()) rim.push_back(p);
    }
  }
  auto rim_at_direction = [&](double phi) {
    Vec2 best = rim_center;
    double best_err = 1e300;
    for (const Vec2& p : rim) {
      const Vec2 d = p - rim_center;
      const double err =
          std::abs(std::remainder(std::atan2(d.y(), d.x()) - phi, 2 * kPi));
      if (err < best_err) {
        best_err = err;
        best = p;
      }
    }
    return best;
  };

  // Four quad pieces around the opening: curved rim edge, straight outer edge.
  struct Piece {
    double phi0, phi_mid, phi1;  // rim directions
    Vec2 corner0, corner_mid, corner1;
  };
  const std::array<Piece, 4> pieces = {
      Piece{kPi / 4, kPi / 2, 3 * kPi / 4, Vec2(1, 1), Vec2(0.5, 1), Vec2(0, 1)},
      Piece{3 * kPi / 4, kPi, 5 * kPi / 4, Vec2(0, 1), Vec2(0, 0.5), Vec2(0, 0)},
      Piece{5 * kPi / 4, 3 * kPi / 2, 7 * kPi / 4, Vec2(0, 0), Vec2(0.5, 0),
            Vec2(1, 0)},
      Piece{7 * kPi / 4, 2 * kPi, 9 * kPi / 4, Vec2(1, 0), Vec2(1, 0.5),
            Vec2(1, 1)}};
  for (const Piece& piece : pieces) {
    const auto arcpts = quadratic_through(rim_at_direction(piece.phi0),
                                          rim_at_direction(piece.phi_mid),
                                          rim_at_direction(piece.phi1));
    std::vector<Vec2> tp = {arcpts[0],   arcpts[1],       arcpts[2],
                            piece.corner0, piece.corner_mid, piece.corner1};
    TrimMap trim(KnotVector({0, 0, 0, 1, 1, 1}, 2), KnotVector({0, 0, 1, 1}, 1),
                 tp, std::vector<double>(6, 1.0));
    Patch p = Patch::trimmed(holed_carrier, std::move(trim));
    p.mark_discontinuous_all();
    patches.push_back(std::move(p));
  }

  // Deviated tube: local frame and the root curve t_root(theta_d).
  const Vec3 d_axis = model.deviated_direction;
  const Vec3 e1(c, 0.0, -s);
  const Vec3 e2(0.0, 1.0, 0.0);
  auto tube_point = [&](double theta, double t) {
    return t * d_axis + rd * (std::cos(theta) * e1 + std::sin(theta) * e2);
  };
  auto t_root = [&](double theta) {
    const double py = rd * std::sin(theta);
    return (std::sqrt(rm * rm - py * py) - rd * c * std::cos(theta)) / s;
  };
  double t_min = 1e300, t_max_root = -1e300;
  for (int i = 0; i <= 360; ++i) {
    const double tr = t_root(i * 2 * kPi / 360);
    t_min = std::min(t_min, tr);
    t_max_root = std::max(t_max_root, tr);
  }
  const double t1 = t_max_root + 1.5 * rd;  // end of the trimmed root section
  const double t2 = t1 + 4.0 * rd;          // end of the straight finite section

  auto tube_quarter = [&](int q, double ta, double tb) {
    // Arc of the deviated section mapped into 3-space by the tube frame.
    const double a0 = q * kPi / 2;
    const ArcControls arc = arc_control_points(Vec2(0, 0), rd, a0, a0 + kPi / 2);
    std::vector<Vec3> pts;
    std::vector<double> w;
    for (const double t : {ta, tb})
      for (int i = 0; i < 3; ++i) {
        const Vec2 xy = arc.points[i].head<2>();
        pts.push_back(t * d_axis + xy.x() * e1 + xy.y() * e2);
        w.push_back(arc.weights[i]);
      }
    return NurbsSurface(KnotVector({0, 0, 0, 1, 1, 1}, 2),
                        KnotVector({0, 0, 1, 1}, 1), pts, w);
  };

  // Root pieces: carrier spans [t_min - margin, t1], trimmed back to the
  // intersection curve.
  const double t_base = t_min - 0.05 * (t1 - t_min);
  for (int q = 0; q < 4; ++q) {
    const NurbsSurface carrier = tube_quarter(q, t_base, t1);
    auto root_eta = [&](double theta) {
      return (t_root(theta) - t_base) / (t1 - t_base);
    };
    const double th0 = q * kPi / 2, th1 = (q + 1) * kPi / 2;
    // xi on the quarter arc is not the angle; sample the arc to map angle->xi.
    auto xi_of_theta = [&](double theta) {
      return (theta - th0) / (th1 - th0);
    };
    const auto roots = quadratic_through(
        Vec2(xi_of_theta(th0), root_eta(th0)),
        Vec2(xi_of_theta(0.5 * (th0 + th1)), root_eta(0.5 * (th0 + th1))),
        Vec2(xi_of_theta(th1), root_eta(th1)));
    std::vector<Vec2> tp = {roots[0], roots[1], roots[2],
                            Vec2(0, 1), Vec2(0.5, 1), Vec2(1, 1)};
    TrimMap trim(KnotVector({0, 0, 0, 1, 1, 1}, 2), KnotVector({0, 0, 1, 1}, 1),
                 tp, std::vector<double>(6, 1.0));
    Patch p = Patch::trimmed(carrier, std::move(trim));
    p.mark_discontinuous(PatchEdge::EtaMin);
    model.root_patch_ids.push_back(static_cast<int>(patches.size()));
    patches.push_back(std::move(p));
  }

  // Straight deviated section and its continuation to infinity.
  for (int q = 0; q < 4; ++q)
    patches.push_back(Patch::finite(tube_quarter(q, t1, t2)));
  for (int q = 0; q < 4; ++q)
    patches.push_back(Patch::infinite(tube_quarter(q, t2, t2 + 3.0 * (t2 - t1))));

  // Main bore continuations above and below the band. The +x sectors collocate
  // off the band edge (sharp neighbour is a trimmed piece).
  const double dz = z_hi - z_lo;
  for (int q = 0; q < 4; ++q) {
    const double a0 = -kPi / 4 + q * kPi / 2;
    Patch up = Patch::infinite(extrude_arc(a0, a0 + kPi / 2, z_hi, z_hi + 2 * dz));
    if (q == 0) up.mark_discontinuous(PatchEdge::EtaMin);
    patches.push_back(std::move(up));
  }
  for (int q = 0; q < 4; ++q) {
    const double a0 = -kPi / 4 + q * kPi / 2;
    Patch down = Patch::infinite(extrude_arc(a0, a0 + kPi / 2, z_lo, z_lo - 2 * dz));
    if (q == 0) down.mark_discontinuous(PatchEdge::EtaMin);
    patches.push_back(std::move(down));
  }

  for (std::size_t i = 0; i < patches.size(); ++i) patches[i].set_id(i);
  for (Patch& p : patches) {
    const bool deviated =
        std::find(model.root_patch_ids.begin(), model.root_patch_ids.end(),
                  p.id()) != model.root_patch_ids.end() ||
        (p.id() >= model.root_patch_ids.front() + 4 &&
         p.id() < model.root_patch_ids.front() + 12);
    if (deviated)
      orient_toward_axis(p, Vec3::Zero(), d_axis);
    else
      orient_toward_axis(p, Vec3::Zero(), Vec3(0, 0, 1));
  }
  return model;
}

void insert_wall_knots(std::vector<Patch>& patches, PatchKind kind,
                       const std::vector<double>& eta_values) {
  for (Patch& p : patches)
    if (p.kind() == kind)
      for (const double v : eta_values) p.refine_insert_eta(v);
}

void elevate_wall(std::vector<Patch>& patches, PatchKind kind, int target_order) {
  for (Patch& p : patches)
    if (p.kind() == kind) p.refine_elevate_eta(target_order);
}

}  // namespace igabem::models
