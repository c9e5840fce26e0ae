#pragma once

#include "igabem/core.hpp"
#include "igabem/splines.hpp"

#include <array>
#include <optional>
#include <set>
#include <vector>

namespace igabem {

/// Rational curve in 3-space.
struct NurbsCurve {
  NurbsBasis1d basis;
  std::vector<Vec3> points;

  Vec3 point(double xi) const;
  Vec3 tangent(double xi) const;
};

/// Axis-aligned bounding box.
struct Box {
  Vec3 min = Vec3::Constant(1e300);
  Vec3 max = Vec3::Constant(-1e300);

  void extend(const Vec3& p) {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }
  void inflate(double margin) {
    min -= Vec3::Constant(margin);
    max += Vec3::Constant(margin);
  }
  double diagonal() const { return (max - min).norm(); }
  bool contains(const Vec3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
};

/// Tensor-product NURBS surface. Control points are stored xi-fastest:
/// index(i, j) = j * count_xi + i.
class NurbsSurface {
public:
  NurbsSurface(KnotVector kx, KnotVector ke, std::vector<Vec3> points,
               std::vector<double> weights);

  const KnotVector& knots_xi() const { return kx_; }
  const KnotVector& knots_eta() const { return ke_; }
  int count_xi() const { return nx_; }
  int count_eta() const { return ne_; }
  int count() const { return nx_ * ne_; }
  const Vec3& control(int i, int j) const { return points_[j * nx_ + i]; }
  double weight(int i, int j) const { return weights_[j * nx_ + i]; }
  const std::vector<Vec3>& control_points() const { return points_; }
  const std::vector<double>& weights() const { return weights_; }

  struct Eval {
    Vec3 x;
    Vec3 d_xi;
    Vec3 d_eta;
  };
  Eval evaluate(double xi, double eta) const;
  Vec3 point(double xi, double eta) const;

  /// 2-D rational basis values (and first derivatives) at (xi, eta), laid out
  /// like the control net.
  struct Basis2d {
    std::vector<double> value, d_xi, d_eta;
  };
  Basis2d basis(double xi, double eta, int max_deriv) const;

  NurbsSurface insert_knot_xi(double value) const;
  NurbsSurface insert_knot_eta(double value) const;
  NurbsSurface elevate_xi(int target_order) const;
  NurbsSurface elevate_eta(int target_order) const;

  Box bounding_box() const;

private:
  KnotVector kx_, ke_;
  int nx_ = 0, ne_ = 0;
  std::vector<Vec3> points_;
  std::vector<double> weights_;
};

/// Parametric re-map (xi, eta) -> (xi_hat, eta_hat) restricting a carrier surface.
/// The image of the unit square must stay inside the unit square.
class TrimMap {
public:
  TrimMap(KnotVector kx, KnotVector ke, std::vector<Vec2> points,
          std::vector<double> weights);

  struct Eval {
    Vec2 x;
    Eigen::Matrix2d jacobian;  // columns: d/dxi, d/deta
  };
  Eval evaluate(double xi, double eta) const;

  const KnotVector& knots_xi() const { return kx_; }
  const KnotVector& knots_eta() const { return ke_; }
  int count_xi() const { return nx_; }
  int count_eta() const { return ne_; }
  const std::vector<Vec2>& control_points() const { return points_; }
  const std::vector<double>& weights() const { return weights_; }

private:
  KnotVector kx_, ke_;
  int nx_ = 0, ne_ = 0;
  std::vector<Vec2> points_;
  std::vector<double> weights_;
};

enum class PatchKind { Finite, Infinite, Degenerate, Trimmed };
enum class PatchEdge { XiMin, XiMax, EtaMin, EtaMax };

/// Point, tangents, unit normal and area Jacobian of a patch map.
struct SurfaceFrame {
  Vec3 x;
  Vec3 v_xi;
  Vec3 v_eta;
  Vec3 n;
  double jacobian = 0.0;
};

double infinite_shape(int j, double eta);        // M1, M2 for j = 0, 1
double infinite_shape_deriv(int j, double eta);  // their eta derivatives

/// Boundary geometry unit. Carries the geometry map, the (independently refinable)
/// basis for the unknown field, and collocation discontinuity flags.
class Patch {
public:
  static Patch finite(NurbsSurface geometry);
  /// Geometry must have exactly two eta control rows; the second row fixes the
  /// direction to infinity (reached as eta -> 1, row itself sits at eta = 0.5).
  static Patch infinite(NurbsSurface geometry);
  static Patch degenerate(NurbsSurface geometry);
  static Patch trimmed(NurbsSurface carrier, TrimMap trim);

  PatchKind kind() const { return kind_; }
  int id() const { return id_; }
  void set_id(int id) { id_ = id; }
  double normal_sign() const { return normal_sign_; }
  void set_normal_sign(double s);
  const NurbsSurface& geometry() const { return geom_; }
  const TrimMap& trim() const;
  std::optional<PatchEdge> degenerate_edge() const { return degenerate_edge_; }

  void mark_discontinuous(PatchEdge edge) { discontinuous_.insert(edge); }
  void mark_discontinuous_all();
  const std::set<PatchEdge>& discontinuous_edges() const { return discontinuous_; }

  /// Position of the surface map; valid everywhere including degenerate corners.
  Vec3 position(double xi, double eta) const;

  /// Full frame; throws DomainError at infinite-patch eta = 1 and at degenerate
  /// points, GeometryError when a trim image escapes the carrier square.
  SurfaceFrame frame(double xi, double eta) const;

  /// Unknown-field approximation.
  struct FieldBasis {
    std::vector<double> value, d_xi, d_eta;
  };
  FieldBasis field_basis(double xi, double eta) const;
  int num_field_params() const;
  /// Anchor (Greville) parameter location of field parameter k.
  Vec2 anchor(int k) const;

  void refine_insert_xi(double value);
  void refine_insert_eta(double value);
  void refine_elevate_xi(int target_order);
  void refine_elevate_eta(int target_order);
  const NurbsSurface& unknown_surface() const { return unknown_; }

  double scale() const { return scale_; }
  const Box& bounding_box() const { return bbox_; }

private:
  Patch(PatchKind kind, NurbsSurface geom, std::optional<TrimMap> trim);

  PatchKind kind_;
  NurbsSurface geom_;
  std::optional<TrimMap> trim_;
  NurbsSurface unknown_;
  std::optional<PatchEdge> degenerate_edge_;
  std::set<PatchEdge> discontinuous_;
  int id_ = -1;
  double normal_sign_ = 1.0;
  Box bbox_;
  double scale_ = 0.0;
};

/// Control points, weights and knot vector describing a circular arc of less than
/// half a turn in the z = 0 plane.
struct ArcControls {
  std::array<Vec3, 3> points;
  std::array<double, 3> weights;

  NurbsCurve curve() const;
};

ArcControls arc_control_points(const Vec2& center, double radius, double alpha1,
                               double alpha2);

/// Three tangent-continuous arcs describing half a horseshoe tunnel profile from
/// the arc centers (columns of m) and radii. Column/radius order: crown, side,
/// invert. Throws DomainError for inconsistent input.
std::array<ArcControls, 3> natm_profile(const Eigen::Matrix<double, 2, 3>& m,
                                        const Vec3& radii);

struct RayHit {
  double t = 0.0;
  double xi = 0.0;
  double eta = 0.0;
  bool grazing = false;
};

/// All intersections of the ray origin + t*direction (t >= 0) with the patch.
/// Multi-start damped Newton; an empty result means no convergent intersection.
std::vector<RayHit> ray_surface_intersection(const Patch& patch, const Vec3& origin,
                                             const Vec3& direction);

struct ClosestPoint {
  double xi = 0.0;
  double eta = 0.0;
  double distance = 0.0;
};

/// Closest point on the patch to x (Gauss-Newton from a seed grid).
ClosestPoint closest_point(const Patch& patch, const Vec3& x);

}  // namespace igabem
