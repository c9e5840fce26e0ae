#pragma once

#include "igabem/core.hpp"

#include <vector>

namespace igabem {

/// Open knot vector on [0,1]. Knots are normalised to [0,1] on construction and the
/// first/last knot must each appear exactly order+1 times.
class KnotVector {
public:
  KnotVector(std::vector<double> knots, int order);

  int order() const { return order_; }
  int num_basis() const { return static_cast<int>(knots_.size()) - order_ - 1; }
  const std::vector<double>& knots() const { return knots_; }
  double front() const { return knots_.front(); }
  double back() const { return knots_.back(); }

  /// Index i of the knot span [u_i, u_i+1) containing xi (last span closed at 1).
  int find_span(double xi) const;

  /// Distinct interior break points (no endpoint, no repetition).
  std::vector<double> interior_breaks() const;

  /// Distinct knot values including endpoints.
  std::vector<double> unique_knots() const;

  int multiplicity(double xi, double tol = 1e-12) const;

  bool operator==(const KnotVector& other) const {
    return order_ == other.order_ && knots_ == other.knots_;
  }

private:
  std::vector<double> knots_;
  int order_ = 0;
};

/// All B-spline basis values N_{i,p}(xi) and derivatives up to max_deriv, indexed
/// [deriv][function]. Functions outside the local support are zero.
struct BasisValues {
  std::vector<std::vector<double>> d;  // d[k][i] = k-th derivative of N_i
  int span = 0;

  const std::vector<double>& values() const { return d[0]; }
  const std::vector<double>& deriv(int k) const { return d[k]; }
};

BasisValues basis_and_derivatives(const KnotVector& kv, double xi, int max_deriv);

/// Greville abscissae, one per basis function; requires order >= 1.
std::vector<double> greville_abscissae(const KnotVector& kv);

/// 1-D NURBS basis: open knot vector plus positive weights, one per function.
class NurbsBasis1d {
public:
  NurbsBasis1d(KnotVector kv, std::vector<double> weights);

  /// All weights equal to one.
  explicit NurbsBasis1d(KnotVector kv);

  const KnotVector& knot_vector() const { return kv_; }
  const std::vector<double>& weights() const { return weights_; }
  int num_basis() const { return kv_.num_basis(); }
  int order() const { return kv_.order(); }

  /// Rational values/derivatives R_{i,p}, same layout as BasisValues.
  BasisValues evaluate(double xi, int max_deriv) const;

private:
  KnotVector kv_;
  std::vector<double> weights_;
};

/// Control polygon refined together with a basis. Rows of `points` are 3-vectors;
/// callers with 2-D data pad with z = 0.
struct RefinedCurve {
  NurbsBasis1d basis;
  std::vector<Vec3> points;
};

/// Inserts xi_new into the basis/control pair without changing the mapped curve.
/// Rejects insertions that would drop continuity below C^0.
RefinedCurve insert_knot(const NurbsBasis1d& basis, const std::vector<Vec3>& control,
                         double xi_new);

/// Raises the order to target_p without changing the mapped curve.
RefinedCurve elevate_order(const NurbsBasis1d& basis, const std::vector<Vec3>& control,
                           int target_p);

}  // namespace igabem
