#include "igabem/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

namespace igabem {

namespace {

GaussRule compute_gauss(int n) {
  GaussRule rule;
  rule.x.resize(n);
  rule.w.resize(n);
  for (int i = 0; i < n; ++i) {
    double t = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double p1 = 0.0, dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      p1 = t;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (t * p1 - p0) / (t * t - 1.0);
      const double dt = p1 / dp;
      t -= dt;
      if (std::abs(dt) < 1e-16) break;
    }
    rule.x[i] = 0.5 * (1.0 + t);
    rule.w[i] = 1.0 / ((1.0 - t * t) * dp * dp);
  }
  return rule;
}

}  // namespace

const GaussRule& gauss_rule(int n) {
  static std::mutex mutex;
  static std::map<int, GaussRule> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, compute_gauss(n)).first;
  return it->second;
}

int gauss_count_for_proximity(double r_over_l, double scale) {
  const double rho = r_over_l / scale;
  if (rho >= 4.0) return 2;
  if (rho >= 2.0) return 3;
  if (rho >= 1.0) return 4;
  if (rho >= 0.5) return 5;
  return 0;
}

namespace {

struct ParamCell {
  double xi0, xi1, eta0, eta1;
  int depth = 0;
};

// Physical proximity and extents of a parametric cell, from a 3x3 position sample.
struct CellMetrics {
  double r_min;
  double l_xi;
  double l_eta;
};

CellMetrics cell_metrics(const Patch& patch, const ParamCell& c, const Vec3& y) {
  CellMetrics m{1e300, 0.0, 0.0};
  std::array<std::array<Vec3, 3>, 3> s;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      const double xi = c.xi0 + 0.5 * a * (c.xi1 - c.xi0);
      const double eta = c.eta0 + 0.5 * b * (c.eta1 - c.eta0);
      s[a][b] = patch.position(xi, eta);
      m.r_min = std::min(m.r_min, (s[a][b] - y).norm());
    }
  for (int b = 0; b < 3; ++b)
    m.l_xi = std::max(m.l_xi, (s[2][b] - s[0][b]).norm());
  for (int a = 0; a < 3; ++a)
    m.l_eta = std::max(m.l_eta, (s[a][2] - s[a][0]).norm());
  return m;
}

void emit_product(const ParamCell& c, int nx, int ne, std::vector<SurfQP>& out) {
  const GaussRule& gx = gauss_rule(nx);
  const GaussRule& ge = gauss_rule(ne);
  const double dx = c.xi1 - c.xi0;
  const double de = c.eta1 - c.eta0;
  for (int a = 0; a < nx; ++a)
    for (int b = 0; b < ne; ++b)
      out.push_back({c.xi0 + gx.x[a] * dx, c.eta0 + ge.x[b] * de,
                     gx.w[a] * ge.w[b] * dx * de});
}

// Fan a cell into collapsed triangles anchored at s; each triangle spans one cell
// edge, mapped by a bilinear quad whose Jacobian vanishes at s.
void emit_singular_fan(const ParamCell& c, const Vec2& s, int n,
                       std::vector<SurfQP>& out) {
  const std::array<Vec2, 4> corner = {Vec2(c.xi0, c.eta0), Vec2(c.xi1, c.eta0),
                                      Vec2(c.xi1, c.eta1), Vec2(c.xi0, c.eta1)};
  const GaussRule& g = gauss_rule(n);
  for (int e = 0; e < 4; ++e) {
    const Vec2 a = corner[e];
    const Vec2 b = corner[(e + 1) % 4];
    const double area =
        0.5 * std::abs((b.x() - a.x()) * (s.y() - a.y()) -
                       (s.x() - a.x()) * (b.y() - a.y()));
    if (area < 1e-14) continue;  // singular point on this edge
    for (int iu = 0; iu < n; ++iu)
      for (int iv = 0; iv < n; ++iv) {
        const double u = g.x[iu];
        const double v = g.x[iv];
        const Vec2 base = (1.0 - u) * a + u * b;
        const Vec2 q = (1.0 - v) * base + v * s;
        const Vec2 dqu = (1.0 - v) * (b - a);
        const Vec2 dqv = s - base;
        const double jt =
            std::abs(dqu.x() * dqv.y() - dqu.y() * dqv.x());
        out.push_back({q.x(), q.y(), g.w[iu] * g.w[iv] * jt});
      }
  }
}

std::vector<double> direction_breaks(const KnotVector& a, const KnotVector& b) {
  std::vector<double> u = a.unique_knots();
  for (const double v : b.unique_knots()) u.push_back(v);
  std::sort(u.begin(), u.end());
  u.erase(std::unique(u.begin(), u.end(),
                      [](double p, double q) { return std::abs(p - q) < 1e-12; }),
          u.end());
  return u;
}

}  // namespace

std::vector<SurfQP> surface_rule(const Patch& patch, const Vec3& y,
                                 const std::optional<Vec2>& singular_param,
                                 const SurfaceRuleOptions& opt) {
  const auto xi_breaks =
      direction_breaks(patch.kind() == PatchKind::Trimmed
                           ? patch.unknown_surface().knots_xi()
                           : patch.geometry().knots_xi(),
                       patch.unknown_surface().knots_xi());

  std::vector<double> eta_breaks;
  const bool infinite = patch.kind() == PatchKind::Infinite;
  if (infinite) {
    // Shared geometric ladder: band k covers [1 - 2^-k, 1 - 2^-(k-1)] reversed,
    // reaching ~2^levels characteristic lengths before truncation.
    eta_breaks.push_back(0.0);
    double v = 0.5;
    for (int k = 0; k < opt.infinite_levels; ++k) {
      eta_breaks.push_back(1.0 - v);
      v *= 0.5;
    }
    eta_breaks.push_back(1.0 - v);
  } else {
    eta_breaks =
        direction_breaks(patch.kind() == PatchKind::Trimmed
                             ? patch.unknown_surface().knots_eta()
                             : patch.geometry().knots_eta(),
                         patch.unknown_surface().knots_eta());
  }

  std::vector<SurfQP> out;
  std::vector<ParamCell> stack;
  for (std::size_t a = 0; a + 1 < xi_breaks.size(); ++a)
    for (std::size_t b = 0; b + 1 < eta_breaks.size(); ++b)
      stack.push_back(
          {xi_breaks[a], xi_breaks[a + 1], eta_breaks[b], eta_breaks[b + 1], 0});

  const double ptol = 1e-9;
  while (!stack.empty()) {
    ParamCell c = stack.back();
    stack.pop_back();

    if (singular_param) {
      const Vec2 s = *singular_param;
      if (s.x() >= c.xi0 - ptol && s.x() <= c.xi1 + ptol && s.y() >= c.eta0 - ptol &&
          s.y() <= c.eta1 + ptol) {
        emit_singular_fan(c, Vec2(std::clamp(s.x(), c.xi0, c.xi1),
                                  std::clamp(s.y(), c.eta0, c.eta1)),
                          opt.singular_gauss, out);
        continue;
      }
    }

    const CellMetrics m = cell_metrics(patch, c, y);
    const double l_ref = std::max(m.l_xi, m.l_eta);
    const int nx = gauss_count_for_proximity(m.r_min / std::max(m.l_xi, 1e-300),
                                             opt.proximity_scale);
    const int ne = gauss_count_for_proximity(m.r_min / std::max(m.l_eta, 1e-300),
                                             opt.proximity_scale);
    if (nx > 0 && ne > 0) {
      emit_product(c, nx, ne, out);
      continue;
    }
    if (c.depth >= opt.max_depth) {
      if (m.r_min < opt.hard_fail_ratio * l_ref)
        throw AssemblyError(
            "surface quadrature: accuracy not reachable at maximum subdivision "
            "depth");
      emit_product(c, 5, 5, out);
      continue;
    }
    // Split the worse direction; eta bands of infinite patches stay intact so
    // far-ring stations remain shared between the patches of a ring.
    const bool split_xi =
        infinite || m.l_xi >= m.l_eta;
    ParamCell left = c, right = c;
    if (split_xi) {
      const double mid = 0.5 * (c.xi0 + c.xi1);
      left.xi1 = mid;
      right.xi0 = mid;
    } else {
      const double mid = 0.5 * (c.eta0 + c.eta1);
      left.eta1 = mid;
      right.eta0 = mid;
    }
    left.depth = right.depth = c.depth + 1;
    stack.push_back(left);
    stack.push_back(right);
  }
  return out;
}

std::vector<VolQP> cell_product_rule(int nx, int ny, int nz) {
  const GaussRule& gx = gauss_rule(nx);
  const GaussRule& gy = gauss_rule(ny);
  const GaussRule& gz = gauss_rule(nz);
  std::vector<VolQP> out;
  out.reserve(static_cast<std::size_t>(nx) * ny * nz);
  for (int a = 0; a < nx; ++a)
    for (int b = 0; b < ny; ++b)
      for (int c = 0; c < nz; ++c)
        out.push_back({Vec3(2 * gx.x[a] - 1, 2 * gy.x[b] - 1, 2 * gz.x[c] - 1),
                       8.0 * gx.w[a] * gy.w[b] * gz.w[c]});
  return out;
}

std::vector<VolQP> cell_singular_rule(const Vec3& s, int n) {
  if ((s.array().abs() > 1.0 + 1e-9).any())
    throw DomainError("cell singular rule: local point outside the cell");

  // One collapsed pyramid per cube face not containing the singular point:
  // base = face corners, apex = s, mapped trilinearly so the Jacobian is o(r^2).
  struct Face {
    int axis;
    double side;
  };
  const GaussRule& g = gauss_rule(n);
  std::vector<VolQP> out;
  for (const Face f : {Face{0, -1}, Face{0, 1}, Face{1, -1}, Face{1, 1},
                       Face{2, -1}, Face{2, 1}}) {
    if (std::abs(s[f.axis] - f.side) < 1e-9) continue;
    const int a1 = (f.axis + 1) % 3;
    const int a2 = (f.axis + 2) % 3;
    for (int iu = 0; iu < n; ++iu)
      for (int iv = 0; iv < n; ++iv)
        for (int iw = 0; iw < n; ++iw) {
          const double u = g.x[iu], v = g.x[iv], w = g.x[iw];
          Vec3 base;
          base[f.axis] = f.side;
          base[a1] = 2 * u - 1;
          base[a2] = 2 * v - 1;
          const Vec3 q = (1.0 - w) * base + w * s;
          // d q/du = (1-w) * 2 e_a1, d q/dv = (1-w) * 2 e_a2, d q/dw = s - base
          const double jt =
              4.0 * (1.0 - w) * (1.0 - w) * std::abs(s[f.axis] - f.side);
          out.push_back({q, g.w[iu] * g.w[iv] * g.w[iw] * jt});
        }
  }
  return out;
}

}  // namespace igabem
