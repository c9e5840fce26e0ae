#include "igabem/cells.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace igabem {

namespace {

std::array<Vec3, 20> build_local_coords() {
  std::array<Vec3, 20> c;
  const double s[8][3] = {{-1, -1, -1}, {1, -1, -1}, {1, 1, -1}, {-1, 1, -1},
                          {-1, -1, 1},  {1, -1, 1},  {1, 1, 1},  {-1, 1, 1}};
  for (int i = 0; i < 8; ++i) c[i] = Vec3(s[i][0], s[i][1], s[i][2]);
  const auto& e = cell_edges();
  for (int m = 0; m < 12; ++m) c[8 + m] = 0.5 * (c[e[m][0]] + c[e[m][1]]);
  return c;
}

}  // namespace

const std::array<std::array<int, 2>, 12>& cell_edges() {
  static const std::array<std::array<int, 2>, 12> e = {
      {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6}, {6, 7}, {7, 4},
       {0, 4}, {1, 5}, {2, 6}, {3, 7}}};
  return e;
}

const std::array<Vec3, 20>& cell_local_coords() {
  static const std::array<Vec3, 20> c = build_local_coords();
  return c;
}

int Cell::node_count() const {
  int n = 8;
  for (const bool a : active_midside) n += a ? 1 : 0;
  return n;
}

std::vector<int> Cell::local_nodes() const {
  std::vector<int> out;
  for (int i = 0; i < 8; ++i) out.push_back(i);
  for (int m = 0; m < 12; ++m)
    if (active_midside[m]) out.push_back(8 + m);
  return out;
}

ShapeEval serendipity_shape(const Vec3& local, const std::array<bool, 12>& active) {
  const auto& lc = cell_local_coords();
  const auto& edges = cell_edges();
  ShapeEval out;
  for (Vec3& g : out.d) g.setZero();

  // Mid-side functions first; corners are the trilinear functions corrected by
  // half of each adjacent active mid-side.
  for (int m = 0; m < 12; ++m) {
    if (!active[m]) continue;
    const Vec3& c = lc[8 + m];
    int zero_dim = 0;
    for (int d = 0; d < 3; ++d)
      if (c[d] == 0.0) zero_dim = d;
    const int d1 = (zero_dim + 1) % 3;
    const int d2 = (zero_dim + 2) % 3;
    const double q = local[zero_dim];
    const double f1 = 1.0 + local[d1] * c[d1];
    const double f2 = 1.0 + local[d2] * c[d2];
    out.n[8 + m] = 0.25 * (1.0 - q * q) * f1 * f2;
    out.d[8 + m] = Vec3::Zero();
    out.d[8 + m][zero_dim] = 0.25 * (-2.0 * q) * f1 * f2;
    out.d[8 + m][d1] = 0.25 * (1.0 - q * q) * c[d1] * f2;
    out.d[8 + m][d2] = 0.25 * (1.0 - q * q) * f1 * c[d2];
  }

  for (int i = 0; i < 8; ++i) {
    const Vec3& c = lc[i];
    double n = 0.125;
    Vec3 d = Vec3::Zero();
    for (int dd = 0; dd < 3; ++dd) n *= 1.0 + local[dd] * c[dd];
    for (int dd = 0; dd < 3; ++dd) {
      double g = 0.125 * c[dd];
      for (int o = 0; o < 3; ++o)
        if (o != dd) g *= 1.0 + local[o] * c[o];
      d[dd] = g;
    }
    for (int m = 0; m < 12; ++m) {
      if (!active[m]) continue;
      if (edges[m][0] == i || edges[m][1] == i) {
        n -= 0.5 * out.n[8 + m];
        d -= 0.5 * out.d[8 + m];
      }
    }
    out.n[i] = n;
    out.d[i] = d;
  }
  return out;
}

Vec3 cell_point(const Cell& cell, const GridPointSet& grid, const Vec3& local) {
  const ShapeEval se = serendipity_shape(local, cell.active_midside);
  Vec3 x = Vec3::Zero();
  for (const int slot : cell.local_nodes()) x += se.n[slot] * grid.x(cell.nodes[slot]);
  return x;
}

CellJacobian cell_jacobian(const Cell& cell, const GridPointSet& grid,
                           const Vec3& local) {
  const ShapeEval se = serendipity_shape(local, cell.active_midside);
  CellJacobian out;
  out.j.setZero();
  for (const int slot : cell.local_nodes()) {
    const Vec3& x = grid.x(cell.nodes[slot]);
    for (int l = 0; l < 3; ++l)
      for (int g = 0; g < 3; ++g) out.j(l, g) += se.d[slot][l] * x[g];
  }
  out.det = out.j.determinant();
  if (!(out.det > 0.0))
    throw MeshError("cell mapping has non-positive Jacobian");
  return out;
}

MatX strain_operator(const Cell& cell, const GridPointSet& grid, const Vec3& local) {
  const ShapeEval se = serendipity_shape(local, cell.active_midside);
  const CellJacobian cj = cell_jacobian(cell, grid, local);
  const Mat3 jinv = cj.j.inverse();

  const auto slots = cell.local_nodes();
  MatX b = MatX::Zero(6, 3 * static_cast<int>(slots.size()));
  for (std::size_t a = 0; a < slots.size(); ++a) {
    const Vec3 dg = jinv * se.d[slots[a]];  // global gradient of N
    const int c = 3 * static_cast<int>(a);
    b(0, c + 0) = dg[0];
    b(1, c + 1) = dg[1];
    b(2, c + 2) = dg[2];
    b(3, c + 0) = dg[1];
    b(3, c + 1) = dg[0];
    b(4, c + 1) = dg[2];
    b(4, c + 2) = dg[1];
    b(5, c + 0) = dg[2];
    b(5, c + 2) = dg[0];
  }
  return b;
}

std::optional<Vec3> invert_cell_map(const Cell& cell, const GridPointSet& grid,
                                    const Vec3& x, double tol) {
  Vec3 local = Vec3::Zero();
  double scale = 1.0;
  for (const int slot : cell.local_nodes())
    scale = std::max(scale, (grid.x(cell.nodes[slot]) - grid.x(cell.nodes[0])).norm());
  for (int it = 0; it < 60; ++it) {
    const Vec3 r = cell_point(cell, grid, local) - x;
    if (r.norm() < tol * scale) {
      if ((local.array().abs() > 1.0 + 1e-7).any()) return std::nullopt;
      return local;
    }
    Mat3 j;
    try {
      j = cell_jacobian(cell, grid, local).j;
    } catch (const MeshError&) {
      return std::nullopt;
    }
    const Vec3 step = j.transpose().fullPivLu().solve(-r);
    if (!step.allFinite()) return std::nullopt;
    local += step;
    local = local.cwiseMax(-1.5).cwiseMin(1.5);
  }
  return std::nullopt;
}

namespace {

struct CellMetrics {
  double r_min = 1e300;
  Vec3 l = Vec3::Zero();  // physical extent per local direction
};

CellMetrics metrics(const Cell& cell, const GridPointSet& grid, const Vec3& target) {
  CellMetrics m;
  for (int a = -1; a <= 1; ++a)
    for (int b = -1; b <= 1; ++b)
      for (int c = -1; c <= 1; ++c) {
        const Vec3 x = cell_point(cell, grid, Vec3(a, b, c));
        m.r_min = std::min(m.r_min, (x - target).norm());
      }
  const auto& e = cell_edges();
  const auto& lc = cell_local_coords();
  for (int k = 0; k < 12; ++k) {
    const Vec3 d = lc[e[k][1]] - lc[e[k][0]];
    int dir = 0;
    for (int dd = 0; dd < 3; ++dd)
      if (std::abs(d[dd]) > 0.5) dir = dd;
    const double len =
        (grid.x(cell.nodes[e[k][1]]) - grid.x(cell.nodes[e[k][0]])).norm();
    m.l[dir] = std::max(m.l[dir], len);
  }
  return m;
}

std::vector<Mat36> integrate_with_rule(const std::vector<VolQP>& rule,
                                       const Vec3& target, const Cell& cell,
                                       const GridPointSet& grid,
                                       const ElasticConstants& mat) {
  std::vector<Mat36> out(20, Mat36::Zero());
  for (const VolQP& qp : rule) {
    const ShapeEval se = serendipity_shape(qp.local, cell.active_midside);
    const CellJacobian cj = cell_jacobian(cell, grid, qp.local);
    const Vec3 x = cell_point(cell, grid, qp.local);
    if ((x - target).norm() == 0.0) continue;
    const Mat36 e = kernel_e(target, x, mat);
    const double w = qp.w * cj.det;
    for (const int slot : cell.local_nodes())
      if (se.n[slot] != 0.0) out[slot] += (w * se.n[slot]) * e;
  }
  return out;
}

std::vector<VolQP> regular_rule_for(const Cell& cell, const GridPointSet& grid,
                                    const Vec3& target,
                                    const VolumeRuleOptions& opt,
                                    bool* too_close = nullptr) {
  const CellMetrics m = metrics(cell, grid, target);
  const double ratio = m.r_min / std::max({m.l[0], m.l[1], m.l[2], 1e-300});
  if (too_close) *too_close = ratio < opt.singular_ratio;
  int n[3];
  for (int d = 0; d < 3; ++d) {
    n[d] = gauss_count_for_proximity(m.r_min / std::max(m.l[d], 1e-300),
                                     opt.proximity_scale);
    if (n[d] == 0) n[d] = 5;
  }
  return cell_product_rule(n[0], n[1], n[2]);
}

}  // namespace

Mat36 integrate_cell_kernel(const Vec3& target, const Cell& cell,
                            const GridPointSet& grid, int node_slot,
                            const ElasticConstants& mat,
                            const VolumeRuleOptions& opt) {
  bool too_close = false;
  const auto rule = regular_rule_for(cell, grid, target, opt, &too_close);
  if (too_close)
    throw AssemblyError(
        "target too close to the cell for regular volume quadrature");
  return integrate_with_rule(rule, target, cell, grid, mat)[node_slot];
}

Mat36 integrate_cell_singular(const Vec3& target, const Vec3& target_local,
                              const Cell& cell, const GridPointSet& grid,
                              int node_slot, const ElasticConstants& mat,
                              const VolumeRuleOptions& opt) {
  const auto rule = cell_singular_rule(target_local, opt.singular_gauss);
  return integrate_with_rule(rule, target, cell, grid, mat)[node_slot];
}

std::vector<Mat36> integrate_cell_all_nodes(const Vec3& target, const Cell& cell,
                                            const GridPointSet& grid,
                                            const ElasticConstants& mat,
                                            const VolumeRuleOptions& opt) {
  bool too_close = false;
  const auto rule = regular_rule_for(cell, grid, target, opt, &too_close);
  if (!too_close) return integrate_with_rule(rule, target, cell, grid, mat);

  // Near or inside: collapsed pyramids anchored at the (projected) local point.
  Vec3 local = Vec3::Zero();
  if (const auto inv = invert_cell_map(cell, grid, target, 1e-10))
    local = *inv;
  else {
    const auto guess = invert_cell_map(cell, grid, target, 1e-6);
    if (guess) local = *guess;
    else {
      // Coarse projection: nearest of the 27 sample points.
      double best = 1e300;
      for (int a = -1; a <= 1; ++a)
        for (int b = -1; b <= 1; ++b)
          for (int c = -1; c <= 1; ++c) {
            const Vec3 cand(a, b, c);
            const double d = (cell_point(cell, grid, cand) - target).norm();
            if (d < best) {
              best = d;
              local = cand;
            }
          }
    }
  }
  local = local.cwiseMax(-1.0).cwiseMin(1.0);
  return integrate_with_rule(cell_singular_rule(local, opt.singular_gauss), target,
                             cell, grid, mat);
}

double cell_volume(const Cell& cell, const GridPointSet& grid) {
  double v = 0.0;
  for (const VolQP& qp : cell_product_rule(4, 4, 4))
    v += qp.w * cell_jacobian(cell, grid, qp.local).det;
  return v;
}

VolumeOperators assemble_volume_operators(const std::vector<Patch>& patches,
                                          const CollocationSet& colloc,
                                          const std::vector<Cell>& cells,
                                          const GridPointSet& grid,
                                          const Loading& load,
                                          const ElasticConstants& mat,
                                          const SurfaceRuleOptions& surf_opt,
                                          const VolumeRuleOptions& vol_opt,
                                          VolumeTimings* timings) {
  const auto tick = [] { return std::chrono::steady_clock::now(); };
  const auto seconds = [](auto t0, auto t1) {
    return std::chrono::duration<double>(t1 - t0).count();
  };
  const int ng = grid.size();
  const int nd = colloc.num_dofs();

  std::vector<char> referenced(ng, 0);
  for (const Cell& c : cells)
    for (const int slot : c.local_nodes()) referenced[c.nodes[slot]] = 1;
  for (int g = 0; g < ng; ++g)
    if (!referenced[g])
      throw AssemblyError("grid point not referenced by any cell");
  for (int g = 0; g < ng; ++g)
    if (grid.points[g].boundary && grid.points[g].boundary->patch_id < 0)
      throw AssemblyError("boundary grid point lacks its patch tie");

  VolumeOperators ops;
  ops.b0 = MatX::Zero(nd, 6 * ng);
  ops.b0_bar = MatX::Zero(3 * ng, 6 * ng);
  ops.b_hat = MatX::Zero(6 * ng, 3 * ng);
  ops.a_hat = MatX::Zero(3 * ng, nd);
  ops.c_bar = VecX::Zero(3 * ng);

  // B0: rows by collocation point, kernel moments of every cell node.
  auto t0 = tick();
  parallel_for(colloc.points.size(), [&](std::size_t n) {
    const Vec3& y = colloc.points[n].x;
    for (const Cell& cell : cells) {
      const auto blocks = integrate_cell_all_nodes(y, cell, grid, mat, vol_opt);
      for (const int slot : cell.local_nodes())
        ops.b0.block<3, 6>(3 * static_cast<int>(n), 6 * cell.nodes[slot]) +=
            blocks[slot];
    }
  });
  auto t1 = tick();
  if (timings) timings->b0 = seconds(t0, t1);

  // A_hat / c_bar: representation row (interior) or patch interpolation
  // (boundary-tied grid points).
  parallel_for(static_cast<std::size_t>(ng), [&](std::size_t g) {
    const GridPoint& gp = grid.points[g];
    const int row = 3 * static_cast<int>(g);
    if (gp.boundary) {
      const Patch& patch = patches[gp.boundary->patch_id];
      const auto fb =
          patch.field_basis(gp.boundary->param.x(), gp.boundary->param.y());
      const auto& map = colloc.param_to_point[patch.id()];
      for (int k = 0; k < patch.num_field_params(); ++k)
        for (int c = 0; c < 3; ++c)
          ops.a_hat(row + c, 3 * map[k] + c) += fb.value[k];
      return;
    }
    const InteriorRow ir =
        interior_displacement_row(patches, colloc, gp.x, load, mat, surf_opt);
    ops.a_hat.middleRows<3>(row) = ir.a_row;
    ops.c_bar.segment<3>(row) = ir.c_row;
  });
  auto t2 = tick();
  if (timings) timings->a_hat = seconds(t1, t2);

  // B0_bar: kernel moments at interior grid points.
  parallel_for(static_cast<std::size_t>(ng), [&](std::size_t g) {
    const GridPoint& gp = grid.points[g];
    if (gp.boundary) return;
    const int row = 3 * static_cast<int>(g);
    for (const Cell& cell : cells) {
      const auto blocks = integrate_cell_all_nodes(gp.x, cell, grid, mat, vol_opt);
      for (const int slot : cell.local_nodes())
        ops.b0_bar.block<3, 6>(row, 6 * cell.nodes[slot]) += blocks[slot];
    }
  });
  auto t3 = tick();
  if (timings) timings->b0_bar = seconds(t2, t3);

  // B_hat: volume-weighted average of per-cell nodal strain operators. Host
  // cells whose map degenerates at the node (collapsed wedge corners) are
  // skipped; every grid point needs at least one regular host.
  const auto& lc = cell_local_coords();
  struct Host {
    int cell;
    int slot;
    double weight;
    MatX block;
  };
  std::vector<std::vector<Host>> hosts(ng);
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const Cell& cell = cells[c];
    const double w = cell_volume(cell, grid);
    for (const int slot : cell.local_nodes()) {
      try {
        MatX b = strain_operator(cell, grid, lc[slot]);
        hosts[cell.nodes[slot]].push_back(
            {static_cast<int>(c), slot, w, std::move(b)});
      } catch (const MeshError&) {
      }
    }
  }
  for (int g = 0; g < ng; ++g) {
    if (hosts[g].empty())
      throw AssemblyError("grid point has no regular host cell for strains");
    double wsum = 0.0;
    for (const Host& h : hosts[g]) wsum += h.weight;
    for (const Host& h : hosts[g]) {
      const auto slots = cells[h.cell].local_nodes();
      const double frac = h.weight / wsum;
      for (std::size_t a = 0; a < slots.size(); ++a)
        ops.b_hat.block<6, 3>(6 * g, 3 * cells[h.cell].nodes[slots[a]]) +=
            frac * h.block.block<6, 3>(0, 3 * static_cast<int>(a));
    }
  }
  if (timings) timings->b_hat = seconds(t3, tick());
  return ops;
}

}  // namespace igabem
