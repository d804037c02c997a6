#ifndef UDG_ASSEMBLY_HPP
#define UDG_ASSEMBLY_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "udg/basis.hpp"
#include "udg/block_matrix.hpp"
#include "udg/cutmesh.hpp"

namespace udg {

struct AssemblyParams {
  /// Facet penalty scaling. Positive for a well-posed system; zero is allowed
  /// so the penalty-free part can be assembled on its own.
  double eta = 4.0;
  int quadrature_order = 2;
};

namespace detail {

inline void check_spd(const Sym3& s, const std::string& name) {
  const double m1 = s.xx;
  const double m2 = s.xx * s.yy - s.xy * s.xy;
  const double m3 = s.xx * (s.yy * s.zz - s.yz * s.yz) - s.xy * (s.xy * s.zz - s.yz * s.xz) +
                    s.xz * (s.xy * s.yz - s.yy * s.xz);
  if (!(m1 > 0.0 && m2 > 0.0 && m3 > 0.0))
    throw std::invalid_argument("assemble: conductivity of domain '" + name + "' is not SPD");
}

inline SparseBlockMatrix system_pattern(const CutMesh& cm) {
  const int n = cm.block_count();
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  pairs.reserve(cm.cells.size() + cm.facets.size());
  for (std::size_t i = 0; i < cm.cells.size(); ++i)
    pairs.emplace_back(std::uint32_t(i), std::uint32_t(i));
  for (const SkeletonFacet& f : cm.facets) {
    if (f.inside < 0 || f.inside >= n || f.outside < 0 || f.outside >= n)
      throw std::invalid_argument("assemble: facet references a missing block");
    pairs.emplace_back(std::uint32_t(f.inside), std::uint32_t(f.outside));
  }
  return SparseBlockMatrix::from_pairs(n, std::move(pairs));
}

/// Accumulate a row-major 8x8 local block into the upper-triangle storage;
/// contributions landing below the diagonal are transposed into their mirror
/// slot (the bilinear form is symmetric, so that slot receives equal values).
inline void add_block(SparseBlockMatrix& m, int bi, int bj, const double* local) {
  if (bi <= bj) {
    double* dst = m.find_block(bi, bj);
    for (int k = 0; k < 64; ++k) dst[k] += local[k];
  } else {
    double* dst = m.find_block(bj, bi);
    for (int a = 0; a < 8; ++a)
      for (int b = 0; b < 8; ++b) dst[a * 8 + b] += local[b * 8 + a];
  }
}

inline void assemble_volume_cell(const CutMesh& cm, int i, const AssemblyParams& p,
                                 std::vector<QPoint>& scratch, SparseBlockMatrix& out) {
  const CutCell& cc = cm.cells[std::size_t(i)];
  const IVec3 c = cm.mesh.cell_coords(cc.parent_cell);
  const Vec3 lo = cm.mesh.cell_lo(c);
  const Vec3 edge = cm.mesh.edge_length();
  const Sym3 sigma = cm.spec.domains()[std::size_t(cc.domain)].conductivity;

  scratch.clear();
  volume_quadrature(cm, i, p.quadrature_order, scratch);

  double local[64] = {};
  std::array<Vec3, 8> g;
  for (const QPoint& qp : scratch) {
    const Vec3 xi{(qp.x.x - lo.x) / edge.x, (qp.x.y - lo.y) / edge.y, (qp.x.z - lo.z) / edge.z};
    const LocalBasis basis = LocalBasis::at(xi);
    for (int a = 0; a < 8; ++a)
      g[std::size_t(a)] = {basis.grad[std::size_t(a)].x / edge.x,
                           basis.grad[std::size_t(a)].y / edge.y,
                           basis.grad[std::size_t(a)].z / edge.z};
    for (int a = 0; a < 8; ++a) {
      const Vec3 sg = sigma.apply(g[std::size_t(a)]);
      for (int b = 0; b < 8; ++b) local[a * 8 + b] += qp.w * dot(sg, g[std::size_t(b)]);
    }
  }
  add_block(out, i, i, local);
}

/// Facet terms of the symmetric weighted interior-penalty form. Averaging
/// weights are the cross weights w_i = d_j/(d_i+d_j) with d = n^t sigma n, and
/// the penalty factor is eta * tau / h with tau the harmonic mean
/// 2 d_i d_j/(d_i+d_j); both recomputed at every quadrature point from the
/// local piece normal. With penalty_only set, only the penalty term is kept.
inline void assemble_facet(const CutMesh& cm, const SkeletonFacet& f, const AssemblyParams& p,
                           bool penalty_only, std::vector<FacetQPoint>& scratch,
                           SparseBlockMatrix& out) {
  const Vec3 edge = cm.mesh.edge_length();
  int blk[2] = {f.inside, f.outside};
  Vec3 lo[2];
  Sym3 sigma[2];
  const double sign[2] = {1.0, -1.0};
  for (int s = 0; s < 2; ++s) {
    const CutCell& cc = cm.cells[std::size_t(blk[s])];
    lo[s] = cm.mesh.cell_lo(cm.mesh.cell_coords(cc.parent_cell));
    sigma[s] = cm.spec.domains()[std::size_t(cc.domain)].conductivity;
  }

  scratch.clear();
  facet_quadrature(cm, f, p.quadrature_order, scratch);

  double local[2][2][64] = {};
  double jump[2][8];
  double flux[2][8];
  for (const FacetQPoint& qp : scratch) {
    const Vec3 n = qp.normal;
    const double d0 = sigma[0].normal_component(n);
    const double d1 = sigma[1].normal_component(n);
    const double den = d0 + d1;
    const double omega[2] = {d1 / den, d0 / den};
    const double pen = p.eta * (2.0 * d0 * d1 / den) / f.h_gamma;

    for (int s = 0; s < 2; ++s) {
      const Vec3 xi{(qp.x.x - lo[s].x) / edge.x, (qp.x.y - lo[s].y) / edge.y,
                    (qp.x.z - lo[s].z) / edge.z};
      const LocalBasis basis = LocalBasis::at(xi);
      for (int a = 0; a < 8; ++a) {
        jump[s][a] = sign[s] * basis.value[std::size_t(a)];
        if (penalty_only) {
          flux[s][a] = 0.0;
        } else {
          const Vec3 grad{basis.grad[std::size_t(a)].x / edge.x,
                          basis.grad[std::size_t(a)].y / edge.y,
                          basis.grad[std::size_t(a)].z / edge.z};
          flux[s][a] = omega[s] * dot(sigma[s].apply(grad), n);
        }
      }
    }

    for (int t = 0; t < 2; ++t)
      for (int s = 0; s < 2; ++s) {
        double* dst = local[t][s];
        for (int b = 0; b < 8; ++b)
          for (int a = 0; a < 8; ++a) {
            double c = pen * jump[s][a] * jump[t][b];
            if (!penalty_only) c -= jump[s][a] * flux[t][b] + jump[t][b] * flux[s][a];
            dst[b * 8 + a] += qp.w * c;
          }
      }
  }

  // The two off-diagonal locals are transposes of one another; only the one
  // whose destination lies in the upper triangle is accumulated, otherwise
  // the mirror slot would receive the coupling twice.
  for (int t = 0; t < 2; ++t)
    for (int s = 0; s < 2; ++s)
      if (blk[t] <= blk[s]) add_block(out, blk[t], blk[s], local[t][s]);
}

inline SparseBlockMatrix assemble_impl(const CutMesh& cm, const AssemblyParams& p,
                                       bool penalty_only) {
  if (!(p.eta >= 0.0)) throw std::invalid_argument("assemble: eta must be non-negative");
  if (p.quadrature_order < 1) throw std::invalid_argument("assemble: quadrature order must be >= 1");
  for (const Domain& d : cm.spec.domains()) check_spd(d.conductivity, d.name);

  SparseBlockMatrix m = system_pattern(cm);
  // Deterministic order: all cells ascending, then all facets ascending.
  if (!penalty_only) {
    std::vector<QPoint> vol_scratch;
    for (std::size_t i = 0; i < cm.cells.size(); ++i)
      assemble_volume_cell(cm, int(i), p, vol_scratch, m);
  }
  std::vector<FacetQPoint> facet_scratch;
  for (const SkeletonFacet& f : cm.facets) assemble_facet(cm, f, p, penalty_only, facet_scratch, m);
  m.mirror_upper();
  return m;
}

}  // namespace detail

/// Assemble the symmetric system matrix: per-cell conductivity volume terms
/// plus consistency and penalty terms on every skeleton facet. The outer grid
/// boundary carries no terms (natural boundary condition), so constants lie
/// in the kernel.
inline SparseBlockMatrix assemble_system(const CutMesh& cm, const AssemblyParams& p = {}) {
  return detail::assemble_impl(cm, p, false);
}

/// The facet penalty part alone, on the same sparsity pattern as the full
/// system. Linear in eta.
inline SparseBlockMatrix assemble_penalty(const CutMesh& cm, const AssemblyParams& p = {}) {
  return detail::assemble_impl(cm, p, true);
}

/// Where a point is evaluated: the DOF block owning it and the coordinate to
/// feed the block's trilinear polynomial. xi lies outside [0,1]^3 when the
/// point is covered by no cut cell and uses a neighbor's polynomial
/// extension.
struct EvaluationSite {
  int block = -1;
  Vec3 xi;
};

/// Find the cut cell whose parent cell contains x (points exactly on a
/// fundamental face resolve to the lower-index cell) and whose domain
/// contains x. Points in no cut cell (air or discarded sliver) fall back to
/// the nearest cut cell of the hinted domain within one cell width and use
/// its polynomial extension.
inline EvaluationSite locate_evaluation_site(const CutMesh& cm, const Vec3& x,
                                             int domain_hint = -1) {
  const FundamentalMesh& mesh = cm.mesh;
  const BoundingBox& bx = mesh.box();
  for (int a = 0; a < 3; ++a)
    if (!(x[a] >= bx.lo[a] && x[a] <= bx.hi[a]))
      throw std::invalid_argument("point evaluation: point outside the grid box");

  const IVec3 nd = mesh.cells_per_dim();
  IVec3 c;
  for (int a = 0; a < 3; ++a) {
    const double t = (x[a] - bx.lo[a]) * nd[a] / (bx.hi[a] - bx.lo[a]);
    int i = int(std::floor(t));
    if (i < 0) i = 0;
    if (i >= nd[a]) i = nd[a] - 1;
    while (i > 0 && x[a] <= mesh.node_coord(a, i)) --i;
    c[a] = i;
  }

  const auto site_in = [&](int blk, const IVec3& parent, bool clamp) {
    const Vec3 lo = mesh.cell_lo(parent);
    const Vec3 hi = mesh.cell_hi(parent);
    EvaluationSite site;
    site.block = blk;
    for (int a = 0; a < 3; ++a) {
      double t = (x[a] - lo[a]) / (hi[a] - lo[a]);
      if (clamp) t = t < 0.0 ? 0.0 : (t > 1.0 ? 1.0 : t);
      site.xi[a] = t;
    }
    return site;
  };

  // Domain containing x: voxel labeling in voxel mode, level-set signs here.
  int d;
  if (cm.voxel_mode) {
    d = cm.voxel_label(c);
  } else {
    const Vec3 xi = mesh.local_coordinates(c, x);
    std::uint32_t signs = 0;
    for (std::size_t l = 0; l < cm.fields.size(); ++l)
      if (!is_negative_side(cm.fields[l].evaluate(c, xi))) signs |= std::uint32_t(1) << l;
    d = cm.spec.domain_of_signs(signs);
  }
  if (d >= 0) {
    const int blk = cm.find_cut_cell(mesh.cell_index(c), d);
    if (blk >= 0) return site_in(blk, c, true);
  }

  // Fallback: nearest cut cell of the hinted domain in the 3x3x3 parent
  // neighborhood, ties to the lowest block index.
  const int hint = domain_hint >= 0 ? domain_hint : d;
  const Vec3 edge = mesh.edge_length();
  int best = -1;
  IVec3 best_parent;
  double best_dist = 0.0;
  for (int dz = -1; dz <= 1; ++dz)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const IVec3 q{c.x + dx, c.y + dy, c.z + dz};
        if (q.x < 0 || q.y < 0 || q.z < 0 || q.x >= nd.x || q.y >= nd.y || q.z >= nd.z) continue;
        const std::int64_t parent = mesh.cell_index(q);
        const auto it = cm.first_cut_cell.find(parent);
        if (it == cm.first_cut_cell.end()) continue;
        const Vec3 lo = mesh.cell_lo(q);
        const Vec3 hi = mesh.cell_hi(q);
        Vec3 delta{};
        for (int a = 0; a < 3; ++a) {
          if (x[a] < lo[a]) delta[a] = lo[a] - x[a];
          else if (x[a] > hi[a]) delta[a] = x[a] - hi[a];
        }
        const double dist = norm(delta);
        for (std::uint32_t k = it->second;
             k < cm.cells.size() && cm.cells[k].parent_cell == parent; ++k) {
          if (hint >= 0 && cm.cells[k].domain != hint) continue;
          if (best < 0 || dist < best_dist || (dist == best_dist && int(k) < best)) {
            best = int(k);
            best_parent = q;
            best_dist = dist;
          }
        }
      }
  const double cell_width = std::max(edge.x, std::max(edge.y, edge.z));
  if (best < 0 || best_dist > cell_width)
    throw std::runtime_error("point evaluation: no cut cell within one cell width of the point");
  return site_in(best, best_parent, false);
}

/// Evaluate the discrete solution at a point via locate_evaluation_site.
inline double evaluate_solution(const CutMesh& cm, const std::vector<double>& coeffs,
                                const Vec3& x, int domain_hint = -1) {
  if (std::int64_t(coeffs.size()) != std::int64_t(cm.block_count()) * 8)
    throw std::invalid_argument("evaluate_solution: coefficient vector length mismatch");
  const EvaluationSite site = locate_evaluation_site(cm, x, domain_hint);
  const LocalBasis basis = LocalBasis::at(site.xi);
  double s = 0.0;
  for (int a = 0; a < 8; ++a)
    s += coeffs[std::size_t(site.block) * 8 + std::size_t(a)] * basis.value[std::size_t(a)];
  return s;
}

}  // namespace udg

#endif
