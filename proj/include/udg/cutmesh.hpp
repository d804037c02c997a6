#ifndef UDG_CUTMESH_HPP
#define UDG_CUTMESH_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "udg/subtriangulation.hpp"

namespace udg {

// ---------------------------------------------------------------------------
// Cut-cell mesh: one cut cell per (fundamental cell, domain) pair with volume
// above the sliver threshold, plus the skeleton facets between them. Volume
// subtriangulations are recomputed on demand; facet geometry is materialized
// because assembly touches each facet exactly once per matrix.
// ---------------------------------------------------------------------------

enum class FacetKind : std::uint8_t { InterCell, Interface };

/// One planar quadrature patch of a skeleton facet. Rect pieces keep their
/// tensor-product structure (origin a, edge vectors b and c) so uncut faces
/// integrate exactly like fitted hexahedral DG; triangle pieces store their
/// three vertices.
struct FacetPiece {
  bool is_rect = false;
  Vec3 a, b, c;
  Vec3 normal;  // unit, points from the inside to the outside cut cell
  double area = 0.0;
};

struct SkeletonFacet {
  FacetKind kind = FacetKind::InterCell;
  int inside = -1;   // cut-cell index
  int outside = -1;  // cut-cell index, distinct from inside
  double h_gamma = 0.0;
  std::uint32_t piece_begin = 0, piece_end = 0;  // range in CutMesh::facet_pieces
};

struct CutCell {
  std::int64_t parent_cell = -1;
  int domain = -1;
  double volume = 0.0;
  double diameter = 0.0;  // bounding-box diagonal of the reconstruction
  // The DOF block index is the cut cell's position in CutMesh::cells.
};

struct SliverStats {
  std::int64_t count = 0;
  double volume = 0.0;
};

struct CutMesh {
  FundamentalMesh mesh;
  std::vector<LevelSetField> fields;
  DomainSpec spec;
  int depth = 0;
  double theta = 1e-6;
  bool voxel_mode = false;

  std::vector<CutCell> cells;
  std::vector<SkeletonFacet> facets;
  std::vector<FacetPiece> facet_pieces;
  SliverStats slivers;
  double air_volume = 0.0;  // volume belonging to no declared domain

  std::unordered_map<std::int64_t, std::uint32_t> first_cut_cell;  // parent -> first index

  int block_count() const { return int(cells.size()); }

  /// Cut-cell index for (parent cell, domain), or -1 if that pair carries no
  /// DOF block (air, discarded sliver, or absent domain).
  int find_cut_cell(std::int64_t parent, int domain) const {
    const auto it = first_cut_cell.find(parent);
    if (it == first_cut_cell.end()) return -1;
    for (std::uint32_t k = it->second;
         k < cells.size() && cells[k].parent_cell == parent; ++k)
      if (cells[k].domain == domain) return int(k);
    return -1;
  }

  /// Domain label of a fundamental cell in voxel mode (sign vector of the
  /// level sets at the cell center), or -1 for air.
  int voxel_label(const IVec3& c) const {
    std::uint32_t signs = 0;
    for (std::size_t l = 0; l < fields.size(); ++l)
      if (!is_negative_side(fields[l].evaluate(c, {0.5, 0.5, 0.5})))
        signs |= std::uint32_t(1) << l;
    return spec.domain_of_signs(signs);
  }

  /// Volume reconstruction of one fundamental cell, in global coordinates.
  /// In voxel mode (or for uncut cells) this is a single full-cell box.
  SubTriangulation cell_subtriangulation(std::int64_t parent) const;
};

namespace detail {

inline SubTriangulation::VolumeElement full_cell_element(const FundamentalMesh& mesh,
                                                         const IVec3& c, int domain) {
  SubTriangulation::VolumeElement e;
  e.domain = domain;
  e.is_box = true;
  e.lo = mesh.cell_lo(c);
  e.hi = mesh.cell_hi(c);
  e.measure = mesh.cell_volume();
  return e;
}

/// Corner signs of every level set on a cell; returns (mixed mask, positive
/// mask) and leaves the corner values in `corners`.
inline void gather_cell_corners(const std::vector<LevelSetField>& fields, const IVec3& c,
                                std::vector<std::array<double, 8>>& corners,
                                std::uint32_t& mixed, std::uint32_t& positive) {
  corners.resize(fields.size());
  mixed = positive = 0;
  for (std::size_t l = 0; l < fields.size(); ++l) {
    corners[l] = fields[l].corner_values(c);
    bool any_neg = false, any_pos = false;
    for (double v : corners[l]) (is_negative_side(v) ? any_neg : any_pos) = true;
    if (any_neg && any_pos)
      mixed |= std::uint32_t(1) << l;
    else if (any_pos)
      positive |= std::uint32_t(1) << l;
  }
}

struct FaceFrame {
  IVec3 lower_cell;  // face sits between lower_cell and its +axis neighbor
  int axis = 0;
  int ub = 0, vb = 0;  // in-face axes (u along ub, v along vb)
  Vec3 origin;         // global position of the face corner at (u,v) = (0,0)
  Vec3 eu, ev;         // global face edge vectors
};

inline FaceFrame face_frame(const FundamentalMesh& mesh, const IVec3& lower_cell, int axis) {
  FaceFrame fr;
  fr.lower_cell = lower_cell;
  fr.axis = axis;
  fr.ub = (axis + 1) % 3;
  fr.vb = (axis + 2) % 3;
  IVec3 base = lower_cell;
  base[axis] += 1;
  fr.origin = mesh.node_position(base);
  fr.eu = {};
  fr.ev = {};
  fr.eu[fr.ub] = mesh.edge_length()[fr.ub];
  fr.ev[fr.vb] = mesh.edge_length()[fr.vb];
  return fr;
}

inline Vec3 face_point(const FaceFrame& fr, double u, double v) {
  return {fr.origin.x + u * fr.eu.x + v * fr.ev.x, fr.origin.y + u * fr.eu.y + v * fr.ev.y,
          fr.origin.z + u * fr.eu.z + v * fr.ev.z};
}

inline FacetPiece full_face_piece(const FaceFrame& fr) {
  FacetPiece p;
  p.is_rect = true;
  p.a = fr.origin;
  p.b = fr.eu;
  p.c = fr.ev;
  p.normal = {};
  p.normal[fr.axis] = 1.0;
  p.area = norm(cross(fr.eu, fr.ev));
  return p;
}

inline FacetPiece map_face_piece(const FaceFrame& fr, const LocalFacePiece& lp) {
  FacetPiece p;
  p.normal = {};
  p.normal[fr.axis] = 1.0;
  if (lp.is_rect) {
    p.is_rect = true;
    p.a = face_point(fr, lp.lo.u, lp.lo.v);
    p.b = fr.eu * (lp.hi.u - lp.lo.u);
    p.c = fr.ev * (lp.hi.v - lp.lo.v);
    p.area = norm(cross(p.b, p.c));
  } else {
    p.is_rect = false;
    p.a = face_point(fr, lp.tri[0].u, lp.tri[0].v);
    p.b = face_point(fr, lp.tri[1].u, lp.tri[1].v);
    p.c = face_point(fr, lp.tri[2].u, lp.tri[2].v);
    p.area = 0.5 * norm(cross(p.b - p.a, p.c - p.a));
  }
  return p;
}

/// Face corner values of every level set (bit0 = u axis, bit1 = v axis);
/// returns the mask of level sets vanishing identically on the face.
inline std::uint32_t gather_face_corners(const std::vector<LevelSetField>& fields,
                                         const FaceFrame& fr,
                                         std::vector<std::array<double, 4>>& corners) {
  corners.resize(fields.size());
  IVec3 base = fr.lower_cell;
  base[fr.axis] += 1;
  std::uint32_t degenerate = 0;
  for (std::size_t l = 0; l < fields.size(); ++l) {
    bool all_zero = true;
    for (int s = 0; s < 4; ++s) {
      IVec3 n = base;
      n[fr.ub] += s & 1;
      n[fr.vb] += (s >> 1) & 1;
      corners[l][s] = fields[l].nodal_value(n);
      all_zero = all_zero && corners[l][s] == 0.0;
    }
    if (all_zero) degenerate |= std::uint32_t(1) << l;
  }
  return degenerate;
}

constexpr double kDegenerateOffset = 1e-7;

/// Sign vector seen from one side of a face for level sets that vanish on the
/// whole face: sample the side's trilinear field slightly inside the cell.
inline std::uint32_t resolve_degenerate_signs(const std::vector<LevelSetField>& fields,
                                              const FaceFrame& fr, std::uint32_t degenerate,
                                              std::uint32_t base_signs, bool upper_side,
                                              double u, double v) {
  if (!degenerate) return base_signs;
  IVec3 cell = fr.lower_cell;
  Vec3 xi;
  xi[fr.ub] = u;
  xi[fr.vb] = v;
  if (upper_side) {
    cell[fr.axis] += 1;
    xi[fr.axis] = kDegenerateOffset;
  } else {
    xi[fr.axis] = 1.0 - kDegenerateOffset;
  }
  std::uint32_t signs = base_signs;
  for (std::size_t l = 0; l < fields.size(); ++l) {
    const std::uint32_t bit = std::uint32_t(1) << l;
    if (!(degenerate & bit)) continue;
    if (!is_negative_side(fields[l].evaluate(cell, xi)))
      signs |= bit;
    else
      signs &= ~bit;
  }
  return signs;
}

}  // namespace detail

inline SubTriangulation CutMesh::cell_subtriangulation(std::int64_t parent) const {
  const IVec3 c = mesh.cell_coords(parent);
  if (voxel_mode) {
    SubTriangulation st;
    st.volume.push_back(detail::full_cell_element(mesh, c, voxel_label(c)));
    return st;
  }
  std::vector<std::array<double, 8>> corners;
  std::uint32_t mixed = 0, positive = 0;
  detail::gather_cell_corners(fields, c, corners, mixed, positive);
  if (mixed == 0) {
    SubTriangulation st;
    st.volume.push_back(detail::full_cell_element(mesh, c, spec.domain_of_signs(positive)));
    return st;
  }
  return subtriangulate_cell_domains(mesh, c, fields, spec, depth);
}

inline CutMesh build_cut_mesh(const FundamentalMesh& mesh, std::vector<LevelSetField> fields,
                              const DomainSpec& spec, double theta = 1e-6, int depth = 0) {
  if (int(fields.size()) != spec.level_set_count())
    throw std::invalid_argument("build_cut_mesh: field count does not match DomainSpec");
  if (!(theta >= 0.0 && theta < 1.0))
    throw std::invalid_argument("build_cut_mesh: theta must be in [0, 1)");
  for (const auto& f : fields)
    if (!(f.mesh().cells_per_dim() == mesh.cells_per_dim()) ||
        !(f.mesh().box().lo == mesh.box().lo) || !(f.mesh().box().hi == mesh.box().hi))
      throw std::invalid_argument("build_cut_mesh: level-set field lives on a different mesh");

  CutMesh cm;
  cm.mesh = mesh;
  cm.fields = std::move(fields);
  cm.spec = spec;
  cm.depth = depth;
  cm.theta = theta;
  cm.voxel_mode = false;

  const double cell_vol = mesh.cell_volume();
  const double vol_threshold = theta * cell_vol;
  const Vec3 edge = mesh.edge_length();
  const double full_diam = norm(edge);
  const double h_gamma = std::min(edge.x, std::min(edge.y, edge.z));
  const int n_domains = cm.spec.domain_count();

  std::vector<std::array<double, 8>> corners;
  // Scratch per cut cell of the current fundamental cell.
  std::vector<double> dom_vol(std::size_t(n_domains), 0.0);
  std::vector<Vec3> dom_lo(std::size_t(n_domains), Vec3{});
  std::vector<Vec3> dom_hi(std::size_t(n_domains), Vec3{});
  std::vector<int> dom_cut_cell(std::size_t(n_domains), -1);

  // Pass 1: cut cells (ascending parent cell, ascending domain) and the
  // intra-cell interface facets.
  for (std::int64_t id = 0; id < mesh.cell_count(); ++id) {
    const IVec3 c = mesh.cell_coords(id);
    std::uint32_t mixed = 0, positive = 0;
    detail::gather_cell_corners(cm.fields, c, corners, mixed, positive);

    if (mixed == 0) {
      const int d = cm.spec.domain_of_signs(positive);
      if (d < 0) {
        cm.air_volume += cell_vol;
        continue;
      }
      cm.first_cut_cell.emplace(id, std::uint32_t(cm.cells.size()));
      cm.cells.push_back({id, d, cell_vol, full_diam});
      continue;
    }

    const SubTriangulation st = subtriangulate_cell_domains(mesh, c, cm.fields, cm.spec, depth);
    std::fill(dom_vol.begin(), dom_vol.end(), 0.0);
    for (int d = 0; d < n_domains; ++d) {
      dom_lo[d] = {1e300, 1e300, 1e300};
      dom_hi[d] = {-1e300, -1e300, -1e300};
    }
    for (const auto& e : st.volume) {
      if (e.domain < 0) {
        cm.air_volume += e.measure;
        continue;
      }
      dom_vol[e.domain] += e.measure;
      const Vec3 plo = e.is_box ? e.lo : Vec3{std::min(std::min(e.tet[0].x, e.tet[1].x), std::min(e.tet[2].x, e.tet[3].x)),
                                              std::min(std::min(e.tet[0].y, e.tet[1].y), std::min(e.tet[2].y, e.tet[3].y)),
                                              std::min(std::min(e.tet[0].z, e.tet[1].z), std::min(e.tet[2].z, e.tet[3].z))};
      const Vec3 phi = e.is_box ? e.hi : Vec3{std::max(std::max(e.tet[0].x, e.tet[1].x), std::max(e.tet[2].x, e.tet[3].x)),
                                              std::max(std::max(e.tet[0].y, e.tet[1].y), std::max(e.tet[2].y, e.tet[3].y)),
                                              std::max(std::max(e.tet[0].z, e.tet[1].z), std::max(e.tet[2].z, e.tet[3].z))};
      for (int a = 0; a < 3; ++a) {
        dom_lo[e.domain][a] = std::min(dom_lo[e.domain][a], plo[a]);
        dom_hi[e.domain][a] = std::max(dom_hi[e.domain][a], phi[a]);
      }
    }

    bool any = false;
    for (int d = 0; d < n_domains; ++d) {
      dom_cut_cell[d] = -1;
      if (dom_vol[d] <= 0.0) continue;
      if (dom_vol[d] < vol_threshold) {
        ++cm.slivers.count;
        cm.slivers.volume += dom_vol[d];
        continue;
      }
      if (!any) {
        cm.first_cut_cell.emplace(id, std::uint32_t(cm.cells.size()));
        any = true;
      }
      dom_cut_cell[d] = int(cm.cells.size());
      cm.cells.push_back({id, d, dom_vol[d], norm(dom_hi[d] - dom_lo[d])});
    }

    // Intra-cell interface facets, one per ordered kept domain pair.
    for (int dn = 0; dn < n_domains; ++dn) {
      if (dom_cut_cell[dn] < 0) continue;
      for (int dp = 0; dp < n_domains; ++dp) {
        if (dp == dn || dom_cut_cell[dp] < 0) continue;
        const std::uint32_t begin = std::uint32_t(cm.facet_pieces.size());
        for (const auto& t : st.interface) {
          if (t.neg_domain != dn || t.pos_domain != dp) continue;
          FacetPiece p;
          p.is_rect = false;
          p.a = t.v[0];
          p.b = t.v[1];
          p.c = t.v[2];
          p.normal = t.normal;
          p.area = t.area;
          cm.facet_pieces.push_back(p);
        }
        if (cm.facet_pieces.size() == begin) continue;
        SkeletonFacet f;
        f.kind = FacetKind::Interface;
        f.inside = dom_cut_cell[dn];
        f.outside = dom_cut_cell[dp];
        f.h_gamma = h_gamma;
        f.piece_begin = begin;
        f.piece_end = std::uint32_t(cm.facet_pieces.size());
        cm.facets.push_back(f);
      }
    }
  }

  // Pass 2: fundamental-face facets (ascending lower cell, then axis).
  std::vector<std::array<double, 4>> fcorners;
  std::vector<LocalFacePiece> single_piece(1);
  std::vector<LocalFacePiece> pieces_scratch;
  for (std::int64_t id = 0; id < mesh.cell_count(); ++id) {
    const IVec3 c = mesh.cell_coords(id);
    for (int axis = 0; axis < 3; ++axis) {
      if (c[axis] + 1 >= mesh.cells_per_dim()[axis]) continue;
      const detail::FaceFrame fr = detail::face_frame(mesh, c, axis);
      const std::uint32_t degenerate = detail::gather_face_corners(cm.fields, fr, fcorners);

      std::uint32_t fmixed = 0, fpositive = 0;
      for (std::size_t l = 0; l < fcorners.size(); ++l) {
        bool any_neg = false, any_pos = false;
        for (double v : fcorners[l]) (is_negative_side(v) ? any_neg : any_pos) = true;
        if (any_neg && any_pos)
          fmixed |= std::uint32_t(1) << l;
        else if (any_pos)
          fpositive |= std::uint32_t(1) << l;
      }

      const IVec3 cu{c.x + (axis == 0), c.y + (axis == 1), c.z + (axis == 2)};
      const std::int64_t id_u = mesh.cell_index(cu);

      const auto emit = [&](const std::vector<LocalFacePiece>& pieces, bool full_face) {
        // Group piece indices by the (lower domain, upper domain) pair.
        struct Key {
          int d0, d1;
        };
        std::vector<std::pair<Key, std::vector<std::size_t>>> groups;
        for (std::size_t k = 0; k < pieces.size(); ++k) {
          const double cu_ = pieces[k].is_rect ? 0.5 * (pieces[k].lo.u + pieces[k].hi.u)
                                               : (pieces[k].tri[0].u + pieces[k].tri[1].u +
                                                  pieces[k].tri[2].u) / 3.0;
          const double cv_ = pieces[k].is_rect ? 0.5 * (pieces[k].lo.v + pieces[k].hi.v)
                                               : (pieces[k].tri[0].v + pieces[k].tri[1].v +
                                                  pieces[k].tri[2].v) / 3.0;
          const std::uint32_t s0 = detail::resolve_degenerate_signs(cm.fields, fr, degenerate,
                                                                    pieces[k].signs, false, cu_, cv_);
          const std::uint32_t s1 = detail::resolve_degenerate_signs(cm.fields, fr, degenerate,
                                                                    pieces[k].signs, true, cu_, cv_);
          const int d0 = cm.spec.domain_of_signs(s0);
          const int d1 = cm.spec.domain_of_signs(s1);
          if (d0 < 0 || d1 < 0) continue;
          bool found = false;
          for (auto& g : groups)
            if (g.first.d0 == d0 && g.first.d1 == d1) {
              g.second.push_back(k);
              found = true;
              break;
            }
          if (!found) groups.push_back({{d0, d1}, {k}});
        }
        // Deterministic group order.
        std::sort(groups.begin(), groups.end(), [](const auto& a, const auto& b) {
          return a.first.d0 != b.first.d0 ? a.first.d0 < b.first.d0 : a.first.d1 < b.first.d1;
        });
        for (const auto& g : groups) {
          const int cc0 = cm.find_cut_cell(id, g.first.d0);
          const int cc1 = cm.find_cut_cell(id_u, g.first.d1);
          if (cc0 < 0 || cc1 < 0) continue;  // air or discarded sliver: no facet
          const std::uint32_t begin = std::uint32_t(cm.facet_pieces.size());
          for (std::size_t k : g.second)
            cm.facet_pieces.push_back(full_face ? detail::full_face_piece(fr)
                                                : detail::map_face_piece(fr, pieces[k]));
          SkeletonFacet f;
          f.kind = g.first.d0 == g.first.d1 ? FacetKind::InterCell : FacetKind::Interface;
          f.inside = cc0;
          f.outside = cc1;
          f.h_gamma = h_gamma;
          f.piece_begin = begin;
          f.piece_end = std::uint32_t(cm.facet_pieces.size());
          cm.facets.push_back(f);
        }
      };

      if (fmixed == 0) {
        single_piece[0] = LocalFacePiece{};
        single_piece[0].is_rect = true;
        single_piece[0].lo = {0.0, 0.0};
        single_piece[0].hi = {1.0, 1.0};
        single_piece[0].signs = fpositive;
        emit(single_piece, true);
      } else {
        pieces_scratch = cut_unit_face(fcorners, depth);
        emit(pieces_scratch, false);
      }
    }
  }
  return cm;
}

/// Fitted voxel-DG mesh: each fundamental cell is labeled by the domain at
/// its center; labeled cells become full-cell cut cells, faces between
/// labeled cells become full-rect facets (inter-cell when the labels agree,
/// interface otherwise). Air cells carry no DOFs and generate no facets.
inline CutMesh build_voxel_mesh(const FundamentalMesh& mesh, std::vector<LevelSetField> fields,
                                const DomainSpec& spec) {
  if (int(fields.size()) != spec.level_set_count())
    throw std::invalid_argument("build_voxel_mesh: field count does not match DomainSpec");
  for (const auto& f : fields)
    if (!(f.mesh().cells_per_dim() == mesh.cells_per_dim()) ||
        !(f.mesh().box().lo == mesh.box().lo) || !(f.mesh().box().hi == mesh.box().hi))
      throw std::invalid_argument("build_voxel_mesh: level-set field lives on a different mesh");

  CutMesh cm;
  cm.mesh = mesh;
  cm.fields = std::move(fields);
  cm.spec = spec;
  cm.voxel_mode = true;

  const double cell_vol = mesh.cell_volume();
  const Vec3 edge = mesh.edge_length();
  const double full_diam = norm(edge);
  const double h_gamma = std::min(edge.x, std::min(edge.y, edge.z));

  std::vector<int> labels(std::size_t(mesh.cell_count()));
  for (std::int64_t id = 0; id < mesh.cell_count(); ++id) {
    const int d = cm.voxel_label(mesh.cell_coords(id));
    labels[std::size_t(id)] = d;
    if (d < 0) {
      cm.air_volume += cell_vol;
      continue;
    }
    cm.first_cut_cell.emplace(id, std::uint32_t(cm.cells.size()));
    cm.cells.push_back({id, d, cell_vol, full_diam});
  }

  for (std::int64_t id = 0; id < mesh.cell_count(); ++id) {
    const IVec3 c = mesh.cell_coords(id);
    const int d0 = labels[std::size_t(id)];
    for (int axis = 0; axis < 3; ++axis) {
      if (c[axis] + 1 >= mesh.cells_per_dim()[axis]) continue;
      const IVec3 cu{c.x + (axis == 0), c.y + (axis == 1), c.z + (axis == 2)};
      const std::int64_t id_u = mesh.cell_index(cu);
      const int d1 = labels[std::size_t(id_u)];
      if (d0 < 0 || d1 < 0) continue;
      const detail::FaceFrame fr = detail::face_frame(mesh, c, axis);
      const std::uint32_t begin = std::uint32_t(cm.facet_pieces.size());
      cm.facet_pieces.push_back(detail::full_face_piece(fr));
      SkeletonFacet f;
      f.kind = d0 == d1 ? FacetKind::InterCell : FacetKind::Interface;
      f.inside = cm.find_cut_cell(id, d0);
      f.outside = cm.find_cut_cell(id_u, d1);
      f.h_gamma = h_gamma;
      f.piece_begin = begin;
      f.piece_end = begin + 1;
      cm.facets.push_back(f);
    }
  }
  return cm;
}

// ---------------------------------------------------------------------------
// Quadrature over cut cells and facets.
// ---------------------------------------------------------------------------

/// Quadrature points over one cut cell's volume reconstruction; weights sum
/// to the cut-cell volume.
inline void volume_quadrature(const CutMesh& cm, int cut_cell_index, int order,
                              std::vector<QPoint>& out) {
  const CutCell& cc = cm.cells.at(std::size_t(cut_cell_index));
  const SubTriangulation st = cm.cell_subtriangulation(cc.parent_cell);
  for (const auto& e : st.volume) {
    if (e.domain != cc.domain) continue;
    if (e.is_box)
      box_rule(e.lo, e.hi, order, out);
    else
      tet_rule(e.tet[0], e.tet[1], e.tet[2], e.tet[3], order, out);
  }
}

struct FacetQPoint {
  Vec3 x;
  double w = 0.0;
  Vec3 normal;  // unit, inside -> outside
};

/// Quadrature points over one skeleton facet; weights sum to the facet area.
inline void facet_quadrature(const CutMesh& cm, const SkeletonFacet& f, int order,
                             std::vector<FacetQPoint>& out) {
  std::vector<QPoint> pts;
  for (std::uint32_t k = f.piece_begin; k < f.piece_end; ++k) {
    const FacetPiece& p = cm.facet_pieces[k];
    pts.clear();
    if (p.is_rect)
      rect_rule(p.a, p.b, p.c, order, pts);
    else
      tri_rule(p.a, p.b, p.c, order, pts);
    for (const auto& q : pts) out.push_back({q.x, q.w, p.normal});
  }
}

// ---------------------------------------------------------------------------
// Census and debug export.
// ---------------------------------------------------------------------------

struct DomainCensus {
  std::string name;
  std::int64_t cut_cells = 0;
  double volume = 0.0;
};

struct CutMeshCensus {
  std::int64_t fundamental_cells = 0;
  std::int64_t cut_cells = 0;
  std::int64_t intercell_facets = 0;
  std::int64_t interface_facets = 0;
  std::vector<DomainCensus> domains;
  SliverStats slivers;
  double air_volume = 0.0;
};

inline CutMeshCensus census(const CutMesh& cm) {
  CutMeshCensus cs;
  cs.fundamental_cells = cm.mesh.cell_count();
  cs.cut_cells = std::int64_t(cm.cells.size());
  cs.slivers = cm.slivers;
  cs.air_volume = cm.air_volume;
  cs.domains.resize(std::size_t(cm.spec.domain_count()));
  for (int d = 0; d < cm.spec.domain_count(); ++d) cs.domains[d].name = cm.spec.domains()[d].name;
  for (const auto& cc : cm.cells) {
    ++cs.domains[std::size_t(cc.domain)].cut_cells;
    cs.domains[std::size_t(cc.domain)].volume += cc.volume;
  }
  for (const auto& f : cm.facets)
    (f.kind == FacetKind::InterCell ? cs.intercell_facets : cs.interface_facets) += 1;
  return cs;
}

/// ASCII dump of one cell's subtriangulation for visual inspection: a vertex
/// list followed by element lines (box/tet with domain, tri with normal).
inline void write_subtriangulation_ascii(std::ostream& os, const SubTriangulation& st) {
  std::vector<Vec3> verts;
  const auto vid = [&](const Vec3& p) {
    for (std::size_t i = 0; i < verts.size(); ++i)
      if (verts[i] == p) return i;
    verts.push_back(p);
    return verts.size() - 1;
  };
  std::vector<std::string> elements;
  for (const auto& e : st.volume) {
    std::string line;
    if (e.is_box) {
      line = "box " + std::to_string(e.domain);
      const Vec3 corners[2] = {e.lo, e.hi};
      for (int a = 0; a < 8; ++a)
        line += " " + std::to_string(vid({corners[a & 1].x, corners[(a >> 1) & 1].y,
                                          corners[(a >> 2) & 1].z}));
    } else {
      line = "tet " + std::to_string(e.domain);
      for (int i = 0; i < 4; ++i) line += " " + std::to_string(vid(e.tet[i]));
    }
    elements.push_back(line);
  }
  for (const auto& t : st.interface) {
    std::string line = "tri " + std::to_string(t.neg_domain) + " " + std::to_string(t.pos_domain);
    for (int i = 0; i < 3; ++i) line += " " + std::to_string(vid(t.v[i]));
    elements.push_back(line);
  }
  os << "vertices " << verts.size() << "\n";
  for (const auto& v : verts)
    os << format_double(v.x) << " " << format_double(v.y) << " " << format_double(v.z) << "\n";
  os << "elements " << elements.size() << "\n";
  for (const auto& e : elements) os << e << "\n";
}

}  // namespace udg

#endif
