#ifndef UDG_SUBTRIANGULATION_HPP
#define UDG_SUBTRIANGULATION_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "udg/levelset.hpp"
#include "udg/quadrature.hpp"

namespace udg {

// ---------------------------------------------------------------------------
// Cell-local cutting machinery.
//
// Everything below operates in cell-local coordinates on the unit cube; the
// level sets are given by their eight corner values per cell. A trilinear
// function restricted to an axis-aligned sub-box is again trilinear in the
// sub-box corner values, and it attains its extrema at box corners, so the
// corner-sign test for "does this level set cut this box" is exact. Cut leaf
// boxes are split into 24 tetrahedra through the box and face centers; this
// honors the trilinear sign at the face and body centers, which is exactly
// the asymptotic-decider resolution of the marching-cubes ambiguities.
// Pieces are then re-cut by one level set after the other (marching
// tetrahedra, with bisection roots on the trilinear fields), in declaration
// order.
// ---------------------------------------------------------------------------

struct LocalVolumePiece {
  bool is_box = false;
  Vec3 lo, hi;               // box pieces
  std::array<Vec3, 4> tet;   // tet pieces, positively oriented
  std::uint32_t signs = 0;   // bit l set = positive side of level set l
};

struct LocalInterfacePiece {
  std::array<Vec3, 3> tri;   // winding such that the normal points neg -> pos
  int level_set = 0;
  std::uint32_t other_signs = 0;  // signs of the remaining level sets
};

struct LocalSubTriangulation {
  std::vector<LocalVolumePiece> volume;
  std::vector<LocalInterfacePiece> interface;
};

namespace detail {

inline double tri_area2(const std::array<Vec3, 3>& t) {
  return norm(cross(t[1] - t[0], t[2] - t[0]));
}

inline bool lex_less(const Vec3& a, const Vec3& b) {
  if (a.x != b.x) return a.x < b.x;
  if (a.y != b.y) return a.y < b.y;
  return a.z < b.z;
}

/// Boundary point between the negative and positive side along a segment,
/// by bisection on the trilinear field. The endpoints are sorted first so the
/// result does not depend on traversal direction.
inline Vec3 edge_root(const std::array<double, 8>& f, Vec3 a, Vec3 b) {
  if (lex_less(b, a)) std::swap(a, b);
  const bool neg_a = is_negative_side(LevelSetField::trilinear(f, a));
  double t0 = 0.0, t1 = 1.0;
  for (int it = 0; it < 54; ++it) {
    const double tm = 0.5 * (t0 + t1);
    const Vec3 m = a + (b - a) * tm;
    if (is_negative_side(LevelSetField::trilinear(f, m)) == neg_a)
      t0 = tm;
    else
      t1 = tm;
  }
  const double t = 0.5 * (t0 + t1);
  return a + (b - a) * t;
}

inline void fix_tet_orientation(std::array<Vec3, 4>& t) {
  if (tet_volume(t[0], t[1], t[2], t[3]) < 0.0) std::swap(t[2], t[3]);
}

/// Orient a triangle so its normal points toward the reference point.
inline void orient_toward(std::array<Vec3, 3>& t, const Vec3& ref) {
  const Vec3 n = cross(t[1] - t[0], t[2] - t[0]);
  const Vec3 c = (t[0] + t[1] + t[2]) / 3.0;
  if (dot(n, ref - c) < 0.0) std::swap(t[1], t[2]);
}

struct WorkTet {
  std::array<Vec3, 4> v;
  std::uint32_t signs;
};
struct WorkTri {
  std::array<Vec3, 3> v;
  int level_set;
  std::uint32_t signs;
};

// Degenerate pieces appear when edge roots converge onto decomposition
// vertices (values exactly zero there); their measure is within a few
// hundred ulp of zero but their orientation is roundoff garbage. The drop
// tolerances sit well above that noise floor and well below any piece a
// legitimate refinement depth can produce.
constexpr double kVolumeDropTol = 1e-14;  // relative to the unit cell
constexpr double kAreaDropTol = 1e-14;

/// Cut one tetrahedron by one level set; appends the sub-tets to out and the
/// interface triangles to tris.
inline void march_tet(const WorkTet& wt, const std::array<double, 8>& f, int l,
                      std::vector<WorkTet>& out, std::vector<WorkTri>& tris) {
  bool neg[4];
  int nneg = 0;
  for (int i = 0; i < 4; ++i) {
    neg[i] = is_negative_side(LevelSetField::trilinear(f, wt.v[i]));
    if (neg[i]) ++nneg;
  }
  const std::uint32_t bit = std::uint32_t(1) << l;
  const auto push_tet = [&](Vec3 a, Vec3 b, Vec3 c, Vec3 d, bool positive) {
    std::array<Vec3, 4> t{a, b, c, d};
    fix_tet_orientation(t);
    if (std::abs(tet_volume(t[0], t[1], t[2], t[3])) < kVolumeDropTol) return;
    out.push_back({t, positive ? (wt.signs | bit) : wt.signs});
  };
  const auto push_tri = [&](Vec3 a, Vec3 b, Vec3 c, const Vec3& pos_ref) {
    std::array<Vec3, 3> t{a, b, c};
    if (tri_area2(t) < kAreaDropTol) return;
    orient_toward(t, pos_ref);
    tris.push_back({t, l, wt.signs});
  };

  if (nneg == 0) {
    out.push_back({wt.v, wt.signs | bit});
    return;
  }
  if (nneg == 4) {
    out.push_back(wt);
    return;
  }

  if (nneg == 1 || nneg == 3) {
    const bool lone_neg = (nneg == 1);
    int il = -1;
    for (int i = 0; i < 4; ++i)
      if (neg[i] == lone_neg) il = i;
    int others[3], no = 0;
    for (int i = 0; i < 4; ++i)
      if (i != il) others[no++] = i;
    const Vec3 A = wt.v[il];
    const Vec3 V1 = wt.v[others[0]], V2 = wt.v[others[1]], V3 = wt.v[others[2]];
    const Vec3 r1 = edge_root(f, A, V1);
    const Vec3 r2 = edge_root(f, A, V2);
    const Vec3 r3 = edge_root(f, A, V3);
    // lone corner piece
    push_tet(A, r1, r2, r3, !lone_neg);
    // remaining prism
    push_tet(V1, V2, V3, r1, lone_neg);
    push_tet(V2, V3, r1, r2, lone_neg);
    push_tet(V3, r1, r2, r3, lone_neg);
    const Vec3 pos_ref = lone_neg ? (V1 + V2 + V3) / 3.0 : A;
    push_tri(r1, r2, r3, pos_ref);
    return;
  }

  // two vs two: negatives (A,B), positives (C,D) in index order
  int in[2], ip[2], ni = 0, pi = 0;
  for (int i = 0; i < 4; ++i) (neg[i] ? in[ni++] : ip[pi++]) = i;
  const Vec3 A = wt.v[in[0]], B = wt.v[in[1]], C = wt.v[ip[0]], D = wt.v[ip[1]];
  const Vec3 rAC = edge_root(f, A, C), rAD = edge_root(f, A, D);
  const Vec3 rBC = edge_root(f, B, C), rBD = edge_root(f, B, D);
  // negative wedge, fanned from A with the interface diagonal (rAC, rBD)
  push_tet(A, B, rBC, rBD, false);
  push_tet(A, rAC, rAD, rBD, false);
  push_tet(A, rAC, rBD, rBC, false);
  // positive wedge, fanned from C
  push_tet(C, D, rAD, rBD, true);
  push_tet(C, rAC, rAD, rBD, true);
  push_tet(C, rAC, rBD, rBC, true);
  const Vec3 pos_ref = (C + D) * 0.5;
  push_tri(rAC, rAD, rBD, pos_ref);
  push_tri(rAC, rBD, rBC, pos_ref);
}

/// Cut a pending interface triangle (living on an earlier level set) in-plane
/// by level set l, appending the classified sub-triangles.
inline void march_tri(const WorkTri& wt, const std::array<double, 8>& f, int l,
                      std::vector<WorkTri>& out) {
  bool neg[3];
  int nneg = 0;
  for (int i = 0; i < 3; ++i) {
    neg[i] = is_negative_side(LevelSetField::trilinear(f, wt.v[i]));
    if (neg[i]) ++nneg;
  }
  const std::uint32_t bit = std::uint32_t(1) << l;
  if (nneg == 0) {
    out.push_back({wt.v, wt.level_set, wt.signs | bit});
    return;
  }
  if (nneg == 3) {
    out.push_back(wt);
    return;
  }
  const bool lone_neg = (nneg == 1);
  int il = -1;
  for (int i = 0; i < 3; ++i)
    if (neg[i] == lone_neg) il = i;
  // Cyclic order starting at the lone vertex preserves the winding.
  const Vec3 A = wt.v[il], B = wt.v[(il + 1) % 3], C = wt.v[(il + 2) % 3];
  const Vec3 rAB = edge_root(f, A, B);
  const Vec3 rCA = edge_root(f, C, A);
  const std::uint32_t lone_signs = lone_neg ? wt.signs : (wt.signs | bit);
  const std::uint32_t rest_signs = lone_neg ? (wt.signs | bit) : wt.signs;
  const auto push = [&](Vec3 a, Vec3 b, Vec3 c, std::uint32_t s) {
    std::array<Vec3, 3> t{a, b, c};
    if (tri_area2(t) < kAreaDropTol) return;
    out.push_back({t, wt.level_set, s});
  };
  push(A, rAB, rCA, lone_signs);
  push(rAB, B, C, rest_signs);
  push(rAB, C, rCA, rest_signs);
}

}  // namespace detail

/// Recursively cut the unit cell by the given level sets (eight corner values
/// each). depth octree refinements are applied to cut boxes before the final
/// simplex decomposition.
inline LocalSubTriangulation cut_unit_cell(const std::vector<std::array<double, 8>>& corners,
                                           int depth) {
  using namespace detail;
  LocalSubTriangulation result;
  const int L = int(corners.size());
  if (L > 20) throw std::invalid_argument("cut_unit_cell: too many level sets");

  struct Frame {
    Vec3 lo, hi;
    int depth;
  };
  std::vector<Frame> stack;
  stack.push_back({{0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}, depth});

  std::vector<WorkTet> pieces, next_pieces;
  std::vector<WorkTri> tris, next_tris;

  while (!stack.empty()) {
    const Frame fr = stack.back();
    stack.pop_back();

    // Corner signs per level set; exact cut test on this sub-box.
    std::uint32_t mixed = 0, positive = 0;
    for (int l = 0; l < L; ++l) {
      bool any_neg = false, any_pos = false;
      for (int ci = 0; ci < 8; ++ci) {
        const Vec3 xi{ci & 1 ? fr.hi.x : fr.lo.x, (ci >> 1) & 1 ? fr.hi.y : fr.lo.y,
                      (ci >> 2) & 1 ? fr.hi.z : fr.lo.z};
        (is_negative_side(LevelSetField::trilinear(corners[l], xi)) ? any_neg : any_pos) = true;
      }
      if (any_neg && any_pos)
        mixed |= std::uint32_t(1) << l;
      else if (any_pos)
        positive |= std::uint32_t(1) << l;
    }

    if (mixed == 0) {
      LocalVolumePiece p;
      p.is_box = true;
      p.lo = fr.lo;
      p.hi = fr.hi;
      p.signs = positive;
      result.volume.push_back(p);
      continue;
    }

    if (fr.depth > 0) {
      const Vec3 mid = (fr.lo + fr.hi) * 0.5;
      for (int oc = 7; oc >= 0; --oc) {  // stack order: process octant 0 first
        Vec3 lo, hi;
        lo.x = (oc & 1) ? mid.x : fr.lo.x;
        hi.x = (oc & 1) ? fr.hi.x : mid.x;
        lo.y = (oc & 2) ? mid.y : fr.lo.y;
        hi.y = (oc & 2) ? fr.hi.y : mid.y;
        lo.z = (oc & 4) ? mid.z : fr.lo.z;
        hi.z = (oc & 4) ? fr.hi.z : mid.z;
        stack.push_back({lo, hi, fr.depth - 1});
      }
      continue;
    }

    // Leaf: split into 24 tetrahedra through the box and face centers.
    pieces.clear();
    tris.clear();
    const Vec3 center = (fr.lo + fr.hi) * 0.5;
    for (int axis = 0; axis < 3; ++axis)
      for (int side = 0; side < 2; ++side) {
        const int b = (axis + 1) % 3, c = (axis + 2) % 3;
        Vec3 q[4];
        static const int uv[4][2] = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
        for (int k = 0; k < 4; ++k) {
          Vec3 p;
          p[axis] = side ? fr.hi[axis] : fr.lo[axis];
          p[b] = uv[k][0] ? fr.hi[b] : fr.lo[b];
          p[c] = uv[k][1] ? fr.hi[c] : fr.lo[c];
          q[k] = p;
        }
        Vec3 fc = (q[0] + q[2]) * 0.5;  // face center
        for (int k = 0; k < 4; ++k) {
          std::array<Vec3, 4> t{q[k], q[(k + 1) % 4], fc, center};
          fix_tet_orientation(t);
          pieces.push_back({t, 0});
        }
      }

    for (int l = 0; l < L; ++l) {
      const std::uint32_t bit = std::uint32_t(1) << l;
      if (!(mixed & bit)) {
        if (positive & bit) {
          for (auto& p : pieces) p.signs |= bit;
          for (auto& t : tris) t.signs |= bit;
        }
        continue;
      }
      next_pieces.clear();
      for (const auto& p : pieces) march_tet(p, corners[l], l, next_pieces, tris);
      pieces.swap(next_pieces);
      next_tris.clear();
      for (const auto& t : tris)
        if (t.level_set == l)
          next_tris.push_back(t);  // freshly emitted by march_tet above
        else
          march_tri(t, corners[l], l, next_tris);
      tris.swap(next_tris);
    }

    for (const auto& p : pieces) {
      LocalVolumePiece vp;
      vp.is_box = false;
      vp.tet = p.v;
      vp.signs = p.signs;
      result.volume.push_back(vp);
    }
    for (const auto& t : tris)
      result.interface.push_back({t.v, t.level_set, t.signs});
  }
  return result;
}

// ---------------------------------------------------------------------------
// Face cutting (2D analogue), used for the skeleton facets. Face-local
// coordinates (u, v) on the unit square; level sets given by their four face
// corner values, bit0 = u, bit1 = v.
// ---------------------------------------------------------------------------

struct Vec2 {
  double u = 0.0, v = 0.0;
};

struct LocalFacePiece {
  bool is_rect = false;
  Vec2 lo, hi;               // rect pieces
  std::array<Vec2, 3> tri;   // triangle pieces
  std::uint32_t signs = 0;
};

namespace detail {

inline double bilinear(const std::array<double, 4>& f, const Vec2& p) {
  return f[0] * (1.0 - p.u) * (1.0 - p.v) + f[1] * p.u * (1.0 - p.v) +
         f[2] * (1.0 - p.u) * p.v + f[3] * p.u * p.v;
}

inline Vec2 face_root(const std::array<double, 4>& f, Vec2 a, Vec2 b) {
  if (b.u < a.u || (b.u == a.u && b.v < a.v)) std::swap(a, b);
  const bool neg_a = is_negative_side(bilinear(f, a));
  double t0 = 0.0, t1 = 1.0;
  for (int it = 0; it < 54; ++it) {
    const double tm = 0.5 * (t0 + t1);
    const Vec2 m{a.u + (b.u - a.u) * tm, a.v + (b.v - a.v) * tm};
    if (is_negative_side(bilinear(f, m)) == neg_a)
      t0 = tm;
    else
      t1 = tm;
  }
  const double t = 0.5 * (t0 + t1);
  return {a.u + (b.u - a.u) * t, a.v + (b.v - a.v) * t};
}

inline double tri_area2d(const Vec2& a, const Vec2& b, const Vec2& c) {
  return 0.5 * std::abs((b.u - a.u) * (c.v - a.v) - (b.v - a.v) * (c.u - a.u));
}

struct WorkTri2 {
  std::array<Vec2, 3> v;
  std::uint32_t signs;
};

inline void march_tri2(const WorkTri2& wt, const std::array<double, 4>& f, int l,
                       std::vector<WorkTri2>& out) {
  bool neg[3];
  int nneg = 0;
  for (int i = 0; i < 3; ++i) {
    neg[i] = is_negative_side(bilinear(f, wt.v[i]));
    if (neg[i]) ++nneg;
  }
  const std::uint32_t bit = std::uint32_t(1) << l;
  if (nneg == 0) {
    out.push_back({wt.v, wt.signs | bit});
    return;
  }
  if (nneg == 3) {
    out.push_back(wt);
    return;
  }
  const bool lone_neg = (nneg == 1);
  int il = -1;
  for (int i = 0; i < 3; ++i)
    if (neg[i] == lone_neg) il = i;
  const Vec2 A = wt.v[il], B = wt.v[(il + 1) % 3], C = wt.v[(il + 2) % 3];
  const Vec2 rAB = face_root(f, A, B);
  const Vec2 rCA = face_root(f, C, A);
  const std::uint32_t lone_signs = lone_neg ? wt.signs : (wt.signs | bit);
  const std::uint32_t rest_signs = lone_neg ? (wt.signs | bit) : wt.signs;
  const auto push = [&](Vec2 a, Vec2 b, Vec2 c, std::uint32_t s) {
    if (tri_area2d(a, b, c) < kAreaDropTol) return;
    out.push_back({{a, b, c}, s});
  };
  push(A, rAB, rCA, lone_signs);
  push(rAB, B, C, rest_signs);
  push(rAB, C, rCA, rest_signs);
}

}  // namespace detail

/// Cut the unit face by the given level sets (four corner values each).
/// Level sets that vanish identically on the face (all four corner values
/// exactly zero) count as uniformly negative here; disambiguation between the
/// two adjoining cells is the caller's business.
inline std::vector<LocalFacePiece> cut_unit_face(const std::vector<std::array<double, 4>>& corners,
                                                 int depth) {
  using namespace detail;
  std::vector<LocalFacePiece> result;
  const int L = int(corners.size());

  struct Frame {
    Vec2 lo, hi;
    int depth;
  };
  std::vector<Frame> stack;
  stack.push_back({{0.0, 0.0}, {1.0, 1.0}, depth});

  std::vector<WorkTri2> pieces, next_pieces;

  while (!stack.empty()) {
    const Frame fr = stack.back();
    stack.pop_back();

    std::uint32_t mixed = 0, positive = 0;
    for (int l = 0; l < L; ++l) {
      bool any_neg = false, any_pos = false;
      for (int ci = 0; ci < 4; ++ci) {
        const Vec2 p{ci & 1 ? fr.hi.u : fr.lo.u, ci & 2 ? fr.hi.v : fr.lo.v};
        (is_negative_side(bilinear(corners[l], p)) ? any_neg : any_pos) = true;
      }
      if (any_neg && any_pos)
        mixed |= std::uint32_t(1) << l;
      else if (any_pos)
        positive |= std::uint32_t(1) << l;
    }

    if (mixed == 0) {
      LocalFacePiece p;
      p.is_rect = true;
      p.lo = fr.lo;
      p.hi = fr.hi;
      p.signs = positive;
      result.push_back(p);
      continue;
    }

    if (fr.depth > 0) {
      const Vec2 mid{(fr.lo.u + fr.hi.u) * 0.5, (fr.lo.v + fr.hi.v) * 0.5};
      for (int q = 3; q >= 0; --q) {
        Vec2 lo{q & 1 ? mid.u : fr.lo.u, q & 2 ? mid.v : fr.lo.v};
        Vec2 hi{q & 1 ? fr.hi.u : mid.u, q & 2 ? fr.hi.v : mid.v};
        stack.push_back({lo, hi, fr.depth - 1});
      }
      continue;
    }

    pieces.clear();
    const Vec2 center{(fr.lo.u + fr.hi.u) * 0.5, (fr.lo.v + fr.hi.v) * 0.5};
    const Vec2 q[4] = {{fr.lo.u, fr.lo.v}, {fr.hi.u, fr.lo.v}, {fr.hi.u, fr.hi.v}, {fr.lo.u, fr.hi.v}};
    for (int k = 0; k < 4; ++k) pieces.push_back({{q[k], q[(k + 1) % 4], center}, 0});

    for (int l = 0; l < L; ++l) {
      const std::uint32_t bit = std::uint32_t(1) << l;
      if (!(mixed & bit)) {
        if (positive & bit)
          for (auto& p : pieces) p.signs |= bit;
        continue;
      }
      next_pieces.clear();
      for (const auto& p : pieces) march_tri2(p, corners[l], l, next_pieces);
      pieces.swap(next_pieces);
    }

    for (const auto& p : pieces) {
      LocalFacePiece fp;
      fp.is_rect = false;
      fp.tri = p.v;
      fp.signs = p.signs;
      result.push_back(fp);
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Domain-labeled subtriangulation of one fundamental cell, in global
// coordinates.
// ---------------------------------------------------------------------------

struct SubTriangulation {
  struct VolumeElement {
    int domain = -1;  // -1: outside every declared domain
    bool is_box = false;
    Vec3 lo, hi;
    std::array<Vec3, 4> tet;
    double measure = 0.0;
  };
  struct InterfaceTriangle {
    int level_set = 0;
    int neg_domain = -1, pos_domain = -1;
    std::array<Vec3, 3> v;   // winding consistent with the normal
    Vec3 normal;             // unit, points from the negative to the positive side
    double area = 0.0;
  };
  std::vector<VolumeElement> volume;
  std::vector<InterfaceTriangle> interface;
};

/// Subtriangulate one fundamental cell against the discretized level sets.
inline SubTriangulation subtriangulate_cell_domains(const FundamentalMesh& mesh, const IVec3& cell,
                                                    const std::vector<LevelSetField>& fields,
                                                    const DomainSpec& spec, int depth) {
  std::vector<std::array<double, 8>> corners(fields.size());
  for (std::size_t l = 0; l < fields.size(); ++l) corners[l] = fields[l].corner_values(cell);
  const LocalSubTriangulation local = cut_unit_cell(corners, depth);

  const Vec3 base = mesh.cell_lo(cell);
  const Vec3 e = mesh.edge_length();
  const auto to_global = [&](const Vec3& xi) {
    return Vec3{base.x + e.x * xi.x, base.y + e.y * xi.y, base.z + e.z * xi.z};
  };

  SubTriangulation st;
  st.volume.reserve(local.volume.size());
  for (const auto& p : local.volume) {
    SubTriangulation::VolumeElement ve;
    ve.domain = spec.domain_of_signs(p.signs);
    ve.is_box = p.is_box;
    if (p.is_box) {
      ve.lo = to_global(p.lo);
      ve.hi = to_global(p.hi);
      const Vec3 d = ve.hi - ve.lo;
      ve.measure = d.x * d.y * d.z;
    } else {
      for (int i = 0; i < 4; ++i) ve.tet[i] = to_global(p.tet[i]);
      ve.measure = std::abs(tet_volume(ve.tet[0], ve.tet[1], ve.tet[2], ve.tet[3]));
    }
    st.volume.push_back(ve);
  }
  st.interface.reserve(local.interface.size());
  for (const auto& t : local.interface) {
    SubTriangulation::InterfaceTriangle it;
    it.level_set = t.level_set;
    const std::uint32_t bit = std::uint32_t(1) << t.level_set;
    it.neg_domain = spec.domain_of_signs(t.other_signs & ~bit);
    it.pos_domain = spec.domain_of_signs(t.other_signs | bit);
    for (int i = 0; i < 3; ++i) it.v[i] = to_global(t.tri[i]);
    const Vec3 n2 = cross(it.v[1] - it.v[0], it.v[2] - it.v[0]);
    const double n2n = norm(n2);
    if (n2n == 0.0) continue;
    it.normal = n2 / n2n;
    it.area = 0.5 * n2n;
    st.interface.push_back(it);
  }
  return st;
}

/// Single-level-set subtriangulation of the unit cell from eight nodal
/// values; domain 0 is the negative side, domain 1 the positive side.
inline SubTriangulation subtriangulate_cell(const std::array<double, 8>& nodal_values,
                                            int depth = 5) {
  for (double v : nodal_values)
    if (!std::isfinite(v)) throw std::invalid_argument("subtriangulate_cell: non-finite value");
  const FundamentalMesh unit({{0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}}, {1, 1, 1});
  std::vector<double> nodal(nodal_values.begin(), nodal_values.end());
  const LevelSetField field(unit, std::move(nodal));
  SignPattern neg, pos;
  neg.req = {SignRequirement::Negative};
  pos.req = {SignRequirement::Positive};
  const DomainSpec spec(1, {Domain{"negative", {neg}, Sym3::isotropic(1.0)},
                            Domain{"positive", {pos}, Sym3::isotropic(1.0)}});
  return subtriangulate_cell_domains(unit, {0, 0, 0}, {field}, spec, depth);
}

/// Multi-level-set subtriangulation of the unit cell with domain labels.
inline SubTriangulation subtriangulate_recursive(const std::vector<std::array<double, 8>>& corners,
                                                 const DomainSpec& spec, int depth = 5) {
  if (int(corners.size()) != spec.level_set_count() || corners.empty())
    throw std::invalid_argument("subtriangulate_recursive: need one corner set per level set");
  for (const auto& cs : corners)
    for (double v : cs)
      if (!std::isfinite(v)) throw std::invalid_argument("subtriangulate_recursive: non-finite value");
  const FundamentalMesh unit({{0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}}, {1, 1, 1});
  std::vector<LevelSetField> fields;
  fields.reserve(corners.size());
  for (const auto& cs : corners)
    fields.emplace_back(unit, std::vector<double>(cs.begin(), cs.end()));
  return subtriangulate_cell_domains(unit, {0, 0, 0}, fields, spec, depth);
}

}  // namespace udg

#endif
