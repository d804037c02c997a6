#ifndef UDG_SOURCE_HPP
#define UDG_SOURCE_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "udg/basis.hpp"
#include "udg/cutmesh.hpp"

namespace udg {

/// Mathematical point dipole: position (mm) and moment (A mm).
struct DipoleSource {
  Vec3 position;
  Vec3 moment;
};

/// Partial-integration right-hand side. The vector is dense over all DOFs,
/// but the support is exactly the 8 trilinear functions of one cut cell.
struct RhsVector {
  std::vector<double> values;  // length 8 * block_count
  int block = -1;              // the supported DOF block
};

namespace detail {

/// Volume centroid of a cut cell's reconstruction. Order-1 rules integrate
/// linear functions exactly, so this is the exact centroid of the
/// piecewise-linear geometry; it always lies inside the closed parent box.
inline Vec3 cut_cell_centroid(const CutMesh& cm, int cc) {
  std::vector<QPoint> pts;
  volume_quadrature(cm, cc, 1, pts);
  Vec3 s{0.0, 0.0, 0.0};
  double w = 0.0;
  for (const QPoint& q : pts) {
    s = s + q.x * q.w;
    w += q.w;
  }
  if (w <= 0.0)
    return cm.mesh.cell_center(cm.mesh.cell_coords(cm.cells[std::size_t(cc)].parent_cell));
  return s / w;
}

}  // namespace detail

/// Discretizes a dipole into f_i = M . grad(phi_i)(x0) on the cut cell that
/// contains x0: the weak form of conservation div(sigma grad u) = div(M delta)
/// tested with phi_i, so a +z moment raises the potential on the +z side.
/// A position exactly on a cut-cell boundary (a fundamental face
/// or a zero level-set crossing) is nudged by 1e-8 h toward the centroid of
/// the lowest-index candidate cut cell so the assignment is deterministic.
/// Positions carried by no cut cell (air, or a discarded sliver) are an
/// error: relocating them silently would bias eccentric-source accuracy.
inline RhsVector assemble_dipole_rhs(const CutMesh& cm, const DipoleSource& d) {
  const FundamentalMesh& mesh = cm.mesh;
  const BoundingBox& bx = mesh.box();
  for (int a = 0; a < 3; ++a)
    if (!(d.position[a] > bx.lo[a] && d.position[a] < bx.hi[a]))
      throw std::invalid_argument("dipole position must lie strictly inside the grid box");

  // Candidate cells per axis: every index whose closed span contains the
  // coordinate. Points on an interior node plane get two per axis.
  std::array<std::array<int, 2>, 3> span{};
  std::array<int, 3> span_n{};
  for (int a = 0; a < 3; ++a) {
    const double t = (d.position[a] - bx.lo[a]) * mesh.cells_per_dim()[a] / (bx.hi[a] - bx.lo[a]);
    int i0 = int(std::floor(t));
    if (i0 >= mesh.cells_per_dim()[a]) i0 = mesh.cells_per_dim()[a] - 1;
    for (int i = i0 - 1; i <= i0 + 1; ++i) {
      if (i < 0 || i >= mesh.cells_per_dim()[a]) continue;
      if (mesh.node_coord(a, i) <= d.position[a] && d.position[a] <= mesh.node_coord(a, i + 1)) {
        if (span_n[a] < 2) span[a][span_n[a]] = i;
        ++span_n[a];
      }
    }
    if (span_n[a] < 1 || span_n[a] > 2)
      throw std::logic_error("assemble_dipole_rhs: inconsistent cell location");
  }

  bool on_boundary = span_n[0] > 1 || span_n[1] > 1 || span_n[2] > 1;
  std::vector<int> candidates;
  for (int kz = 0; kz < span_n[2]; ++kz)
    for (int ky = 0; ky < span_n[1]; ++ky)
      for (int kx = 0; kx < span_n[0]; ++kx) {
        const IVec3 c{span[0][kx], span[1][ky], span[2][kz]};
        const std::int64_t id = mesh.cell_index(c);
        if (cm.voxel_mode) {
          const int dom = cm.voxel_label(c);
          if (dom < 0) continue;
          const int cc = cm.find_cut_cell(id, dom);
          if (cc >= 0) candidates.push_back(cc);
          continue;
        }
        const Vec3 xi = mesh.local_coordinates(c, d.position);
        // Level-set signs at the point; an exact zero is an interface hit
        // and matches either side.
        std::uint32_t base = 0;
        std::vector<int> zeros;
        for (std::size_t l = 0; l < cm.fields.size(); ++l) {
          const double v = cm.fields[l].evaluate(c, xi);
          if (v == 0.0)
            zeros.push_back(int(l));
          else if (!is_negative_side(v))
            base |= std::uint32_t(1) << l;
        }
        if (!zeros.empty()) on_boundary = true;
        for (std::uint32_t sub = 0; sub < (std::uint32_t(1) << zeros.size()); ++sub) {
          std::uint32_t mask = base;
          for (std::size_t z = 0; z < zeros.size(); ++z)
            if (sub & (std::uint32_t(1) << z)) mask |= std::uint32_t(1) << zeros[z];
          const int dom = cm.spec.domain_of_signs(mask);
          if (dom < 0) continue;
          const int cc = cm.find_cut_cell(id, dom);
          if (cc >= 0) candidates.push_back(cc);
        }
      }

  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  if (candidates.empty())
    throw std::runtime_error(
        "dipole position lies in no cut cell (outside every conductive domain or in a "
        "discarded sliver)");
  if (candidates.size() > 1) on_boundary = true;
  const int chosen = candidates.front();

  Vec3 x = d.position;
  const Vec3 edge = mesh.edge_length();
  if (on_boundary) {
    const Vec3 dir = detail::cut_cell_centroid(cm, chosen) - x;
    const double len = std::sqrt(dot(dir, dir));
    const double h = std::max(edge.x, std::max(edge.y, edge.z));
    // Both x and the centroid lie in the closed parent box, so the nudged
    // point stays inside it.
    if (len > 0.0) x = x + dir * (1e-8 * h / len);
  }

  const IVec3 c = mesh.cell_coords(cm.cells[std::size_t(chosen)].parent_cell);
  const LocalBasis b = LocalBasis::at(mesh.local_coordinates(c, x));
  RhsVector out;
  out.values.assign(std::size_t(cm.block_count()) * 8, 0.0);
  out.block = chosen;
  for (int a = 0; a < 8; ++a) {
    const Vec3 g{b.grad[std::size_t(a)].x / edge.x, b.grad[std::size_t(a)].y / edge.y,
                 b.grad[std::size_t(a)].z / edge.z};
    out.values[std::size_t(chosen) * 8 + std::size_t(a)] = dot(d.moment, g);
  }
  return out;
}

/// Dipole list as CSV: x,y,z,mx,my,mz per line (mm, A mm). Blank lines and
/// '#' comments are ignored.
inline std::vector<DipoleSource> read_dipoles_csv(std::istream& in) {
  std::vector<DipoleSource> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    DipoleSource d;
    if (!(ss >> d.position.x >> d.position.y >> d.position.z >> d.moment.x >> d.moment.y >>
          d.moment.z))
      throw std::runtime_error("dipole CSV line " + std::to_string(lineno) +
                               ": expected x,y,z,mx,my,mz");
    std::string rest;
    if (ss >> rest)
      throw std::runtime_error("dipole CSV line " + std::to_string(lineno) + ": trailing fields");
    out.push_back(d);
  }
  return out;
}

}  // namespace udg

#endif
