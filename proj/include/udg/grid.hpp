#ifndef UDG_GRID_HPP
#define UDG_GRID_HPP

#include <cstdint>
#include <optional>
#include <stdexcept>

#include "udg/common.hpp"

namespace udg {

struct BoundingBox {
  Vec3 lo, hi;

  Vec3 extent() const { return hi - lo; }
};

/// Structured hexahedral mesh over an axis-aligned box.
///
/// Cells are half-open in each axis; a point exactly on an interior node
/// plane belongs to the cell that starts there, and points exactly on the
/// upper box boundary map to the last cell so the closed box is covered.
class FundamentalMesh {
 public:
  FundamentalMesh() = default;

  FundamentalMesh(const BoundingBox& box, const IVec3& cells) : box_(box), cells_(cells) {
    for (int a = 0; a < 3; ++a) {
      if (cells_[a] < 1) throw std::invalid_argument("grid: cell count must be >= 1 per axis");
      if (!(box_.hi[a] > box_.lo[a])) throw std::invalid_argument("grid: degenerate bounding box");
      edge_[a] = (box_.hi[a] - box_.lo[a]) / cells_[a];
    }
  }

  const BoundingBox& box() const { return box_; }
  const IVec3& cells_per_dim() const { return cells_; }

  /// Mesh width per axis (cell edge length, mm).
  const Vec3& edge_length() const { return edge_; }

  std::int64_t cell_count() const {
    return std::int64_t(cells_.x) * cells_.y * cells_.z;
  }
  std::int64_t node_count() const {
    return std::int64_t(cells_.x + 1) * (cells_.y + 1) * (cells_.z + 1);
  }

  std::int64_t cell_index(const IVec3& c) const {
    return c.x + std::int64_t(cells_.x) * (c.y + std::int64_t(cells_.y) * c.z);
  }
  IVec3 cell_coords(std::int64_t id) const {
    IVec3 c;
    c.x = int(id % cells_.x);
    id /= cells_.x;
    c.y = int(id % cells_.y);
    c.z = int(id / cells_.y);
    return c;
  }

  std::int64_t node_index(const IVec3& n) const {
    return n.x + std::int64_t(cells_.x + 1) * (n.y + std::int64_t(cells_.y + 1) * n.z);
  }

  /// Node positions are computed from the fraction i/N so that the
  /// outermost nodes reproduce the box corners exactly.
  double node_coord(int axis, int i) const {
    return box_.lo[axis] + (box_.hi[axis] - box_.lo[axis]) * (double(i) / cells_[axis]);
  }
  Vec3 node_position(const IVec3& n) const {
    return {node_coord(0, n.x), node_coord(1, n.y), node_coord(2, n.z)};
  }

  Vec3 cell_lo(const IVec3& c) const { return node_position(c); }
  Vec3 cell_hi(const IVec3& c) const { return node_position({c.x + 1, c.y + 1, c.z + 1}); }
  Vec3 cell_center(const IVec3& c) const { return (cell_lo(c) + cell_hi(c)) * 0.5; }

  double cell_volume() const { return edge_.x * edge_.y * edge_.z; }

  /// Containing cell of a point, or none if outside the closed box.
  std::optional<IVec3> cell_of_point(const Vec3& p) const {
    IVec3 c;
    for (int a = 0; a < 3; ++a) {
      const double t = (p[a] - box_.lo[a]) * cells_[a] / (box_.hi[a] - box_.lo[a]);
      if (t < 0.0 || t > double(cells_[a])) return std::nullopt;
      int i = int(std::floor(t));
      if (i >= cells_[a]) i = cells_[a] - 1;
      c[a] = i;
    }
    return c;
  }

  /// Local coordinates of p within a cell, in [0,1]^3.
  Vec3 local_coordinates(const IVec3& c, const Vec3& p) const {
    Vec3 xi;
    for (int a = 0; a < 3; ++a) {
      const double t = (p[a] - box_.lo[a]) * cells_[a] / (box_.hi[a] - box_.lo[a]) - c[a];
      if (t < -1e-12 || t > 1.0 + 1e-12)
        throw std::invalid_argument("local_coordinates: point outside the closed cell");
      xi[a] = t < 0.0 ? 0.0 : (t > 1.0 ? 1.0 : t);
    }
    return xi;
  }

 private:
  BoundingBox box_{};
  IVec3 cells_{1, 1, 1};
  Vec3 edge_{};
};

/// Grid used throughout the sphere studies: a cube centered on the sphere
/// center, subdivided N_d times per axis.
inline FundamentalMesh build_centered_cube_grid(const Vec3& center, double edge, int n_per_axis) {
  const Vec3 h{edge / 2.0, edge / 2.0, edge / 2.0};
  return FundamentalMesh({center - h, center + h}, {n_per_axis, n_per_axis, n_per_axis});
}

}  // namespace udg

#endif
