#ifndef UDG_BASIS_HPP
#define UDG_BASIS_HPP

#include <array>

#include "udg/common.hpp"

namespace udg {

/// The eight trilinear shape functions of a hexahedral cell, evaluated at a
/// reference point xi in [0,1]^3 (extension outside is the same polynomial).
/// Shape a is attached to the corner at offset (a&1, a>>1&1, a>>2&1) and its
/// span is {1, x, y, z, xy, xz, yz, xyz}. Gradients are with respect to the
/// reference coordinates; divide by the cell edge lengths for world gradients.
struct LocalBasis {
  std::array<double, 8> value;
  std::array<Vec3, 8> grad;

  static LocalBasis at(const Vec3& xi) {
    const double w[3][2] = {{1.0 - xi.x, xi.x}, {1.0 - xi.y, xi.y}, {1.0 - xi.z, xi.z}};
    LocalBasis b;
    for (int a = 0; a < 8; ++a) {
      const int bx = a & 1, by = (a >> 1) & 1, bz = (a >> 2) & 1;
      const double dx = bx ? 1.0 : -1.0;
      const double dy = by ? 1.0 : -1.0;
      const double dz = bz ? 1.0 : -1.0;
      b.value[std::size_t(a)] = w[0][bx] * w[1][by] * w[2][bz];
      b.grad[std::size_t(a)] = {dx * w[1][by] * w[2][bz],
                                w[0][bx] * dy * w[2][bz],
                                w[0][bx] * w[1][by] * dz};
    }
    return b;
  }
};

}  // namespace udg

#endif
