#ifndef UDG_QUADRATURE_HPP
#define UDG_QUADRATURE_HPP

#include <array>
#include <stdexcept>
#include <vector>

#include "udg/common.hpp"

namespace udg {

struct QPoint {
  Vec3 x;
  double w = 0.0;
};

struct Gauss1D {
  double t, w;  // on [0,1]
};

/// Gauss-Legendre points on [0,1]. n = 1..5.
inline const std::vector<Gauss1D>& gauss1d(int n) {
  static const std::vector<std::vector<Gauss1D>> rules = [] {
    std::vector<std::vector<Gauss1D>> r(6);
    r[1] = {{0.5, 1.0}};
    {
      const double d = 0.5 / std::sqrt(3.0);
      r[2] = {{0.5 - d, 0.5}, {0.5 + d, 0.5}};
    }
    {
      const double d = 0.5 * std::sqrt(3.0 / 5.0);
      r[3] = {{0.5 - d, 5.0 / 18.0}, {0.5, 8.0 / 18.0}, {0.5 + d, 5.0 / 18.0}};
    }
    {
      const double a = std::sqrt(3.0 / 7.0 - 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
      const double b = std::sqrt(3.0 / 7.0 + 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
      const double wa = (18.0 + std::sqrt(30.0)) / 72.0;
      const double wb = (18.0 - std::sqrt(30.0)) / 72.0;
      r[4] = {{0.5 - 0.5 * b, wb}, {0.5 - 0.5 * a, wa}, {0.5 + 0.5 * a, wa}, {0.5 + 0.5 * b, wb}};
    }
    {
      const double a = std::sqrt(5.0 - 2.0 * std::sqrt(10.0 / 7.0)) / 3.0;
      const double b = std::sqrt(5.0 + 2.0 * std::sqrt(10.0 / 7.0)) / 3.0;
      const double wa = (322.0 + 13.0 * std::sqrt(70.0)) / 1800.0;
      const double wb = (322.0 - 13.0 * std::sqrt(70.0)) / 1800.0;
      r[5] = {{0.5 - 0.5 * b, wb}, {0.5 - 0.5 * a, wa}, {0.5, 64.0 / 225.0}, {0.5 + 0.5 * a, wa}, {0.5 + 0.5 * b, wb}};
    }
    return r;
  }();
  if (n < 1 || n > 5) throw std::invalid_argument("gauss1d: unsupported point count");
  return rules[std::size_t(n)];
}

inline int gauss_points_for_order(int order) {
  if (order < 1) throw std::invalid_argument("quadrature: order must be >= 1");
  const int n = order / 2 + 1;
  if (n > 5) throw std::invalid_argument("quadrature: unsupported order");
  return n;
}

/// Tensor-product rule on an axis-aligned box.
inline void box_rule(const Vec3& lo, const Vec3& hi, int order, std::vector<QPoint>& out) {
  const auto& g = gauss1d(gauss_points_for_order(order));
  const Vec3 e = hi - lo;
  const double vol = e.x * e.y * e.z;
  for (const auto& gz : g)
    for (const auto& gy : g)
      for (const auto& gx : g)
        out.push_back({{lo.x + e.x * gx.t, lo.y + e.y * gy.t, lo.z + e.z * gz.t},
                       vol * gx.w * gy.w * gz.w});
}

/// Tensor-product rule on the parallelogram origin + [0,1] u + [0,1] v.
inline void rect_rule(const Vec3& origin, const Vec3& u, const Vec3& v, int order,
                      std::vector<QPoint>& out) {
  const auto& g = gauss1d(gauss_points_for_order(order));
  const double area = norm(cross(u, v));
  for (const auto& gv : g)
    for (const auto& gu : g)
      out.push_back({origin + u * gu.t + v * gv.t, area * gu.w * gv.w});
}

/// Symmetric rule on a triangle; exact for polynomials of the given total
/// degree. Supported orders: 1 (centroid) and 2 (three interior points).
inline void tri_rule(const Vec3& a, const Vec3& b, const Vec3& c, int order,
                     std::vector<QPoint>& out) {
  const double area = 0.5 * norm(cross(b - a, c - a));
  if (order <= 1) {
    out.push_back({(a + b + c) / 3.0, area});
    return;
  }
  if (order == 2) {
    const double w = area / 3.0;
    out.push_back({a * (2.0 / 3.0) + b * (1.0 / 6.0) + c * (1.0 / 6.0), w});
    out.push_back({a * (1.0 / 6.0) + b * (2.0 / 3.0) + c * (1.0 / 6.0), w});
    out.push_back({a * (1.0 / 6.0) + b * (1.0 / 6.0) + c * (2.0 / 3.0), w});
    return;
  }
  throw std::invalid_argument("tri_rule: unsupported order");
}

inline double tet_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  return dot(cross(b - a, c - a), d - a) / 6.0;
}

/// Symmetric rule on a tetrahedron; exact for polynomials of the given total
/// degree. Supported orders: 1 (centroid) and 2 (four interior points).
inline void tet_rule(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d, int order,
                     std::vector<QPoint>& out) {
  const double vol = std::abs(tet_volume(a, b, c, d));
  if (order <= 1) {
    out.push_back({(a + b + c + d) * 0.25, vol});
    return;
  }
  if (order == 2) {
    // Barycentric (alpha, beta, beta, beta) and rotations.
    const double alpha = (5.0 + 3.0 * std::sqrt(5.0)) / 20.0;
    const double beta = (5.0 - std::sqrt(5.0)) / 20.0;
    const double w = vol / 4.0;
    const Vec3 p[4] = {a, b, c, d};
    for (int i = 0; i < 4; ++i) {
      Vec3 q{0.0, 0.0, 0.0};
      for (int j = 0; j < 4; ++j) q += p[j] * (j == i ? alpha : beta);
      out.push_back({q, w});
    }
    return;
  }
  throw std::invalid_argument("tet_rule: unsupported order");
}

}  // namespace udg

#endif
