#ifndef UDG_ANALYTIC_HPP
#define UDG_ANALYTIC_HPP

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "udg/source.hpp"
#include "udg/transfer.hpp"

namespace udg {

/// Concentric isotropic shells, listed outside-in: radii strictly descending,
/// one conductivity per shell. Shell k occupies radii[k+1] < r < radii[k];
/// the last shell is the full ball below the smallest radius.
struct SphereModel {
  Vec3 center{0.0, 0.0, 0.0};
  std::vector<double> radii;
  std::vector<double> conductivities;
};

struct SeriesControl {
  int max_degree = 200;
  double tail_tol = 1e-10;
};

namespace detail {

/// Degree-n radial profile at the outer surface for a dipole harmonic sourced
/// at radius b inside the innermost shell. The source amplitude in the
/// innermost shell is tau^(n-1) / (4 pi sigma_src r_src^2), tau = b/r_src.
/// Interface conditions are applied as 2x2 layer-transfer recursions from the
/// insulated outer boundary inward; per-shell bases (r/R_outer)^n and
/// (R_inner/r)^(n+1) keep every factor bounded at any degree.
inline double sphere_surface_factor(const std::vector<double>& radii,
                                    const std::vector<double>& sigma, double b, int n) {
  constexpr double pi = 3.14159265358979323846;
  const int L = int(radii.size());
  const double r_src = radii[std::size_t(L - 1)];
  const double s_hat =
      std::pow(b / r_src, n - 1) / (4.0 * pi * sigma[std::size_t(L - 1)] * r_src * r_src);
  if (L == 1) return s_hat * double(2 * n + 1) / double(n);

  // Outer shell: the insulated boundary fixes the coefficient ratio; the
  // outgoing coefficient is normalized to 1 and the whole profile is rescaled
  // at the end to match the source amplitude.
  const double x1 = std::pow(radii[1] / radii[0], n + 1);
  double a = double(n + 1) * x1 / double(n);
  double bb = 1.0;
  const double surface = a + x1;

  for (int j = 1; j < L; ++j) {
    const double rho = radii[std::size_t(j)];
    const double up = std::pow(rho / radii[std::size_t(j - 1)], n);
    const double w = j + 1 < L ? radii[std::size_t(j + 1)] : rho;
    const double down = std::pow(w / rho, n + 1);
    const double c1 = a * up + bb;
    const double c2 = (sigma[std::size_t(j - 1)] / sigma[std::size_t(j)]) *
                      (double(n) * a * up - double(n + 1) * bb);
    a = (double(n + 1) * c1 + c2) / double(2 * n + 1);
    const double vb = (double(n) * c1 - c2) / double(2 * n + 1);
    if (down == 0.0) return 0.0;  // shell ratio underflowed: nothing reaches the surface
    bb = vb / down;
  }
  if (bb == 0.0 || std::isinf(bb)) return 0.0;
  return surface * (s_hat / bb);
}

}  // namespace detail

/// Series potential of a dipole inside the innermost shell, evaluated at the
/// electrode directions on the outer radius and referenced exactly like the
/// numerical pipeline: U_k = u(p0) - u(p_k), matching the restriction rows
/// phi_i(p0) - phi_i(p_k). Electrode positions are taken as directions from
/// the model center (assumed on the outer surface). Throws when the series
/// tail estimate is still above tail_tol at max_degree.
inline std::vector<double> analytic_potential(const SphereModel& m, const DipoleSource& d,
                                              const ElectrodeSet& es,
                                              const SeriesControl& sc = {}) {
  const int L = int(m.radii.size());
  if (L < 1 || m.radii.size() != m.conductivities.size())
    throw std::invalid_argument("sphere model: need one conductivity per radius");
  for (int k = 0; k < L; ++k) {
    if (!(m.radii[std::size_t(k)] > 0.0) || !(m.conductivities[std::size_t(k)] > 0.0))
      throw std::invalid_argument("sphere model: radii and conductivities must be positive");
    if (k > 0 && !(m.radii[std::size_t(k)] < m.radii[std::size_t(k - 1)]))
      throw std::invalid_argument("sphere model: radii must be strictly descending");
  }
  if (sc.max_degree < 1) throw std::invalid_argument("series: max_degree must be >= 1");

  const Vec3 rel = d.position - m.center;
  const double b = norm(rel);
  if (!(b < m.radii[std::size_t(L - 1)]))
    throw std::invalid_argument("dipole must lie strictly inside the innermost compartment");
  const Vec3 b_hat = b > 0.0 ? rel / b : Vec3{0.0, 0.0, 1.0};

  // Electrode directions; the reference is carried along as the last entry.
  const std::size_t ne = es.positions.size();
  std::vector<Vec3> dirs(ne + 1);
  for (std::size_t k = 0; k <= ne; ++k) {
    const Vec3 p = (k < ne ? es.positions[k] : es.reference) - m.center;
    const double len = norm(p);
    if (!(len > 0.0)) throw std::invalid_argument("electrode coincides with the sphere center");
    dirs[k] = p / len;
  }

  std::vector<double> cosg(ne + 1);
  for (std::size_t k = 0; k <= ne; ++k)
    cosg[k] = std::clamp(dot(b_hat, dirs[k]), -1.0, 1.0);
  std::vector<double> p_prev(ne + 1, 1.0);   // P_0
  std::vector<double> p_cur(cosg);           // P_1
  std::vector<double> dp_prev(ne + 1, 0.0);  // P_0'
  std::vector<double> dp_cur(ne + 1, 1.0);   // P_1'

  std::vector<double> u(ne + 1, 0.0);
  const double m_rad = dot(d.moment, b_hat);

  int quiet = 0;
  bool converged = false;
  double last_rel = 0.0;
  for (int n = 1; n <= sc.max_degree; ++n) {
    const double g = detail::sphere_surface_factor(m.radii, m.conductivities, b, n);
    double term_max = 0.0, u_max = 0.0;
    for (std::size_t k = 0; k <= ne; ++k) {
      // v = c_hat - cos(gamma) b_hat has length sin(gamma); folding it into
      // the moment projection avoids the collinear singularity.
      const Vec3 v = dirs[k] - cosg[k] * b_hat;
      const double term = g * (double(n) * m_rad * p_cur[k] + dot(d.moment, v) * dp_cur[k]);
      u[k] += term;
      term_max = std::max(term_max, std::abs(term));
      u_max = std::max(u_max, std::abs(u[k]));
    }
    last_rel = term_max / std::max(u_max, 1e-300);
    // Three consecutive small terms, so a single Legendre zero cannot stop
    // the series early.
    quiet = last_rel < sc.tail_tol ? quiet + 1 : 0;
    if (quiet >= 3) {
      converged = true;
      break;
    }
    for (std::size_t k = 0; k <= ne; ++k) {
      const double pn1 =
          (double(2 * n + 1) * cosg[k] * p_cur[k] - double(n) * p_prev[k]) / double(n + 1);
      const double dpn1 = dp_prev[k] + double(2 * n + 1) * p_cur[k];
      p_prev[k] = p_cur[k];
      p_cur[k] = pn1;
      dp_prev[k] = dp_cur[k];
      dp_cur[k] = dpn1;
    }
  }
  // Early stops demand three consecutive quiet degrees; at max_degree the
  // plain tail criterion decides, so short series (a centered dipole, a zero
  // moment) still count as converged.
  if (!converged && last_rel < sc.tail_tol) converged = true;
  if (!converged)
    throw std::runtime_error("analytic series not converged at degree " +
                             std::to_string(sc.max_degree) + " (relative tail estimate " +
                             format_double(last_rel) + ")");

  std::vector<double> out(ne, 0.0);
  for (std::size_t k = 0; k < ne; ++k) out[k] = u[ne] - u[k];
  return out;
}

/// CSV export: one "electrode_index,value" row per electrode.
inline void write_potentials_csv(std::ostream& out, const std::vector<double>& u) {
  out << "electrode,value\n";
  for (std::size_t k = 0; k < u.size(); ++k)
    out << k << "," << format_double(u[k]) << "\n";
  if (!out) throw std::runtime_error("potential CSV: write failed");
}

}  // namespace udg

#endif
