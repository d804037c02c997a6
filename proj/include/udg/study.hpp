#ifndef UDG_STUDY_HPP
#define UDG_STUDY_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "udg/analytic.hpp"
#include "udg/assembly.hpp"
#include "udg/model.hpp"
#include "udg/solver.hpp"
#include "udg/source.hpp"
#include "udg/transfer.hpp"

namespace udg {

enum class Orientation { Radial, Tangential };

inline const char* orientation_name(Orientation o) {
  return o == Orientation::Radial ? "radial" : "tangential";
}

inline Orientation parse_orientation(const std::string& s) {
  if (s == "radial") return Orientation::Radial;
  if (s == "tangential") return Orientation::Tangential;
  throw std::invalid_argument("orientation must be radial or tangential, got " + s);
}

/// Eccentricities geometric in distance to the surface:
/// e_i = 1 - (1-e_min) rho^i with rho = ((1-e_max)/(1-e_min))^(1/(count-1)).
inline std::vector<double> eccentricity_ladder(double e_min, double e_max, int count = 10) {
  if (!(0.0 < e_min && e_min < e_max && e_max < 1.0))
    throw std::invalid_argument("eccentricity ladder: need 0 < e_min < e_max < 1");
  if (count < 2) throw std::invalid_argument("eccentricity ladder: need at least 2 rungs");
  const double rho = std::pow((1.0 - e_max) / (1.0 - e_min), 1.0 / double(count - 1));
  std::vector<double> out(std::size_t(count), 0.0);
  for (int i = 0; i < count; ++i) out[std::size_t(i)] = 1.0 - (1.0 - e_min) * std::pow(rho, i);
  out.front() = e_min;  // pin the endpoints against pow() rounding
  out.back() = e_max;
  return out;
}

namespace detail {

inline double unit_uniform(std::mt19937_64& gen) {
  return double(gen() >> 11) * 0x1.0p-53;
}

inline std::string hex16(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace detail

/// Uniform positions on the sphere of radius ecc*inner_radius with unit
/// moments, radial or uniformly random in the tangent plane. One generator
/// stream per call: a fixed seed reproduces the samples bit for bit.
inline std::vector<DipoleSource> sample_dipoles(std::uint64_t seed, double ecc, int count,
                                                Orientation orientation, double inner_radius) {
  if (!(ecc > 0.0 && ecc < 1.0))
    throw std::invalid_argument("sample_dipoles: eccentricity must be in (0,1)");
  if (!(inner_radius > 0.0))
    throw std::invalid_argument("sample_dipoles: inner radius must be positive");
  if (count < 0) throw std::invalid_argument("sample_dipoles: negative count");

  constexpr double two_pi = 2.0 * 3.14159265358979323846;
  std::mt19937_64 gen(seed);
  const double r = ecc * inner_radius;
  std::vector<DipoleSource> out;
  out.reserve(std::size_t(count));
  for (int i = 0; i < count; ++i) {
    const double z = 2.0 * detail::unit_uniform(gen) - 1.0;
    const double phi = two_pi * detail::unit_uniform(gen);
    const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
    const Vec3 r_hat{s * std::cos(phi), s * std::sin(phi), z};
    Vec3 moment = r_hat;
    if (orientation == Orientation::Tangential) {
      const Vec3 pole = std::abs(r_hat.z) < 0.9 ? Vec3{0.0, 0.0, 1.0} : Vec3{1.0, 0.0, 0.0};
      const Vec3 t1 = normalized(cross(pole, r_hat));
      const Vec3 t2 = cross(r_hat, t1);
      const double psi = two_pi * detail::unit_uniform(gen);
      moment = t1 * std::cos(psi) + t2 * std::sin(psi);
    }
    out.push_back({r_hat * r, moment});
  }
  return out;
}

/// Spherical Fibonacci lattice; the first point becomes the reference p0 and
/// the rest the measurement electrodes. The layout is fully deterministic;
/// the seed parameter is accepted for interface stability only.
inline ElectrodeSet generate_electrodes(int count, double radius, std::uint64_t /*seed*/ = 0,
                                        const Vec3& center = {0.0, 0.0, 0.0}) {
  if (count < 2) throw std::invalid_argument("generate_electrodes: need at least 2 points");
  if (!(radius > 0.0)) throw std::invalid_argument("generate_electrodes: radius must be positive");
  constexpr double golden_angle = 2.39996322972865332;  // pi (3 - sqrt 5)
  ElectrodeSet es;
  for (int k = 0; k < count; ++k) {
    const double z = 1.0 - (2.0 * k + 1.0) / double(count);
    const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden_angle * double(k);
    const Vec3 p = center + Vec3{s * std::cos(phi), s * std::sin(phi), z} * radius;
    if (k == 0)
      es.reference = p;
    else
      es.positions.push_back(p);
  }
  return es;
}

inline std::vector<double> mean_referenced(std::vector<double> u) {
  if (u.empty()) throw std::invalid_argument("mean reference: empty vector");
  double s = 0.0;
  for (double v : u) s += v;
  const double mean = s / double(u.size());
  for (double& v : u) v -= mean;
  return u;
}

struct ErrorPair {
  double rdm_percent = 0.0;
  double mag_percent = 0.0;
};

/// RDM% = 50 || u_ana/||u_ana|| - u_num/||u_num|| ||_2,
/// MAG% = 100 (||u_num|| / ||u_ana|| - 1). Inputs must share the reference.
inline ErrorPair rdm_mag(const std::vector<double>& u_ana, const std::vector<double>& u_num) {
  if (u_ana.size() != u_num.size() || u_ana.empty())
    throw std::invalid_argument("rdm_mag: length mismatch");
  double na2 = 0.0, nn2 = 0.0;
  for (double v : u_ana) na2 += v * v;
  for (double v : u_num) nn2 += v * v;
  const double na = std::sqrt(na2), nn = std::sqrt(nn2);
  if (na == 0.0 || nn == 0.0) throw std::invalid_argument("rdm_mag: zero-norm input");
  double ss = 0.0;
  for (std::size_t k = 0; k < u_ana.size(); ++k) {
    const double d = u_ana[k] / na - u_num[k] / nn;
    ss += d * d;
  }
  return {50.0 * std::sqrt(ss), 100.0 * (nn / na - 1.0)};
}

struct FiveNumber {
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
  double iqr() const { return q3 - q1; }
  double tr() const { return max - min; }
};

/// Quartiles by linear interpolation between order statistics (type 7).
inline FiveNumber five_number_summary(std::vector<double> sample) {
  if (sample.empty()) throw std::invalid_argument("five_number_summary: empty sample");
  std::sort(sample.begin(), sample.end());
  const auto quantile = [&](double p) {
    const double h = p * double(sample.size() - 1);
    const std::size_t lo = std::size_t(h);
    if (lo + 1 >= sample.size()) return sample.back();
    return sample[lo] + (h - double(lo)) * (sample[lo + 1] - sample[lo]);
  };
  return {sample.front(), quantile(0.25), quantile(0.5), quantile(0.75), sample.back()};
}

// ---------------------------------------------------------------------------
// Study orchestration
// ---------------------------------------------------------------------------

struct StudyConfig {
  ModelSetup model;
  SphereModel oracle;
  std::vector<double> eccentricities = eccentricity_ladder(0.1666, 0.9939, 10);
  int dipoles_per_ecc = 100;
  std::vector<Orientation> orientations{Orientation::Radial, Orientation::Tangential};
  int electrode_count = 200;
  std::uint64_t seed = 12345;
  SolverConfig solver;
  AssemblyParams assembly;
  SeriesControl series;
  std::uint64_t config_hash = 0;
};

/// Study keys on top of the model keys understood by model_from_config:
///   study.eccentricities    explicit list, else a ladder from
///   study.ecc_min/ecc_max/ecc_count   (defaults 0.1666 / 0.9939 / 10)
///   study.dipoles_per_ecc   default 100
///   study.orientations      default "radial tangential"
///   study.electrodes        default 200
///   study.seed              default 12345
///   solver.rel_tol/max_iter/preconditioner (none | jacobi | ilu0)
///   assembly.eta / assembly.quadrature_order
///   series.max_degree / series.tail_tol
inline StudyConfig study_from_config(const ConfigMap& cfg) {
  if (cfg.get_string("geometry", "analytic-spheres") != "analytic-spheres")
    throw std::invalid_argument("study: needs analytic-spheres geometry (the oracle)");
  StudyConfig s;
  s.model = model_from_config(cfg);
  s.oracle.center = s.model.center;
  s.oracle.radii = cfg.get_doubles("sphere.radii", {92.0, 86.0, 80.0, 78.0});
  s.oracle.conductivities = cfg.get_doubles("sphere.conductivities", {0.43, 0.01, 1.79, 0.33});

  if (cfg.has("study.eccentricities")) {
    s.eccentricities = cfg.get_doubles("study.eccentricities", {});
  } else {
    s.eccentricities = eccentricity_ladder(cfg.get_double("study.ecc_min", 0.1666),
                                           cfg.get_double("study.ecc_max", 0.9939),
                                           int(cfg.get_int("study.ecc_count", 10)));
  }
  s.dipoles_per_ecc = int(cfg.get_int("study.dipoles_per_ecc", 100));
  s.orientations.clear();
  for (const std::string& o : cfg.get_strings("study.orientations", {"radial", "tangential"}))
    s.orientations.push_back(parse_orientation(o));
  s.electrode_count = int(cfg.get_int("study.electrodes", 200));
  s.seed = std::uint64_t(cfg.get_int("study.seed", 12345));

  s.solver.rel_tol = cfg.get_double("solver.rel_tol", 1e-8);
  s.solver.max_iter = int(cfg.get_int("solver.max_iter", 10000));
  const std::string pre = cfg.get_string("solver.preconditioner", "ilu0");
  if (pre == "none")
    s.solver.preconditioner = PreconditionerKind::None;
  else if (pre == "jacobi")
    s.solver.preconditioner = PreconditionerKind::BlockJacobi;
  else if (pre == "ilu0")
    s.solver.preconditioner = PreconditionerKind::BlockILU0;
  else
    throw std::invalid_argument("config: solver.preconditioner must be none, jacobi or ilu0");

  s.assembly.eta = cfg.get_double("assembly.eta", 4.0);
  s.assembly.quadrature_order = int(cfg.get_int("assembly.quadrature_order", 2));
  s.series.max_degree = int(cfg.get_int("series.max_degree", 200));
  s.series.tail_tol = cfg.get_double("series.tail_tol", 1e-10);
  s.config_hash = cfg.fingerprint();
  return s;
}

struct DipoleRecord {
  double eccentricity = 0.0;
  Orientation orientation = Orientation::Radial;
  int index = 0;
  double rdm_percent = 0.0;
  double mag_percent = 0.0;
  int iterations = 0;  // worst transfer-row iteration count behind U_num
};

struct GroupStats {
  double eccentricity = 0.0;
  Orientation orientation = Orientation::Radial;
  FiveNumber rdm, mag;
};

struct TransferSummary {
  int iterations_min = 0;
  int iterations_max = 0;
  std::int64_t iterations_total = 0;
  double residual_max = 0.0;
};

struct StudyResult {
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::string mode;
  int grid_cells = 0;
  int blocks = 0;
  std::int64_t dofs = 0;
  int electrodes = 0;  // measurement electrodes (reference excluded)
  TransferSummary transfer;
  int placement_failures = 0;
  std::vector<DipoleRecord> dipoles;
  std::vector<GroupStats> groups;

  const GroupStats& group(double ecc, Orientation o) const {
    for (const auto& g : groups)
      if (g.orientation == o && std::abs(g.eccentricity - ecc) <= 1e-12) return g;
    throw std::invalid_argument("study result: no such group");
  }
};

namespace detail {

/// A dipole rhs compressed to its single supported block.
struct CompactRhs {
  int block = -1;
  std::array<double, 8> v{};
};

}  // namespace detail

/// Full verification run: geometry, system matrix, transfer solves, sampled
/// dipoles, analytic oracle, per-dipole RDM%/MAG% and per-group statistics.
/// Deterministic for a fixed configuration and seed. Throws on non-converged
/// transfer solves and when any dipole placement fails.
///
/// The dense transfer matrix is never materialized: every dipole rhs touches
/// one block, so each electrode row is contracted against all dipoles right
/// after its solve and then dropped. Memory stays bounded by the system
/// matrix and preconditioner even for fine grids.
inline StudyResult run_study(const StudyConfig& cfg, std::ostream* log = nullptr) {
  if (cfg.oracle.radii.empty() || cfg.oracle.radii.size() != cfg.oracle.conductivities.size())
    throw std::invalid_argument("study: oracle sphere model is incomplete");
  if (!(cfg.model.inner_radius > 0.0))
    throw std::invalid_argument("study: dipole placement radius is not set");
  if (cfg.eccentricities.empty())
    throw std::invalid_argument("study: no eccentricities");
  for (double e : cfg.eccentricities)
    if (!(e > 0.0 && e < 1.0))
      throw std::invalid_argument("study: eccentricities must lie in (0,1)");
  if (cfg.dipoles_per_ecc < 1) throw std::invalid_argument("study: dipoles_per_ecc must be >= 1");
  if (cfg.orientations.empty()) throw std::invalid_argument("study: no orientations");
  if (cfg.electrode_count < 2)
    throw std::invalid_argument("study: need at least 2 electrodes");

  StudyResult res;
  res.config_hash = cfg.config_hash;
  res.seed = cfg.seed;
  res.mode = cfg.model.voxel ? "voxel-dg" : "udg";
  res.grid_cells = cfg.model.mesh.cells_per_dim().x;

  const CutMesh cm = cfg.model.build_mesh();
  res.blocks = cm.block_count();
  res.dofs = std::int64_t(res.blocks) * 8;
  if (log)
    *log << "study: " << res.mode << " grid " << res.grid_cells << "^3, " << res.blocks
         << " cut cells, " << res.dofs << " dofs\n";

  // All dipoles and their rhs blocks up front: placement failures surface
  // before any solve, and the row loop below only needs the compact form.
  struct PendingGroup {
    double ecc;
    Orientation orientation;
    std::vector<DipoleSource> dipoles;
    std::vector<detail::CompactRhs> rhs;
  };
  std::vector<PendingGroup> pending;
  std::string first_failure;
  std::size_t n_dipoles = 0;
  for (std::size_t gi = 0; gi < cfg.eccentricities.size(); ++gi) {
    const double ecc = cfg.eccentricities[gi];
    for (Orientation o : cfg.orientations) {
      const std::uint64_t group_seed =
          fnv1a(std::to_string(gi) + "/" + orientation_name(o), cfg.seed ^ 0xcbf29ce484222325ull);
      PendingGroup g{ecc, o,
                     sample_dipoles(group_seed, ecc, cfg.dipoles_per_ecc, o,
                                    cfg.model.inner_radius),
                     {}};
      g.rhs.reserve(g.dipoles.size());
      for (const DipoleSource& d : g.dipoles) {
        detail::CompactRhs c;
        try {
          const RhsVector f = assemble_dipole_rhs(cm, d);
          c.block = f.block;
          for (int a = 0; a < 8; ++a)
            c.v[std::size_t(a)] = f.values[std::size_t(f.block) * 8 + std::size_t(a)];
        } catch (const std::exception& e) {
          ++res.placement_failures;
          if (first_failure.empty()) first_failure = e.what();
        }
        g.rhs.push_back(c);  // block stays -1 on failure
      }
      n_dipoles += g.dipoles.size();
      pending.push_back(std::move(g));
    }
  }
  if (res.placement_failures > 0)
    throw std::runtime_error("study: " + std::to_string(res.placement_failures) +
                             " dipole placement failures (first: " + first_failure + ")");

  const SparseBlockMatrix m = assemble_system(cm, cfg.assembly);
  const ElectrodeSet es =
      generate_electrodes(cfg.electrode_count, cfg.oracle.radii.front(), cfg.seed,
                          cfg.oracle.center);
  res.electrodes = int(es.positions.size());
  const RestrictionMatrix r = build_restriction(cm, es, 0);
  const Preconditioner pre = build_preconditioner(m, cfg.solver.preconditioner);

  // u_raw[d * n_e + k] = (row k of T) . (rhs of dipole d)
  std::vector<double> u_raw(n_dipoles * std::size_t(res.electrodes), 0.0);
  for (int k = 0; k < res.electrodes; ++k) {
    const SolveResult row = cg_solve(m, pre, r.row_dense(k), cfg.solver);
    if (!row.converged)
      throw std::runtime_error("study: transfer solve for electrode " + std::to_string(k) +
                               " stopped at residual " + format_double(row.achieved_residual) +
                               " after " + std::to_string(row.iterations) + " iterations");
    std::size_t d = 0;
    for (const PendingGroup& g : pending)
      for (const detail::CompactRhs& c : g.rhs) {
        double s = 0.0;
        for (int a = 0; a < 8; ++a)
          s += row.x[std::size_t(c.block) * 8 + std::size_t(a)] * c.v[std::size_t(a)];
        u_raw[d * std::size_t(res.electrodes) + std::size_t(k)] = s;
        ++d;
      }
    if (k == 0) res.transfer.iterations_min = row.iterations;
    res.transfer.iterations_min = std::min(res.transfer.iterations_min, row.iterations);
    res.transfer.iterations_max = std::max(res.transfer.iterations_max, row.iterations);
    res.transfer.iterations_total += row.iterations;
    res.transfer.residual_max = std::max(res.transfer.residual_max, row.achieved_residual);
  }
  if (log)
    *log << "study: transfer solved, " << res.electrodes << " electrodes, iterations "
         << res.transfer.iterations_min << ".." << res.transfer.iterations_max
         << ", worst residual " << format_double(res.transfer.residual_max) << "\n";

  std::size_t d = 0;
  for (const PendingGroup& g : pending) {
    std::vector<double> rdms, mags;
    rdms.reserve(g.dipoles.size());
    mags.reserve(g.dipoles.size());
    for (std::size_t di = 0; di < g.dipoles.size(); ++di, ++d) {
      std::vector<double> u_num(u_raw.begin() + std::int64_t(d) * res.electrodes,
                                u_raw.begin() + std::int64_t(d + 1) * res.electrodes);
      u_num = mean_referenced(std::move(u_num));
      const std::vector<double> u_ana =
          mean_referenced(analytic_potential(cfg.oracle, g.dipoles[di], es, cfg.series));
      const ErrorPair ep = rdm_mag(u_ana, u_num);
      res.dipoles.push_back({g.ecc, g.orientation, int(di), ep.rdm_percent, ep.mag_percent,
                             res.transfer.iterations_max});
      rdms.push_back(ep.rdm_percent);
      mags.push_back(ep.mag_percent);
    }
    res.groups.push_back(
        {g.ecc, g.orientation, five_number_summary(rdms), five_number_summary(mags)});
    if (log) {
      const GroupStats& gs = res.groups.back();
      *log << "study: ecc " << format_double(gs.eccentricity) << " "
           << orientation_name(gs.orientation) << ": median RDM% "
           << format_double(gs.rdm.median) << ", median MAG% " << format_double(gs.mag.median)
           << "\n";
    }
  }
  return res;
}

/// Raw per-dipole metrics, one row per dipole, with the configuration hash
/// and seed stamped into the header comment.
inline void write_study_csv(std::ostream& out, const StudyResult& r) {
  out << "# udg-study config=" << detail::hex16(r.config_hash) << " seed=" << r.seed
      << " mode=" << r.mode << " cells=" << r.grid_cells << "\n";
  out << "eccentricity,orientation,dipole,rdm_percent,mag_percent,iterations\n";
  for (const auto& d : r.dipoles)
    out << format_double(d.eccentricity) << "," << orientation_name(d.orientation) << ","
        << d.index << "," << format_double(d.rdm_percent) << "," << format_double(d.mag_percent)
        << "," << d.iterations << "\n";
  if (!out) throw std::runtime_error("study CSV: write failed");
}

namespace detail {

inline void write_five_number(std::ostream& out, const FiveNumber& f) {
  out << "{\"min\": " << format_double(f.min) << ", \"q1\": " << format_double(f.q1)
      << ", \"median\": " << format_double(f.median) << ", \"q3\": " << format_double(f.q3)
      << ", \"max\": " << format_double(f.max) << ", \"iqr\": " << format_double(f.iqr())
      << ", \"tr\": " << format_double(f.tr()) << "}";
}

}  // namespace detail

/// Summary statistics per (eccentricity, orientation) group as JSON.
inline void write_study_json(std::ostream& out, const StudyResult& r) {
  out << "{\n";
  out << "  \"config_hash\": \"" << detail::hex16(r.config_hash) << "\",\n";
  out << "  \"seed\": " << r.seed << ",\n";
  out << "  \"mode\": \"" << r.mode << "\",\n";
  out << "  \"grid_cells\": " << r.grid_cells << ",\n";
  out << "  \"blocks\": " << r.blocks << ",\n";
  out << "  \"dofs\": " << r.dofs << ",\n";
  out << "  \"electrodes\": " << r.electrodes << ",\n";
  out << "  \"placement_failures\": " << r.placement_failures << ",\n";
  out << "  \"transfer\": {\"iterations_min\": " << r.transfer.iterations_min
      << ", \"iterations_max\": " << r.transfer.iterations_max
      << ", \"iterations_total\": " << r.transfer.iterations_total
      << ", \"residual_max\": " << format_double(r.transfer.residual_max) << "},\n";
  out << "  \"groups\": [";
  for (std::size_t i = 0; i < r.groups.size(); ++i) {
    const GroupStats& g = r.groups[i];
    out << (i == 0 ? "\n" : ",\n");
    out << "    {\"eccentricity\": " << format_double(g.eccentricity) << ", \"orientation\": \""
        << orientation_name(g.orientation) << "\", \"rdm\": ";
    detail::write_five_number(out, g.rdm);
    out << ", \"mag\": ";
    detail::write_five_number(out, g.mag);
    out << "}";
  }
  out << "\n  ]\n}\n";
  if (!out) throw std::runtime_error("study JSON: write failed");
}

}  // namespace udg

#endif
