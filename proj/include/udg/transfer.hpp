#ifndef UDG_TRANSFER_HPP
#define UDG_TRANSFER_HPP

#include <array>
#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "udg/assembly.hpp"
#include "udg/solver.hpp"
#include "udg/source.hpp"

namespace udg {

/// Measurement electrodes: potentials are reported relative to `reference`.
struct ElectrodeSet {
  Vec3 reference;
  std::vector<Vec3> positions;
};

/// One restriction-row contribution: the 8 basis values of a single block.
struct RestrictionRowEntry {
  int block = -1;
  std::array<double, 8> v{};
};

/// Row k holds phi_i(p0) - phi_i(p_k): at most two blocks (one when the
/// reference and the electrode share a cut cell), so <= 16 nonzeros.
struct RestrictionMatrix {
  int block_count = 0;
  std::vector<std::vector<RestrictionRowEntry>> rows;

  int n_electrodes() const { return int(rows.size()); }
  std::int64_t cols() const { return std::int64_t(block_count) * 8; }

  std::vector<double> row_dense(int k) const {
    std::vector<double> out(std::size_t(cols()), 0.0);
    for (const RestrictionRowEntry& e : rows[std::size_t(k)])
      for (int a = 0; a < 8; ++a) out[std::size_t(e.block) * 8 + std::size_t(a)] += e.v[std::size_t(a)];
    return out;
  }

  /// R y for a full coefficient vector (rows annihilate constants).
  std::vector<double> apply(const std::vector<double>& y) const {
    if (std::int64_t(y.size()) != cols())
      throw std::invalid_argument("restriction: coefficient vector length mismatch");
    std::vector<double> out(rows.size(), 0.0);
    for (std::size_t k = 0; k < rows.size(); ++k)
      for (const RestrictionRowEntry& e : rows[k])
        for (int a = 0; a < 8; ++a)
          out[k] += e.v[std::size_t(a)] * y[std::size_t(e.block) * 8 + std::size_t(a)];
    return out;
  }
};

/// Electrodes are evaluated exactly like solution samples: the containing cut
/// cell when there is one, otherwise the polynomial extension of the nearest
/// cut cell of `skin_domain` within one cell width (farther is an error).
inline RestrictionMatrix build_restriction(const CutMesh& cm, const ElectrodeSet& es,
                                           int skin_domain = -1) {
  for (std::size_t i = 0; i < es.positions.size(); ++i)
    for (std::size_t j = i + 1; j < es.positions.size(); ++j)
      if (es.positions[i] == es.positions[j])
        throw std::invalid_argument("electrodes must be pairwise distinct");

  const EvaluationSite ref = locate_evaluation_site(cm, es.reference, skin_domain);
  const LocalBasis ref_basis = LocalBasis::at(ref.xi);

  RestrictionMatrix r;
  r.block_count = cm.block_count();
  r.rows.reserve(es.positions.size());
  for (const Vec3& p : es.positions) {
    const EvaluationSite s = locate_evaluation_site(cm, p, skin_domain);
    const LocalBasis b = LocalBasis::at(s.xi);
    std::vector<RestrictionRowEntry> row;
    if (s.block == ref.block) {
      RestrictionRowEntry e;
      e.block = ref.block;
      for (int a = 0; a < 8; ++a) e.v[std::size_t(a)] = ref_basis.value[std::size_t(a)] - b.value[std::size_t(a)];
      row.push_back(e);
    } else {
      RestrictionRowEntry plus, minus;
      plus.block = ref.block;
      minus.block = s.block;
      for (int a = 0; a < 8; ++a) {
        plus.v[std::size_t(a)] = ref_basis.value[std::size_t(a)];
        minus.v[std::size_t(a)] = -b.value[std::size_t(a)];
      }
      if (plus.block < minus.block) {
        row.push_back(plus);
        row.push_back(minus);
      } else {
        row.push_back(minus);
        row.push_back(plus);
      }
    }
    r.rows.push_back(std::move(row));
  }
  return r;
}

struct TransferRowStats {
  int iterations = 0;
  double achieved_residual = 0.0;
  bool converged = false;
};

/// Dense N_e x 8N transfer matrix. `rows` carries per-electrode solver stats;
/// it is empty for matrices reloaded from a file.
struct TransferMatrix {
  int block_count = 0;
  int n_electrodes = 0;
  std::vector<double> values;  // row-major
  std::vector<TransferRowStats> rows;

  std::int64_t cols() const { return std::int64_t(block_count) * 8; }
};

/// One CG solve per electrode against the shared matrix and preconditioner.
/// A non-converged row aborts the computation unless explicitly allowed, in
/// which case it is flagged in `rows` and kept as the best iterate.
inline TransferMatrix compute_transfer(const SparseBlockMatrix& m, const RestrictionMatrix& r,
                                       const SolverConfig& cfg = {},
                                       bool allow_nonconverged = false) {
  if (m.block_rows() != r.block_count)
    throw std::invalid_argument("transfer: matrix and restriction dimensions differ");
  const Preconditioner pre = build_preconditioner(m, cfg.preconditioner);

  TransferMatrix t;
  t.block_count = r.block_count;
  t.n_electrodes = r.n_electrodes();
  t.values.assign(std::size_t(t.n_electrodes) * std::size_t(t.cols()), 0.0);
  t.rows.resize(std::size_t(t.n_electrodes));
  for (int k = 0; k < t.n_electrodes; ++k) {
    const std::vector<double> rhs = r.row_dense(k);
    const SolveResult res = cg_solve(m, pre, rhs, cfg);
    if (!res.converged && !allow_nonconverged)
      throw std::runtime_error("transfer: solve for electrode " + std::to_string(k) +
                               " stopped at residual " + std::to_string(res.achieved_residual) +
                               " after " + std::to_string(res.iterations) + " iterations");
    std::copy(res.x.begin(), res.x.end(),
              t.values.begin() + std::int64_t(k) * t.cols());
    t.rows[std::size_t(k)] = {res.iterations, res.achieved_residual, res.converged};
  }
  return t;
}

/// U = T f exploiting the single-block support of a dipole rhs: O(N_e * 8).
inline std::vector<double> forward(const TransferMatrix& t, const RhsVector& f) {
  if (std::int64_t(f.values.size()) != t.cols())
    throw std::invalid_argument("forward: rhs length does not match the transfer matrix");
  std::vector<double> u(std::size_t(t.n_electrodes), 0.0);
  if (f.block < 0) return u;
  for (int k = 0; k < t.n_electrodes; ++k) {
    const double* row = t.values.data() + std::int64_t(k) * t.cols() + std::int64_t(f.block) * 8;
    const double* fv = f.values.data() + std::int64_t(f.block) * 8;
    double s = 0.0;
    for (int a = 0; a < 8; ++a) s += row[a] * fv[a];
    u[std::size_t(k)] = s;
  }
  return u;
}

/// U = T f for a general (multi-block) right-hand side.
inline std::vector<double> forward_dense(const TransferMatrix& t, const std::vector<double>& f) {
  if (std::int64_t(f.size()) != t.cols())
    throw std::invalid_argument("forward: rhs length does not match the transfer matrix");
  std::vector<double> u(std::size_t(t.n_electrodes), 0.0);
  for (int k = 0; k < t.n_electrodes; ++k) {
    const double* row = t.values.data() + std::int64_t(k) * t.cols();
    double s = 0.0;
    for (std::int64_t i = 0; i < t.cols(); ++i) s += row[i] * f[std::size_t(i)];
    u[std::size_t(k)] = s;
  }
  return u;
}

/// Binary layout: "UDGTM <Ne> <n>\n" then Ne*n row-major native float64.
inline void write_transfer(std::ostream& out, const TransferMatrix& t) {
  out << "UDGTM " << t.n_electrodes << " " << t.cols() << "\n";
  out.write(reinterpret_cast<const char*>(t.values.data()),
            std::streamsize(t.values.size() * sizeof(double)));
  if (!out) throw std::runtime_error("transfer: write failed");
}

inline TransferMatrix read_transfer(std::istream& in) {
  std::string magic;
  std::int64_t ne = -1, n = -1;
  in >> magic >> ne >> n;
  if (!in || magic != "UDGTM" || ne < 0 || n <= 0 || n % 8 != 0)
    throw std::runtime_error("transfer: bad header (expected \"UDGTM <Ne> <n>\")");
  if (in.get() != '\n') throw std::runtime_error("transfer: bad header terminator");
  TransferMatrix t;
  t.block_count = int(n / 8);
  t.n_electrodes = int(ne);
  t.values.resize(std::size_t(ne) * std::size_t(n));
  const std::streamsize bytes = std::streamsize(t.values.size() * sizeof(double));
  in.read(reinterpret_cast<char*>(t.values.data()), bytes);
  if (in.gcount() != bytes) throw std::runtime_error("transfer: truncated payload");
  return t;
}

}  // namespace udg

#endif
