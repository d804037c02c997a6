#ifndef UDG_BLOCK_MATRIX_HPP
#define UDG_BLOCK_MATRIX_HPP

#include <algorithm>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <utility>
#include <vector>

#include "udg/common.hpp"

namespace udg {

/// Symmetric sparse matrix of 8x8 blocks in block-compressed-sparse-row form,
/// one block row per cut cell. Column blocks are sorted within each row and
/// the pattern is symmetric. Assembly accumulates into the upper triangle
/// only (block row <= block column, full diagonal blocks) and mirror_upper()
/// copies it to the lower triangle, so M = M^t holds bitwise by construction.
class SparseBlockMatrix {
 public:
  static constexpr int kBlockSize = 8;

  SparseBlockMatrix() = default;

  /// Build the zero matrix over the symmetric closure of the given block
  /// pairs (duplicates fine, both orientations added automatically).
  static SparseBlockMatrix from_pairs(int n_blocks,
                                      std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs) {
    if (n_blocks < 0) throw std::invalid_argument("SparseBlockMatrix: negative block count");
    const std::size_t count = pairs.size();
    pairs.reserve(count * 2);
    for (std::size_t i = 0; i < count; ++i)
      if (pairs[i].first != pairs[i].second) pairs.emplace_back(pairs[i].second, pairs[i].first);
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

    SparseBlockMatrix m;
    m.n_blocks_ = n_blocks;
    m.row_ptr_.assign(std::size_t(n_blocks) + 1, 0);
    m.col_idx_.reserve(pairs.size());
    for (const auto& [r, c] : pairs) {
      if (int(r) >= n_blocks || int(c) >= n_blocks)
        throw std::invalid_argument("SparseBlockMatrix: block index out of range");
      ++m.row_ptr_[std::size_t(r) + 1];
      m.col_idx_.push_back(c);
    }
    for (std::size_t r = 0; r < std::size_t(n_blocks); ++r) m.row_ptr_[r + 1] += m.row_ptr_[r];
    m.values_.assign(pairs.size() * 64, 0.0);
    return m;
  }

  int block_rows() const { return n_blocks_; }
  std::int64_t rows() const { return std::int64_t(n_blocks_) * kBlockSize; }
  std::int64_t block_count() const { return std::int64_t(col_idx_.size()); }

  const std::vector<std::uint32_t>& row_ptr() const { return row_ptr_; }
  const std::vector<std::uint32_t>& col_idx() const { return col_idx_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  /// Pointer to the 8x8 row-major block (bi,bj), or nullptr if not stored.
  double* find_block(int bi, int bj) {
    const std::int64_t k = block_slot(bi, bj);
    return k < 0 ? nullptr : values_.data() + std::size_t(k) * 64;
  }
  const double* find_block(int bi, int bj) const {
    const std::int64_t k = block_slot(bi, bj);
    return k < 0 ? nullptr : values_.data() + std::size_t(k) * 64;
  }

  /// Copy the strictly upper block triangle onto the lower one (transposed)
  /// and symmetrize each diagonal block from its upper half.
  void mirror_upper() {
    for (int bi = 0; bi < n_blocks_; ++bi)
      for (std::uint32_t k = row_ptr_[std::size_t(bi)]; k < row_ptr_[std::size_t(bi) + 1]; ++k) {
        const int bj = int(col_idx_[k]);
        double* blk = values_.data() + std::size_t(k) * 64;
        if (bj == bi) {
          for (int a = 0; a < 8; ++a)
            for (int b = a + 1; b < 8; ++b) blk[b * 8 + a] = blk[a * 8 + b];
        } else if (bj > bi) {
          double* rev = find_block(bj, bi);
          if (rev == nullptr) throw std::logic_error("mirror_upper: pattern not symmetric");
          for (int a = 0; a < 8; ++a)
            for (int b = 0; b < 8; ++b) rev[b * 8 + a] = blk[a * 8 + b];
        }
      }
  }

  /// y = M x over the full stored pattern, deterministic accumulation order.
  void spmv(const double* x, double* y) const {
    for (int bi = 0; bi < n_blocks_; ++bi) {
      double acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
      for (std::uint32_t k = row_ptr_[std::size_t(bi)]; k < row_ptr_[std::size_t(bi) + 1]; ++k) {
        const double* blk = values_.data() + std::size_t(k) * 64;
        const double* xs = x + std::size_t(col_idx_[k]) * 8;
        for (int a = 0; a < 8; ++a) {
          double s = 0.0;
          for (int b = 0; b < 8; ++b) s += blk[a * 8 + b] * xs[b];
          acc[a] += s;
        }
      }
      double* ys = y + std::size_t(bi) * 8;
      for (int a = 0; a < 8; ++a) ys[a] = acc[a];
    }
  }

  std::vector<double> apply(const std::vector<double>& x) const {
    if (std::int64_t(x.size()) != rows())
      throw std::invalid_argument("SparseBlockMatrix::apply: size mismatch");
    std::vector<double> y(x.size());
    spmv(x.data(), y.data());
    return y;
  }

  /// Max absolute scalar row sum.
  double inf_norm() const {
    double worst = 0.0;
    for (int bi = 0; bi < n_blocks_; ++bi)
      for (int a = 0; a < 8; ++a) {
        double s = 0.0;
        for (std::uint32_t k = row_ptr_[std::size_t(bi)]; k < row_ptr_[std::size_t(bi) + 1]; ++k) {
          const double* blk = values_.data() + std::size_t(k) * 64;
          for (int b = 0; b < 8; ++b) s += std::abs(blk[a * 8 + b]);
        }
        worst = std::max(worst, s);
      }
    return worst;
  }

  /// Coordinate text export: one "row col value" line per stored scalar
  /// entry, zero-based indices, ascending row-major order.
  void write_coordinate(std::ostream& os) const {
    for (int bi = 0; bi < n_blocks_; ++bi)
      for (int a = 0; a < 8; ++a)
        for (std::uint32_t k = row_ptr_[std::size_t(bi)]; k < row_ptr_[std::size_t(bi) + 1]; ++k) {
          const double* blk = values_.data() + std::size_t(k) * 64;
          for (int b = 0; b < 8; ++b)
            os << std::int64_t(bi) * 8 + a << ' ' << std::int64_t(col_idx_[k]) * 8 + b << ' '
               << format_double(blk[a * 8 + b]) << '\n';
        }
  }

 private:
  std::int64_t block_slot(int bi, int bj) const {
    if (bi < 0 || bi >= n_blocks_ || bj < 0 || bj >= n_blocks_) return -1;
    const std::uint32_t* first = col_idx_.data() + row_ptr_[std::size_t(bi)];
    const std::uint32_t* last = col_idx_.data() + row_ptr_[std::size_t(bi) + 1];
    const std::uint32_t* it = std::lower_bound(first, last, std::uint32_t(bj));
    if (it == last || *it != std::uint32_t(bj)) return -1;
    return it - col_idx_.data();
  }

  int n_blocks_ = 0;
  std::vector<std::uint32_t> row_ptr_;
  std::vector<std::uint32_t> col_idx_;
  std::vector<double> values_;
};

}  // namespace udg

#endif
