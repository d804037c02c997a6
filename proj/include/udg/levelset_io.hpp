#ifndef UDG_LEVELSET_IO_HPP
#define UDG_LEVELSET_IO_HPP

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "udg/levelset.hpp"

namespace udg {

/// Raw contents of a level-set volume file. Values are nodal, ordered x
/// fastest, then y, then z.
struct LevelSetVolume {
  IVec3 nodes;  // node counts per axis
  BoundingBox box;
  std::vector<double> values;
};

/// Binary volume format: one ASCII header line
///   UDGLS <nx> <ny> <nz> <lox> <loy> <loz> <hix> <hiy> <hiz>\n
/// followed by nx*ny*nz little-endian float64 nodal values, x fastest.
inline void save_levelset_volume(const std::string& path, const LevelSetVolume& vol) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "UDGLS " << vol.nodes.x << ' ' << vol.nodes.y << ' ' << vol.nodes.z;
  for (int a = 0; a < 3; ++a) out << ' ' << format_double(vol.box.lo[a]);
  for (int a = 0; a < 3; ++a) out << ' ' << format_double(vol.box.hi[a]);
  out << '\n';
  const std::size_t n = std::size_t(vol.nodes.x) * vol.nodes.y * vol.nodes.z;
  if (vol.values.size() != n) throw std::invalid_argument("save_levelset_volume: value count mismatch");
  out.write(reinterpret_cast<const char*>(vol.values.data()),
            std::streamsize(n * sizeof(double)));
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline void save_levelset_volume(const std::string& path, const LevelSetField& field) {
  const auto& m = field.mesh();
  const IVec3 c = m.cells_per_dim();
  save_levelset_volume(path, LevelSetVolume{{c.x + 1, c.y + 1, c.z + 1}, m.box(), field.nodal_values()});
}

inline LevelSetVolume load_levelset_volume(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::string header;
  if (!std::getline(in, header)) throw std::runtime_error("truncated level-set volume: " + path);
  std::istringstream hs(header);
  std::string magic;
  LevelSetVolume vol;
  hs >> magic >> vol.nodes.x >> vol.nodes.y >> vol.nodes.z;
  for (int a = 0; a < 3; ++a) hs >> vol.box.lo[a];
  for (int a = 0; a < 3; ++a) hs >> vol.box.hi[a];
  if (!hs || magic != "UDGLS") throw std::runtime_error("not a level-set volume file: " + path);
  for (int a = 0; a < 3; ++a)
    if (vol.nodes[a] < 2) throw std::runtime_error("level-set volume needs >= 2 nodes per axis");
  const std::size_t n = std::size_t(vol.nodes.x) * vol.nodes.y * vol.nodes.z;
  vol.values.resize(n);
  in.read(reinterpret_cast<char*>(vol.values.data()), std::streamsize(n * sizeof(double)));
  if (std::size_t(in.gcount()) != n * sizeof(double))
    throw std::runtime_error("truncated level-set volume: " + path);
  return vol;
}

/// Resample a stored volume onto a fundamental mesh. The file grid must span
/// the same box and be related to the mesh by an integer refinement (file
/// finer: fundamental nodes are a subset) or coarsening (file coarser: values
/// are interpolated trilinearly).
inline LevelSetField resample_levelset_volume(const LevelSetVolume& vol, const FundamentalMesh& mesh) {
  const IVec3 mc = mesh.cells_per_dim();
  for (int a = 0; a < 3; ++a) {
    const double span = vol.box.hi[a] - vol.box.lo[a];
    const double tol = 1e-9 * std::max(std::abs(span), 1.0);
    if (std::abs(vol.box.lo[a] - mesh.box().lo[a]) > tol ||
        std::abs(vol.box.hi[a] - mesh.box().hi[a]) > tol)
      throw std::invalid_argument("level-set volume box does not match the mesh box");
  }

  const auto file_index = [&](int i, int j, int k) {
    return std::size_t(i) + std::size_t(vol.nodes.x) * (std::size_t(j) + std::size_t(vol.nodes.y) * k);
  };

  // Per-axis relation between file intervals and mesh intervals.
  int refine[3];  // >0: file finer by this factor, <0: file coarser by -factor
  for (int a = 0; a < 3; ++a) {
    const int fi = vol.nodes[a] - 1, mi = mc[a];
    if (fi >= mi) {
      if (fi % mi != 0) throw std::invalid_argument("incompatible level-set volume resolution");
      refine[a] = fi / mi;
    } else {
      if (mi % fi != 0) throw std::invalid_argument("incompatible level-set volume resolution");
      refine[a] = -(mi / fi);
    }
  }

  std::vector<double> nodal(std::size_t(mesh.node_count()));
  std::size_t idx = 0;
  for (int k = 0; k <= mc.z; ++k)
    for (int j = 0; j <= mc.y; ++j)
      for (int i = 0; i <= mc.x; ++i) {
        const int mijk[3] = {i, j, k};
        double t[3];
        int f0[3];
        bool exact = true;
        for (int a = 0; a < 3; ++a) {
          if (refine[a] > 0) {
            f0[a] = mijk[a] * refine[a];
            t[a] = 0.0;
          } else {
            const int c = -refine[a];
            f0[a] = mijk[a] / c;
            const int rem = mijk[a] % c;
            t[a] = double(rem) / c;
            if (rem != 0) exact = false;
          }
        }
        if (exact) {
          nodal[idx++] = vol.values[file_index(f0[0], f0[1], f0[2])];
        } else {
          double s = 0.0;
          for (int b = 0; b < 8; ++b) {
            const int di = b & 1, dj = (b >> 1) & 1, dk = (b >> 2) & 1;
            const double w = (di ? t[0] : 1.0 - t[0]) * (dj ? t[1] : 1.0 - t[1]) * (dk ? t[2] : 1.0 - t[2]);
            if (w != 0.0) s += w * vol.values[file_index(f0[0] + di, f0[1] + dj, f0[2] + dk)];
          }
          nodal[idx++] = s;
        }
      }
  return LevelSetField(mesh, std::move(nodal));
}

inline LevelSetField load_levelset_field(const std::string& path, const FundamentalMesh& mesh) {
  return resample_levelset_volume(load_levelset_volume(path), mesh);
}

}  // namespace udg

#endif
