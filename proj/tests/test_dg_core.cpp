#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <vector>

#include "support/dense.hpp"
#include "udg/assembly.hpp"
#include "udg/basis.hpp"
#include "udg/block_matrix.hpp"
#include "udg/cutmesh.hpp"
#include "udg/levelset.hpp"

using namespace udg;
using testsupport::dense_from_blocks;
using testsupport::jacobi_eigenvalues;

namespace {

// ---------------------------------------------------------------------------
// Independent oracles. Written against the math, not against the library:
// the shape functions and the quadrature below are spelled out from scratch
// so that agreement with the assembled matrices is meaningful.
// ---------------------------------------------------------------------------

// Gradient of the trilinear shape function attached to corner a of the unit
// cell, corner a at offset (a&1, a>>1&1, a>>2&1).
std::array<double, 3> oracle_grad(int a, double x, double y, double z) {
  const double wx = (a & 1) ? x : 1.0 - x;
  const double wy = ((a >> 1) & 1) ? y : 1.0 - y;
  const double wz = ((a >> 2) & 1) ? z : 1.0 - z;
  const double dx = (a & 1) ? 1.0 : -1.0;
  const double dy = ((a >> 1) & 1) ? 1.0 : -1.0;
  const double dz = ((a >> 2) & 1) ? 1.0 : -1.0;
  return {dx * wy * wz, wx * dy * wz, wx * wy * dz};
}

// Stiffness entry (a,b) on an axis-aligned box with edges (hx,hy,hz) and
// isotropic conductivity sigma, by 5-point Gauss per axis (exact far beyond
// the degree-2-per-axis integrand).
double oracle_stiffness_entry(int a, int b, double hx, double hy, double hz, double sigma) {
  static const double node[5] = {0.5 - 0.9061798459386640 / 2.0, 0.5 - 0.5384693101056831 / 2.0,
                                 0.5, 0.5 + 0.5384693101056831 / 2.0,
                                 0.5 + 0.9061798459386640 / 2.0};
  static const double wt[5] = {0.2369268850561891 / 2.0, 0.4786286704993665 / 2.0,
                               0.5688888888888889 / 2.0, 0.4786286704993665 / 2.0,
                               0.2369268850561891 / 2.0};
  const double h[3] = {hx, hy, hz};
  double acc = 0.0;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      for (int k = 0; k < 5; ++k) {
        const auto ga = oracle_grad(a, node[i], node[j], node[k]);
        const auto gb = oracle_grad(b, node[i], node[j], node[k]);
        double dotg = 0.0;
        for (int d = 0; d < 3; ++d) dotg += (ga[d] / h[d]) * (gb[d] / h[d]);
        acc += wt[i] * wt[j] * wt[k] * dotg;
      }
  return sigma * acc * hx * hy * hz;
}

// ---------------------------------------------------------------------------
// Small builders shared by the cases below.
// ---------------------------------------------------------------------------

DomainSpec one_domain(double sigma) { return nested_shell_spec({"all"}, {sigma}); }

DomainSpec two_sided(double s_neg, double s_pos) {
  Domain in{"in", {SignPattern{{SignRequirement::Negative}}}, Sym3::isotropic(s_neg)};
  Domain out{"out", {SignPattern{{SignRequirement::Positive}}}, Sym3::isotropic(s_pos)};
  return DomainSpec(1, {in, out});
}

LevelSetField uniform_field(const FundamentalMesh& mesh, double value) {
  return discretize([value](const Vec3&) { return value; }, mesh);
}

CutMesh single_cell_mesh(const Vec3& edges, double sigma) {
  FundamentalMesh mesh(BoundingBox{{0.0, 0.0, 0.0}, {edges.x, edges.y, edges.z}}, {1, 1, 1});
  std::vector<LevelSetField> fields{uniform_field(mesh, -1.0)};
  return build_cut_mesh(mesh, fields, one_domain(sigma));
}

CutMesh cut_sphere_mesh(int n, double box_edge, double radius, double s_in, double s_out) {
  const FundamentalMesh mesh = build_centered_cube_grid({0.0, 0.0, 0.0}, box_edge, n);
  std::vector<LevelSetField> fields{discretize(sphere_level_set({0.0, 0.0, 0.0}, radius), mesh)};
  return build_cut_mesh(mesh, fields, two_sided(s_in, s_out));
}

}  // namespace

TEST_CASE("trilinear basis reproduces corners and calculus identities") {
  for (int a = 0; a < 8; ++a) {
    const Vec3 corner{double(a & 1), double((a >> 1) & 1), double((a >> 2) & 1)};
    const LocalBasis at_corner = LocalBasis::at(corner);
    for (int b = 0; b < 8; ++b) CHECK(at_corner.value[std::size_t(b)] == (a == b ? 1.0 : 0.0));
  }

  std::mt19937 rng(7);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec3 xi{unit(rng), unit(rng), unit(rng)};
    const LocalBasis b = LocalBasis::at(xi);
    double sum = 0.0;
    Vec3 gsum{};
    for (int a = 0; a < 8; ++a) {
      sum += b.value[std::size_t(a)];
      gsum += b.grad[std::size_t(a)];
    }
    CHECK_THAT(sum, Catch::Matchers::WithinAbs(1.0, 1e-15));
    CHECK_THAT(norm(gsum), Catch::Matchers::WithinAbs(0.0, 1e-14));

    // Analytic gradients against central differences.
    const double h = 1e-6;
    for (int a = 0; a < 8; ++a)
      for (int d = 0; d < 3; ++d) {
        Vec3 xp = xi, xm = xi;
        xp[d] += h;
        xm[d] -= h;
        const double fd =
            (LocalBasis::at(xp).value[std::size_t(a)] - LocalBasis::at(xm).value[std::size_t(a)]) /
            (2.0 * h);
        CHECK_THAT(b.grad[std::size_t(a)][d], Catch::Matchers::WithinAbs(fd, 1e-9));
      }
  }
}

TEST_CASE("uncut cell stiffness matches independent high-order integration") {
  SECTION("unit cell, unit conductivity") {
    const CutMesh cm = single_cell_mesh({1.0, 1.0, 1.0}, 1.0);
    REQUIRE(cm.cells.size() == 1);
    REQUIRE(cm.facets.empty());
    const SparseBlockMatrix m = assemble_system(cm, {});
    REQUIRE(m.block_rows() == 1);
    const double* blk = m.find_block(0, 0);
    REQUIRE(blk != nullptr);
    for (int a = 0; a < 8; ++a)
      for (int b = 0; b < 8; ++b)
        CHECK_THAT(blk[a * 8 + b],
                   Catch::Matchers::WithinAbs(oracle_stiffness_entry(a, b, 1.0, 1.0, 1.0, 1.0), 1e-14));
    // Known closed-form spot value: the diagonal of the unit-cell Q1
    // stiffness matrix is 1/3.
    CHECK_THAT(blk[0], Catch::Matchers::WithinAbs(1.0 / 3.0, 1e-15));
  }

  SECTION("anisotropic edges and scaled conductivity") {
    const CutMesh cm = single_cell_mesh({1.0, 2.0, 0.5}, 2.0);
    const SparseBlockMatrix m = assemble_system(cm, {});
    const double* blk = m.find_block(0, 0);
    REQUIRE(blk != nullptr);
    for (int a = 0; a < 8; ++a)
      for (int b = 0; b < 8; ++b) {
        const double ref = oracle_stiffness_entry(a, b, 1.0, 2.0, 0.5, 2.0);
        CHECK_THAT(blk[a * 8 + b], Catch::Matchers::WithinAbs(ref, 1e-13 * (1.0 + std::abs(ref))));
      }
  }
}

TEST_CASE("constant vectors lie in the kernel of the assembled system") {
  const CutMesh cm = cut_sphere_mesh(3, 3.0, 0.85, 1.79, 0.01);
  REQUIRE(cm.facets.size() > 0);
  const SparseBlockMatrix m = assemble_system(cm, {});
  const std::vector<double> ones(std::size_t(m.rows()), 1.0);
  const std::vector<double> y = m.apply(ones);
  double worst = 0.0;
  for (double v : y) worst = std::max(worst, std::abs(v));
  CHECK(worst <= 1e-12 * m.inf_norm());
}

TEST_CASE("two uniform cells: semidefinite with one-dimensional kernel") {
  FundamentalMesh mesh(BoundingBox{{0.0, 0.0, 0.0}, {2.0, 1.0, 1.0}}, {2, 1, 1});
  std::vector<LevelSetField> fields{uniform_field(mesh, -1.0)};
  const CutMesh cm = build_cut_mesh(mesh, fields, one_domain(1.0));
  REQUIRE(cm.cells.size() == 2);
  REQUIRE(cm.facets.size() == 1);
  const SparseBlockMatrix m = assemble_system(cm, {});
  REQUIRE(m.rows() == 16);

  const std::vector<double> dense = dense_from_blocks(m);
  const std::vector<double> ev = jacobi_eigenvalues(dense, 16);
  const double lam_max = ev.back();
  REQUIRE(lam_max > 0.0);
  CHECK(ev.front() >= -1e-10 * lam_max);
  int near_zero = 0;
  for (double lam : ev)
    if (std::abs(lam) <= 1e-12 * lam_max) ++near_zero;
  CHECK(near_zero == 1);

  SECTION("block SpMV agrees with the dense product") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> x(16);
    for (double& v : x) v = u(rng);
    const std::vector<double> y = m.apply(x);
    for (int r = 0; r < 16; ++r) {
      double ref = 0.0;
      for (int c = 0; c < 16; ++c) ref += dense[std::size_t(r) * 16 + std::size_t(c)] * x[std::size_t(c)];
      CHECK_THAT(y[std::size_t(r)], Catch::Matchers::WithinAbs(ref, 1e-13));
    }
  }

  SECTION("coordinate export lists every stored entry") {
    std::ostringstream os;
    m.write_coordinate(os);
    std::istringstream is(os.str());
    std::vector<double> parsed(16 * 16, 0.0);
    std::int64_t r = 0, c = 0;
    double v = 0.0;
    std::int64_t lines = 0;
    while (is >> r >> c >> v) {
      REQUIRE(r >= 0);
      REQUIRE(c >= 0);
      REQUIRE(r < 16);
      REQUIRE(c < 16);
      parsed[std::size_t(r) * 16 + std::size_t(c)] = v;
      ++lines;
    }
    CHECK(lines == m.block_count() * 64);
    for (std::size_t i = 0; i < parsed.size(); ++i) CHECK(parsed[i] == dense[i]);
  }
}

TEST_CASE("cut high-contrast system stays semidefinite") {
  // Sphere through a 3x3x3 grid, conductivity contrast 179:1. The penalty
  // weighting has to carry this case; own-side averaging weights would push
  // eigenvalues far negative at the default penalty factor.
  const CutMesh cm = cut_sphere_mesh(3, 3.0, 0.85, 1.79, 0.01);
  const SparseBlockMatrix m = assemble_system(cm, {});
  const int n = int(m.rows());
  const std::vector<double> dense = dense_from_blocks(m);
  const std::vector<double> ev = jacobi_eigenvalues(dense, n);
  const double lam_max = ev.back();
  REQUIRE(lam_max > 0.0);
  CHECK(ev.front() >= -1e-10 * lam_max);
  int near_zero = 0;
  for (double lam : ev)
    if (std::abs(lam) <= 1e-10 * lam_max) ++near_zero;
  CHECK(near_zero == 1);
}

TEST_CASE("assembled matrices are bitwise symmetric") {
  const CutMesh cm = cut_sphere_mesh(3, 3.0, 0.85, 1.79, 0.01);
  const SparseBlockMatrix m = assemble_system(cm, {});
  for (int bi = 0; bi < m.block_rows(); ++bi)
    for (std::uint32_t k = m.row_ptr()[std::size_t(bi)]; k < m.row_ptr()[std::size_t(bi) + 1]; ++k) {
      const int bj = int(m.col_idx()[k]);
      const double* fwd = m.values().data() + std::size_t(k) * 64;
      const double* rev = m.find_block(bj, bi);
      REQUIRE(rev != nullptr);
      for (int a = 0; a < 8; ++a)
        for (int b = 0; b < 8; ++b) REQUIRE(fwd[a * 8 + b] == rev[b * 8 + a]);
    }
}

TEST_CASE("penalty part doubles with eta and vanishes on constants") {
  const CutMesh cm = cut_sphere_mesh(3, 3.0, 0.85, 1.79, 0.01);
  AssemblyParams p;
  const SparseBlockMatrix j1 = assemble_penalty(cm, p);
  AssemblyParams p2 = p;
  p2.eta = 2.0 * p.eta;
  const SparseBlockMatrix j2 = assemble_penalty(cm, p2);

  REQUIRE(j1.values().size() == j2.values().size());
  for (std::size_t i = 0; i < j1.values().size(); ++i)
    REQUIRE(j2.values()[i] == 2.0 * j1.values()[i]);

  // The full system splits into an eta-independent part plus the penalty.
  AssemblyParams p0 = p;
  p0.eta = 0.0;
  const SparseBlockMatrix m_eta = assemble_system(cm, p);
  const SparseBlockMatrix m_zero = assemble_system(cm, p0);
  const double scale = m_eta.inf_norm();
  for (std::size_t i = 0; i < m_eta.values().size(); ++i) {
    const double split = m_zero.values()[i] + j1.values()[i];
    CHECK_THAT(m_eta.values()[i], Catch::Matchers::WithinAbs(split, 1e-13 * scale));
  }

  const std::vector<double> ones(std::size_t(j1.rows()), 1.0);
  const std::vector<double> y = j1.apply(ones);
  double worst = 0.0;
  for (double v : y) worst = std::max(worst, std::abs(v));
  CHECK(worst <= 1e-12 * std::max(j1.inf_norm(), 1e-300));
}

TEST_CASE("voxel path assembles the identical matrix on a never-cut labeling") {
  const FundamentalMesh mesh = build_centered_cube_grid({0.0, 0.0, 0.0}, 3.0, 3);
  std::vector<LevelSetField> fields{uniform_field(mesh, -1.0)};
  const DomainSpec spec = one_domain(0.43);
  const CutMesh cut = build_cut_mesh(mesh, fields, spec);
  const CutMesh vox = build_voxel_mesh(mesh, fields, spec);

  const SparseBlockMatrix a = assemble_system(cut, {});
  const SparseBlockMatrix b = assemble_system(vox, {});
  REQUIRE(a.row_ptr() == b.row_ptr());
  REQUIRE(a.col_idx() == b.col_idx());
  REQUIRE(a.values().size() == b.values().size());
  for (std::size_t i = 0; i < a.values().size(); ++i) REQUIRE(a.values()[i] == b.values()[i]);
}

TEST_CASE("solution evaluation: constants, affine exactness, tie-break, extension") {
  SECTION("constant coefficients reproduce the constant on a cut mesh") {
    const CutMesh cm = cut_sphere_mesh(4, 4.0, 1.3, 1.0, 2.0);
    const std::vector<double> coeffs(std::size_t(cm.block_count()) * 8, 3.25);
    std::mt19937 rng(23);
    std::uniform_real_distribution<double> u(-1.9, 1.9);
    for (int trial = 0; trial < 40; ++trial) {
      const Vec3 x{u(rng), u(rng), u(rng)};
      CHECK_THAT(evaluate_solution(cm, coeffs, x), Catch::Matchers::WithinAbs(3.25, 1e-13));
    }
  }

  SECTION("interpolant of an affine function is exact on an uncut mesh") {
    FundamentalMesh mesh(BoundingBox{{0.0, 0.0, 0.0}, {2.0, 2.0, 2.0}}, {2, 2, 2});
    std::vector<LevelSetField> fields{uniform_field(mesh, -1.0)};
    const CutMesh cm = build_cut_mesh(mesh, fields, one_domain(1.0));
    auto g = [](const Vec3& p) { return 2.0 * p.x - 3.0 * p.y + p.z + 0.5; };
    std::vector<double> coeffs(std::size_t(cm.block_count()) * 8, 0.0);
    for (std::size_t i = 0; i < cm.cells.size(); ++i) {
      const IVec3 c = mesh.cell_coords(cm.cells[i].parent_cell);
      for (int a = 0; a < 8; ++a)
        coeffs[i * 8 + std::size_t(a)] =
            g(mesh.node_position({c.x + (a & 1), c.y + ((a >> 1) & 1), c.z + ((a >> 2) & 1)}));
    }
    std::mt19937 rng(29);
    std::uniform_real_distribution<double> u(0.05, 1.95);
    for (int trial = 0; trial < 40; ++trial) {
      const Vec3 x{u(rng), u(rng), u(rng)};
      CHECK_THAT(evaluate_solution(cm, coeffs, x), Catch::Matchers::WithinAbs(g(x), 1e-12));
    }
  }

  SECTION("points on a shared face take the lower-index neighbor") {
    FundamentalMesh mesh(BoundingBox{{0.0, 0.0, 0.0}, {2.0, 1.0, 1.0}}, {2, 1, 1});
    std::vector<LevelSetField> fields{uniform_field(mesh, -1.0)};
    const CutMesh cm = build_cut_mesh(mesh, fields, one_domain(1.0));
    REQUIRE(cm.cells.size() == 2);
    std::vector<double> coeffs(16, 1.0);
    for (int a = 0; a < 8; ++a) coeffs[8 + std::size_t(a)] = 2.0;
    CHECK(evaluate_solution(cm, coeffs, {1.0, 0.3, 0.7}) == 1.0);
    CHECK(evaluate_solution(cm, coeffs, {1.0, 0.0, 0.0}) == 1.0);
    CHECK(evaluate_solution(cm, coeffs, {1.0 + 1e-9, 0.3, 0.7}) == 2.0);
  }

  SECTION("points outside every domain use the nearest block of the hinted domain") {
    // Inside-only spec: the region outside the sphere carries no DOFs.
    const FundamentalMesh mesh = build_centered_cube_grid({0.0, 0.0, 0.0}, 4.0, 4);
    std::vector<LevelSetField> fields{discretize(sphere_level_set({0.0, 0.0, 0.0}, 1.2), mesh)};
    const CutMesh cm = build_cut_mesh(mesh, fields, one_domain(1.0));
    auto g = [](const Vec3& p) { return 1.5 * p.x + 0.25 * p.y - p.z + 2.0; };
    std::vector<double> coeffs(std::size_t(cm.block_count()) * 8, 0.0);
    for (std::size_t i = 0; i < cm.cells.size(); ++i) {
      const IVec3 c = mesh.cell_coords(cm.cells[i].parent_cell);
      for (int a = 0; a < 8; ++a)
        coeffs[i * 8 + std::size_t(a)] =
            g(mesh.node_position({c.x + (a & 1), c.y + ((a >> 1) & 1), c.z + ((a >> 2) & 1)}));
    }
    // Just outside the sphere surface, inside a cut parent cell: the affine
    // extension of the nearest inside block reproduces g.
    CHECK_THAT(evaluate_solution(cm, coeffs, {0.0, 0.0, 1.35}, 0),
               Catch::Matchers::WithinAbs(g({0.0, 0.0, 1.35}), 1e-12));
    // Far corner of the box: no block within one cell width.
    CHECK_THROWS_AS(evaluate_solution(cm, coeffs, {1.9, 1.9, 1.9}, 0), std::runtime_error);
    // Outside the grid box entirely.
    CHECK_THROWS_AS(evaluate_solution(cm, coeffs, {5.0, 0.0, 0.0}, 0), std::invalid_argument);
  }
}
