#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <random>

#include "udg/levelset.hpp"
#include "udg/levelset_io.hpp"

using namespace udg;

TEST_CASE("trilinear interpolation reproduces trilinear polynomials") {
  // f(x,y,z) = 2 - x + 3y*z - 0.5*x*y*z is trilinear, so nodal sampling must
  // reproduce it everywhere inside a cell.
  const auto f = [](const Vec3& p) { return 2.0 - p.x + 3.0 * p.y * p.z - 0.5 * p.x * p.y * p.z; };
  const FundamentalMesh mesh({{-1.0, 0.0, 2.0}, {1.0, 2.0, 6.0}}, {3, 4, 5});
  const LevelSetField field = discretize(f, mesh);

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const IVec3 c{int(rng() % 3), int(rng() % 4), int(rng() % 5)};
    const Vec3 xi{u01(rng), u01(rng), u01(rng)};
    const Vec3 lo = mesh.cell_lo(c), hi = mesh.cell_hi(c);
    const Vec3 p{lo.x + xi.x * (hi.x - lo.x), lo.y + xi.y * (hi.y - lo.y),
                 lo.z + xi.z * (hi.z - lo.z)};
    REQUIRE_THAT(field.evaluate(c, xi), Catch::Matchers::WithinAbs(f(p), 1e-12));
  }
}

TEST_CASE("corner values follow the bit convention") {
  const FundamentalMesh mesh({{0, 0, 0}, {1, 1, 1}}, {2, 2, 2});
  // Value = node index as a stamp.
  std::vector<double> nodal(std::size_t(mesh.node_count()));
  for (std::size_t i = 0; i < nodal.size(); ++i) nodal[i] = double(i);
  const LevelSetField field(mesh, std::move(nodal));
  const auto v = field.corner_values({1, 0, 1});
  REQUIRE(v[0] == double(mesh.node_index({1, 0, 1})));
  REQUIRE(v[1] == double(mesh.node_index({2, 0, 1})));
  REQUIRE(v[2] == double(mesh.node_index({1, 1, 1})));
  REQUIRE(v[4] == double(mesh.node_index({1, 0, 2})));
  REQUIRE(v[7] == double(mesh.node_index({2, 1, 2})));
}

TEST_CASE("zero belongs to the negative side") {
  REQUIRE(is_negative_side(0.0));
  REQUIRE(is_negative_side(-1e-300));
  REQUIRE_FALSE(is_negative_side(1e-300));
}

TEST_CASE("nested shells resolve sign vectors to the right domain") {
  // Outermost first: level set 0 is the skin surface, 2 the brain surface.
  const DomainSpec spec = nested_shell_spec({"skin", "skull", "brain"}, {0.33, 0.0042, 0.33});
  REQUIRE(spec.level_set_count() == 3);
  // Bit l set = positive (outside) of level set l.
  REQUIRE(spec.domain_of_signs(0b000) == 2);  // inside everything: brain
  REQUIRE(spec.domain_of_signs(0b100) == 1);  // outside brain surface only: skull
  REQUIRE(spec.domain_of_signs(0b110) == 0);  // inside skin only: skin
  REQUIRE(spec.domain_of_signs(0b111) == -1); // outside everything: air
  // Sign vectors no properly nested geometry produces still resolve
  // deterministically: the outermost consistent shell, or air.
  REQUIRE(spec.domain_of_signs(0b010) == 0);
  REQUIRE(spec.domain_of_signs(0b001) == -1);
  REQUIRE(spec.domain_by_name("skull") == 1);
  REQUIRE(spec.domain_by_name("nope") == -1);
  REQUIRE(spec.domains()[1].conductivity.xx == 0.0042);
}

TEST_CASE("overlapping patterns are rejected") {
  SignPattern any;
  any.req = {SignRequirement::Any};
  REQUIRE_THROWS_AS((DomainSpec(1, {Domain{"a", {any}, Sym3::isotropic(1.0)},
                                    Domain{"b", {any}, Sym3::isotropic(1.0)}})),
                    std::invalid_argument);
}

TEST_CASE("vertex pattern classification is a conservative superset") {
  const DomainSpec spec = nested_shell_spec({"outer", "inner"}, {1.0, 2.0});
  // ls0 uniformly negative (inside the outer surface), ls1 mixed: the cell
  // can hold both the outer shell and the inner domain.
  std::vector<std::array<double, 8>> corners(2);
  corners[0] = {-1, -1, -1, -1, -1, -1, -1, -1};
  corners[1] = {-1, -1, -1, -1, -1, -1, -1, 1};
  const auto domains = classify_vertex_pattern(spec, corners);
  REQUIRE(domains == std::vector<int>{0, 1});

  // Everything uniformly positive: outside all shells.
  corners[0].fill(1.0);
  corners[1].fill(1.0);
  REQUIRE(classify_vertex_pattern(spec, corners).empty());
}

TEST_CASE("level-set volume files round-trip bit-exactly") {
  const FundamentalMesh mesh({{-127.0, -127.0, -127.0}, {127.0, 127.0, 127.0}}, {8, 8, 8});
  const LevelSetField field = discretize(sphere_level_set({1.0, -2.0, 3.0}, 80.0), mesh);

  const std::string path = "test_levelset_roundtrip.udgls";
  save_levelset_volume(path, field);
  const LevelSetField back = load_levelset_field(path, mesh);
  for (std::int64_t i = 0; i < mesh.node_count(); ++i)
    REQUIRE(back.nodal_values()[std::size_t(i)] == field.nodal_values()[std::size_t(i)]);
  std::remove(path.c_str());
}

TEST_CASE("resampling a finer file onto a coarser grid subsamples nodes") {
  const FundamentalMesh fine({{0, 0, 0}, {2, 2, 2}}, {8, 8, 8});
  const FundamentalMesh coarse({{0, 0, 0}, {2, 2, 2}}, {4, 4, 4});
  const auto f = [](const Vec3& p) { return p.x + 10.0 * p.y - 3.0 * p.z; };
  const LevelSetField fine_field = discretize(f, fine);

  const std::string path = "test_levelset_fine.udgls";
  save_levelset_volume(path, fine_field);
  const LevelSetField coarse_field = load_levelset_field(path, coarse);
  for (int k = 0; k <= 4; ++k)
    for (int j = 0; j <= 4; ++j)
      for (int i = 0; i <= 4; ++i) {
        const Vec3 p = coarse.node_position({i, j, k});
        REQUIRE_THAT(coarse_field.nodal_value({i, j, k}),
                     Catch::Matchers::WithinAbs(f(p), 1e-13));
      }
  std::remove(path.c_str());
}

TEST_CASE("resampling a coarser file onto a finer grid interpolates trilinearly") {
  const FundamentalMesh coarse({{0, 0, 0}, {1, 1, 1}}, {2, 2, 2});
  const FundamentalMesh fine({{0, 0, 0}, {1, 1, 1}}, {6, 6, 6});
  // Trilinear per coarse cell: interpolation must be exact for this one.
  const auto f = [](const Vec3& p) { return 1.0 + 2.0 * p.x - p.y + 0.25 * p.z; };
  save_levelset_volume("test_levelset_coarse.udgls", discretize(f, coarse));
  const LevelSetField fine_field = load_levelset_field("test_levelset_coarse.udgls", fine);
  for (int k = 0; k <= 6; ++k)
    for (int j = 0; j <= 6; ++j)
      for (int i = 0; i <= 6; ++i)
        REQUIRE_THAT(fine_field.nodal_value({i, j, k}),
                     Catch::Matchers::WithinAbs(f(fine.node_position({i, j, k})), 1e-13));
  std::remove("test_levelset_coarse.udgls");
}

TEST_CASE("resampling rejects incompatible grids") {
  const FundamentalMesh a({{0, 0, 0}, {1, 1, 1}}, {3, 3, 3});
  const FundamentalMesh b({{0, 0, 0}, {1, 1, 1}}, {5, 5, 5});  // 3 and 5 do not divide
  save_levelset_volume("test_levelset_bad.udgls", discretize([](const Vec3&) { return 1.0; }, a));
  REQUIRE_THROWS_AS(load_levelset_field("test_levelset_bad.udgls", b), std::invalid_argument);

  const FundamentalMesh c({{0, 0, 0}, {2, 1, 1}}, {3, 3, 3});  // box mismatch
  REQUIRE_THROWS_AS(load_levelset_field("test_levelset_bad.udgls", c), std::invalid_argument);
  std::remove("test_levelset_bad.udgls");
}
