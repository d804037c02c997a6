#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "udg/study.hpp"

using namespace udg;

namespace {

// Coarsest configuration whose SWIPG system is coercive: the default
// penalty is too weak once thin shells graze cells, so the smoke model pins
// the sliver threshold and penalty the full-scale studies use.
ConfigMap smoke_config() {
  ConfigMap cfg;
  cfg.set("geometry", "analytic-spheres");
  cfg.set("sphere.radii", "92 86 80 78");
  cfg.set("sphere.conductivities", "0.43 0.01 1.79 0.33");
  cfg.set("grid.cells", "8");
  cfg.set("cut.theta", "1e-2");
  cfg.set("assembly.eta", "64");
  cfg.set("study.eccentricities", "0.3 0.7");
  cfg.set("study.dipoles_per_ecc", "3");
  cfg.set("study.electrodes", "16");
  cfg.set("study.seed", "99");
  return cfg;
}

}  // namespace

TEST_CASE("eccentricity ladder") {
  const std::vector<double> e = eccentricity_ladder(0.1666, 0.9939, 10);
  REQUIRE(e.size() == 10);
  CHECK(e.front() == 0.1666);
  CHECK(e.back() == 0.9939);
  for (std::size_t i = 1; i < e.size(); ++i) CHECK(e[i] > e[i - 1]);
  // distance to the surface shrinks geometrically; spot-check the top rungs
  CHECK(std::abs(e[6] - 0.9686) < 5e-4);
  CHECK(std::abs(e[7] - 0.9818) < 5e-4);
  CHECK(std::abs(e[8] - 0.9895) < 5e-4);

  const std::vector<double> two = eccentricity_ladder(0.25, 0.75, 2);
  REQUIRE(two.size() == 2);
  CHECK(two[0] == 0.25);
  CHECK(two[1] == 0.75);

  CHECK_THROWS_AS(eccentricity_ladder(0.0, 0.9), std::invalid_argument);
  CHECK_THROWS_AS(eccentricity_ladder(0.5, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(eccentricity_ladder(0.1, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(eccentricity_ladder(0.1, 0.9, 1), std::invalid_argument);
}

TEST_CASE("dipole sampling") {
  const double inner = 78.0;
  const double ecc = 0.6;

  SECTION("radial moments align with the position") {
    const auto ds = sample_dipoles(7, ecc, 50, Orientation::Radial, inner);
    REQUIRE(ds.size() == 50);
    for (const auto& d : ds) {
      CHECK(std::abs(norm(d.position) - ecc * inner) < 1e-12 * inner);
      CHECK(std::abs(norm(d.moment) - 1.0) < 1e-12);
      CHECK(dot(d.moment, normalized(d.position)) == Catch::Approx(1.0).margin(1e-12));
    }
  }

  SECTION("tangential moments are orthogonal to the position") {
    const auto ds = sample_dipoles(7, ecc, 50, Orientation::Tangential, inner);
    for (const auto& d : ds) {
      CHECK(std::abs(norm(d.moment) - 1.0) < 1e-12);
      CHECK(std::abs(dot(d.moment, normalized(d.position))) < 1e-12);
    }
  }

  SECTION("seeded reproducibility") {
    const auto a = sample_dipoles(42, ecc, 10, Orientation::Tangential, inner);
    const auto b = sample_dipoles(42, ecc, 10, Orientation::Tangential, inner);
    const auto c = sample_dipoles(43, ecc, 10, Orientation::Tangential, inner);
    REQUIRE(a.size() == b.size());
    bool all_equal = true, any_differ = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      all_equal = all_equal && a[i].position == b[i].position && a[i].moment == b[i].moment;
      any_differ = any_differ || !(a[i].position == c[i].position);
    }
    CHECK(all_equal);
    CHECK(any_differ);
  }

  SECTION("positions spread over the sphere") {
    const auto ds = sample_dipoles(1, ecc, 200, Orientation::Radial, inner);
    Vec3 mean{0, 0, 0};
    for (const auto& d : ds) mean += d.position;
    mean = mean / double(ds.size());
    // the mean of uniform points on a sphere concentrates near the center
    CHECK(norm(mean) < 0.2 * ecc * inner);
  }

  CHECK_THROWS_AS(sample_dipoles(1, 0.0, 5, Orientation::Radial, inner), std::invalid_argument);
  CHECK_THROWS_AS(sample_dipoles(1, 1.0, 5, Orientation::Radial, inner), std::invalid_argument);
  CHECK_THROWS_AS(sample_dipoles(1, 0.5, 5, Orientation::Radial, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(sample_dipoles(1, 0.5, -1, Orientation::Radial, inner), std::invalid_argument);
}

TEST_CASE("electrode lattice") {
  const double radius = 92.0;
  const ElectrodeSet es = generate_electrodes(200, radius);
  REQUIRE(es.positions.size() == 199);

  CHECK(std::abs(norm(es.reference) - radius) < 1e-12 * radius);
  for (const auto& p : es.positions) CHECK(std::abs(norm(p) - radius) < 1e-12 * radius);

  double min_sep = 2.0 * radius;
  for (std::size_t i = 0; i < es.positions.size(); ++i)
    for (std::size_t j = i + 1; j < es.positions.size(); ++j)
      min_sep = std::min(min_sep, norm(es.positions[i] - es.positions[j]));
  CHECK(min_sep > 0.05 * radius);  // near-uniform coverage, no clumping

  const ElectrodeSet again = generate_electrodes(200, radius);
  CHECK(again.reference == es.reference);
  bool identical = true;
  for (std::size_t i = 0; i < es.positions.size(); ++i)
    identical = identical && again.positions[i] == es.positions[i];
  CHECK(identical);

  const Vec3 center{10.0, -4.0, 2.5};
  const ElectrodeSet shifted = generate_electrodes(16, 5.0, 0, center);
  for (const auto& p : shifted.positions) CHECK(std::abs(norm(p - center) - 5.0) < 1e-12 * 5.0);

  const ElectrodeSet pair = generate_electrodes(2, radius);
  REQUIRE(pair.positions.size() == 1);
  CHECK(norm(pair.positions[0] - pair.reference) > radius);

  CHECK_THROWS_AS(generate_electrodes(1, radius), std::invalid_argument);
  CHECK_THROWS_AS(generate_electrodes(16, 0.0), std::invalid_argument);
}

TEST_CASE("rdm and mag metrics") {
  const std::vector<double> u{1.0, -2.0, 0.5, 3.0};

  SECTION("identical signals") {
    const ErrorPair ep = rdm_mag(u, u);
    CHECK(ep.rdm_percent == 0.0);
    CHECK(ep.mag_percent == 0.0);
  }

  SECTION("pure scaling moves only MAG") {
    std::vector<double> v = u;
    for (double& x : v) x *= 2.0;
    const ErrorPair ep = rdm_mag(u, v);
    CHECK(ep.rdm_percent == 0.0);
    CHECK(ep.mag_percent == 100.0);
  }

  SECTION("sign flip saturates RDM") {
    std::vector<double> v = u;
    for (double& x : v) x = -x;
    const ErrorPair ep = rdm_mag(u, v);
    CHECK(ep.rdm_percent == Catch::Approx(100.0).margin(1e-12));
    CHECK(ep.mag_percent == 0.0);
  }

  SECTION("mean referencing removes a common offset") {
    std::vector<double> v = u;
    for (double& x : v) x += 7.5;
    const ErrorPair ep = rdm_mag(mean_referenced(u), mean_referenced(v));
    CHECK(ep.rdm_percent < 1e-12);
    CHECK(std::abs(ep.mag_percent) < 1e-10);
  }

  CHECK_THROWS_AS(rdm_mag(u, std::vector<double>{1.0, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS(rdm_mag(std::vector<double>{0.0, 0.0}, std::vector<double>{1.0, 2.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(mean_referenced(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("five number summary") {
  SECTION("odd sample") {
    const FiveNumber f = five_number_summary({3.0, 1.0, 2.0});
    CHECK(f.min == 1.0);
    CHECK(f.q1 == 1.5);
    CHECK(f.median == 2.0);
    CHECK(f.q3 == 2.5);
    CHECK(f.max == 3.0);
    CHECK(f.iqr() == 1.0);
    CHECK(f.tr() == 2.0);
  }

  SECTION("even sample interpolates") {
    const FiveNumber f = five_number_summary({4.0, 1.0, 3.0, 2.0});
    CHECK(f.q1 == 1.75);
    CHECK(f.median == 2.5);
    CHECK(f.q3 == 3.25);
  }

  SECTION("single point collapses") {
    const FiveNumber f = five_number_summary({5.0});
    CHECK(f.min == 5.0);
    CHECK(f.q1 == 5.0);
    CHECK(f.median == 5.0);
    CHECK(f.q3 == 5.0);
    CHECK(f.max == 5.0);
  }

  CHECK_THROWS_AS(five_number_summary({}), std::invalid_argument);
}

TEST_CASE("study configuration parsing") {
  ConfigMap cfg = smoke_config();
  cfg.set("study.orientations", "radial");
  cfg.set("solver.preconditioner", "jacobi");
  cfg.set("solver.rel_tol", "1e-6");
  cfg.set("assembly.eta", "6");
  cfg.set("series.max_degree", "150");

  const StudyConfig s = study_from_config(cfg);
  REQUIRE(s.eccentricities.size() == 2);
  CHECK(s.eccentricities[0] == 0.3);
  CHECK(s.eccentricities[1] == 0.7);
  CHECK(s.dipoles_per_ecc == 3);
  REQUIRE(s.orientations.size() == 1);
  CHECK(s.orientations[0] == Orientation::Radial);
  CHECK(s.electrode_count == 16);
  CHECK(s.seed == 99);
  CHECK(s.solver.preconditioner == PreconditionerKind::BlockJacobi);
  CHECK(s.solver.rel_tol == 1e-6);
  CHECK(s.assembly.eta == 6.0);
  CHECK(s.series.max_degree == 150);
  CHECK(s.model.inner_radius == 78.0);
  CHECK(s.oracle.radii.size() == 4);
  CHECK(s.config_hash == cfg.fingerprint());

  ConfigMap files = smoke_config();
  files.set("geometry", "levelset-files");
  CHECK_THROWS_AS(study_from_config(files), std::invalid_argument);

  ConfigMap defaults;
  defaults.set("geometry", "analytic-spheres");
  const StudyConfig d = study_from_config(defaults);
  CHECK(d.eccentricities.size() == 10);
  CHECK(d.dipoles_per_ecc == 100);
  CHECK(d.orientations.size() == 2);
}

TEST_CASE("study smoke run on a coarse grid") {
  const StudyConfig cfg = study_from_config(smoke_config());
  const StudyResult res = run_study(cfg);

  CHECK(res.mode == "udg");
  CHECK(res.grid_cells == 8);
  CHECK(res.blocks > 0);
  CHECK(res.dofs == std::int64_t(res.blocks) * 8);
  CHECK(res.electrodes == 15);
  CHECK(res.placement_failures == 0);
  CHECK(res.transfer.iterations_max >= res.transfer.iterations_min);
  CHECK(res.transfer.residual_max <= cfg.solver.rel_tol);

  REQUIRE(res.dipoles.size() == 12);  // 2 eccs x 2 orientations x 3 dipoles
  REQUIRE(res.groups.size() == 4);
  for (const auto& d : res.dipoles) {
    CHECK(d.rdm_percent >= 0.0);
    CHECK(d.rdm_percent <= 100.0);
    CHECK(d.mag_percent > -100.0);
  }
  for (const auto& g : res.groups) {
    CHECK(g.rdm.min <= g.rdm.q1);
    CHECK(g.rdm.q1 <= g.rdm.median);
    CHECK(g.rdm.median <= g.rdm.q3);
    CHECK(g.rdm.q3 <= g.rdm.max);
  }
  CHECK_NOTHROW(res.group(0.3, Orientation::Radial));
  CHECK_NOTHROW(res.group(0.7, Orientation::Tangential));
  CHECK_THROWS_AS(res.group(0.5, Orientation::Radial), std::invalid_argument);
}

TEST_CASE("study output is deterministic") {
  const StudyConfig cfg = study_from_config(smoke_config());
  const StudyResult a = run_study(cfg);
  const StudyResult b = run_study(cfg);

  std::ostringstream csv_a, csv_b, json_a, json_b;
  write_study_csv(csv_a, a);
  write_study_csv(csv_b, b);
  write_study_json(json_a, a);
  write_study_json(json_b, b);
  CHECK(csv_a.str() == csv_b.str());
  CHECK(json_a.str() == json_b.str());

  CHECK(csv_a.str().rfind("# udg-study config=", 0) == 0);
  CHECK(csv_a.str().find("eccentricity,orientation,dipole,rdm_percent,mag_percent,iterations") !=
        std::string::npos);
  CHECK(json_a.str().find("\"groups\"") != std::string::npos);
  CHECK(json_a.str().find("\"iqr\"") != std::string::npos);
}

TEST_CASE("placement failures abort the study") {
  StudyConfig cfg = study_from_config(smoke_config());
  cfg.model.inner_radius = 200.0;  // pushes samples outside the grid box
  cfg.eccentricities = {0.9};
  cfg.dipoles_per_ecc = 2;
  cfg.orientations = {Orientation::Radial};
  cfg.electrode_count = 4;

  try {
    run_study(cfg);
    FAIL("expected a placement failure");
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("placement") != std::string::npos);
    CHECK(msg.find("2") != std::string::npos);
  }
}
