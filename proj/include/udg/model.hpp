#ifndef UDG_MODEL_HPP
#define UDG_MODEL_HPP

#include <stdexcept>
#include <string>
#include <vector>

#include "udg/config.hpp"
#include "udg/cutmesh.hpp"
#include "udg/levelset_io.hpp"

namespace udg {

/// Everything needed to instantiate the discrete head model from a
/// configuration: grid, nested level sets, domain table, and cut parameters.
struct ModelSetup {
  FundamentalMesh mesh;
  std::vector<LevelSetField> fields;
  DomainSpec spec;
  bool voxel = false;
  double theta = 1e-6;
  int depth = 0;
  Vec3 center;
  double inner_radius = 0.0;  // innermost shell radius (dipole placement bound)

  CutMesh build_mesh() const {
    return voxel ? build_voxel_mesh(mesh, fields, spec)
                 : build_cut_mesh(mesh, fields, spec, theta, depth);
  }
};

inline std::vector<std::string> default_shell_names(std::size_t n) {
  if (n == 4) return {"skin", "skull", "csf", "brain"};
  std::vector<std::string> names(n);
  for (std::size_t i = 0; i < n; ++i) names[i] = "shell" + std::to_string(i);
  return names;
}

/// Build the model described by a configuration. Recognized keys:
///   geometry                analytic-spheres (default) | levelset-files
///   sphere.center           three reals, default 0 0 0
///   sphere.radii            outermost first, default 92 86 80 78
///   sphere.conductivities   matching radii, default 0.43 0.01 1.79 0.33
///   domain.names            override shell names
///   levelset.files          whitespace-separated UDGLS paths, outermost first
///   grid.cells              N_d per axis, default 16
///   grid.box_edge           default 194.08
///   grid.center             default sphere.center
///   mode                    udg (default) | voxel-dg
///   cut.theta               default 1e-6
///   cut.depth               default 0
inline ModelSetup model_from_config(const ConfigMap& cfg) {
  ModelSetup m;
  const std::string mode = cfg.get_string("mode", "udg");
  if (mode == "udg")
    m.voxel = false;
  else if (mode == "voxel-dg")
    m.voxel = true;
  else
    throw std::invalid_argument("config: mode must be udg or voxel-dg, got " + mode);
  m.theta = cfg.get_double("cut.theta", 1e-6);
  m.depth = int(cfg.get_int("cut.depth", 0));

  const std::string geometry = cfg.get_string("geometry", "analytic-spheres");
  if (geometry == "analytic-spheres") {
    m.center = cfg.get_vec3("sphere.center", {0.0, 0.0, 0.0});
    const std::vector<double> radii = cfg.get_doubles("sphere.radii", {92.0, 86.0, 80.0, 78.0});
    const std::vector<double> cond =
        cfg.get_doubles("sphere.conductivities", {0.43, 0.01, 1.79, 0.33});
    if (radii.size() != cond.size())
      throw std::invalid_argument("config: sphere.radii and sphere.conductivities disagree");
    for (std::size_t i = 1; i < radii.size(); ++i)
      if (!(radii[i] < radii[i - 1]))
        throw std::invalid_argument("config: sphere.radii must decrease (outermost first)");

    const double edge = cfg.get_double("grid.box_edge", 194.08);
    const int n = int(cfg.get_int("grid.cells", 16));
    m.mesh = build_centered_cube_grid(cfg.get_vec3("grid.center", m.center), edge, n);
    for (double r : radii) m.fields.push_back(discretize(sphere_level_set(m.center, r), m.mesh));
    m.spec = nested_shell_spec(
        cfg.get_strings("domain.names", default_shell_names(radii.size())), cond);
    m.inner_radius = radii.back();
    return m;
  }

  if (geometry != "levelset-files")
    throw std::invalid_argument("config: geometry must be analytic-spheres or levelset-files");

  const std::vector<std::string> files = cfg.get_strings("levelset.files", {});
  if (files.empty()) throw std::invalid_argument("config: levelset.files is required");
  const std::vector<double> cond = cfg.get_doubles("domain.conductivities", {});
  if (cond.size() != files.size())
    throw std::invalid_argument("config: domain.conductivities must match levelset.files");

  std::vector<LevelSetVolume> volumes;
  for (const auto& f : files) volumes.push_back(load_levelset_volume(f));

  const BoundingBox box = volumes.front().box;
  const int n = int(cfg.get_int("grid.cells", volumes.front().nodes.x - 1));
  m.mesh = FundamentalMesh(box, {n, n, n});
  for (const auto& vol : volumes) m.fields.push_back(resample_levelset_volume(vol, m.mesh));
  m.spec = nested_shell_spec(cfg.get_strings("domain.names", default_shell_names(files.size())),
                             cond);
  m.center = cfg.get_vec3("sphere.center", 0.5 * (box.lo + box.hi));
  m.inner_radius = cfg.get_double("sampling.inner_radius", 0.0);
  return m;
}

}  // namespace udg

#endif
