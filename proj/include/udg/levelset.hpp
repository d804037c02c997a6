#ifndef UDG_LEVELSET_HPP
#define UDG_LEVELSET_HPP

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "udg/grid.hpp"

namespace udg {

/// Sign convention used everywhere: a level-set value of exactly zero counts
/// as the negative (interior) side.
inline bool is_negative_side(double v) { return v <= 0.0; }

/// Q1-discretized level set: one value per fundamental-mesh node, evaluated
/// by trilinear interpolation inside each cell.
class LevelSetField {
 public:
  LevelSetField() = default;

  LevelSetField(FundamentalMesh mesh, std::vector<double> nodal)
      : mesh_(std::move(mesh)), nodal_(std::move(nodal)) {
    if (std::int64_t(nodal_.size()) != mesh_.node_count())
      throw std::invalid_argument("LevelSetField: nodal value count does not match mesh");
  }

  const FundamentalMesh& mesh() const { return mesh_; }
  const std::vector<double>& nodal_values() const { return nodal_; }

  double nodal_value(const IVec3& n) const { return nodal_[mesh_.node_index(n)]; }

  /// The eight corner values of a cell, corner a at local offset
  /// (a&1, a>>1&1, a>>2&1).
  std::array<double, 8> corner_values(const IVec3& c) const {
    std::array<double, 8> v;
    for (int a = 0; a < 8; ++a)
      v[a] = nodal_value({c.x + (a & 1), c.y + ((a >> 1) & 1), c.z + ((a >> 2) & 1)});
    return v;
  }

  double evaluate(const IVec3& cell, const Vec3& local) const {
    return trilinear(corner_values(cell), local);
  }

  static double trilinear(const std::array<double, 8>& v, const Vec3& xi) {
    const double wx[2] = {1.0 - xi.x, xi.x};
    const double wy[2] = {1.0 - xi.y, xi.y};
    const double wz[2] = {1.0 - xi.z, xi.z};
    double s = 0.0;
    for (int a = 0; a < 8; ++a) s += v[a] * wx[a & 1] * wy[(a >> 1) & 1] * wz[(a >> 2) & 1];
    return s;
  }

 private:
  FundamentalMesh mesh_;
  std::vector<double> nodal_;
};

inline LevelSetField discretize(const std::function<double(const Vec3&)>& f, const FundamentalMesh& mesh) {
  std::vector<double> nodal(std::size_t(mesh.node_count()));
  const IVec3 n = mesh.cells_per_dim();
  std::size_t idx = 0;
  for (int k = 0; k <= n.z; ++k)
    for (int j = 0; j <= n.y; ++j)
      for (int i = 0; i <= n.x; ++i) nodal[idx++] = f(mesh.node_position({i, j, k}));
  return LevelSetField(mesh, std::move(nodal));
}

/// Signed distance to a sphere, negative inside.
inline std::function<double(const Vec3&)> sphere_level_set(const Vec3& center, double radius) {
  return [center, radius](const Vec3& p) { return norm(p - center) - radius; };
}

enum class SignRequirement : std::uint8_t { Any = 0, Negative = 1, Positive = 2 };

/// Partial sign assignment over the level sets; entries not mentioned are
/// unconstrained.
struct SignPattern {
  std::vector<SignRequirement> req;

  bool matches(std::uint32_t signs) const {
    for (std::size_t l = 0; l < req.size(); ++l) {
      const bool positive = (signs >> l) & 1u;
      if (req[l] == SignRequirement::Negative && positive) return false;
      if (req[l] == SignRequirement::Positive && !positive) return false;
    }
    return true;
  }
};

struct Domain {
  std::string name;
  std::vector<SignPattern> patterns;
  Sym3 conductivity;
};

/// Ordered domain declaration over a set of level sets. The order is
/// meaningful: cut-cell construction cuts by level set 0 first, then 1, ...
class DomainSpec {
 public:
  DomainSpec() = default;

  DomainSpec(int level_set_count, std::vector<Domain> domains)
      : level_sets_(level_set_count), domains_(std::move(domains)) {
    if (level_set_count < 0 || level_set_count > 20)
      throw std::invalid_argument("DomainSpec: unsupported level-set count");
    for (const auto& d : domains_)
      for (const auto& p : d.patterns)
        if (int(p.req.size()) > level_set_count)
          throw std::invalid_argument("DomainSpec: pattern longer than level-set list");
    // Precompute the (full sign vector -> domain) table and check the domains
    // are pairwise disjoint.
    table_.assign(std::size_t(1) << level_sets_, -1);
    for (std::uint32_t s = 0; s < table_.size(); ++s) {
      for (std::size_t d = 0; d < domains_.size(); ++d) {
        for (const auto& p : domains_[d].patterns) {
          if (!p.matches(s)) continue;
          if (table_[s] >= 0 && table_[s] != int(d))
            throw std::invalid_argument("DomainSpec: domains overlap on sign vector");
          table_[s] = int(d);
        }
      }
    }
  }

  int level_set_count() const { return level_sets_; }
  const std::vector<Domain>& domains() const { return domains_; }
  int domain_count() const { return int(domains_.size()); }

  /// Domain for a full sign vector (bit l set = positive side of level set l),
  /// or -1 if the signs belong to no declared domain.
  int domain_of_signs(std::uint32_t signs) const { return table_[signs]; }

  int domain_by_name(const std::string& name) const {
    for (std::size_t d = 0; d < domains_.size(); ++d)
      if (domains_[d].name == name) return int(d);
    return -1;
  }

 private:
  int level_sets_ = 0;
  std::vector<Domain> domains_;
  std::vector<int> table_;
};

/// Conservative superset of the domains that can appear inside a cell, from
/// the per-level-set corner signs alone (mixed-sign level sets may take either
/// side inside the cell). Refined later by the actual subtriangulation.
inline std::vector<int> classify_vertex_pattern(const DomainSpec& spec,
                                                const std::vector<std::array<double, 8>>& corner_values) {
  if (int(corner_values.size()) != spec.level_set_count())
    throw std::invalid_argument("classify_vertex_pattern: level-set count mismatch");
  // For each level set: bit0 = negative achievable, bit1 = positive achievable.
  std::uint32_t can_neg = 0, can_pos = 0;
  for (int l = 0; l < spec.level_set_count(); ++l) {
    bool neg = false, pos = false;
    for (double v : corner_values[l]) (is_negative_side(v) ? neg : pos) = true;
    if (neg) can_neg |= 1u << l;
    if (pos) can_pos |= 1u << l;
  }
  std::vector<int> result;
  for (int d = 0; d < spec.domain_count(); ++d) {
    bool achievable = false;
    for (const auto& p : spec.domains()[d].patterns) {
      bool ok = true;
      for (std::size_t l = 0; l < p.req.size() && ok; ++l) {
        if (p.req[l] == SignRequirement::Negative && !((can_neg >> l) & 1u)) ok = false;
        if (p.req[l] == SignRequirement::Positive && !((can_pos >> l) & 1u)) ok = false;
      }
      if (ok) { achievable = true; break; }
    }
    if (achievable) result.push_back(d);
  }
  return result;
}

/// Nested-shell domain spec: level set k is the k-th interface, outermost
/// first. Domain k requires the negative side of every enclosing interface
/// 0..k and the positive side of interface k+1 (if any); the innermost domain
/// is bounded by the last interface only. Requiring all enclosing interfaces
/// keeps the supports disjoint even on sign vectors that no properly nested
/// geometry produces; such a vector lands in the outermost consistent shell,
/// or in no domain once it claims the positive side of an enclosing surface.
inline DomainSpec nested_shell_spec(const std::vector<std::string>& names,
                                    const std::vector<double>& conductivities) {
  if (names.size() != conductivities.size() || names.empty())
    throw std::invalid_argument("nested_shell_spec: need one name and conductivity per shell");
  const int n = int(names.size());
  std::vector<Domain> domains(n);
  for (int k = 0; k < n; ++k) {
    SignPattern p;
    p.req.assign(std::size_t(std::min(k + 2, n)), SignRequirement::Negative);
    if (k + 1 < n) p.req[std::size_t(k + 1)] = SignRequirement::Positive;
    domains[k] = Domain{names[k], {p}, Sym3::isotropic(conductivities[k])};
  }
  return DomainSpec(n, std::move(domains));
}

}  // namespace udg

#endif
