// Crystal structures as the (species, fractional coordinates, lattice)
// triplet, symmetry constraints, and orbit expansion into full cells.

#ifndef XTALGEN_STRUCTURE_HPP_
#define XTALGEN_STRUCTURE_HPP_

#include <map>
#include <string>
#include <vector>

#include "xtalgen/elements.hpp"
#include "xtalgen/lattice.hpp"
#include "xtalgen/wyckoff.hpp"

namespace xtalgen {

struct CrystalStructure {
  std::vector<std::string> species;
  std::vector<Vec3> frac_coords;          // components in [0,1)
  LatticeMatrix lattice;
  std::vector<char> site_letters;         // optional, empty or one per site
  std::map<std::string, double> properties;

  std::size_t size() const { return species.size(); }

  void validate() const {
    if (species.empty())
      throw DataError("structure must contain at least one atom");
    if (species.size() != frac_coords.size())
      throw DataError("species/coordinate count mismatch");
    if (!site_letters.empty() && site_letters.size() != species.size())
      throw DataError("site letter count mismatch");
    for (const Vec3& x : frac_coords)
      for (double c : x)
        if (!(c >= 0.0 && c < 1.0))
          throw DataError("fractional coordinate outside [0,1)");
    lattice.validate();
  }

  // gcd-reduced composition, e.g. Na4Cl4 -> {Na:1, Cl:1}
  std::map<std::string, int> reduced_formula() const {
    std::map<std::string, int> counts;
    for (const auto& s : species)
      ++counts[s];
    int g = 0;
    for (const auto& [el, c] : counts)
      g = std::gcd(g, c);
    if (g > 1)
      for (auto& [el, c] : counts)
        c /= g;
    return counts;
  }

  std::map<std::string, int> composition() const {
    std::map<std::string, int> counts;
    for (const auto& s : species)
      ++counts[s];
    return counts;
  }
};

using Assignments = std::vector<std::pair<std::string, char>>;  // (element, letter)

// The constraint S: a space group plus per-orbit Wyckoff assignments.
struct SymmetryConstraint {
  SpaceGroupId space_group{1};
  Assignments assignments;

  void validate(const WyckoffTable& table) const {
    for (const auto& [element, letter] : assignments) {
      if (!is_known_element(element))
        throw DataError("unknown element in constraint: " + element);
      table.position(space_group, letter);  // throws for unknown letters
    }
  }

  int atom_count(const WyckoffTable& table) const {
    int n = 0;
    for (const auto& [element, letter] : assignments)
      n += table.position(space_group, letter).multiplicity;
    return n;
  }
};

// Expands every assignment's orbit into a full cell. The lattice must
// already satisfy the group's constraint class; free parameter triples are
// consumed one per assignment (masked components ignored).
inline CrystalStructure realize_structure(const WyckoffTable& table,
                                          const SymmetryConstraint& constraint,
                                          const LatticeParameters& lattice,
                                          const std::vector<Vec3>& per_site_free_params) {
  if (constraint.assignments.empty())
    throw DataError("constraint has no assignments; structures need n >= 1 atoms");
  constraint.validate(table);
  if (!satisfies_lattice_class(lattice, constraint.space_group))
    throw DataError("lattice violates the space group's constraint class");
  if (per_site_free_params.size() != constraint.assignments.size())
    throw DataError("one free-parameter triple required per assignment");

  CrystalStructure s;
  s.lattice = matrix_from_parameters(lattice);
  for (std::size_t i = 0; i < constraint.assignments.size(); ++i) {
    const auto& [element, letter] = constraint.assignments[i];
    std::vector<Vec3> orbit =
        wyckoff_orbit(table, constraint.space_group, letter, per_site_free_params[i]);
    for (const Vec3& x : orbit) {
      s.species.push_back(element);
      s.frac_coords.push_back(x);
      s.site_letters.push_back(letter);
    }
  }
  s.validate();
  return s;
}

}  // namespace xtalgen

#endif  // XTALGEN_STRUCTURE_HPP_
