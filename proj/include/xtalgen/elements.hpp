#ifndef XTALGEN_ELEMENTS_HPP_
#define XTALGEN_ELEMENTS_HPP_

#include <array>
#include <string>

#include "xtalgen/util.hpp"

namespace xtalgen {

inline constexpr std::array<const char*, 118> kElementSymbols = {
    "H",  "He", "Li", "Be", "B",  "C",  "N",  "O",  "F",  "Ne", "Na", "Mg",
    "Al", "Si", "P",  "S",  "Cl", "Ar", "K",  "Ca", "Sc", "Ti", "V",  "Cr",
    "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As", "Se", "Br", "Kr",
    "Rb", "Sr", "Y",  "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd",
    "In", "Sn", "Sb", "Te", "I",  "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd",
    "Pm", "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf",
    "Ta", "W",  "Re", "Os", "Ir", "Pt", "Au", "Hg", "Tl", "Pb", "Bi", "Po",
    "At", "Rn", "Fr", "Ra", "Ac", "Th", "Pa", "U",  "Np", "Pu", "Am", "Cm",
    "Bk", "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh", "Hs",
    "Mt", "Ds", "Rg", "Cn", "Nh", "Fl", "Mc", "Lv", "Ts", "Og"};

// 1-based atomic number; throws for unknown symbols
inline int atomic_number(const std::string& symbol) {
  for (std::size_t i = 0; i < kElementSymbols.size(); ++i)
    if (symbol == kElementSymbols[i])
      return int(i) + 1;
  throw DataError("unknown element symbol: '" + symbol + "'");
}

inline bool is_known_element(const std::string& symbol) {
  for (const char* s : kElementSymbols)
    if (symbol == s)
      return true;
  return false;
}

}  // namespace xtalgen

#endif  // XTALGEN_ELEMENTS_HPP_
