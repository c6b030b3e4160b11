// Dataset persistence: the structures.v1 record format, corpus filtering,
// leak-free grouped splits, and a minimal CIF export.

#ifndef XTALGEN_DATASET_HPP_
#define XTALGEN_DATASET_HPP_

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "xtalgen/metrics.hpp"
#include "xtalgen/structure.hpp"
#include "xtalgen/train.hpp"

namespace xtalgen {

struct StructureRecord {
  std::string id;
  CrystalStructure structure;
  SpaceGroupId space_group{1};
  Assignments assignments;
  std::map<std::string, double> properties;
  std::optional<CompositionRequest> request;  // present on generated samples

  SymmetryConstraint constraint() const { return {space_group, assignments}; }

  std::string reduced_formula_text() const {
    // element order follows first appearance in the cell
    std::map<std::string, int> reduced = structure.reduced_formula();
    std::string out;
    std::vector<std::string> seen;
    for (const auto& el : structure.species)
      if (std::find(seen.begin(), seen.end(), el) == seen.end())
        seen.push_back(el);
    for (const auto& el : seen) {
      out += el;
      if (reduced.at(el) != 1)
        out += std::to_string(reduced.at(el));
    }
    return out;
  }
};

inline constexpr const char* kStructuresFormat = "structures.v1";
inline constexpr const char* kSplitFormat = "split.v1";

inline void save_structures(const std::string& path,
                            const std::vector<StructureRecord>& records) {
  std::ofstream out(path);
  if (!out)
    throw DataError("cannot write: " + path);
  out << nlohmann::json{{"format", kStructuresFormat}}.dump() << '\n';
  for (const StructureRecord& r : records) {
    nlohmann::json coords = nlohmann::json::array();
    for (const Vec3& x : r.structure.frac_coords)
      coords.push_back({x[0], x[1], x[2]});
    nlohmann::json lattice = nlohmann::json::array();
    for (const auto& row : r.structure.lattice.rows)
      lattice.push_back({row[0], row[1], row[2]});
    LatticeParameters p = parameters_from_matrix(r.structure.lattice);
    nlohmann::json assignments = nlohmann::json::array();
    for (const auto& [el, letter] : r.assignments)
      assignments.push_back({el, std::string(1, letter)});
    std::string letters;
    for (char c : r.structure.site_letters)
      letters += c;
    nlohmann::json j{
        {"id", r.id},
        {"species", r.structure.species},
        {"frac_coords", coords},
        {"lattice_matrix", lattice},
        {"lattice_params",
         {{"a", p.a}, {"b", p.b}, {"c", p.c},
          {"alpha", p.alpha}, {"beta", p.beta}, {"gamma", p.gamma}}},
        {"space_group", r.space_group.index},
        {"site_letters", letters},
        {"assignments", assignments},
        {"properties", r.properties},
    };
    if (r.request) {
      j["request"] = {{"counts", r.request->counts},
                      {"formula_mode", r.request->formula_mode}};
    }
    out << j.dump() << '\n';
  }
}

// Strict mode re-derives Wyckoff consistency through the projection round
// trip; the table may be null when strict is off.
inline std::vector<StructureRecord> load_structures(const std::string& path,
                                                    const WyckoffTable* table = nullptr,
                                                    bool strict = false) {
  if (strict && !table)
    throw ConfigError("strict loading needs the wyckoff table");
  std::ifstream in(path);
  if (!in)
    throw DataError("cannot open: " + path);
  std::vector<StructureRecord> records;
  std::string line;
  bool saw_header = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty())
      continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (j.contains("format")) {
      if (j.at("format").get<std::string>() != kStructuresFormat)
        throw DataError("unsupported structures format");
      saw_header = true;
      continue;
    }
    if (!saw_header)
      throw DataError(path + ": missing structures.v1 header line");
    StructureRecord r;
    try {
      r.id = j.at("id").get<std::string>();
      r.structure.species = j.at("species").get<std::vector<std::string>>();
      for (const auto& row : j.at("frac_coords")) {
        Vec3 x{row.at(0).get<double>(), row.at(1).get<double>(), row.at(2).get<double>()};
        r.structure.frac_coords.push_back(wrap01(x));  // 1.0 normalizes to 0.0
      }
      int rowi = 0;
      for (const auto& row : j.at("lattice_matrix")) {
        for (int c = 0; c < 3; ++c)
          r.structure.lattice.rows[rowi][c] = row.at(c).get<double>();
        ++rowi;
      }
      r.space_group = SpaceGroupId(j.at("space_group").get<int>());
      std::string letters = j.value("site_letters", std::string());
      for (char c : letters)
        r.structure.site_letters.push_back(c);
      for (const auto& a : j.at("assignments"))
        r.assignments.push_back({a.at(0).get<std::string>(),
                                 a.at(1).get<std::string>().at(0)});
      if (j.contains("properties"))
        r.properties = j.at("properties").get<std::map<std::string, double>>();
      if (j.contains("request")) {
        CompositionRequest req;
        req.counts = j.at("request").at("counts").get<std::map<std::string, int>>();
        req.formula_mode = j.at("request").at("formula_mode").get<bool>();
        r.request = std::move(req);
      }
      r.structure.properties = r.properties;
      r.structure.validate();
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (strict) {
      try {
        reduce_to_constraint_space(*table, r.structure, r.constraint(), 0.0);
      } catch (const Error& e) {
        throw DataError("record " + r.id + " fails strict validation: " + e.what());
      }
    }
    records.push_back(std::move(r));
  }
  return records;
}

struct FilterResult {
  std::vector<StructureRecord> kept;
  int dropped = 0;           // failed a filter rule
  int skipped_missing = 0;   // lacked energy_above_hull (non-strict mode)
};

// Keeps records with atom count < max_atoms and energy above hull
// <= max_e_hull (strict "<" and inclusive "<=" read from the filing rules).
inline FilterResult filter_corpus(const std::vector<StructureRecord>& records,
                                  int max_atoms = 20, double max_e_hull = 0.1,
                                  bool strict = false) {
  FilterResult out;
  for (const StructureRecord& r : records) {
    auto it = r.properties.find("energy_above_hull");
    if (it == r.properties.end()) {
      if (strict)
        throw DataError("record " + r.id + " lacks energy_above_hull");
      ++out.skipped_missing;
      continue;
    }
    if (int(r.structure.size()) < max_atoms && it->second <= max_e_hull)
      out.kept.push_back(r);
    else
      ++out.dropped;
  }
  return out;
}

struct DatasetSplit {
  std::uint64_t seed = 0;
  std::vector<std::string> train, validation, test;
};

// 80/10/10 by group count; the group key (reduced formula, space group)
// keeps identical crystals inside one subset.
inline DatasetSplit split_dataset(const std::vector<StructureRecord>& records,
                                  std::uint64_t seed) {
  if (records.empty())
    throw DataError("cannot split an empty dataset");
  std::map<std::string, std::vector<std::string>> groups;
  std::vector<std::string> order;
  for (const StructureRecord& r : records) {
    std::string key = r.reduced_formula_text() + "|" + std::to_string(r.space_group.index);
    if (!groups.count(key))
      order.push_back(key);
    groups[key].push_back(r.id);
  }
  std::sort(order.begin(), order.end());
  Rng rng(derive_seed(seed, "split"));
  for (std::size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[rng.below(i)]);

  const std::size_t n = order.size();
  std::size_t n_train = std::size_t(std::llround(0.8 * double(n)));
  std::size_t n_val = std::size_t(std::llround(0.1 * double(n)));
  if (n_train + n_val > n)
    n_val = n - n_train;

  DatasetSplit split;
  split.seed = seed;
  for (std::size_t i = 0; i < n; ++i) {
    auto& dst = i < n_train ? split.train
               : i < n_train + n_val ? split.validation
                                     : split.test;
    for (const std::string& id : groups[order[i]])
      dst.push_back(id);
  }
  return split;
}

inline void save_split(const std::string& path, const DatasetSplit& split) {
  nlohmann::json j{{"format", kSplitFormat},
                   {"seed", split.seed},
                   {"train", split.train},
                   {"validation", split.validation},
                   {"test", split.test}};
  std::ofstream out(path);
  if (!out)
    throw DataError("cannot write: " + path);
  out << j.dump() << '\n';
}

inline DatasetSplit load_split(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw DataError("cannot open: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  if (!j.contains("format") || j.at("format").get<std::string>() != kSplitFormat)
    throw DataError("unsupported split format");
  DatasetSplit split;
  split.seed = j.at("seed").get<std::uint64_t>();
  split.train = j.at("train").get<std::vector<std::string>>();
  split.validation = j.at("validation").get<std::vector<std::string>>();
  split.test = j.at("test").get<std::vector<std::string>>();
  return split;
}

// Minimal CIF: cell parameters, the space-group number, and the fractional
// coordinate loop. Byte-deterministic for equal inputs.
inline std::string export_cif(const StructureRecord& record) {
  record.structure.validate();
  LatticeParameters p = parameters_from_matrix(record.structure.lattice);
  char buf[256];
  std::string out = "data_" + record.id + "\n";
  auto tag = [&](const char* name, double value) {
    std::snprintf(buf, sizeof buf, "%s  %.6f\n", name, value);
    out += buf;
  };
  tag("_cell_length_a", p.a);
  tag("_cell_length_b", p.b);
  tag("_cell_length_c", p.c);
  tag("_cell_angle_alpha", p.alpha);
  tag("_cell_angle_beta", p.beta);
  tag("_cell_angle_gamma", p.gamma);
  out += "_symmetry_Int_Tables_number  " + std::to_string(record.space_group.index) + "\n";
  out += "loop_\n_atom_site_label\n_atom_site_type_symbol\n";
  out += "_atom_site_fract_x\n_atom_site_fract_y\n_atom_site_fract_z\n";
  std::map<std::string, int> counters;
  for (std::size_t i = 0; i < record.structure.size(); ++i) {
    const std::string& el = record.structure.species[i];
    const Vec3& x = record.structure.frac_coords[i];
    std::snprintf(buf, sizeof buf, "%s%d %s %.6f %.6f %.6f\n", el.c_str(),
                  ++counters[el], el.c_str(), x[0], x[1], x[2]);
    out += buf;
  }
  return out;
}

}  // namespace xtalgen

#endif  // XTALGEN_DATASET_HPP_
