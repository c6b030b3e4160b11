#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "xtalgen/dataset.hpp"

using namespace xtalgen;

static const WyckoffTable& table() {
  static WyckoffTable t =
      WyckoffTable::load(std::string(XTALGEN_SOURCE_DATA_DIR) + "/wyckoff_table.v1");
  return t;
}

static StructureRecord make_record(const std::string& id, int sg,
                                   const Assignments& assignments,
                                   const LatticeParameters& cell,
                                   const std::vector<Vec3>& params,
                                   std::map<std::string, double> props) {
  StructureRecord r;
  r.id = id;
  r.space_group = SpaceGroupId(sg);
  r.assignments = assignments;
  r.structure = realize_structure(table(), {r.space_group, assignments}, cell, params);
  r.properties = std::move(props);
  r.structure.properties = r.properties;
  return r;
}

static StructureRecord nacl_record(const std::string& id = "nacl",
                                   double e_hull = 0.0) {
  return make_record(id, 225, {{"Na", 'a'}, {"Cl", 'b'}}, {5.64, 5.64, 5.64, 90, 90, 90},
                     {{}, {}},
                     {{"band_gap", 5.9}, {"formation_energy", -2.1},
                      {"energy_above_hull", e_hull}});
}

TEST_CASE("structures round-trip through the v1 file") {
  std::vector<StructureRecord> records{
      nacl_record(),
      make_record("fe-p21m", 11, {{"Fe", 'e'}}, {4.0, 5.0, 6.0, 90, 100, 90},
                  {{{0.21, 0.0, 0.37}}},
                  {{"band_gap", 0.0}, {"energy_above_hull", 0.05}}),
  };
  const std::string path = "roundtrip_structures.jsonl";
  save_structures(path, records);
  std::vector<StructureRecord> loaded = load_structures(path, &table(), true);
  REQUIRE(loaded.size() == records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(loaded[i].id == records[i].id);
    CHECK(loaded[i].structure.species == records[i].structure.species);
    CHECK(loaded[i].space_group == records[i].space_group);
    CHECK(loaded[i].assignments == records[i].assignments);
    CHECK(loaded[i].properties == records[i].properties);
    CHECK(loaded[i].structure.site_letters == records[i].structure.site_letters);
    for (std::size_t s = 0; s < records[i].structure.size(); ++s)
      for (int c = 0; c < 3; ++c)
        CHECK(loaded[i].structure.frac_coords[s][c] ==
              doctest::Approx(records[i].structure.frac_coords[s][c]).epsilon(1e-12));
  }
  std::remove(path.c_str());
}

TEST_CASE("generation requests survive the record round trip") {
  StructureRecord r = nacl_record("with-request");
  CompositionRequest req;
  req.formula_mode = true;
  req.counts = {{"Na", 1}, {"Cl", 1}};
  r.request = req;
  const std::string path = "request_structures.jsonl";
  save_structures(path, {r});
  auto loaded = load_structures(path);
  REQUIRE(loaded.size() == 1);
  REQUIRE(loaded[0].request.has_value());
  CHECK(loaded[0].request->formula_mode);
  CHECK(loaded[0].request->counts == req.counts);
  std::remove(path.c_str());
}

TEST_CASE("loading normalizes coordinate 1.0 to 0.0") {
  const std::string path = "wrap_structures.jsonl";
  {
    std::ofstream out(path);
    out << R"({"format":"structures.v1"})" << "\n";
    out << R"({"id":"x","species":["H"],"frac_coords":[[1.0,0.25,0.5]],)"
        << R"("lattice_matrix":[[4,0,0],[0,4,0],[0,0,4]],"space_group":1,)"
        << R"("site_letters":"a","assignments":[["H","a"]],"properties":{}})" << "\n";
  }
  auto records = load_structures(path);
  REQUIRE(records.size() == 1);
  CHECK(records[0].structure.frac_coords[0][0] == 0.0);
  std::remove(path.c_str());
}

TEST_CASE("strict loading rejects letters that do not match the structure") {
  StructureRecord bad = nacl_record("bad-letters");
  bad.assignments = {{"Na", 'a'}, {"Cl", 'c'}};  // c exists but is not where Cl sits
  const std::string path = "strict_structures.jsonl";
  save_structures(path, {bad});
  CHECK_NOTHROW(load_structures(path));  // lax mode only checks shape
  try {
    load_structures(path, &table(), true);
    FAIL("expected strict validation to fail");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("bad-letters") != std::string::npos);
  }
  std::remove(path.c_str());
}

TEST_CASE("corpus filtering follows the atom-count and hull rules") {
  // 20 atoms with max_atoms=20 is excluded ("less than 20")
  StructureRecord big = make_record("big", 225, {{"Na", 'c'}, {"Cl", 'c'}, {"K", 'a'}},
                                    {6, 6, 6, 90, 90, 90}, {{}, {}, {}},
                                    {{"energy_above_hull", 0.0}});
  REQUIRE(big.structure.size() == 20);  // 8 + 8 + 4
  // e_hull exactly 0.1 is included ("within 0.1 eV")
  StructureRecord edge = nacl_record("edge", 0.1);
  StructureRecord high = nacl_record("high", 0.2);
  StructureRecord missing = nacl_record("missing");
  missing.properties.erase("energy_above_hull");

  FilterResult out = filter_corpus({big, edge, high, missing});
  REQUIRE(out.kept.size() == 1);
  CHECK(out.kept[0].id == "edge");
  CHECK(out.dropped == 2);
  CHECK(out.skipped_missing == 1);
  CHECK_THROWS_AS(filter_corpus({missing}, 20, 0.1, true), DataError);
  CHECK(filter_corpus({}).kept.empty());
}

TEST_CASE("split keeps group keys together and is deterministic") {
  // twenty distinct (formula, space group) keys, two records each
  std::vector<StructureRecord> records;
  const char* els[5] = {"Na", "K", "Rb", "Cs", "Li"};
  for (int g = 0; g < 20; ++g) {
    Assignments a{{els[g % 5], 'a'}, {g % 2 ? "Cl" : "Br", 'b'}};
    if (g >= 10)
      a.push_back({"O", 'c'});
    for (int copy = 0; copy < 2; ++copy)
      records.push_back(make_record("g" + std::to_string(g) + "-" + std::to_string(copy),
                                    225, a, {5.6, 5.6, 5.6, 90, 90, 90},
                                    std::vector<Vec3>(a.size(), Vec3{0, 0, 0}),
                                    {{"energy_above_hull", 0.0}}));
  }
  // dedupe group keys: how many distinct (formula, sg)?
  std::set<std::string> keys;
  for (const auto& r : records)
    keys.insert(r.reduced_formula_text());

  DatasetSplit s1 = split_dataset(records, 7);
  DatasetSplit s2 = split_dataset(records, 7);
  CHECK(s1.train == s2.train);
  CHECK(s1.validation == s2.validation);
  CHECK(s1.test == s2.test);

  // no id appears twice; groups stay together
  std::map<std::string, std::string> subset_of;
  auto note = [&](const std::vector<std::string>& ids, const std::string& name) {
    for (const auto& id : ids) {
      CHECK(subset_of.emplace(id, name).second);
    }
  };
  note(s1.train, "train");
  note(s1.validation, "validation");
  note(s1.test, "test");
  CHECK(subset_of.size() == records.size());
  for (const auto& r : records) {
    std::string base = r.id.substr(0, r.id.find('-'));
    CHECK(subset_of.at(base + "-0") == subset_of.at(base + "-1"));
  }

  // 80/10/10 by group count within one group
  double n = double(keys.size());
  auto groups_in = [&](const std::vector<std::string>& ids) { return ids.size() / 2.0; };
  CHECK(std::abs(groups_in(s1.train) - 0.8 * n) <= 1.0);
  CHECK(std::abs(groups_in(s1.validation) - 0.1 * n) <= 1.0);
  CHECK(std::abs(groups_in(s1.test) - 0.1 * n) <= 1.0);

  // split file round trip
  const std::string path = "split_test.json";
  save_split(path, s1);
  DatasetSplit loaded = load_split(path);
  CHECK(loaded.train == s1.train);
  CHECK(loaded.seed == 7);
  std::remove(path.c_str());
}

// independent minimal CIF reader used only by this test
static std::map<std::string, double> read_cif_numbers(const std::string& text) {
  std::map<std::string, double> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tag;
    double value;
    if ((ls >> tag >> value) && tag.rfind("_cell_", 0) == 0)
      out[tag] = value;
  }
  return out;
}

TEST_CASE("cif export is deterministic and re-importable") {
  StructureRecord r = make_record("cif-test", 11, {{"Fe", 'e'}},
                                  {4.123456789, 5.2, 6.3, 90, 100.5, 90},
                                  {{{0.21, 0.0, 0.37}}}, {});
  std::string cif1 = export_cif(r);
  std::string cif2 = export_cif(r);
  CHECK(cif1 == cif2);  // byte-identical
  CHECK(cif1.find("_cell_length_a") != std::string::npos);
  CHECK(cif1.find("_symmetry_Int_Tables_number  11") != std::string::npos);
  CHECK(cif1.find("_atom_site_fract_x") != std::string::npos);

  auto numbers = read_cif_numbers(cif1);
  LatticeParameters p = parameters_from_matrix(r.structure.lattice);
  CHECK(numbers.at("_cell_length_a") == doctest::Approx(p.a).epsilon(1e-6));
  CHECK(numbers.at("_cell_length_b") == doctest::Approx(p.b).epsilon(1e-6));
  CHECK(numbers.at("_cell_length_c") == doctest::Approx(p.c).epsilon(1e-6));
  CHECK(numbers.at("_cell_angle_beta") == doctest::Approx(p.beta).epsilon(1e-6));
}
