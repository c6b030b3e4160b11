// Instruction-tuning dataset emitter: one (instruction, input, output)
// record per structure and prompt mode, with gold answers in the canonical
// parseable grammar.

#ifndef XTALGEN_SFT_HPP_
#define XTALGEN_SFT_HPP_

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "xtalgen/constraints.hpp"
#include "xtalgen/dataset.hpp"

namespace xtalgen {

inline ConstraintRequest request_from_record(const StructureRecord& record) {
  ConstraintRequest req;
  req.formula_mode = true;
  req.composition = parse_formula(record.reduced_formula_text());
  for (const char* key : {"band_gap", "formation_energy"}) {
    auto it = record.properties.find(key);
    if (it != record.properties.end())
      req.properties.push_back({property_kind_from_name(key), it->second});
  }
  return req;
}

// Writes two JSONL records per structure (space-group mode, then Wyckoff
// mode) in input order.
inline void emit_instruction_dataset(const std::vector<StructureRecord>& records,
                                     const WyckoffTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out)
    throw DataError("cannot write: " + path);
  for (const StructureRecord& r : records) {
    ConstraintRequest req = request_from_record(r);
    RenderedPrompt sg_prompt = render_space_group_prompt(req);
    out << nlohmann::json{{"instruction", sg_prompt.instruction},
                          {"input", sg_prompt.input},
                          {"output", format_space_group_answer(r.space_group)}}
               .dump()
        << '\n';
    RenderedPrompt wy_prompt = render_wyckoff_prompt(req, r.space_group, table);
    out << nlohmann::json{{"instruction", wy_prompt.instruction},
                          {"input", wy_prompt.input},
                          {"output", format_wyckoff_answer(r.assignments, table,
                                                           r.space_group)}}
               .dump()
        << '\n';
  }
}

}  // namespace xtalgen

#endif  // XTALGEN_SFT_HPP_
