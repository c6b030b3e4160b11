// Constraint generation text layer: requests, prompt templates with
// placeholder binding, property standardization, and the response parsers
// for the two-stage space-group / Wyckoff pipeline.

#ifndef XTALGEN_CONSTRAINTS_HPP_
#define XTALGEN_CONSTRAINTS_HPP_

#include <cctype>
#include <cstdio>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "xtalgen/denoiser.hpp"
#include "xtalgen/structure.hpp"
#include "xtalgen/symops.hpp"
#include "xtalgen/wyckoff.hpp"

namespace xtalgen {

// Composition plus property targets; composition order is preserved as
// written (NaCl stays Na before Cl).
struct ConstraintRequest {
  std::vector<std::pair<std::string, int>> composition;  // counts ignored in element mode
  bool formula_mode = false;
  std::vector<PropertyTarget> properties;

  void validate() const {
    if (composition.empty())
      throw DataError("request needs at least one element");
    std::set<std::string> seen;
    for (const auto& [el, count] : composition) {
      if (!is_known_element(el))
        throw DataError("unknown element in request: " + el);
      if (count < 1)
        throw DataError("formula counts must be positive integers");
      if (!seen.insert(el).second)
        throw DataError("duplicate element in request: " + el);
    }
    std::set<PropertyKind> kinds;
    for (const auto& p : properties) {
      if (!std::isfinite(p.value))
        throw DataError("property targets must be finite");
      if (!kinds.insert(p.kind).second)
        throw DataError("at most one target per property kind");
    }
  }

  std::string composition_text() const {
    std::string out;
    if (formula_mode) {
      for (const auto& [el, count] : composition) {
        out += el;
        if (count != 1)
          out += std::to_string(count);
      }
    } else {
      for (const auto& [el, count] : composition) {
        if (!out.empty())
          out += ", ";
        out += el;
      }
    }
    return out;
  }
};

// parses "Na4Cl4" / "TiO2" style formulas into ordered (element, count)
inline std::vector<std::pair<std::string, int>> parse_formula(const std::string& text) {
  std::vector<std::pair<std::string, int>> out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!std::isupper(static_cast<unsigned char>(text[i])))
      throw DataError("bad formula near '" + text.substr(i) + "'");
    std::string el(1, text[i++]);
    while (i < text.size() && std::islower(static_cast<unsigned char>(text[i])))
      el += text[i++];
    int count = 0;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])))
      count = count * 10 + (text[i++] - '0');
    if (count == 0)
      count = 1;
    out.push_back({el, count});
  }
  if (out.empty())
    throw DataError("empty formula");
  return out;
}

// Three decimal places with the unit picked by property kind.
inline std::string standardize_property(PropertyKind kind, double value) {
  if (!std::isfinite(value))
    throw DataError("property value must be finite");
  double r = std::round(value * 1000.0) / 1000.0 + 0.0;  // half away from zero
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f %s", r, property_unit(kind));
  return buf;
}

inline std::string standardized_properties_text(const std::vector<PropertyTarget>& props) {
  std::string out;
  for (const auto& p : props) {
    if (!out.empty())
      out += "; ";
    out += std::string(property_kind_name(p.kind) == std::string("band_gap")
                           ? "band gap"
                           : "formation energy") +
           ": " + standardize_property(p.kind, p.value);
  }
  return out.empty() ? "none" : out;
}

enum class PromptMode { SpaceGroup, Wyckoff };

struct PromptTemplate {
  std::string instruction;
  std::string input;
  PromptMode mode = PromptMode::SpaceGroup;

  static PromptTemplate space_group_default() {
    PromptTemplate t;
    t.mode = PromptMode::SpaceGroup;
    t.instruction =
        "You are an expert in crystallography and materials science. Given the "
        "chemical composition and the target material properties, determine the "
        "most suitable space group for the crystal structure. Valid space group "
        "types should range from 0 to 230. Answer in the form \"space group: "
        "<number>\".";
    t.input = "composition: {composition}\nproperties: {properties}";
    return t;
  }

  static PromptTemplate wyckoff_default() {
    PromptTemplate t;
    t.mode = PromptMode::Wyckoff;
    t.instruction =
        "You are an expert in crystallography and materials science. The crystal "
        "belongs to space group {space_group}. Given the candidate Wyckoff "
        "letters, choose the most suitable Wyckoff positions for each atom so "
        "that the structure satisfies the target properties. Answer with one "
        "token per atom in the form Element[<multiplicity><letter>], separated "
        "by spaces.";
    t.input =
        "composition: {composition}\nproperties: {properties}\nspace group: "
        "{space_group}\ncandidate wyckoff letters: {candidates}";
    return t;
  }
};

namespace detail {
inline std::string substitute(std::string text,
                              const std::vector<std::pair<std::string, std::string>>& binds) {
  for (const auto& [key, value] : binds) {
    std::string token = "{" + key + "}";
    std::size_t pos;
    while ((pos = text.find(token)) != std::string::npos)
      text.replace(pos, token.size(), value);
  }
  std::size_t open = text.find('{');
  if (open != std::string::npos) {
    std::size_t close = text.find('}', open);
    if (close != std::string::npos)
      throw ConfigError("unbound template placeholder: " +
                        text.substr(open, close - open + 1));
  }
  return text;
}
}  // namespace detail

struct RenderedPrompt {
  std::string instruction;
  std::string input;

  std::string text() const {
    return "### Instruction:\n" + instruction + "\n\n### Input:\n" + input + "\n";
  }
};

inline RenderedPrompt render_space_group_prompt(const ConstraintRequest& req,
                                                const PromptTemplate& tpl =
                                                    PromptTemplate::space_group_default()) {
  req.validate();
  if (tpl.mode != PromptMode::SpaceGroup)
    throw ConfigError("template mode mismatch: expected a space-group template");
  std::vector<std::pair<std::string, std::string>> binds{
      {"composition", req.composition_text()},
      {"properties", standardized_properties_text(req.properties)},
  };
  return {detail::substitute(tpl.instruction, binds), detail::substitute(tpl.input, binds)};
}

inline RenderedPrompt render_wyckoff_prompt(const ConstraintRequest& req, SpaceGroupId sg,
                                            const WyckoffTable& table,
                                            const PromptTemplate& tpl =
                                                PromptTemplate::wyckoff_default()) {
  req.validate();
  if (tpl.mode != PromptMode::Wyckoff)
    throw ConfigError("template mode mismatch: expected a wyckoff template");
  std::string candidates;
  for (const WyckoffPosition& p : table.positions(sg)) {
    if (!candidates.empty())
      candidates += ", ";
    candidates += std::to_string(p.multiplicity);
    candidates += p.letter;
  }
  // both forms of the group identifier: index and Hermann-Mauguin symbol
  std::string sg_text = std::to_string(sg.index) + " (" + spacegroup_entry(sg.index).hm + ")";
  std::vector<std::pair<std::string, std::string>> binds{
      {"composition", req.composition_text()},
      {"properties", standardized_properties_text(req.properties)},
      {"space_group", sg_text},
      {"candidates", candidates},
  };
  return {detail::substitute(tpl.instruction, binds), detail::substitute(tpl.input, binds)};
}

// Extracts the space group index from a backend answer. Prefers the integer
// anchored to a "space group" mention, then falls back to the first integer
// token in range; anything else is a parse error.
inline SpaceGroupId parse_space_group_response(const std::string& text) {
  auto scan_from = [&](std::size_t start, bool anchored) -> int {
    for (std::size_t i = start; i < text.size(); ++i) {
      if (std::isdigit(static_cast<unsigned char>(text[i]))) {
        long v = 0;
        std::size_t j = i;
        while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) {
          v = v * 10 + (text[j] - '0');
          if (v > 100000) break;
          ++j;
        }
        if (v >= 1 && v <= 230)
          return int(v);
        if (anchored)
          return -1;  // anchored scan only considers the first token
        i = j;
      }
    }
    return -1;
  };
  // tolerate case differences in the anchor
  std::string lower = text;
  for (char& c : lower)
    c = char(std::tolower(static_cast<unsigned char>(c)));
  std::size_t anchor = lower.find("space group");
  if (anchor != std::string::npos) {
    int v = scan_from(anchor + 11, true);
    if (v > 0)
      return SpaceGroupId(v);
  }
  int v = scan_from(0, false);
  if (v > 0)
    return SpaceGroupId(v);
  throw ParseError("no valid space group index in response: '" + text + "'");
}

// Parses "El[<mult><letter>]" tokens in order, validating the letter against
// the group's candidates, the multiplicity against the table, and the
// element against the request.
inline Assignments parse_wyckoff_response(const std::string& text,
                                          const std::vector<std::string>& request_elements,
                                          const WyckoffTable& table, SpaceGroupId sg) {
  Assignments out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!std::isupper(static_cast<unsigned char>(text[i]))) {
      ++i;
      continue;
    }
    std::string el(1, text[i++]);
    while (i < text.size() && std::islower(static_cast<unsigned char>(text[i])))
      el += text[i++];
    if (i >= text.size() || text[i] != '[')
      continue;  // prose word, not a token
    ++i;
    long mult = 0;
    bool has_mult = false;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
      mult = mult * 10 + (text[i++] - '0');
      has_mult = true;
    }
    if (i >= text.size() || !std::isalpha(static_cast<unsigned char>(text[i])))
      throw ParseError("malformed wyckoff token near '" + el + "['");
    char letter = text[i++];
    if (i >= text.size() || text[i] != ']')
      throw ParseError("unterminated wyckoff token for element " + el);
    ++i;

    if (std::find(request_elements.begin(), request_elements.end(), el) ==
        request_elements.end())
      throw ParseError("element " + el + " is not part of the request");
    if (!table.has_letter(sg, letter))
      throw ParseError(std::string("letter '") + letter +
                       "' is not a candidate for space group " + std::to_string(sg.index));
    const WyckoffPosition& pos = table.position(sg, letter);
    if (!has_mult || mult != pos.multiplicity)
      throw ParseError("multiplicity mismatch for token " + el + "[" +
                       std::to_string(mult) + letter + "]");
    out.push_back({el, letter});
  }
  if (out.empty())
    throw ParseError("no wyckoff tokens in response: '" + text + "'");
  return out;
}

// Formats a gold answer in the canonical parseable grammar.
inline std::string format_space_group_answer(SpaceGroupId sg) {
  return "space group: " + std::to_string(sg.index);
}

inline std::string format_wyckoff_answer(const Assignments& assignments,
                                         const WyckoffTable& table, SpaceGroupId sg) {
  std::string out;
  for (const auto& [el, letter] : assignments) {
    if (!out.empty())
      out += ' ';
    out += el + "[" + std::to_string(table.position(sg, letter).multiplicity) + letter + "]";
  }
  return out;
}

}  // namespace xtalgen

#endif  // XTALGEN_CONSTRAINTS_HPP_
