// Evaluation protocol: symmetry accuracy with order-invariant Wyckoff
// multisets and rare-label aggregation, property-error distributions,
// composition precision, and formation-energy / band-gap arithmetic.

#ifndef XTALGEN_METRICS_HPP_
#define XTALGEN_METRICS_HPP_

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "xtalgen/matcher.hpp"
#include "xtalgen/structure.hpp"

namespace xtalgen {

// Per-element multiset comparison of Wyckoff letters; generation order of
// letters within an element never affects equality.
inline bool wyckoff_multiset_equal(const Assignments& a, const Assignments& b) {
  std::map<std::string, std::vector<char>> ga, gb;
  for (const auto& [el, letter] : a)
    ga[el].push_back(letter);
  for (const auto& [el, letter] : b)
    gb[el].push_back(letter);
  if (ga.size() != gb.size())
    return false;
  for (auto& [el, letters] : ga) {
    auto it = gb.find(el);
    if (it == gb.end() || it->second.size() != letters.size())
      return false;
    std::sort(letters.begin(), letters.end());
    std::sort(it->second.begin(), it->second.end());
    if (letters != it->second)
      return false;
  }
  return true;
}

// Labels with fewer than `threshold` occurrences map to "other".
inline std::map<std::string, std::string> aggregate_rare_labels(
    const std::map<std::string, int>& counts, int threshold) {
  if (threshold < 0)
    throw ConfigError("aggregation threshold must be non-negative");
  std::map<std::string, std::string> mapping;
  for (const auto& [label, count] : counts)
    mapping[label] = count < threshold ? "other" : label;
  return mapping;
}

using ConfusionMatrix = std::map<std::string, std::map<std::string, int>>;

struct AccuracyReport {
  double space_group_accuracy = 0.0;  // percent
  double wyckoff_accuracy = 0.0;      // percent
  ConfusionMatrix space_group_confusion;  // rows gold, cols predicted
  ConfusionMatrix wyckoff_confusion;
};

struct SymmetryPrediction {
  int space_group = 1;
  Assignments assignments;
};

// Space-group accuracy by exact index equality; Wyckoff accuracy by
// per-element multiset equality. Confusion matrices are built after mapping
// rare gold labels (thresholds 500 / 50 by default) into "other"; assignment
// lists of unequal length are padded with "other".
inline AccuracyReport symmetry_accuracy(const std::vector<SymmetryPrediction>& pred,
                                        const std::vector<SymmetryPrediction>& gold,
                                        int sg_threshold = 500, int wy_threshold = 50) {
  if (pred.size() != gold.size())
    throw DataError("prediction/gold length mismatch");
  if (pred.empty())
    throw DataError("symmetry_accuracy needs at least one pair");

  AccuracyReport report;
  int sg_hits = 0, wy_hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i].space_group == gold[i].space_group)
      ++sg_hits;
    if (wyckoff_multiset_equal(pred[i].assignments, gold[i].assignments))
      ++wy_hits;
  }
  report.space_group_accuracy = 100.0 * sg_hits / double(pred.size());
  report.wyckoff_accuracy = 100.0 * wy_hits / double(pred.size());

  std::map<std::string, int> sg_counts;
  for (const auto& g : gold)
    ++sg_counts[std::to_string(g.space_group)];
  auto sg_map = aggregate_rare_labels(sg_counts, sg_threshold);
  auto sg_label = [&](int sg) {
    std::string s = std::to_string(sg);
    auto it = sg_map.find(s);
    return it == sg_map.end() ? std::string("other") : it->second;
  };
  for (std::size_t i = 0; i < pred.size(); ++i)
    ++report.space_group_confusion[sg_label(gold[i].space_group)]
                                  [sg_label(pred[i].space_group)];

  std::map<std::string, int> letter_counts;
  for (const auto& g : gold)
    for (const auto& [el, letter] : g.assignments)
      ++letter_counts[std::string(1, letter)];
  auto wy_map = aggregate_rare_labels(letter_counts, wy_threshold);
  auto wy_label = [&](char letter) {
    auto it = wy_map.find(std::string(1, letter));
    return it == wy_map.end() ? std::string("other") : it->second;
  };

  for (std::size_t i = 0; i < pred.size(); ++i) {
    // group letters per element on both sides
    std::map<std::string, std::vector<char>> gp, pp;
    for (const auto& [el, letter] : gold[i].assignments)
      gp[el].push_back(letter);
    for (const auto& [el, letter] : pred[i].assignments)
      pp[el].push_back(letter);
    for (auto& [el, gletters] : gp) {
      std::vector<char> pletters = pp.count(el) ? pp[el] : std::vector<char>{};
      std::vector<char> gs = gletters, ps = pletters;
      std::sort(gs.begin(), gs.end());
      std::sort(ps.begin(), ps.end());
      if (gs == ps) {
        // order-insensitive match: count every letter on the diagonal
        for (char l : gletters)
          ++report.wyckoff_confusion[wy_label(l)][wy_label(l)];
        continue;
      }
      std::size_t common = std::min(gletters.size(), pletters.size());
      for (std::size_t k = 0; k < common; ++k)
        ++report.wyckoff_confusion[wy_label(gletters[k])][wy_label(pletters[k])];
      for (std::size_t k = common; k < gletters.size(); ++k)
        ++report.wyckoff_confusion[wy_label(gletters[k])]["other"];
      for (std::size_t k = common; k < pletters.size(); ++k)
        ++report.wyckoff_confusion["other"][wy_label(pletters[k])];
    }
    // predicted elements absent from gold
    for (auto& [el, pletters] : pp)
      if (!gp.count(el))
        for (char l : pletters)
          ++report.wyckoff_confusion["other"][wy_label(l)];
  }
  return report;
}

struct ErrorDistribution {
  std::vector<double> bars{0.01, 0.05};
  std::vector<double> probabilities;  // percent per bar, non-decreasing
  std::optional<double> composition_precision;  // percent, filled by reports
};

inline ErrorDistribution property_error_distribution(const std::vector<double>& pred,
                                                     const std::vector<double>& target,
                                                     std::vector<double> bars = {0.01, 0.05}) {
  if (pred.size() != target.size())
    throw DataError("prediction/target length mismatch");
  if (pred.empty())
    throw DataError("property_error_distribution needs at least one pair");
  if (!std::is_sorted(bars.begin(), bars.end()))
    throw ConfigError("error bars must be sorted ascending");
  ErrorDistribution out;
  out.bars = bars;
  for (double b : bars) {
    int hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i)
      if (std::abs(pred[i] - target[i]) < b)
        ++hits;
    out.probabilities.push_back(100.0 * hits / double(pred.size()));
  }
  return out;
}

struct CompositionRequest {
  std::map<std::string, int> counts;  // counts are 1 in element mode
  bool formula_mode = false;
};

// Element mode compares element sets; formula mode compares gcd-reduced
// formulas (Na4Cl4 matches NaCl).
inline double composition_precision(const std::vector<CrystalStructure>& generated,
                                    const std::vector<CompositionRequest>& requested) {
  if (generated.size() != requested.size())
    throw DataError("generated/requested length mismatch");
  if (generated.empty())
    throw DataError("composition_precision needs at least one pair");
  int hits = 0;
  for (std::size_t i = 0; i < generated.size(); ++i) {
    const CompositionRequest& req = requested[i];
    if (req.formula_mode) {
      std::map<std::string, int> want = req.counts;
      int g = 0;
      for (const auto& [el, c] : want)
        g = std::gcd(g, c);
      if (g > 1)
        for (auto& [el, c] : want)
          c /= g;
      if (generated[i].reduced_formula() == want)
        ++hits;
    } else {
      std::map<std::string, int> have = generated[i].composition();
      bool ok = have.size() == req.counts.size();
      for (const auto& [el, c] : req.counts)
        ok = ok && have.count(el) > 0;
      if (ok)
        ++hits;
    }
  }
  return 100.0 * hits / double(generated.size());
}

// (E_total - sum counts_e * E(e)) / sum counts, in eV/atom
inline double formation_energy(double total_energy,
                               const std::map<std::string, double>& element_energies,
                               const std::map<std::string, int>& counts) {
  if (counts.empty())
    throw DataError("formation_energy needs at least one element");
  double reference = 0.0;
  long atoms = 0;
  for (const auto& [el, count] : counts) {
    if (count <= 0)
      throw DataError("element counts must be positive");
    auto it = element_energies.find(el);
    if (it == element_energies.end())
      throw DataError("missing elemental reference energy: " + el);
    reference += count * it->second;
    atoms += count;
  }
  return (total_energy - reference) / double(atoms);
}

// energy interval between valence band maximum and conduction band minimum,
// clamped at zero for metals
inline double band_gap(double vbm, double cbm) {
  if (!std::isfinite(vbm) || !std::isfinite(cbm))
    throw DataError("band edges must be finite");
  return std::max(0.0, cbm - vbm);
}

// versioned evaluation report
inline nlohmann::json evaluation_report_json(const MatchRateResult& match,
                                             const AccuracyReport& symmetry,
                                             const ErrorDistribution& errors,
                                             double composition_precision_percent) {
  nlohmann::json j;
  j["schema"] = "report.v1";
  j["match"]["rate_percent"] = match.rate_percent;
  if (match.mean_rmse)
    j["match"]["mean_rmse"] = *match.mean_rmse;
  else
    j["match"]["mean_rmse"] = nullptr;
  j["symmetry"]["space_group_accuracy"] = symmetry.space_group_accuracy;
  j["symmetry"]["wyckoff_accuracy"] = symmetry.wyckoff_accuracy;
  j["symmetry"]["space_group_confusion"] = symmetry.space_group_confusion;
  j["symmetry"]["wyckoff_confusion"] = symmetry.wyckoff_confusion;
  j["property_errors"]["bars"] = errors.bars;
  j["property_errors"]["probabilities"] = errors.probabilities;
  j["composition_precision"] = composition_precision_percent;
  return j;
}

}  // namespace xtalgen

#endif  // XTALGEN_METRICS_HPP_
