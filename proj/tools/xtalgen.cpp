// Batch pipeline driver: ingest -> split -> emit-sft -> train -> generate ->
// evaluate, one subcommand per stage with file handoffs. All randomness
// derives from --seed keyed by the stage name. Exit codes: 0 success,
// 1 usage, 2 data error, 3 backend error.

#include <cstdio>
#include <filesystem>
#include <memory>
#include <set>

#include <CLI11.hpp>

#include "xtalgen/backend.hpp"
#include "xtalgen/checkpoint.hpp"
#include "xtalgen/dataset.hpp"
#include "xtalgen/metrics.hpp"
#include "xtalgen/sample.hpp"
#include "xtalgen/sft.hpp"
#include "xtalgen/train.hpp"

using namespace xtalgen;

namespace {

std::string default_table_path() {
  if (const char* env = std::getenv("XTALGEN_DATA_DIR"))
    return std::string(env) + "/wyckoff_table.v1";
  return std::string(XTALGEN_SOURCE_DATA_DIR) + "/wyckoff_table.v1";
}

// Writes through a temp file so failed stages leave no partial artifact.
class ArtifactWriter {
 public:
  explicit ArtifactWriter(std::string path) : path_(std::move(path)), tmp_(path_ + ".tmp") {}
  ~ArtifactWriter() {
    if (!committed_)
      std::remove(tmp_.c_str());
  }
  const std::string& staging_path() const { return tmp_; }
  void commit() {
    std::filesystem::rename(tmp_, path_);
    committed_ = true;
  }

 private:
  std::string path_, tmp_;
  bool committed_ = false;
};

std::vector<StructureRecord> load_subset(const std::string& input,
                                         const std::string& split_path,
                                         const std::string& subset,
                                         const WyckoffTable* table, bool strict) {
  std::vector<StructureRecord> records = load_structures(input, table, strict);
  if (split_path.empty())
    return records;
  DatasetSplit split = load_split(split_path);
  const std::vector<std::string>* ids = subset == "train"        ? &split.train
                                        : subset == "validation" ? &split.validation
                                        : subset == "test"       ? &split.test
                                                                 : nullptr;
  if (!ids)
    throw ConfigError("unknown subset: " + subset);
  std::set<std::string> keep(ids->begin(), ids->end());
  std::vector<StructureRecord> out;
  for (auto& r : records)
    if (keep.count(r.id))
      out.push_back(std::move(r));
  return out;
}

int run_ingest(const std::string& input, const std::string& output,
               const std::string& table_path, int max_atoms, double max_e_hull,
               bool strict) {
  WyckoffTable table = WyckoffTable::load(table_path);
  std::vector<StructureRecord> records = load_structures(input, &table, strict);
  FilterResult filtered = filter_corpus(records, max_atoms, max_e_hull, strict);
  ArtifactWriter out(output);
  save_structures(out.staging_path(), filtered.kept);
  out.commit();
  std::printf("kept=%zu dropped=%d skipped=%d\n", filtered.kept.size(), filtered.dropped,
              filtered.skipped_missing);
  return 0;
}

int run_split(const std::string& input, const std::string& output, std::uint64_t seed) {
  std::vector<StructureRecord> records = load_structures(input);
  DatasetSplit split = split_dataset(records, derive_seed(seed, "split"));
  split.seed = seed;  // record the user-facing seed
  ArtifactWriter out(output);
  save_split(out.staging_path(), split);
  out.commit();
  std::printf("split sizes: train=%zu validation=%zu test=%zu\n", split.train.size(),
              split.validation.size(), split.test.size());
  return 0;
}

int run_emit_sft(const std::string& input, const std::string& output,
                 const std::string& table_path, const std::string& split_path,
                 const std::string& subset) {
  WyckoffTable table = WyckoffTable::load(table_path);
  std::vector<StructureRecord> records =
      load_subset(input, split_path, subset, &table, false);
  ArtifactWriter out(output);
  emit_instruction_dataset(records, table, out.staging_path());
  out.commit();
  std::printf("emitted %zu instruction records\n", records.size() * 2);
  return 0;
}

int run_train(const std::string& input, const std::string& output,
              const std::string& table_path, const std::string& split_path,
              const std::string& subset, const std::string& property_name,
              const std::string& profile, int epochs, int timesteps,
              std::uint64_t seed) {
  WyckoffTable table = WyckoffTable::load(table_path);
  std::vector<StructureRecord> records =
      load_subset(input, split_path, subset, &table, false);
  if (records.empty())
    throw DataError("no training records selected");

  PropertyKind kind = property_kind_from_name(property_name);
  std::vector<TrainRecord> dataset;
  std::string missing;
  double lo = 1e300, hi = -1e300;
  for (const StructureRecord& r : records) {
    auto it = r.properties.find(property_name);
    if (it == r.properties.end()) {
      missing += missing.empty() ? "" : ", ";
      missing += r.id;
      continue;
    }
    lo = std::min(lo, it->second);
    hi = std::max(hi, it->second);
    dataset.push_back({r.id, r.structure, r.constraint(), it->second});
  }
  if (!missing.empty())
    throw DataError("records lack the configured property: " + missing);

  DenoiserConfig config = profile == "paper" ? DenoiserConfig{} : DenoiserConfig::tiny();
  config.property_kind = kind;
  config.grid = PropertyGrid::from_range(lo, hi, profile == "paper" ? 128 : 16);

  NoiseSchedule schedule = NoiseSchedule::make(timesteps);
  TrainConfig tc;
  tc.epochs = epochs;
  tc.seed = derive_seed(seed, "train");
  TrainResult result = train(table, dataset, config, schedule, tc);

  ArtifactWriter out(output);
  save_checkpoint(out.staging_path(), result.params, schedule);
  out.commit();
  std::printf("trained %d epochs on %zu records; loss %.6f -> %.6f\n", epochs,
              dataset.size(), result.loss_trace.front(), result.loss_trace.back());
  return 0;
}

int run_generate(const std::string& checkpoint_path, const std::string& output,
                 const std::string& table_path, const std::string& backend_kind,
                 const std::string& base_url, const std::string& model_name,
                 const std::string& auth_env, const std::string& formula,
                 const std::string& elements, double band_gap_target,
                 bool has_band_gap, double formation_target, bool has_formation,
                 int n, std::uint64_t seed, int retries, double timeout) {
  WyckoffTable table = WyckoffTable::load(table_path);
  Checkpoint ck = load_checkpoint(checkpoint_path);

  ConstraintRequest request;
  if (!formula.empty() && !elements.empty())
    throw ConfigError("give either --formula or --elements, not both");
  if (!formula.empty()) {
    request.formula_mode = true;
    request.composition = parse_formula(formula);
  } else if (!elements.empty()) {
    request.formula_mode = false;
    std::size_t start = 0;
    while (start < elements.size()) {
      std::size_t comma = elements.find(',', start);
      std::string el =
          elements.substr(start, comma == std::string::npos ? comma : comma - start);
      if (!el.empty())
        request.composition.push_back({el, 1});
      if (comma == std::string::npos)
        break;
      start = comma + 1;
    }
  } else {
    throw ConfigError("one of --formula or --elements is required");
  }
  if (has_band_gap)
    request.properties.push_back({PropertyKind::BandGap, band_gap_target});
  if (has_formation)
    request.properties.push_back({PropertyKind::FormationEnergy, formation_target});
  request.validate();

  PropertyTarget target{ck.params.config.property_kind, 0.0};
  bool found = false;
  for (const PropertyTarget& p : request.properties)
    if (p.kind == ck.params.config.property_kind) {
      target = p;
      found = true;
    }
  if (!found)
    throw ConfigError(std::string("the checkpoint predicts ") +
                      property_kind_name(ck.params.config.property_kind) +
                      "; pass the matching target flag");

  BackendConfig bconfig;
  bconfig.base_url = base_url;
  bconfig.model = model_name;
  bconfig.auth_env_var = auth_env;
  bconfig.max_retries = retries;
  bconfig.timeout_seconds = timeout;

  std::vector<StructureRecord> samples;
  for (int i = 0; i < n; ++i) {
    std::uint64_t sample_seed = derive_seed(seed, "generate-" + std::to_string(i));
    std::unique_ptr<Backend> backend;
    if (backend_kind == "mock")
      backend = std::make_unique<MockBackend>(table, sample_seed);
    else if (backend_kind == "http")
      backend = std::make_unique<HttpBackend>(bconfig);
    else
      throw ConfigError("unknown backend: " + backend_kind);

    ConstraintResult constraints = generate_constraints(table, request, *backend, bconfig);
    SymmetryConstraint constraint{constraints.space_group, constraints.assignments};
    Rng rng(derive_seed(sample_seed, "diffusion"));
    CrystalStructure structure =
        sample_structure(table, ck.params, ck.schedule, constraint, target, rng);

    StructureRecord record;
    char idbuf[32];
    std::snprintf(idbuf, sizeof idbuf, "sample-%04d", i);
    record.id = idbuf;
    record.structure = std::move(structure);
    record.space_group = constraints.space_group;
    record.assignments = constraints.assignments;
    record.properties = record.structure.properties;
    CompositionRequest creq;
    creq.formula_mode = request.formula_mode;
    for (const auto& [el, count] : request.composition)
      creq.counts[el] = count;
    record.request = creq;
    samples.push_back(std::move(record));
  }

  ArtifactWriter out(output);
  save_structures(out.staging_path(), samples);
  out.commit();
  std::printf("generated %zu structures\n", samples.size());
  return 0;
}

int run_evaluate(const std::string& generated_path, const std::string& reference_path,
                 const std::string& output, const std::string& property_name,
                 double ltol, double stol, double angle_tol) {
  std::vector<StructureRecord> generated = load_structures(generated_path);
  std::vector<StructureRecord> reference = load_structures(reference_path);
  if (generated.empty() || reference.empty())
    throw DataError("evaluation needs non-empty generated and reference sets");

  MatchSettings settings{ltol, stol, angle_tol};

  // pair each sample with its reference: by index when sizes agree,
  // otherwise with the first reference of equal composition
  std::vector<int> pair_of(generated.size(), -1);
  if (generated.size() == reference.size()) {
    for (std::size_t i = 0; i < generated.size(); ++i)
      pair_of[i] = int(i);
  } else {
    for (std::size_t i = 0; i < generated.size(); ++i)
      for (std::size_t j = 0; j < reference.size(); ++j)
        if (generated[i].structure.composition() == reference[j].structure.composition()) {
          pair_of[i] = int(j);
          break;
        }
  }

  std::vector<MatchReport> reports;
  std::vector<SymmetryPrediction> pred, gold;
  std::vector<double> pred_prop, target_prop;
  for (std::size_t i = 0; i < generated.size(); ++i) {
    if (pair_of[i] < 0) {
      reports.push_back({});
      continue;
    }
    const StructureRecord& ref = reference[pair_of[i]];
    reports.push_back(match_structures(generated[i].structure, ref.structure, settings));
    pred.push_back({generated[i].space_group.index, generated[i].assignments});
    gold.push_back({ref.space_group.index, ref.assignments});
    auto pit = generated[i].properties.find(property_name);
    auto tit = ref.properties.find(property_name);
    if (pit != generated[i].properties.end() && tit != ref.properties.end()) {
      pred_prop.push_back(pit->second);
      target_prop.push_back(tit->second);
    }
  }

  MatchRateResult mr = match_rate(reports);
  AccuracyReport acc = pred.empty() ? AccuracyReport{} : symmetry_accuracy(pred, gold);
  ErrorDistribution dist;
  if (!pred_prop.empty())
    dist = property_error_distribution(pred_prop, target_prop);

  std::vector<CompositionRequest> requests;
  std::vector<CrystalStructure> structures;
  for (const StructureRecord& g : generated) {
    structures.push_back(g.structure);
    if (g.request) {
      requests.push_back(*g.request);
    } else {
      CompositionRequest self;
      self.formula_mode = true;
      self.counts = g.structure.reduced_formula();
      requests.push_back(self);
    }
  }
  double comp = composition_precision(structures, requests);

  nlohmann::json report = evaluation_report_json(mr, acc, dist, comp);
  ArtifactWriter out(output);
  {
    std::ofstream f(out.staging_path());
    if (!f)
      throw DataError("cannot write: " + output);
    f << report.dump(2) << '\n';
  }
  out.commit();

  // plain-text bar table
  std::printf("%-28s", "property error bars");
  for (double b : dist.bars)
    std::printf("  < %-6.2f", b);
  std::printf("  Comp.(%%)\n");
  std::printf("%-28s", property_name.c_str());
  if (dist.probabilities.empty())
    std::printf("  %-8s  %-8s", "-", "-");
  else
    for (double p : dist.probabilities)
      std::printf("  %-8.2f", p);
  std::printf("  %.2f\n", comp);
  std::printf("match rate: %.2f%%", mr.rate_percent);
  if (mr.mean_rmse)
    std::printf("  mean rmse: %.4f", *mr.mean_rmse);
  std::printf("\nspace group accuracy: %.2f%%  wyckoff accuracy: %.2f%%\n",
              acc.space_group_accuracy, acc.wyckoff_accuracy);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"symmetry-constrained crystal structure generation pipeline"};
  app.set_config("--config");
  app.require_subcommand(1);

  std::string table_path = default_table_path();
  app.add_option("--wyckoff-table", table_path, "path to wyckoff_table.v1");

  auto* ingest = app.add_subcommand("ingest", "filter a raw corpus into structures.v1");
  std::string in_input, in_output;
  int in_max_atoms = 20;
  double in_max_hull = 0.1;
  bool in_strict = false;
  ingest->add_option("--input", in_input)->required();
  ingest->add_option("--output", in_output)->required();
  ingest->add_option("--max-atoms", in_max_atoms, "keep cells with fewer atoms than this");
  ingest->add_option("--max-e-hull", in_max_hull, "energy above hull cutoff (eV/atom)");
  ingest->add_flag("--strict", in_strict, "re-derive Wyckoff consistency on load");

  auto* split = app.add_subcommand("split", "write a leak-free 80/10/10 split");
  std::string sp_input, sp_output;
  std::uint64_t sp_seed = 0;
  split->add_option("--input", sp_input)->required();
  split->add_option("--output", sp_output)->required();
  split->add_option("--seed", sp_seed);

  auto* sft = app.add_subcommand("emit-sft", "emit the instruction-tuning dataset");
  std::string sf_input, sf_output, sf_split, sf_subset = "train";
  sft->add_option("--input", sf_input)->required();
  sft->add_option("--output", sf_output)->required();
  sft->add_option("--split", sf_split, "optional split.v1 file");
  sft->add_option("--subset", sf_subset, "train|validation|test");

  auto* tr = app.add_subcommand("train", "train the denoiser");
  std::string tr_input, tr_output, tr_split, tr_subset = "train";
  std::string tr_property = "band_gap", tr_profile = "paper";
  int tr_epochs = 500, tr_timesteps = 1000;
  std::uint64_t tr_seed = 0;
  tr->add_option("--input", tr_input)->required();
  tr->add_option("--output", tr_output)->required();
  tr->add_option("--split", tr_split);
  tr->add_option("--subset", tr_subset);
  tr->add_option("--property", tr_property, "band_gap|formation_energy");
  tr->add_option("--profile", tr_profile, "paper|tiny");
  tr->add_option("--epochs", tr_epochs);
  tr->add_option("--timesteps", tr_timesteps);
  tr->add_option("--seed", tr_seed);

  auto* gen = app.add_subcommand("generate", "generate constrained structures");
  std::string ge_ckpt, ge_output, ge_backend = "mock", ge_base_url, ge_model = "default";
  std::string ge_auth_env, ge_formula, ge_elements;
  double ge_band_gap = 0, ge_formation = 0, ge_timeout = 30;
  int ge_n = 1, ge_retries = 3;
  std::uint64_t ge_seed = 0;
  gen->add_option("--checkpoint", ge_ckpt)->required();
  gen->add_option("--output", ge_output)->required();
  gen->add_option("--backend", ge_backend, "mock|http");
  gen->add_option("--base-url", ge_base_url, "http backend endpoint");
  gen->add_option("--model-name", ge_model);
  gen->add_option("--auth-env", ge_auth_env, "env var holding the bearer token");
  gen->add_option("--timeout", ge_timeout, "http timeout seconds");
  gen->add_option("--formula", ge_formula);
  gen->add_option("--elements", ge_elements, "comma-separated element symbols");
  auto* bg = gen->add_option("--band-gap", ge_band_gap, "target band gap (eV)");
  auto* fe = gen->add_option("--formation-energy", ge_formation,
                             "target formation energy (eV/atom)");
  gen->add_option("--n", ge_n, "number of structures");
  gen->add_option("--seed", ge_seed);
  gen->add_option("--retries", ge_retries, "backend parse retries per stage");

  auto* ev = app.add_subcommand("evaluate", "evaluate generated structures");
  std::string ev_generated, ev_reference, ev_output, ev_property = "band_gap";
  double ev_ltol = 0.3, ev_stol = 0.5, ev_angle = 10.0;
  ev->add_option("--generated", ev_generated)->required();
  ev->add_option("--reference", ev_reference)->required();
  ev->add_option("--output", ev_output)->required();
  ev->add_option("--property", ev_property);
  ev->add_option("--ltol", ev_ltol);
  ev->add_option("--stol", ev_stol);
  ev->add_option("--angle-tol", ev_angle);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (ingest->parsed())
      return run_ingest(in_input, in_output, table_path, in_max_atoms, in_max_hull,
                        in_strict);
    if (split->parsed())
      return run_split(sp_input, sp_output, sp_seed);
    if (sft->parsed())
      return run_emit_sft(sf_input, sf_output, table_path, sf_split, sf_subset);
    if (tr->parsed())
      return run_train(tr_input, tr_output, table_path, tr_split, tr_subset, tr_property,
                       tr_profile, tr_epochs, tr_timesteps, tr_seed);
    if (gen->parsed())
      return run_generate(ge_ckpt, ge_output, table_path, ge_backend, ge_base_url,
                          ge_model, ge_auth_env, ge_formula, ge_elements, ge_band_gap,
                          bg->count() > 0, ge_formation, fe->count() > 0, ge_n, ge_seed,
                          ge_retries, ge_timeout);
    if (ev->parsed())
      return run_evaluate(ev_generated, ev_reference, ev_output, ev_property, ev_ltol,
                          ev_stol, ev_angle);
  } catch (const TransportError& e) {
    std::fprintf(stderr, "backend error: %s\n", e.what());
    return 3;
  } catch (const BackendError& e) {
    std::fprintf(stderr, "backend error: %s\n", e.what());
    return 3;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}
