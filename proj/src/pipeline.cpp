#include "pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "evaluation.hpp"
#include "io_util.hpp"

namespace cw {

namespace {

using json = nlohmann::json;

const char* kDefaultConfig = R"({
  "language": "en",
  "splits": {},
  "extractor": {"kind": "rule"},
  "ne_filter": "off",
  "provider": {"kind": "stub", "seed": 42},
  "model": {"hidden": 256, "init_scale": 1.0},
  "train": {
    "epochs": 5,
    "batch_size": 32,
    "learning_rate": 0.001,
    "optimizer": "adam",
    "seed": 1,
    "selection_split": "dev",
    "threshold": 0.5
  },
  "eval_split": "devtest",
  "predict_split": "test",
  "run_id": "run1",
  "ig_steps": 512
})";

void merge_defaults(json& doc, const json& defaults) {
  for (auto it = defaults.begin(); it != defaults.end(); ++it) {
    if (!doc.contains(it.key())) {
      doc[it.key()] = it.value();
    } else if (doc[it.key()].is_object() && it.value().is_object()) {
      merge_defaults(doc[it.key()], it.value());
    }
  }
}

// Applies one "a.b.c=value" override. Values parse as JSON when they can and
// fall back to plain strings, so --set train.epochs=3 yields a number and
// --set splits.train=data/train.tsv a string.
void apply_override(json& doc, const std::string& spec) {
  const std::size_t eq = spec.find('=');
  if (eq == std::string::npos || eq == 0) {
    raise(ErrorKind::Config, "override \"" + spec + "\" is not of the form key=value");
  }
  const std::string path = spec.substr(0, eq);
  const std::string value_text = spec.substr(eq + 1);

  json value;
  try {
    value = json::parse(value_text);
  } catch (const json::exception&) {
    value = value_text;
  }

  json* node = &doc;
  std::size_t start = 0;
  for (;;) {
    const std::size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot - start);
    if (key.empty()) raise(ErrorKind::Config, "override \"" + spec + "\" has an empty key");
    if (dot == std::string::npos) {
      (*node)[key] = std::move(value);
      return;
    }
    if (!node->contains(key) || !(*node)[key].is_object()) (*node)[key] = json::object();
    node = &(*node)[key];
    start = dot + 1;
  }
}

template <typename T>
T require(const json& doc, const std::string& key, const char* context) {
  if (!doc.contains(key)) {
    raise(ErrorKind::Config, std::string(context) + ": missing required field \"" + key + "\"");
  }
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception& e) {
    raise(ErrorKind::Config, std::string(context) + ": bad value for \"" + key + "\": " + e.what());
  }
}

PipelineConfig parse_config(json doc) {
  merge_defaults(doc, json::parse(kDefaultConfig));

  PipelineConfig cfg;
  cfg.language = require<std::string>(doc, "language", "config");
  cfg.output_dir = require<std::string>(doc, "output_dir", "config");

  for (auto it = doc["splits"].begin(); it != doc["splits"].end(); ++it) {
    static const std::set<std::string> known = {"train", "dev", "devtest", "test"};
    if (!known.count(it.key())) {
      raise(ErrorKind::Config, "config: unknown split \"" + it.key() + "\"");
    }
    cfg.split_paths[it.key()] = it.value().get<std::string>();
  }

  const json& extractor = doc["extractor"];
  cfg.extractor_kind = require<std::string>(extractor, "kind", "config.extractor");
  if (cfg.extractor_kind == "adapter") {
    cfg.extractor_command = require<std::string>(extractor, "command", "config.extractor");
    if (extractor.contains("languages")) {
      cfg.extractor_languages = extractor["languages"].get<std::vector<std::string>>();
    }
  } else if (cfg.extractor_kind != "rule") {
    raise(ErrorKind::Config, "config.extractor.kind must be \"rule\" or \"adapter\"");
  }

  cfg.ne_filter = doc["ne_filter"].get<std::string>();
  if (cfg.ne_filter != "off" && cfg.ne_filter != "or" && cfg.ne_filter != "and") {
    raise(ErrorKind::Config, "config.ne_filter must be \"off\", \"or\" or \"and\"");
  }
  if (doc.contains("coref_map")) {
    cfg.coref_map_path = std::filesystem::path(doc["coref_map"].get<std::string>());
  }

  const json& provider = doc["provider"];
  cfg.provider_kind = require<std::string>(provider, "kind", "config.provider");
  if (cfg.provider_kind == "stub") {
    cfg.provider_seed = provider.value("seed", 42ull);
  } else if (cfg.provider_kind == "external") {
    cfg.wordvec_file = require<std::string>(provider, "wordvec_file", "config.provider");
    cfg.encoder_command = require<std::string>(provider, "encoder_command", "config.provider");
  } else {
    raise(ErrorKind::Config, "config.provider.kind must be \"stub\" or \"external\"");
  }

  const json& model = doc["model"];
  cfg.hidden = model.value("hidden", 256u);
  cfg.init_scale = model.value("init_scale", 1.0);

  const json& train = doc["train"];
  cfg.train.epochs = require<std::size_t>(train, "epochs", "config.train");
  cfg.train.batch_size = require<std::size_t>(train, "batch_size", "config.train");
  cfg.train.learning_rate = require<double>(train, "learning_rate", "config.train");
  cfg.train.seed = require<std::uint64_t>(train, "seed", "config.train");
  cfg.train.threshold = require<double>(train, "threshold", "config.train");
  const std::string optimizer = train["optimizer"].get<std::string>();
  if (optimizer == "adam") {
    cfg.train.optimizer = OptimizerKind::Adam;
  } else if (optimizer == "sgd") {
    cfg.train.optimizer = OptimizerKind::Sgd;
  } else {
    raise(ErrorKind::Config, "config.train.optimizer must be \"adam\" or \"sgd\"");
  }
  const std::string selection = train["selection_split"].get<std::string>();
  if (selection == "dev") {
    cfg.train.selection_split = SelectionSplit::Dev;
  } else if (selection == "devtest") {
    cfg.train.selection_split = SelectionSplit::Devtest;
  } else {
    raise(ErrorKind::Config, "config.train.selection_split must be \"dev\" or \"devtest\"");
  }
  if (cfg.train.epochs < 1 || cfg.train.batch_size < 1 || !(cfg.train.learning_rate > 0.0)) {
    raise(ErrorKind::Config, "config.train: epochs and batch_size must be >= 1, learning_rate > 0");
  }
  if (!(cfg.train.threshold > 0.0 && cfg.train.threshold < 1.0)) {
    raise(ErrorKind::Config, "config.train.threshold must lie in (0, 1)");
  }

  cfg.eval_split = doc["eval_split"].get<std::string>();
  cfg.predict_split = doc["predict_split"].get<std::string>();
  cfg.run_id = doc["run_id"].get<std::string>();
  cfg.ig_steps = doc["ig_steps"].get<std::size_t>();

  // Required corpus splits must be configured and present on disk now;
  // artifacts of later stages are checked by the stage that consumes them.
  for (const char* name : {"train", "dev", "devtest"}) {
    if (!cfg.split_paths.count(name)) {
      raise(ErrorKind::Config, "config.splits: required split \"" + std::string(name) +
                                   "\" is not configured");
    }
  }
  for (const auto& [name, path] : cfg.split_paths) {
    if (!std::filesystem::exists(path)) {
      raise(ErrorKind::MissingInput, "config.splits." + name + ": file not found: " +
                                         path.string());
    }
  }
  if (cfg.coref_map_path && !std::filesystem::exists(*cfg.coref_map_path)) {
    raise(ErrorKind::MissingInput, "config.coref_map: file not found: " +
                                       cfg.coref_map_path->string());
  }
  if (cfg.provider_kind == "external" && !std::filesystem::exists(cfg.wordvec_file)) {
    raise(ErrorKind::MissingInput, "config.provider.wordvec_file: file not found: " +
                                       cfg.wordvec_file.string());
  }

  cfg.effective_json = doc.dump(2) + "\n";
  return cfg;
}

std::map<std::string, std::string> load_coref_map(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorKind::Io, "cannot open " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    raise(ErrorKind::Parse, path.string() + ": " + e.what());
  }
  if (!doc.is_object()) {
    raise(ErrorKind::Parse, path.string() + ": coreference map must be a JSON object");
  }
  std::map<std::string, std::string> map;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    map[it.key()] = it.value().get<std::string>();
  }
  return map;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

PipelineConfig config_from_json_text(const std::string& text,
                                     const std::vector<std::string>& overrides) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    raise(ErrorKind::Config, std::string("config is not valid JSON: ") + e.what());
  }
  for (const std::string& o : overrides) apply_override(doc, o);
  return parse_config(std::move(doc));
}

PipelineConfig load_config(const std::filesystem::path& path,
                           const std::vector<std::string>& overrides) {
  if (!std::filesystem::exists(path)) {
    raise(ErrorKind::MissingInput, "config file not found: " + path.string());
  }
  std::ifstream in(path);
  if (!in) raise(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return config_from_json_text(buf.str(), overrides);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Config) {
      throw Error(ErrorKind::Config, path.string() + ": " + e.what());
    }
    throw;
  }
}

Pipeline::Pipeline(PipelineConfig config) : config_(std::move(config)) {}

std::filesystem::path Pipeline::triples_path() const {
  return config_.output_dir / "triples.jsonl";
}
std::filesystem::path Pipeline::cache_path() const {
  return config_.output_dir / "bundles.cwb";
}
std::filesystem::path Pipeline::model_path(const std::string& system) const {
  return config_.output_dir / ("model_" + system + ".cwfm");
}
std::filesystem::path Pipeline::train_record_path(const std::string& system) const {
  return config_.output_dir / ("train_record_" + system + ".json");
}
std::filesystem::path Pipeline::report_json_path() const {
  return config_.output_dir / "eval_report.json";
}
std::filesystem::path Pipeline::report_text_path() const {
  return config_.output_dir / "eval_report.txt";
}
std::filesystem::path Pipeline::submission_path() const {
  return config_.output_dir / "submission.tsv";
}

void Pipeline::prepare_output_dir() {
  std::filesystem::create_directories(config_.output_dir);
  write_binary_file(config_.output_dir / "effective_config.json", config_.effective_json);
}

DatasetSplits Pipeline::load_corpus() const {
  return load_splits(config_.split_paths, config_.language);
}

std::vector<LabeledBundle> Pipeline::labeled_bundles(
    std::span<const LabeledSentence> sentences,
    const std::vector<EmbeddingBundle>& cache) const {
  std::unordered_map<std::string, const EmbeddingBundle*> by_id;
  for (const EmbeddingBundle& b : cache) by_id[b.source_id] = &b;

  std::vector<LabeledBundle> out;
  out.reserve(sentences.size());
  for (const LabeledSentence& s : sentences) {
    auto it = by_id.find(s.id);
    if (it == by_id.end()) {
      raise(ErrorKind::Validation, "no cached bundle for sentence \"" + s.id +
                                       "\"; run featurize first");
    }
    if (!s.label) {
      raise(ErrorKind::Validation, "sentence \"" + s.id + "\" has no label");
    }
    out.push_back(LabeledBundle{*it->second, *s.label});
  }
  return out;
}

std::string Pipeline::extract() {
  prepare_output_dir();
  const DatasetSplits corpus = load_corpus();

  std::unique_ptr<Extractor> extractor;
  if (config_.extractor_kind == "rule") {
    extractor = std::make_unique<RuleBasedExtractor>();
  } else {
    std::set<std::string> languages(config_.extractor_languages.begin(),
                                    config_.extractor_languages.end());
    extractor = std::make_unique<AdapterExtractor>(config_.extractor_command,
                                                   std::move(languages));
  }

  std::map<std::string, std::string> coref;
  if (config_.coref_map_path) coref = load_coref_map(*config_.coref_map_path);
  const EntityRecognizer recognizer = capitalized_entity_recognizer();

  std::vector<TripleSet> sets;
  for (const char* split : {"train", "dev", "devtest", "test"}) {
    for (const LabeledSentence& s : corpus.split(split)) {
      TripleSet ts = extract_triples(*extractor, s);
      // Refinements: antecedent substitution first, then the entity filter.
      if (!coref.empty()) ts = resolve_coreference(ts, coref);
      if (config_.ne_filter != "off") {
        const NeFilterMode mode =
            config_.ne_filter == "and" ? NeFilterMode::And : NeFilterMode::Or;
        ts = filter_named_entities(ts, recognizer, mode);
      }
      sets.push_back(std::move(ts));
    }
  }
  save_triple_sets(sets, triples_path());

  const double coverage = coverage_stats(sets, kTripleCap);
  char line[64];
  std::snprintf(line, sizeof line, "coverage@%zu=%.3f", kTripleCap, coverage);
  std::size_t triple_count = 0;
  for (const TripleSet& ts : sets) triple_count += ts.triples.size();
  return "wrote " + std::to_string(sets.size()) + " triple sets (" +
         std::to_string(triple_count) + " triples) to " + triples_path().string() + "\n" +
         line + "\n";
}

std::string Pipeline::featurize() {
  prepare_output_dir();
  const DatasetSplits corpus = load_corpus();
  const std::vector<TripleSet> sets = load_triple_sets(triples_path());

  std::unordered_map<std::string, const TripleSet*> by_id;
  for (const TripleSet& ts : sets) by_id[ts.source_id] = &ts;

  std::unique_ptr<SentenceEncoder> encoder;
  std::unique_ptr<WordVectors> wordvec;
  if (config_.provider_kind == "stub") {
    encoder = stub_sentence_encoder(config_.provider_seed);
    wordvec = stub_word_vectors(config_.provider_seed);
  } else {
    encoder = adapter_sentence_encoder(config_.encoder_command);
    wordvec = file_word_vectors(config_.wordvec_file);
  }

  std::vector<EmbeddingBundle> bundles;
  for (const char* split : {"train", "dev", "devtest", "test"}) {
    for (const LabeledSentence& s : corpus.split(split)) {
      TripleSet empty;
      empty.source_id = s.id;
      auto it = by_id.find(s.id);
      const TripleSet& ts = it == by_id.end() ? empty : *it->second;
      bundles.push_back(build_bundle(*encoder, *wordvec, s, ts));
    }
  }
  const std::size_t written = cache_bundles(bundles, cache_path());
  return "cached " + std::to_string(written) + " bundles to " + cache_path().string() + "\n";
}

std::string Pipeline::train_models() {
  prepare_output_dir();
  const auto start_time = std::chrono::steady_clock::now();

  const DatasetSplits corpus = load_corpus();
  const std::vector<EmbeddingBundle> cache = load_bundles(cache_path());

  const std::string selection_name =
      config_.train.selection_split == SelectionSplit::Dev ? "dev" : "devtest";
  const std::vector<LabeledBundle> train_set = labeled_bundles(corpus.train, cache);
  const std::vector<LabeledBundle> selection_set =
      labeled_bundles(corpus.split(selection_name), cache);

  const FusionModel model0 =
      init_fusion_model(config_.train.seed, config_.hidden, config_.init_scale);

  std::string summary;
  for (const char* system : {"fused", "lm"}) {
    const TrainRecord record =
        std::string(system) == "fused"
            ? train(model0, train_set, selection_set, config_.train)
            : ablate_lm_only(model0, train_set, selection_set, config_.train);

    save_model(record.best_model, model_path(system));

    json epochs = json::array();
    for (std::size_t i = 0; i < record.epochs.size(); ++i) {
      epochs.push_back({{"epoch", i + 1},
                        {"train_loss", record.epochs[i].train_loss},
                        {"selection_macro_f1", record.epochs[i].selection_macro_f1}});
    }
    json doc = {{"system", system},
                {"selection_split", selection_name},
                {"epochs", std::move(epochs)},
                {"best_epoch", record.best_epoch},
                {"best_macro_f1", record.best_macro_f1},
                {"model_file", model_path(system).filename().string()},
                {"config", json::parse(config_.effective_json)}};
    write_binary_file(train_record_path(system), doc.dump(2) + "\n");

    summary += std::string(system) + ": best epoch " + std::to_string(record.best_epoch) +
               ", selection macro-F1 " + format_double(record.best_macro_f1) + "\n";
  }

  // Wall-clock lives in a sidecar so the compared artifacts stay
  // byte-reproducible run to run.
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();
  write_binary_file(config_.output_dir / "timing.txt",
                    "train_wall_clock_seconds=" + format_double(seconds) + "\n");
  return summary;
}

std::string Pipeline::evaluate() {
  prepare_output_dir();
  const DatasetSplits corpus = load_corpus();
  const std::vector<EmbeddingBundle> cache = load_bundles(cache_path());
  const auto sentences = corpus.split(config_.eval_split);
  if (sentences.empty()) {
    raise(ErrorKind::Config, "eval split \"" + config_.eval_split + "\" is empty");
  }

  std::vector<ScoredRun> runs;
  for (const char* system : {"lm", "fused"}) {
    const FusionModel model = load_model(model_path(system));
    ScoredRun run;
    run.system = system;
    run.split = config_.eval_split;
    run.language = config_.language;
    for (const LabeledBundle& lb : labeled_bundles(sentences, cache)) {
      const EmbeddingBundle input =
          std::string(system) == "lm" ? zero_triples(lb.bundle) : lb.bundle;
      run.y_true.push_back(lb.label);
      run.y_pred.push_back(forward(model, input).prob >= config_.train.threshold ? 1 : 0);
    }
    runs.push_back(std::move(run));
  }

  const EvalReport report = build_report(runs);
  const std::string text = report_to_text(report);
  write_binary_file(report_text_path(), text);
  write_binary_file(report_json_path(), report_to_json(report));
  return text;
}

std::string Pipeline::predict_submission() {
  prepare_output_dir();
  const DatasetSplits corpus = load_corpus();
  const auto sentences = corpus.split(config_.predict_split);
  if (sentences.empty()) {
    raise(ErrorKind::Config, "predict split \"" + config_.predict_split +
                                 "\" is empty or not configured");
  }
  const std::vector<EmbeddingBundle> cache = load_bundles(cache_path());
  const FusionModel model = load_model(model_path("fused"));

  std::unordered_map<std::string, const EmbeddingBundle*> by_id;
  for (const EmbeddingBundle& b : cache) by_id[b.source_id] = &b;

  std::vector<EmbeddingBundle> inputs;
  for (const LabeledSentence& s : sentences) {
    auto it = by_id.find(s.id);
    if (it == by_id.end()) {
      raise(ErrorKind::Validation, "no cached bundle for sentence \"" + s.id +
                                       "\"; run featurize first");
    }
    inputs.push_back(*it->second);
  }

  const std::vector<Prediction> predictions =
      predict(model, inputs, config_.train.threshold);
  std::vector<std::pair<std::string, int>> rows;
  rows.reserve(predictions.size());
  for (const Prediction& p : predictions) rows.emplace_back(p.id, p.label);

  const std::size_t written = write_submission(rows, config_.run_id, submission_path());
  return "wrote " + std::to_string(written) + " predictions to " +
         submission_path().string() + "\n";
}

std::string Pipeline::explain(const std::string& sentence_id) {
  prepare_output_dir();
  const std::vector<EmbeddingBundle> cache = load_bundles(cache_path());
  const FusionModel model = load_model(model_path("fused"));

  const EmbeddingBundle* bundle = nullptr;
  for (const EmbeddingBundle& b : cache) {
    if (b.source_id == sentence_id) {
      bundle = &b;
      break;
    }
  }
  if (bundle == nullptr) {
    raise(ErrorKind::UnknownId, "sentence id \"" + sentence_id + "\" is not in the cache");
  }

  std::vector<Triple> triples;
  for (const TripleSet& ts : load_triple_sets(triples_path())) {
    if (ts.source_id == sentence_id) {
      triples = ts.triples;
      break;
    }
  }

  const Attribution attribution = integrated_gradients(
      model, *bundle, zero_baseline_of(*bundle), config_.ig_steps);

  struct Entry {
    std::size_t slot;
    double score;
  };
  std::vector<Entry> entries;
  for (std::size_t i = 0; i < kMaxTriples; ++i) {
    if (bundle->mask[i]) entries.push_back({i, attribution.per_triple[i]});
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.slot < b.slot;
  });

  double sentence_score = 0.0;
  for (double v : attribution.sentence) sentence_score += v;

  std::ostringstream out;
  out << "sentence " << sentence_id << ": p(checkworthy)=" << format_double(
             forward(model, *bundle).prob)
      << "\n";
  out << "sentence-embedding attribution: " << format_double(sentence_score) << "\n";
  for (const Entry& e : entries) {
    out << "triple[" << e.slot << "] score=" << format_double(e.score);
    if (e.slot < triples.size()) {
      const Triple& t = triples[e.slot];
      out << "  (" << t.subject << "; " << t.predicate << "; " << t.object << ")";
    }
    out << "\n";
  }
  const double residual =
      attribution.total - (attribution.logit_input - attribution.logit_baseline);
  out << "completeness residual: " << format_double(residual) << " (steps=" << config_.ig_steps
      << ")\n";
  return out.str();
}

}  // namespace cw
