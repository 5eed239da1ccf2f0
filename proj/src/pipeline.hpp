#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "training.hpp"

namespace cw {

// Declarative experiment description loaded from a JSON config file.
// --set k=v overrides address leaves by dotted path before validation.
struct PipelineConfig {
  std::string language;
  std::map<std::string, std::filesystem::path> split_paths;

  std::string extractor_kind;  // "rule" | "adapter"
  std::string extractor_command;
  std::vector<std::string> extractor_languages;

  std::string ne_filter;  // "off" | "or" | "and"
  std::optional<std::filesystem::path> coref_map_path;

  std::string provider_kind;  // "stub" | "external"
  std::uint64_t provider_seed = 42;
  std::filesystem::path wordvec_file;
  std::string encoder_command;

  TrainConfig train;
  std::size_t hidden = 256;
  double init_scale = 1.0;

  std::string eval_split = "devtest";
  std::string predict_split = "test";
  std::string run_id = "run1";
  std::size_t ig_steps = 512;

  std::filesystem::path output_dir;

  // Raw document with defaults filled in; echoed into the output directory.
  std::string effective_json;
};

PipelineConfig load_config(const std::filesystem::path& path,
                           const std::vector<std::string>& overrides);
PipelineConfig config_from_json_text(const std::string& text,
                                     const std::vector<std::string>& overrides);

// One experiment directory. Subcommands communicate only through files in
// output_dir, so each stage can be re-run or replaced independently; with
// stub providers every artifact is byte-reproducible.
class Pipeline {
 public:
  explicit Pipeline(PipelineConfig config);

  // Each command writes its artifacts and returns a printable summary.
  std::string extract();
  std::string featurize();
  std::string train_models();
  std::string evaluate();
  std::string predict_submission();
  std::string explain(const std::string& sentence_id);

  const PipelineConfig& config() const { return config_; }

  std::filesystem::path triples_path() const;
  std::filesystem::path cache_path() const;
  std::filesystem::path model_path(const std::string& system) const;
  std::filesystem::path train_record_path(const std::string& system) const;
  std::filesystem::path report_json_path() const;
  std::filesystem::path report_text_path() const;
  std::filesystem::path submission_path() const;

 private:
  void prepare_output_dir();
  DatasetSplits load_corpus() const;
  std::vector<LabeledBundle> labeled_bundles(
      std::span<const LabeledSentence> sentences,
      const std::vector<EmbeddingBundle>& cache) const;

  PipelineConfig config_;
};

}  // namespace cw
