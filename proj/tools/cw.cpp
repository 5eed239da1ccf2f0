// cw — command-line front end over the checkworthy C API.
//
//   cw extract|featurize|train|eval|predict|explain --config <path> [--set k=v ...]

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "checkworthy.h"

namespace {

struct PipelineCloser {
  void operator()(cw_pipeline* p) const { cw_pipeline_close(p); }
};
using PipelineHandle = std::unique_ptr<cw_pipeline, PipelineCloser>;

int run_command(const std::string& config_path, const std::vector<std::string>& overrides,
                cw_status (*stage)(cw_pipeline*), const char* explain_id) {
  std::vector<const char*> override_ptrs;
  override_ptrs.reserve(overrides.size());
  for (const std::string& o : overrides) override_ptrs.push_back(o.c_str());

  cw_pipeline* raw = nullptr;
  cw_status status = cw_pipeline_open(config_path.c_str(), override_ptrs.data(),
                                      override_ptrs.size(), &raw);
  PipelineHandle pipeline(raw);
  if (status != CW_OK) {
    std::fprintf(stderr, "cw: %s: %s\n", cw_status_name(status),
                 cw_pipeline_last_error(pipeline.get()));
    return static_cast<int>(status);
  }

  status = explain_id != nullptr ? cw_pipeline_explain(pipeline.get(), explain_id)
                                 : stage(pipeline.get());
  if (status != CW_OK) {
    std::fprintf(stderr, "cw: %s: %s\n", cw_status_name(status),
                 cw_pipeline_last_error(pipeline.get()));
    return static_cast<int>(status);
  }
  std::fputs(cw_pipeline_last_output(pipeline.get()), stdout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid check-worthiness estimation pipeline"};
  app.set_version_flag("--version", std::string(cw_version()));
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::string sentence_id;

  struct Command {
    const char* name;
    const char* help;
    cw_status (*stage)(cw_pipeline*);
  };
  const Command commands[] = {
      {"extract", "Extract triples and report coverage", cw_pipeline_extract},
      {"featurize", "Build the embedding bundle cache", cw_pipeline_featurize},
      {"train", "Train the fused model and the LM-only ablation", cw_pipeline_train},
      {"eval", "Score both systems and write the comparison report", cw_pipeline_eval},
      {"predict", "Write the shared-task submission TSV", cw_pipeline_predict},
  };

  for (const Command& command : commands) {
    CLI::App* sub = app.add_subcommand(command.name, command.help);
    sub->add_option("--config", config_path, "Pipeline config JSON")->required();
    sub->add_option("--set", overrides, "Override a config leaf: dotted.key=value");
    sub->callback([&, stage = command.stage] {
      std::exit(run_command(config_path, overrides, stage, nullptr));
    });
  }

  CLI::App* explain = app.add_subcommand(
      "explain", "Rank one sentence's triples by integrated-gradients attribution");
  explain->add_option("sentence_id", sentence_id, "Sentence id to explain")->required();
  explain->add_option("--config", config_path, "Pipeline config JSON")->required();
  explain->add_option("--set", overrides, "Override a config leaf: dotted.key=value");
  explain->callback(
      [&] { std::exit(run_command(config_path, overrides, nullptr, sentence_id.c_str())); });

  CLI11_PARSE(app, argc, argv);
  return 0;
}
