#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace cw {

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
};

ConfusionCounts confusion(std::span<const int> y_true, std::span<const int> y_pred);

// Zero-division convention throughout: precision/recall/F1 are 0 whenever
// their denominator is 0, and the degenerate flag records that it happened.
struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool degenerate = false;
};

ClassMetrics class_metrics(const ConfusionCounts& c);

struct MetricValue {
  double value = 0.0;
  bool degenerate = false;
};

// Unweighted mean of per-class F1 over classes {0, 1}.
MetricValue macro_f1(std::span<const int> y_true, std::span<const int> y_pred);
// F1 of the checkworthy class only.
MetricValue positive_f1(std::span<const int> y_true, std::span<const int> y_pred);

// One system evaluated on one split. Label vectors are the normal route; a
// run may instead inject a precomputed macro-F1 (external scorer output), in
// which case only the gain arithmetic applies to it.
struct ScoredRun {
  std::string system;  // "lm" or "fused"
  std::string split;
  std::string language;
  std::vector<int> y_true;
  std::vector<int> y_pred;
  std::optional<double> fixed_macro_f1;  // raw score in [0, 1]
};

struct ReportRow {
  std::string system;
  std::string split;
  std::string language;
  std::size_t n = 0;
  double macro_f1 = 0.0;
  double positive_f1 = 0.0;
  ClassMetrics class0;
  ClassMetrics class1;
  bool degenerate = false;
  bool from_fixed_score = false;
};

struct GainRow {
  std::string language;
  std::string split;
  double lm_score = 0.0;     // raw macro-F1 in [0, 1]
  double fused_score = 0.0;  // raw macro-F1 in [0, 1]
};

struct EvalReport {
  std::vector<ReportRow> rows;
  std::vector<GainRow> gains;
};

// Builds rows for every run and one gain line per matched lm/fused pair on
// the same (language, split). An lm or fused run without its counterpart is
// a report error.
EvalReport build_report(std::span<const ScoredRun> runs);

// Scores are rendered multiplied by 100. Development reports use 3 decimals,
// final-test style uses 1. Deltas are computed on the rendered values so the
// printed gain always equals rendered(fused) - rendered(lm).
std::string render_score(double raw, int decimals = 3);
std::string render_delta(double lm_raw, double fused_raw, int decimals = 3);

std::string report_to_text(const EvalReport& report, int decimals = 3);
std::string report_to_json(const EvalReport& report, int decimals = 3);

// Shared-task submission TSV: id<TAB>class_label<TAB>run_id, labels Yes/No.
std::size_t write_submission(std::span<const std::pair<std::string, int>> predictions,
                             const std::string& run_id, const std::filesystem::path& path);
std::string submission_to_tsv(std::span<const std::pair<std::string, int>> predictions,
                              const std::string& run_id);

}  // namespace cw
