#include "evaluation.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <unordered_set>

#include <json.hpp>

namespace cw {

namespace {

using json = nlohmann::json;

void check_pair(std::span<const int> y_true, std::span<const int> y_pred) {
  if (y_true.size() != y_pred.size()) {
    raise(ErrorKind::Validation, "label vectors differ in length: " +
                                     std::to_string(y_true.size()) + " vs " +
                                     std::to_string(y_pred.size()));
  }
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if ((y_true[i] != 0 && y_true[i] != 1) || (y_pred[i] != 0 && y_pred[i] != 1)) {
      raise(ErrorKind::Validation, "labels must be binary");
    }
  }
}

// Swapping class roles turns the class-0 confusion into class-1 form.
ConfusionCounts invert(const ConfusionCounts& c) {
  return ConfusionCounts{c.tn, c.fn, c.fp, c.tp};
}

// Rounded value in units of 10^-decimals after the x100 rendering, exact
// integer arithmetic from there on.
long long rendered_units(double raw, int decimals) {
  double scaled = raw * 100.0;
  for (int i = 0; i < decimals; ++i) scaled *= 10.0;
  return std::llround(scaled);
}

std::string format_units(long long units, int decimals, bool forced_sign) {
  long long divisor = 1;
  for (int i = 0; i < decimals; ++i) divisor *= 10;
  const char sign = units < 0 ? '-' : '+';
  const long long magnitude = units < 0 ? -units : units;
  char buf[64];
  if (forced_sign) {
    std::snprintf(buf, sizeof buf, "%c%lld.%0*lld", sign, magnitude / divisor, decimals,
                  magnitude % divisor);
  } else if (units < 0) {
    std::snprintf(buf, sizeof buf, "-%lld.%0*lld", magnitude / divisor, decimals,
                  magnitude % divisor);
  } else {
    std::snprintf(buf, sizeof buf, "%lld.%0*lld", magnitude / divisor, decimals,
                  magnitude % divisor);
  }
  return buf;
}

}  // namespace

ConfusionCounts confusion(std::span<const int> y_true, std::span<const int> y_pred) {
  check_pair(y_true, y_pred);
  ConfusionCounts c;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] == 1) {
      (y_pred[i] == 1 ? c.tp : c.fn) += 1;
    } else {
      (y_pred[i] == 1 ? c.fp : c.tn) += 1;
    }
  }
  return c;
}

ClassMetrics class_metrics(const ConfusionCounts& c) {
  ClassMetrics m;
  const std::size_t predicted = c.tp + c.fp;
  const std::size_t actual = c.tp + c.fn;
  if (predicted == 0) {
    m.degenerate = true;
  } else {
    m.precision = static_cast<double>(c.tp) / static_cast<double>(predicted);
  }
  if (actual == 0) {
    m.degenerate = true;
  } else {
    m.recall = static_cast<double>(c.tp) / static_cast<double>(actual);
  }
  const double denom = m.precision + m.recall;
  if (denom > 0.0) {
    m.f1 = 2.0 * m.precision * m.recall / denom;
  } else {
    m.degenerate = true;
  }
  return m;
}

MetricValue macro_f1(std::span<const int> y_true, std::span<const int> y_pred) {
  if (y_true.empty()) raise(ErrorKind::Validation, "macro-F1 is undefined on empty input");
  const ConfusionCounts c = confusion(y_true, y_pred);
  const ClassMetrics positive = class_metrics(c);
  const ClassMetrics negative = class_metrics(invert(c));
  return MetricValue{(positive.f1 + negative.f1) / 2.0,
                     positive.degenerate || negative.degenerate};
}

MetricValue positive_f1(std::span<const int> y_true, std::span<const int> y_pred) {
  if (y_true.empty()) raise(ErrorKind::Validation, "positive F1 is undefined on empty input");
  const ClassMetrics positive = class_metrics(confusion(y_true, y_pred));
  return MetricValue{positive.f1, positive.degenerate};
}

EvalReport build_report(std::span<const ScoredRun> runs) {
  EvalReport report;
  // (language, split) -> [lm score, fused score]
  std::map<std::pair<std::string, std::string>, std::map<std::string, double>> pairs;

  for (const ScoredRun& run : runs) {
    ReportRow row;
    row.system = run.system;
    row.split = run.split;
    row.language = run.language;
    if (run.fixed_macro_f1) {
      row.macro_f1 = *run.fixed_macro_f1;
      row.from_fixed_score = true;
      row.n = run.y_true.size();
    } else {
      const MetricValue macro = macro_f1(run.y_true, run.y_pred);
      const MetricValue positive = positive_f1(run.y_true, run.y_pred);
      const ConfusionCounts c = confusion(run.y_true, run.y_pred);
      row.macro_f1 = macro.value;
      row.positive_f1 = positive.value;
      row.class1 = class_metrics(c);
      row.class0 = class_metrics(invert(c));
      row.degenerate = macro.degenerate;
      row.n = run.y_true.size();
    }
    report.rows.push_back(std::move(row));

    if (run.system == "lm" || run.system == "fused") {
      auto& slot = pairs[{run.language, run.split}];
      if (slot.count(run.system)) {
        raise(ErrorKind::Validation, "duplicate " + run.system + " run for language \"" +
                                         run.language + "\", split \"" + run.split + "\"");
      }
      slot[run.system] = report.rows.back().macro_f1;
    }
  }

  for (const auto& [key, systems] : pairs) {
    if (!systems.count("lm") || !systems.count("fused")) {
      raise(ErrorKind::Validation, "unmatched lm/fused pair for language \"" + key.first +
                                       "\", split \"" + key.second + "\"");
    }
    GainRow gain;
    gain.language = key.first;
    gain.split = key.second;
    gain.lm_score = systems.at("lm");
    gain.fused_score = systems.at("fused");
    report.gains.push_back(std::move(gain));
  }
  return report;
}

std::string render_score(double raw, int decimals) {
  return format_units(rendered_units(raw, decimals), decimals, /*forced_sign=*/false);
}

std::string render_delta(double lm_raw, double fused_raw, int decimals) {
  const long long delta = rendered_units(fused_raw, decimals) - rendered_units(lm_raw, decimals);
  return format_units(delta, decimals, /*forced_sign=*/true);
}

std::string report_to_text(const EvalReport& report, int decimals) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%-8s %-6s %-8s %6s %10s %12s\n", "system", "lang",
                "split", "n", "macro_f1", "positive_f1");
  out += line;
  for (const ReportRow& row : report.rows) {
    std::snprintf(line, sizeof line, "%-8s %-6s %-8s %6zu %10s %12s%s\n",
                  row.system.c_str(), row.language.c_str(), row.split.c_str(), row.n,
                  render_score(row.macro_f1, decimals).c_str(),
                  row.from_fixed_score ? "-" : render_score(row.positive_f1, decimals).c_str(),
                  row.degenerate ? "  [degenerate]" : "");
    out += line;
  }
  for (const GainRow& gain : report.gains) {
    std::snprintf(line, sizeof line, "gain     %-6s %-8s %6s %10s\n", gain.language.c_str(),
                  gain.split.c_str(), "",
                  render_delta(gain.lm_score, gain.fused_score, decimals).c_str());
    out += line;
  }
  return out;
}

std::string report_to_json(const EvalReport& report, int decimals) {
  json rows = json::array();
  for (const ReportRow& row : report.rows) {
    json r = {{"system", row.system},
              {"language", row.language},
              {"split", row.split},
              {"n", row.n},
              {"macro_f1", row.macro_f1},
              {"rendered_macro_f1", render_score(row.macro_f1, decimals)},
              {"degenerate", row.degenerate},
              {"from_fixed_score", row.from_fixed_score}};
    if (!row.from_fixed_score) {
      r["positive_f1"] = row.positive_f1;
      r["rendered_positive_f1"] = render_score(row.positive_f1, decimals);
      r["class0"] = {{"precision", row.class0.precision},
                     {"recall", row.class0.recall},
                     {"f1", row.class0.f1},
                     {"degenerate", row.class0.degenerate}};
      r["class1"] = {{"precision", row.class1.precision},
                     {"recall", row.class1.recall},
                     {"f1", row.class1.f1},
                     {"degenerate", row.class1.degenerate}};
    }
    rows.push_back(std::move(r));
  }
  json gains = json::array();
  for (const GainRow& gain : report.gains) {
    gains.push_back({{"language", gain.language},
                     {"split", gain.split},
                     {"lm", gain.lm_score},
                     {"fused", gain.fused_score},
                     {"rendered_lm", render_score(gain.lm_score, decimals)},
                     {"rendered_fused", render_score(gain.fused_score, decimals)},
                     {"rendered_delta", render_delta(gain.lm_score, gain.fused_score, decimals)}});
  }
  json doc = {{"rows", std::move(rows)}, {"gains", std::move(gains)}};
  return doc.dump(2) + "\n";
}

std::string submission_to_tsv(std::span<const std::pair<std::string, int>> predictions,
                              const std::string& run_id) {
  std::unordered_set<std::string> seen;
  std::string out;
  for (const auto& [id, label] : predictions) {
    if (!seen.insert(id).second) {
      raise(ErrorKind::Validation, "duplicate id \"" + id + "\" in submission");
    }
    if (label != 0 && label != 1) {
      raise(ErrorKind::Validation, "submission label for \"" + id + "\" must be 0 or 1");
    }
    out += id;
    out += '\t';
    out += label == 1 ? "Yes" : "No";
    out += '\t';
    out += run_id;
    out += '\n';
  }
  return out;
}

std::size_t write_submission(std::span<const std::pair<std::string, int>> predictions,
                             const std::string& run_id, const std::filesystem::path& path) {
  const std::string content = submission_to_tsv(predictions, run_id);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) raise(ErrorKind::Io, "write failed: " + path.string());
  return predictions.size();
}

}  // namespace cw
