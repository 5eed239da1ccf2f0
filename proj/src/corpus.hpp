#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"

namespace cw {

// One corpus row from the shared-task TSV distribution. Labels are binary:
// 1 = checkworthy ("Yes"), 0 = not checkworthy ("No").
struct LabeledSentence {
  std::string id;
  std::string text;
  std::string language;
  std::optional<int> label;
};

struct DatasetSplits {
  std::vector<LabeledSentence> train;
  std::vector<LabeledSentence> dev;
  std::vector<LabeledSentence> devtest;
  std::vector<LabeledSentence> test;
  std::string language;

  std::span<const LabeledSentence> split(const std::string& name) const;
};

// Parses the TSV distribution format: a header line followed by
// sentence_id<TAB>text[<TAB>class_label] rows. Strict three-column parse;
// tabs inside text are not supported. Label strings are case-insensitive
// "Yes"/"No", anything else is an error.
std::vector<LabeledSentence> parse_tsv(std::istream& in, bool has_labels,
                                       const std::string& language = "");

// Inverse of parse_tsv: canonical header plus one row per sentence,
// LF line endings. Reproduces the data cells byte for byte.
std::string serialize_tsv(std::span<const LabeledSentence> rows, bool has_labels);

// Loads train/dev/devtest (labeled, required) and test (unlabeled, optional)
// and enforces corpus-wide id uniqueness.
DatasetSplits load_splits(
    const std::map<std::string, std::filesystem::path>& paths,
    const std::string& language);

// Label histogram over a fully labeled split. Nonempty input always reports
// both classes, even when one count is zero.
std::map<int, std::size_t> class_balance(std::span<const LabeledSentence> rows);

}  // namespace cw
