#include "corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <unordered_set>

namespace cw {

namespace {

std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

bool is_blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isspace(c) != 0; });
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  for (;;) {
    std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      cells.push_back(line.substr(start));
      return cells;
    }
    cells.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

int parse_label(const std::string& cell, std::size_t line_no) {
  std::string low = lowercase(cell);
  if (low == "yes") return 1;
  if (low == "no") return 0;
  raise(ErrorKind::Validation, "line " + std::to_string(line_no) +
                                   ": unknown class label \"" + cell + "\"");
}

}  // namespace

std::span<const LabeledSentence> DatasetSplits::split(const std::string& name) const {
  if (name == "train") return train;
  if (name == "dev") return dev;
  if (name == "devtest") return devtest;
  if (name == "test") return test;
  raise(ErrorKind::Config, "unknown split name \"" + name + "\"");
}

std::vector<LabeledSentence> parse_tsv(std::istream& in, bool has_labels,
                                       const std::string& language) {
  const std::size_t expected_cols = has_labels ? 3 : 2;
  std::vector<LabeledSentence> rows;
  std::unordered_set<std::string> seen_ids;

  std::string line;
  std::size_t line_no = 0;
  bool header_skipped = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!header_skipped) {
      header_skipped = true;
      continue;
    }
    if (line.empty() && in.peek() == std::char_traits<char>::eof()) break;

    std::vector<std::string> cells = split_tabs(line);
    if (cells.size() != expected_cols) {
      raise(ErrorKind::Parse, "line " + std::to_string(line_no) + ": expected " +
                                  std::to_string(expected_cols) + " tab-separated columns, got " +
                                  std::to_string(cells.size()));
    }

    LabeledSentence s;
    s.id = cells[0];
    s.text = cells[1];
    s.language = language;
    if (has_labels) s.label = parse_label(cells[2], line_no);

    if (s.id.empty()) {
      raise(ErrorKind::Validation, "line " + std::to_string(line_no) + ": empty sentence id");
    }
    if (is_blank(s.text)) {
      raise(ErrorKind::Validation, "line " + std::to_string(line_no) +
                                       ": empty text for id \"" + s.id + "\"");
    }
    if (!seen_ids.insert(s.id).second) {
      raise(ErrorKind::Validation, "line " + std::to_string(line_no) +
                                       ": duplicate sentence id \"" + s.id + "\"");
    }
    rows.push_back(std::move(s));
  }
  return rows;
}

std::string serialize_tsv(std::span<const LabeledSentence> rows, bool has_labels) {
  std::string out = has_labels ? "sentence_id\ttext\tclass_label\n" : "sentence_id\ttext\n";
  for (const LabeledSentence& s : rows) {
    out += s.id;
    out += '\t';
    out += s.text;
    if (has_labels) {
      if (!s.label) {
        raise(ErrorKind::Validation, "cannot serialize unlabeled row \"" + s.id +
                                         "\" with labels enabled");
      }
      out += '\t';
      out += (*s.label == 1) ? "Yes" : "No";
    }
    out += '\n';
  }
  return out;
}

DatasetSplits load_splits(const std::map<std::string, std::filesystem::path>& paths,
                          const std::string& language) {
  DatasetSplits splits;
  splits.language = language;

  auto load_one = [&](const std::string& name, bool required,
                      bool has_labels) -> std::vector<LabeledSentence> {
    auto it = paths.find(name);
    if (it == paths.end()) {
      if (required) raise(ErrorKind::Config, "required split \"" + name + "\" is not configured");
      return {};
    }
    if (!std::filesystem::exists(it->second)) {
      raise(ErrorKind::MissingInput, "split \"" + name + "\": file not found: " +
                                         it->second.string());
    }
    std::ifstream in(it->second);
    if (!in) raise(ErrorKind::Io, "cannot open " + it->second.string());
    try {
      return parse_tsv(in, has_labels, language);
    } catch (const Error& e) {
      throw Error(e.kind(), it->second.string() + ": " + e.what());
    }
  };

  splits.train = load_one("train", true, true);
  splits.dev = load_one("dev", true, true);
  splits.devtest = load_one("devtest", true, true);
  splits.test = load_one("test", false, false);

  std::unordered_set<std::string> all_ids;
  auto check_ids = [&](std::span<const LabeledSentence> rows, const std::string& name) {
    for (const LabeledSentence& s : rows) {
      if (!all_ids.insert(s.id).second) {
        raise(ErrorKind::Validation, "sentence id \"" + s.id +
                                         "\" appears in more than one split (last seen in " +
                                         name + ")");
      }
    }
  };
  check_ids(splits.train, "train");
  check_ids(splits.dev, "dev");
  check_ids(splits.devtest, "devtest");
  check_ids(splits.test, "test");
  return splits;
}

std::map<int, std::size_t> class_balance(std::span<const LabeledSentence> rows) {
  std::map<int, std::size_t> counts;
  if (rows.empty()) return counts;
  counts[0] = 0;
  counts[1] = 0;
  for (const LabeledSentence& s : rows) {
    if (!s.label) {
      raise(ErrorKind::Validation, "class_balance: unlabeled row \"" + s.id + "\"");
    }
    ++counts[*s.label];
  }
  return counts;
}

}  // namespace cw
