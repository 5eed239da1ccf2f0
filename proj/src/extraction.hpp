#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "corpus.hpp"
#include "errors.hpp"

namespace cw {

constexpr std::size_t kTripleCap = 4;

// One (subject; predicate; object) extraction. The object may be empty for
// intransitive clauses; subject and predicate never are.
struct Triple {
  std::string subject;
  std::string predicate;
  std::string object;
  std::string source_id;
  int rank = 0;

  bool operator==(const Triple&) const = default;
};

// Capped, rank-ordered triples for one sentence. pre_cap_count remembers how
// many triples the extractor produced before the cap so coverage statistics
// never need a re-extraction.
struct TripleSet {
  std::string source_id;
  std::size_t pre_cap_count = 0;
  std::vector<Triple> triples;
};

// Extraction backend. Implementations must be deterministic for a fixed
// backend version.
class Extractor {
 public:
  virtual ~Extractor() = default;
  virtual const std::string& name() const = 0;
  virtual bool supports_language(const std::string& code) const = 0;
  virtual std::vector<Triple> extract(const std::string& text) const = 0;
};

// Deterministic fallback extractor. Splits clauses on coordinating
// conjunctions and relative markers, then emits at most one
// (leftmost noun chunk; finite verb group; remainder) triple per clause using
// a closed verb lexicon plus -ed/-s morphology. No part-of-speech tagging.
class RuleBasedExtractor : public Extractor {
 public:
  const std::string& name() const override;
  bool supports_language(const std::string& code) const override;
  std::vector<Triple> extract(const std::string& text) const override;
};

std::vector<Triple> rule_based_extract(const std::string& text);

// Out-of-process backend speaking line-delimited JSON over stdin/stdout:
//   request  {"id": "...", "text": "..."}
//   response {"id": "...", "triples": [{"s": "...", "p": "...", "o": "..."}]}
class AdapterExtractor : public Extractor {
 public:
  // languages: ISO 639-1 codes the adapter accepts; empty set means any.
  AdapterExtractor(std::string command, std::set<std::string> languages = {});
  ~AdapterExtractor() override;

  const std::string& name() const override;
  bool supports_language(const std::string& code) const override;
  std::vector<Triple> extract(const std::string& text) const override;

 private:
  std::string name_;
  std::string command_;
  std::set<std::string> languages_;
  mutable std::unique_ptr<class LineProcess> process_;
};

// Runs the extractor on one sentence, caps the output at kTripleCap triples
// by emission order and stamps source ids and ranks.
TripleSet extract_triples(const Extractor& extractor, const LabeledSentence& sentence);

using EntityRecognizer = std::function<std::set<std::string>(const std::string&)>;

// Heuristic recognizer used by the pipeline: tokens with an uppercase initial
// and at least two characters count as entity spans ("Democrats", "US"), the
// pronoun "I" does not.
EntityRecognizer capitalized_entity_recognizer();

enum class NeFilterMode { Or, And };

// Keeps the triples whose subject/object carry named entities: under Or at
// least one of the two fields must, under And both must. Order and ranks are
// preserved; the result is always a subsequence of the input.
TripleSet filter_named_entities(const TripleSet& ts, const EntityRecognizer& recognizer,
                                NeFilterMode mode = NeFilterMode::Or);

// Token-boundary, case-sensitive replacement of pronouns by their antecedents
// in subject and object fields. Predicates are untouched; triple count and
// ranks never change.
TripleSet resolve_coreference(const TripleSet& ts,
                              const std::map<std::string, std::string>& antecedents);

// Fraction of sentences whose pre-cap extraction count fits within `cap`.
double coverage_stats(std::span<const TripleSet> corpus, std::size_t cap);

// JSON-lines persistence, one object per sentence:
//   {"id": ..., "pre_cap_count": n, "triples": [{"s","p","o","rank"}]}
std::string triple_sets_to_jsonl(std::span<const TripleSet> sets);
std::vector<TripleSet> triple_sets_from_jsonl(const std::string& content);
void save_triple_sets(std::span<const TripleSet> sets, const std::filesystem::path& path);
std::vector<TripleSet> load_triple_sets(const std::filesystem::path& path);

}  // namespace cw
