#include "extraction.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "subprocess.hpp"

namespace cw {

namespace {

using json = nlohmann::json;

std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

bool ascii_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }

// Whitespace tokens with leading/trailing punctuation stripped. Inner
// apostrophes and hyphens survive ("twenty-two", "don't").
std::vector<std::string> clean_tokens(const std::string& text) {
  std::vector<std::string> tokens;
  std::istringstream in(text);
  std::string raw;
  while (in >> raw) {
    std::size_t b = 0;
    std::size_t e = raw.size();
    while (b < e && ascii_punct(raw[b])) ++b;
    while (e > b && ascii_punct(raw[e - 1])) --e;
    if (e > b) tokens.push_back(raw.substr(b, e - b));
  }
  return tokens;
}

const std::unordered_set<std::string>& coordinators() {
  static const std::unordered_set<std::string> s = {"and", "but", "or", "nor",
                                                    "yet", "so"};
  return s;
}

const std::unordered_set<std::string>& relative_markers() {
  static const std::unordered_set<std::string> s = {
      "which", "who", "whom", "whose", "while", "because", "although",
      "whereas", "when", "where"};
  return s;
}

const std::unordered_set<std::string>& determiners() {
  static const std::unordered_set<std::string> s = {
      "the", "a", "an", "this", "that", "these", "those", "all", "both",
      "each", "every", "some", "any", "no", "my", "our", "your", "his",
      "her", "its", "their", "few", "many", "most", "several"};
  return s;
}

const std::unordered_set<std::string>& modals() {
  static const std::unordered_set<std::string> s = {
      "must", "can", "could", "will", "would", "shall", "should", "may",
      "might", "do", "does", "did"};
  return s;
}

const std::unordered_set<std::string>& auxiliaries() {
  static const std::unordered_set<std::string> s = {
      "am", "is", "are", "was", "were", "be", "been", "being",
      "has", "have", "had"};
  return s;
}

// Closed lexicon of frequent finite verbs, mostly irregular forms the
// morphological rules cannot catch.
const std::unordered_set<std::string>& verb_lexicon() {
  static const std::unordered_set<std::string> s = {
      "wrote",  "said",   "made",  "went",   "took",  "got",    "saw",
      "knew",   "thought", "came",  "gave",   "found", "told",   "left",
      "kept",   "felt",   "put",   "brought", "began", "ran",    "held",
      "stood",  "heard",  "let",   "meant",  "set",   "met",    "paid",
      "sent",   "built",  "spent", "lost",   "won",   "bought", "taught",
      "sold",   "rose",   "fell",  "led",    "read",  "spoke",  "broke",
      "chose",  "drove",  "wore",  "ate",    "drank", "sang",   "threw",
      "flew",   "grew",   "drew",  "became", "voted", "cut",    "spread",
      "cost"};
  return s;
}

bool lowercase_initial(const std::string& token) {
  return !token.empty() && std::islower(static_cast<unsigned char>(token[0])) != 0;
}

bool ends_with(const std::string& s, const char* suffix) {
  std::string_view sv(suffix);
  return s.size() >= sv.size() && s.compare(s.size() - sv.size(), sv.size(), sv) == 0;
}

// A clause's finite verb: -ed pasts only. -ing/-en forms are not finite on
// their own ("evening", "seven") and are recognized only inside a verb group.
bool looks_like_finite_past(const std::string& lower) {
  return lower.size() >= 4 && ends_with(lower, "ed");
}

bool looks_like_participle(const std::string& lower) {
  if (lower.size() < 4) return false;
  return ends_with(lower, "ed") || ends_with(lower, "ing") || ends_with(lower, "en");
}

// Third-person -s heuristic. Deliberately conservative: plural nouns usually
// follow a determiner or carry an uppercase initial, both of which disqualify.
bool looks_like_third_person(const std::string& token, const std::string& lower,
                             const std::string& prev_lower) {
  if (lower.size() < 4 || !lowercase_initial(token)) return false;
  if (!ends_with(lower, "s")) return false;
  if (ends_with(lower, "ss") || ends_with(lower, "us") || ends_with(lower, "is")) return false;
  if (lower.find('\'') != std::string::npos) return false;
  if (determiners().count(prev_lower) > 0) return false;
  return true;
}

bool is_verb_start(const std::string& token, const std::string& prev) {
  const std::string lower = lowercase(token);
  if (modals().count(lower) || auxiliaries().count(lower) || verb_lexicon().count(lower)) {
    return true;
  }
  if (!lowercase_initial(token)) return false;
  if (looks_like_finite_past(lower)) return true;
  return looks_like_third_person(token, lower, lowercase(prev));
}

std::string join(const std::vector<std::string>& tokens, std::size_t begin,
                 std::size_t end) {
  std::string out;
  for (std::size_t i = begin; i < end; ++i) {
    if (!out.empty()) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

// Emits at most one (subject, verb group, remainder) triple from one clause.
bool clause_to_triple(const std::vector<std::string>& tokens, Triple& out) {
  const std::size_t n = tokens.size();
  // Leftmost noun chunk must be nonempty, so the verb search starts at 1.
  std::size_t verb = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (is_verb_start(tokens[i], tokens[i - 1])) {
      verb = i;
      break;
    }
  }
  if (verb == 0) return false;

  std::size_t group_end = verb + 1;
  while (group_end < n) {
    const std::string lower = lowercase(tokens[group_end]);
    const std::string prev_lower = lowercase(tokens[group_end - 1]);
    const bool prev_chains = modals().count(prev_lower) || auxiliaries().count(prev_lower) ||
                             lower == "not" || prev_lower == "not" || prev_lower == "never";
    if (lower == "not" || lower == "never") {
      ++group_end;
      continue;
    }
    if (modals().count(prev_lower) && determiners().count(lower) == 0) {
      // A modal is always followed by a bare verb.
      ++group_end;
      continue;
    }
    if (prev_chains && (auxiliaries().count(lower) || verb_lexicon().count(lower) ||
                        (lowercase_initial(tokens[group_end]) &&
                         looks_like_participle(lower)))) {
      ++group_end;
      continue;
    }
    break;
  }

  out.subject = join(tokens, 0, verb);
  out.predicate = join(tokens, verb, group_end);
  out.object = join(tokens, group_end, n);
  return !out.subject.empty() && !out.predicate.empty();
}

}  // namespace

std::vector<Triple> rule_based_extract(const std::string& text) {
  const std::vector<std::string> tokens = clean_tokens(text);

  std::vector<std::vector<std::string>> clauses;
  std::vector<std::string> current;
  for (const std::string& token : tokens) {
    const std::string lower = lowercase(token);
    if (coordinators().count(lower) || relative_markers().count(lower)) {
      if (!current.empty()) clauses.push_back(std::move(current));
      current.clear();
      continue;
    }
    current.push_back(token);
  }
  if (!current.empty()) clauses.push_back(std::move(current));

  std::vector<Triple> triples;
  for (const auto& clause : clauses) {
    Triple t;
    if (clause_to_triple(clause, t)) {
      t.rank = static_cast<int>(triples.size());
      triples.push_back(std::move(t));
    }
  }
  return triples;
}

const std::string& RuleBasedExtractor::name() const {
  static const std::string n = "rule";
  return n;
}

bool RuleBasedExtractor::supports_language(const std::string& code) const {
  return code == "en";
}

std::vector<Triple> RuleBasedExtractor::extract(const std::string& text) const {
  return rule_based_extract(text);
}

AdapterExtractor::AdapterExtractor(std::string command, std::set<std::string> languages)
    : name_("adapter"), command_(std::move(command)), languages_(std::move(languages)) {}

AdapterExtractor::~AdapterExtractor() = default;

const std::string& AdapterExtractor::name() const { return name_; }

bool AdapterExtractor::supports_language(const std::string& code) const {
  return languages_.empty() || languages_.count(code) > 0;
}

std::vector<Triple> AdapterExtractor::extract(const std::string& text) const {
  if (!process_) process_ = std::make_unique<LineProcess>(command_);

  json request = {{"id", "0"}, {"text", text}};
  const std::string reply = process_->round_trip(request.dump());

  json response;
  try {
    response = json::parse(reply);
  } catch (const json::exception& e) {
    raise(ErrorKind::Extraction, "adapter returned malformed JSON: " + std::string(e.what()));
  }
  if (!response.contains("triples") || !response["triples"].is_array()) {
    raise(ErrorKind::Extraction, "adapter response lacks a \"triples\" array");
  }

  std::vector<Triple> triples;
  for (const json& item : response["triples"]) {
    Triple t;
    t.subject = item.value("s", "");
    t.predicate = item.value("p", "");
    t.object = item.value("o", "");
    if (t.subject.empty() || t.predicate.empty()) {
      raise(ErrorKind::Extraction, "adapter produced a triple with an empty subject or predicate");
    }
    t.rank = static_cast<int>(triples.size());
    triples.push_back(std::move(t));
  }
  return triples;
}

TripleSet extract_triples(const Extractor& extractor, const LabeledSentence& sentence) {
  if (!extractor.supports_language(sentence.language)) {
    raise(ErrorKind::Capability, "extractor \"" + extractor.name() +
                                     "\" does not support language \"" + sentence.language + "\"");
  }

  std::vector<Triple> raw;
  try {
    raw = extractor.extract(sentence.text);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Extraction) {
      throw Error(ErrorKind::Extraction,
                  "sentence \"" + sentence.id + "\": " + std::string(e.what()));
    }
    throw;
  }

  TripleSet ts;
  ts.source_id = sentence.id;
  ts.pre_cap_count = raw.size();
  const std::size_t keep = std::min(raw.size(), kTripleCap);
  ts.triples.assign(raw.begin(), raw.begin() + static_cast<std::ptrdiff_t>(keep));
  for (std::size_t i = 0; i < ts.triples.size(); ++i) {
    ts.triples[i].source_id = sentence.id;
    ts.triples[i].rank = static_cast<int>(i);
  }
  return ts;
}

EntityRecognizer capitalized_entity_recognizer() {
  return [](const std::string& text) {
    std::set<std::string> spans;
    for (const std::string& token : clean_tokens(text)) {
      if (token.size() >= 2 && std::isupper(static_cast<unsigned char>(token[0])) != 0) {
        spans.insert(token);
      }
    }
    return spans;
  };
}

TripleSet filter_named_entities(const TripleSet& ts, const EntityRecognizer& recognizer,
                                NeFilterMode mode) {
  TripleSet out;
  out.source_id = ts.source_id;
  out.pre_cap_count = ts.pre_cap_count;
  for (const Triple& t : ts.triples) {
    const bool subject_hit = !recognizer(t.subject).empty();
    const bool object_hit = !recognizer(t.object).empty();
    const bool keep = (mode == NeFilterMode::Or) ? (subject_hit || object_hit)
                                                 : (subject_hit && object_hit);
    if (keep) out.triples.push_back(t);
  }
  return out;
}

namespace {

bool word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '\'' || c == '-';
}

// Replaces exact, token-bounded occurrences of each map key.
std::string replace_tokens(const std::string& text,
                           const std::map<std::string, std::string>& antecedents) {
  std::string out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!word_char(text[i])) {
      out.push_back(text[i]);
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && word_char(text[j])) ++j;
    const std::string token = text.substr(i, j - i);
    auto it = antecedents.find(token);
    out += (it == antecedents.end()) ? token : it->second;
    i = j;
  }
  return out;
}

}  // namespace

TripleSet resolve_coreference(const TripleSet& ts,
                              const std::map<std::string, std::string>& antecedents) {
  TripleSet out = ts;
  if (antecedents.empty()) return out;
  for (Triple& t : out.triples) {
    t.subject = replace_tokens(t.subject, antecedents);
    t.object = replace_tokens(t.object, antecedents);
  }
  return out;
}

double coverage_stats(std::span<const TripleSet> corpus, std::size_t cap) {
  if (corpus.empty()) {
    raise(ErrorKind::Validation, "coverage statistic is undefined on an empty corpus");
  }
  std::size_t within = 0;
  for (const TripleSet& ts : corpus) {
    if (ts.pre_cap_count <= cap) ++within;
  }
  return static_cast<double>(within) / static_cast<double>(corpus.size());
}

std::string triple_sets_to_jsonl(std::span<const TripleSet> sets) {
  std::string out;
  for (const TripleSet& ts : sets) {
    json triples = json::array();
    for (const Triple& t : ts.triples) {
      triples.push_back({{"s", t.subject}, {"p", t.predicate}, {"o", t.object}, {"rank", t.rank}});
    }
    json line = {{"id", ts.source_id},
                 {"pre_cap_count", ts.pre_cap_count},
                 {"triples", std::move(triples)}};
    out += line.dump();
    out += '\n';
  }
  return out;
}

std::vector<TripleSet> triple_sets_from_jsonl(const std::string& content) {
  std::vector<TripleSet> sets;
  std::istringstream in(content);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      raise(ErrorKind::Integrity, "triples file corrupt at line " + std::to_string(line_no) +
                                      ": " + e.what());
    }
    if (!obj.contains("id") || !obj.contains("triples")) {
      raise(ErrorKind::Integrity, "triples file corrupt at line " + std::to_string(line_no) +
                                      ": missing fields");
    }
    TripleSet ts;
    ts.source_id = obj["id"].get<std::string>();
    ts.pre_cap_count = obj.value("pre_cap_count", obj["triples"].size());
    for (const json& item : obj["triples"]) {
      Triple t;
      t.subject = item.value("s", "");
      t.predicate = item.value("p", "");
      t.object = item.value("o", "");
      t.rank = item.value("rank", static_cast<int>(ts.triples.size()));
      t.source_id = ts.source_id;
      ts.triples.push_back(std::move(t));
    }
    if (ts.triples.size() > kTripleCap) {
      raise(ErrorKind::Integrity, "triples file corrupt at line " + std::to_string(line_no) +
                                      ": more than " + std::to_string(kTripleCap) +
                                      " triples for id \"" + ts.source_id + "\"");
    }
    sets.push_back(std::move(ts));
  }
  return sets;
}

void save_triple_sets(std::span<const TripleSet> sets, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  const std::string content = triple_sets_to_jsonl(sets);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) raise(ErrorKind::Io, "write failed: " + path.string());
}

std::vector<TripleSet> load_triple_sets(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    raise(ErrorKind::MissingInput, "triples file not found: " + path.string());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return triple_sets_from_jsonl(buf.str());
}

}  // namespace cw
