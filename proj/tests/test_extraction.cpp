#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "extraction.hpp"
#include "rng.hpp"
#include "test_util.hpp"

using namespace cw;

namespace {

LabeledSentence sentence(const std::string& id, const std::string& text,
                         const std::string& language = "en") {
  LabeledSentence s;
  s.id = id;
  s.text = text;
  s.language = language;
  return s;
}

// The worked example's three triples, as fixtures carry them.
TripleSet example_triples() {
  const std::string jsonl = testutil::read_file(testutil::fixture("paper_triples.jsonl"));
  auto sets = triple_sets_from_jsonl(jsonl);
  REQUIRE(sets.size() == 1);
  return sets[0];
}

class FakeExtractor : public Extractor {
 public:
  explicit FakeExtractor(std::size_t count, bool fail = false) : count_(count), fail_(fail) {}
  const std::string& name() const override {
    static const std::string n = "fake";
    return n;
  }
  bool supports_language(const std::string& code) const override { return code == "en"; }
  std::vector<Triple> extract(const std::string&) const override {
    if (fail_) raise(ErrorKind::Extraction, "backend exploded");
    std::vector<Triple> out;
    for (std::size_t i = 0; i < count_; ++i) {
      Triple t;
      t.subject = "s" + std::to_string(i);
      t.predicate = "p" + std::to_string(i);
      t.object = "o" + std::to_string(i);
      t.rank = static_cast<int>(i);
      out.push_back(std::move(t));
    }
    return out;
  }

 private:
  std::size_t count_;
  bool fail_;
};

}  // namespace

TEST_CASE("rule_based_extract finds subject, verb group and remainder") {
  const auto simple = rule_based_extract("they wrote all the tax bills");
  REQUIRE(simple.size() == 1);
  CHECK(simple[0].subject == "they");
  CHECK(simple[0].predicate == "wrote");
  CHECK(simple[0].object == "all the tax bills");

  const auto resolved = rule_based_extract("the Democrats wrote all the tax bills");
  REQUIRE(resolved.size() == 1);
  CHECK(resolved[0].subject == "the Democrats");
  CHECK(resolved[0].predicate == "wrote");
  CHECK(resolved[0].object == "all the tax bills");
}

TEST_CASE("rule_based_extract absorbs auxiliary chains") {
  const auto triples =
      rule_based_extract("the Democrats have controlled the Congress for the last twenty-two years");
  REQUIRE(triples.size() == 1);
  CHECK(triples[0].subject == "the Democrats");
  CHECK(triples[0].predicate == "have controlled");
  CHECK(triples[0].object == "the Congress for the last twenty-two years");
}

TEST_CASE("rule_based_extract handles degenerate inputs") {
  CHECK(rule_based_extract("").empty());
  CHECK(rule_based_extract("Yes.").empty());
  CHECK(rule_based_extract("Good evening.").empty());

  const auto intransitive = rule_based_extract("Taxes rose.");
  REQUIRE(intransitive.size() == 1);
  CHECK(intransitive[0].subject == "Taxes");
  CHECK(intransitive[0].predicate == "rose");
  CHECK(intransitive[0].object.empty());
}

TEST_CASE("rule_based_extract splits coordinated clauses") {
  const auto triples = rule_based_extract(
      "the Democrats have controlled the Congress and they wrote all the tax bills");
  REQUIRE(triples.size() == 2);
  CHECK(triples[0].rank == 0);
  CHECK(triples[1].rank == 1);
  CHECK(triples[0].subject == "the Democrats");
  CHECK(triples[1].subject == "they");
}

TEST_CASE("rule_based_extract is deterministic over repeated calls") {
  const std::vector<std::string> corpus = {
      "I must remind him the Democrats have controlled the Congress for the last "
      "twenty-two years and they wrote all the tax bills.",
      "The Senate passed the farm bill last week.",
      "Unemployment fell to four percent in March.",
      "Hello?",
  };
  std::vector<std::vector<Triple>> first;
  for (const auto& text : corpus) first.push_back(rule_based_extract(text));
  for (int round = 0; round < 1000; ++round) {
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      if (rule_based_extract(corpus[i]) != first[i]) {
        FAIL("nondeterministic extraction on round " << round);
      }
    }
  }
}

TEST_CASE("extract_triples caps at four and keeps pre-cap counts") {
  const FakeExtractor six(6);
  const TripleSet ts = extract_triples(six, sentence("s1", "whatever"));
  CHECK(ts.pre_cap_count == 6);
  REQUIRE(ts.triples.size() == kTripleCap);
  for (std::size_t i = 0; i < ts.triples.size(); ++i) {
    CHECK(ts.triples[i].rank == static_cast<int>(i));
    CHECK(ts.triples[i].subject == "s" + std::to_string(i));
    CHECK(ts.triples[i].source_id == "s1");
  }
}

TEST_CASE("extract_triples surfaces capability and backend errors") {
  const FakeExtractor fake(1);
  try {
    extract_triples(fake, sentence("s1", "text", "nl"));
    FAIL("expected a capability error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Capability);
  }

  const FakeExtractor failing(0, /*fail=*/true);
  try {
    extract_triples(failing, sentence("s7", "text"));
    FAIL("expected an extraction error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Extraction);
    CHECK(std::string(e.what()).find("s7") != std::string::npos);
  }
}

TEST_CASE("extract_triples permits sentences with no extractable relation") {
  const RuleBasedExtractor rule;
  const TripleSet ts = extract_triples(rule, sentence("s2", "Yes."));
  CHECK(ts.triples.empty());
  CHECK(ts.pre_cap_count == 0);
}

TEST_CASE("NE filter on the worked example: OR keeps entity-bearing triples, AND is stricter") {
  const TripleSet ts = example_triples();
  const EntityRecognizer recognizer = capitalized_entity_recognizer();

  const TripleSet kept_or = filter_named_entities(ts, recognizer, NeFilterMode::Or);
  REQUIRE(kept_or.triples.size() == 2);
  CHECK(kept_or.triples[0].subject == "I");       // object mentions Democrats/Congress
  CHECK(kept_or.triples[1].subject == "the Democrats");

  const TripleSet kept_and = filter_named_entities(ts, recognizer, NeFilterMode::And);
  REQUIRE(kept_and.triples.size() == 1);
  CHECK(kept_and.triples[0].subject == "the Democrats");
  CHECK(kept_and.triples[0].predicate == "have controlled");

  // Ranks survive filtering untouched.
  CHECK(kept_or.triples[0].rank == 0);
  CHECK(kept_or.triples[1].rank == 1);
  CHECK(kept_and.triples[0].rank == 1);
}

TEST_CASE("NE filter edge cases and idempotence") {
  const TripleSet ts = example_triples();
  const auto nothing = [](const std::string&) { return std::set<std::string>{}; };
  CHECK(filter_named_entities(ts, nothing).triples.empty());

  TripleSet empty;
  empty.source_id = "e";
  CHECK(filter_named_entities(empty, capitalized_entity_recognizer()).triples.empty());

  // filter(filter(x)) == filter(x), and the result is an ordered subsequence.
  Rng rng(7);
  const EntityRecognizer recognizer = capitalized_entity_recognizer();
  for (int round = 0; round < 50; ++round) {
    TripleSet random_set;
    random_set.source_id = "r";
    const std::size_t n = rng.below(5);
    for (std::size_t i = 0; i < n; ++i) {
      Triple t;
      t.subject = rng.below(2) ? "Congress" : "they";
      t.predicate = "did";
      t.object = rng.below(2) ? "the Economy" : "nothing much";
      t.rank = static_cast<int>(i);
      random_set.triples.push_back(std::move(t));
    }
    const NeFilterMode mode = rng.below(2) ? NeFilterMode::And : NeFilterMode::Or;
    const TripleSet once = filter_named_entities(random_set, recognizer, mode);
    const TripleSet twice = filter_named_entities(once, recognizer, mode);
    CHECK(once.triples == twice.triples);
    CHECK(once.triples.size() <= random_set.triples.size());
    std::size_t cursor = 0;
    for (const Triple& t : once.triples) {
      while (cursor < random_set.triples.size() && !(random_set.triples[cursor] == t)) ++cursor;
      CHECK(cursor < random_set.triples.size());
    }
  }
}

TEST_CASE("resolve_coreference substitutes antecedents in subject and object only") {
  const TripleSet ts = example_triples();
  const TripleSet resolved = resolve_coreference(ts, {{"they", "the Democrats"}});
  REQUIRE(resolved.triples.size() == 3);
  CHECK(resolved.triples[2].subject == "the Democrats");
  CHECK(resolved.triples[2].predicate == "wrote");
  CHECK(resolved.triples[2].object == "all the tax bills");
  // Untouched triples and ranks.
  CHECK(resolved.triples[0].subject == "I");
  for (std::size_t i = 0; i < 3; ++i) CHECK(resolved.triples[i].rank == ts.triples[i].rank);
}

TEST_CASE("resolve_coreference details") {
  TripleSet ts;
  ts.source_id = "x";
  Triple t;
  t.subject = "he";
  t.predicate = "saw";
  t.object = "them";
  ts.triples.push_back(t);

  const TripleSet mapped = resolve_coreference(ts, {{"them", "the bills"}});
  CHECK(mapped.triples[0].subject == "he");
  CHECK(mapped.triples[0].object == "the bills");

  // Identity on an empty map.
  const TripleSet same = resolve_coreference(ts, {});
  CHECK(same.triples == ts.triples);

  // Exact token match: boundaries and case both matter.
  TripleSet tricky;
  tricky.source_id = "y";
  Triple u;
  u.subject = "They themselves";
  u.predicate = "wrote";
  u.object = "it; they did";
  tricky.triples.push_back(u);
  const TripleSet replaced = resolve_coreference(tricky, {{"they", "the Democrats"}});
  CHECK(replaced.triples[0].subject == "They themselves");
  CHECK(replaced.triples[0].object == "it; the Democrats did");

  // Predicate tokens never change.
  TripleSet pred;
  pred.source_id = "z";
  Triple v;
  v.subject = "someone";
  v.predicate = "they";
  v.object = "thing";
  pred.triples.push_back(v);
  CHECK(resolve_coreference(pred, {{"they", "the Democrats"}}).triples[0].predicate == "they");
}

TEST_CASE("resolve_coreference is idempotent when replacements contain no keys") {
  Rng rng(11);
  const std::map<std::string, std::string> antecedents = {
      {"they", "the Democrats"}, {"him", "the president"}, {"it", "the bill"}};
  for (int round = 0; round < 100; ++round) {
    TripleSet ts;
    ts.source_id = "r";
    Triple t;
    const char* subjects[] = {"they", "he told him", "it all", "the Senate"};
    const char* objects[] = {"them and it", "him", "the Congress", "they say"};
    t.subject = subjects[rng.below(4)];
    t.predicate = "predicate";
    t.object = objects[rng.below(4)];
    t.rank = 0;
    ts.triples.push_back(std::move(t));

    const TripleSet once = resolve_coreference(ts, antecedents);
    const TripleSet twice = resolve_coreference(once, antecedents);
    CHECK(once.triples == twice.triples);
    CHECK(once.triples.size() == ts.triples.size());
  }
}

TEST_CASE("coverage_stats is the fraction of sentences within the cap") {
  auto with_count = [](std::size_t n) {
    TripleSet ts;
    ts.pre_cap_count = n;
    return ts;
  };
  const std::vector<TripleSet> mixed = {with_count(1), with_count(2), with_count(5),
                                        with_count(3)};
  CHECK(coverage_stats(mixed, 4) == doctest::Approx(0.75));

  const std::vector<TripleSet> all_within = {with_count(0), with_count(4)};
  CHECK(coverage_stats(all_within, 4) == 1.0);

  const std::vector<TripleSet> none = {with_count(5), with_count(5)};
  CHECK(coverage_stats(none, 4) == 0.0);

  CHECK_THROWS_AS(coverage_stats(std::vector<TripleSet>{}, 4), Error);
}

TEST_CASE("triple sets round-trip through JSONL") {
  const RuleBasedExtractor rule;
  std::vector<TripleSet> sets;
  sets.push_back(extract_triples(
      rule, sentence("t01",
                     "I must remind him the Democrats have controlled the Congress for the "
                     "last twenty-two years and they wrote all the tax bills.")));
  sets.push_back(extract_triples(rule, sentence("t03", "Hello?")));

  testutil::TempDir tmp("triples");
  save_triple_sets(sets, tmp.file("triples.jsonl"));
  const auto loaded = load_triple_sets(tmp.file("triples.jsonl"));
  REQUIRE(loaded.size() == sets.size());
  for (std::size_t i = 0; i < sets.size(); ++i) {
    CHECK(loaded[i].source_id == sets[i].source_id);
    CHECK(loaded[i].pre_cap_count == sets[i].pre_cap_count);
    CHECK(loaded[i].triples == sets[i].triples);
  }

  CHECK_THROWS_AS(load_triple_sets(tmp.file("missing.jsonl")), Error);

  testutil::write_file(tmp.file("corrupt.jsonl"), "{\"id\": \"x\", \"triples\": [}\n");
  try {
    load_triple_sets(tmp.file("corrupt.jsonl"));
    FAIL("expected an integrity error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Integrity);
  }
}

TEST_CASE("adapter extractor speaks the JSONL contract") {
  const std::string command =
      "python3 " + testutil::fixture("adapter_extractor.py").string();
  const AdapterExtractor adapter(command);
  CHECK(adapter.supports_language("en"));
  CHECK(adapter.supports_language("nl"));

  const TripleSet ts = extract_triples(adapter, sentence("a1", "they wrote the bills"));
  REQUIRE(ts.triples.size() == 1);
  CHECK(ts.triples[0].subject == "they");
  CHECK(ts.triples[0].predicate == "wrote");
  CHECK(ts.triples[0].object == "the bills");

  // Repeated requests reuse the same process.
  const TripleSet again = extract_triples(adapter, sentence("a2", "Congress cut funding"));
  CHECK(again.triples.size() == 1);
}

TEST_CASE("adapter process failure carries its exit status") {
  const AdapterExtractor broken("exit 3");
  try {
    extract_triples(broken, sentence("a1", "anything"));
    FAIL("expected an extraction error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Extraction);
    CHECK(std::string(e.what()).find("a1") != std::string::npos);
  }
}
