#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "corpus.hpp"
#include "extraction.hpp"
#include "linalg.hpp"

namespace cw {

constexpr std::size_t kSentenceDim = 768;
constexpr std::size_t kPartDim = 300;
constexpr std::size_t kPartsPerTriple = 3;  // subject, predicate, object
constexpr std::size_t kMaxTriples = kTripleCap;

// Sentence-level encoder (the language-model branch).
class SentenceEncoder {
 public:
  virtual ~SentenceEncoder() = default;
  virtual const std::string& name() const = 0;
  virtual std::size_t dim() const = 0;
  virtual Vector encode(const std::string& text) const = 0;
};

// Token-level vectors (the triple branch). lookup is total: out-of-vocabulary
// tokens map to the zero vector.
class WordVectors {
 public:
  virtual ~WordVectors() = default;
  virtual const std::string& name() const = 0;
  virtual std::size_t dim() const = 0;
  virtual Vector lookup(const std::string& token) const = 0;
  // Default tokenizer: whitespace split with leading/trailing punctuation
  // stripped, case preserved.
  virtual std::vector<std::string> tokenize(const std::string& text) const;
};

// Per-sentence numeric features: one sentence vector plus up to kMaxTriples
// triples x 3 parts x kPartDim, with a validity mask. Masked-out slots are
// all-zero by construction.
struct EmbeddingBundle {
  std::string source_id;
  Vector sentence_vec;                    // kSentenceDim
  Vector triple_parts;                    // kMaxTriples * kPartsPerTriple * kPartDim
  std::array<bool, kMaxTriples> mask{};   // true = slot holds a real triple

  std::size_t valid_count() const;

  std::span<double> part(std::size_t triple, std::size_t component);
  std::span<const double> part(std::size_t triple, std::size_t component) const;
};

EmbeddingBundle zero_bundle(const std::string& source_id = "");

// Mean of token vectors over tokenize(part_text); zero vector when the part
// tokenizes to nothing.
Vector encode_part(const WordVectors& wv, const std::string& part_text);

// Fills one bundle from a sentence and its (already capped) triples.
EmbeddingBundle build_bundle(const SentenceEncoder& enc, const WordVectors& wv,
                             const LabeledSentence& sentence, const TripleSet& triples);

// Hermetic providers: unit-normalized vectors from a keyed hash of
// (seed, text), identical on every platform.
std::unique_ptr<SentenceEncoder> stub_sentence_encoder(std::uint64_t seed);
std::unique_ptr<WordVectors> stub_word_vectors(std::uint64_t seed);

// Text-format word vectors: one "token v1 ... vN" line each, optional
// "count dim" header line, UTF-8.
std::unique_ptr<WordVectors> file_word_vectors(const std::filesystem::path& path);

// Out-of-process sentence encoder speaking line-delimited JSON:
//   request  {"id": "...", "text": "..."}
//   response {"id": "...", "vec": [f64 x 768]}
std::unique_ptr<SentenceEncoder> adapter_sentence_encoder(const std::string& command);

// Binary feature cache ("CWB1", little-endian, float64, per-record CRC32).
std::size_t cache_bundles(std::span<const EmbeddingBundle> bundles,
                          const std::filesystem::path& path);
std::vector<EmbeddingBundle> load_bundles(const std::filesystem::path& path);

}  // namespace cw
