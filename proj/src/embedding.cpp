#include "embedding.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "io_util.hpp"
#include "stable_hash.hpp"
#include "subprocess.hpp"

namespace cw {

namespace {

constexpr std::size_t kSlotSize = kPartsPerTriple * kPartDim;
constexpr char kCacheMagic[4] = {'C', 'W', 'B', '1'};

bool ascii_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }

void check_finite(std::span<const double> values, const std::string& what) {
  for (double v : values) {
    if (!std::isfinite(v)) raise(ErrorKind::Numeric, "non-finite value in " + what);
  }
}

void normalize_or_pin(Vector& v) {
  double norm_sq = 0.0;
  for (double x : v) norm_sq += x * x;
  if (norm_sq < 1e-24) {
    v.assign(v.size(), 0.0);
    v[0] = 1.0;
    return;
  }
  const double inv = 1.0 / std::sqrt(norm_sq);
  for (double& x : v) x *= inv;
}

// Deterministic pseudo-random vector keyed by (tag, seed, text).
Vector hashed_unit_vector(std::uint64_t tag, std::uint64_t seed, const std::string& text,
                          std::size_t dim) {
  const std::uint64_t key = splitmix64(tag ^ splitmix64(seed) ^ fnv1a64(text));
  Vector v(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    v[i] = 2.0 * unit_interval(splitmix64(key + i)) - 1.0;
  }
  normalize_or_pin(v);
  return v;
}

class StubSentenceEncoder final : public SentenceEncoder {
 public:
  explicit StubSentenceEncoder(std::uint64_t seed) : seed_(seed) {}
  const std::string& name() const override {
    static const std::string n = "stub-encoder";
    return n;
  }
  std::size_t dim() const override { return kSentenceDim; }
  Vector encode(const std::string& text) const override {
    return hashed_unit_vector(0x53454e54ull, seed_, text, kSentenceDim);
  }

 private:
  std::uint64_t seed_;
};

class StubWordVectors final : public WordVectors {
 public:
  explicit StubWordVectors(std::uint64_t seed) : seed_(seed) {}
  const std::string& name() const override {
    static const std::string n = "stub-wordvec";
    return n;
  }
  std::size_t dim() const override { return kPartDim; }
  Vector lookup(const std::string& token) const override {
    return hashed_unit_vector(0x574f5244ull, seed_, token, kPartDim);
  }

 private:
  std::uint64_t seed_;
};

class FileWordVectors final : public WordVectors {
 public:
  explicit FileWordVectors(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
      raise(ErrorKind::MissingInput, "word vector file not found: " + path.string());
    }
    std::ifstream in(path);
    if (!in) raise(ErrorKind::Io, "cannot open " + path.string());

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;

      std::istringstream row(line);
      std::string token;
      row >> token;
      std::vector<double> values;
      double v;
      while (row >> v) values.push_back(v);

      // Optional "count dim" header emitted by common training tools.
      if (line_no == 1 && values.size() == 1 &&
          token.find_first_not_of("0123456789") == std::string::npos) {
        dim_ = static_cast<std::size_t>(values[0]);
        continue;
      }
      if (dim_ == 0) dim_ = values.size();
      if (values.size() != dim_ || token.empty()) {
        raise(ErrorKind::Parse, path.string() + ": line " + std::to_string(line_no) +
                                    ": expected a token and " + std::to_string(dim_) +
                                    " values");
      }
      vectors_.emplace(std::move(token), std::move(values));
    }
    if (dim_ == 0) {
      raise(ErrorKind::Parse, path.string() + ": no word vectors found");
    }
  }

  const std::string& name() const override {
    static const std::string n = "wordvec-file";
    return n;
  }
  std::size_t dim() const override { return dim_; }
  Vector lookup(const std::string& token) const override {
    auto it = vectors_.find(token);
    if (it == vectors_.end()) return Vector(dim_, 0.0);  // OOV
    return it->second;
  }

 private:
  std::unordered_map<std::string, Vector> vectors_;
  std::size_t dim_ = 0;
};

class AdapterSentenceEncoder final : public SentenceEncoder {
 public:
  explicit AdapterSentenceEncoder(std::string command) : command_(std::move(command)) {}

  const std::string& name() const override {
    static const std::string n = "encoder-adapter";
    return n;
  }
  std::size_t dim() const override { return kSentenceDim; }

  Vector encode(const std::string& text) const override {
    if (!process_) process_ = std::make_unique<LineProcess>(command_);
    nlohmann::json request = {{"id", "0"}, {"text", text}};
    const std::string reply = process_->round_trip(request.dump());
    nlohmann::json response;
    try {
      response = nlohmann::json::parse(reply);
    } catch (const nlohmann::json::exception& e) {
      raise(ErrorKind::Extraction, "encoder adapter returned malformed JSON: " +
                                       std::string(e.what()));
    }
    if (!response.contains("vec") || !response["vec"].is_array()) {
      raise(ErrorKind::Extraction, "encoder adapter response lacks a \"vec\" array");
    }
    Vector v = response["vec"].get<Vector>();
    if (v.size() != kSentenceDim) {
      raise(ErrorKind::Config, "encoder adapter produced dimension " +
                                   std::to_string(v.size()) + ", expected " +
                                   std::to_string(kSentenceDim));
    }
    return v;
  }

 private:
  std::string command_;
  mutable std::unique_ptr<LineProcess> process_;
};

}  // namespace

std::vector<std::string> WordVectors::tokenize(const std::string& text) const {
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

std::size_t EmbeddingBundle::valid_count() const {
  std::size_t n = 0;
  for (bool m : mask) n += m ? 1 : 0;
  return n;
}

std::span<double> EmbeddingBundle::part(std::size_t triple, std::size_t component) {
  return std::span<double>(triple_parts)
      .subspan((triple * kPartsPerTriple + component) * kPartDim, kPartDim);
}

std::span<const double> EmbeddingBundle::part(std::size_t triple,
                                              std::size_t component) const {
  return std::span<const double>(triple_parts)
      .subspan((triple * kPartsPerTriple + component) * kPartDim, kPartDim);
}

EmbeddingBundle zero_bundle(const std::string& source_id) {
  EmbeddingBundle b;
  b.source_id = source_id;
  b.sentence_vec.assign(kSentenceDim, 0.0);
  b.triple_parts.assign(kMaxTriples * kSlotSize, 0.0);
  b.mask.fill(false);
  return b;
}

Vector encode_part(const WordVectors& wv, const std::string& part_text) {
  const std::vector<std::string> tokens = wv.tokenize(part_text);
  Vector mean(wv.dim(), 0.0);
  if (tokens.empty()) return mean;
  for (const std::string& token : tokens) {
    Vector v = wv.lookup(token);
    if (v.size() != wv.dim()) {
      raise(ErrorKind::Config, "word vector provider \"" + wv.name() +
                                   "\" returned dimension " + std::to_string(v.size()) +
                                   ", declared " + std::to_string(wv.dim()));
    }
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += v[i];
  }
  const double inv = 1.0 / static_cast<double>(tokens.size());
  for (double& x : mean) x *= inv;
  return mean;
}

EmbeddingBundle build_bundle(const SentenceEncoder& enc, const WordVectors& wv,
                             const LabeledSentence& sentence, const TripleSet& triples) {
  if (triples.source_id != sentence.id) {
    raise(ErrorKind::Validation, "triple set id \"" + triples.source_id +
                                     "\" does not match sentence id \"" + sentence.id + "\"");
  }
  if (enc.dim() != kSentenceDim) {
    raise(ErrorKind::Config, "sentence encoder \"" + enc.name() + "\" has dimension " +
                                 std::to_string(enc.dim()) + ", expected " +
                                 std::to_string(kSentenceDim));
  }
  if (wv.dim() != kPartDim) {
    raise(ErrorKind::Config, "word vector provider \"" + wv.name() + "\" has dimension " +
                                 std::to_string(wv.dim()) + ", expected " +
                                 std::to_string(kPartDim));
  }
  if (triples.triples.size() > kMaxTriples) {
    raise(ErrorKind::Validation, "triple set for \"" + sentence.id + "\" exceeds the cap");
  }

  EmbeddingBundle b = zero_bundle(sentence.id);
  b.sentence_vec = enc.encode(sentence.text);
  if (b.sentence_vec.size() != kSentenceDim) {
    raise(ErrorKind::Config, "sentence encoder \"" + enc.name() +
                                 "\" returned dimension " + std::to_string(b.sentence_vec.size()));
  }
  check_finite(b.sentence_vec, "sentence encoding of \"" + sentence.id + "\"");

  for (std::size_t i = 0; i < triples.triples.size(); ++i) {
    const Triple& t = triples.triples[i];
    const std::string* parts[kPartsPerTriple] = {&t.subject, &t.predicate, &t.object};
    for (std::size_t p = 0; p < kPartsPerTriple; ++p) {
      Vector v = encode_part(wv, *parts[p]);
      check_finite(v, "triple part encoding of \"" + sentence.id + "\"");
      std::copy(v.begin(), v.end(), b.part(i, p).begin());
    }
    b.mask[i] = true;
  }
  return b;
}

std::unique_ptr<SentenceEncoder> stub_sentence_encoder(std::uint64_t seed) {
  return std::make_unique<StubSentenceEncoder>(seed);
}

std::unique_ptr<WordVectors> stub_word_vectors(std::uint64_t seed) {
  return std::make_unique<StubWordVectors>(seed);
}

std::unique_ptr<WordVectors> file_word_vectors(const std::filesystem::path& path) {
  return std::make_unique<FileWordVectors>(path);
}

std::unique_ptr<SentenceEncoder> adapter_sentence_encoder(const std::string& command) {
  return std::make_unique<AdapterSentenceEncoder>(command);
}

namespace {

std::string encode_record(const EmbeddingBundle& b) {
  std::string rec;
  put_u32(rec, static_cast<std::uint32_t>(b.source_id.size()));
  put_bytes(rec, b.source_id);
  for (double v : b.sentence_vec) put_f64(rec, v);
  for (double v : b.triple_parts) put_f64(rec, v);
  for (bool m : b.mask) put_u8(rec, m ? 1 : 0);
  put_u32(rec, crc32_of(rec));
  return rec;
}

}  // namespace

std::size_t cache_bundles(std::span<const EmbeddingBundle> bundles,
                          const std::filesystem::path& path) {
  std::string out;
  put_bytes(out, std::string_view(kCacheMagic, 4));
  put_u32(out, static_cast<std::uint32_t>(kSentenceDim));
  put_u32(out, static_cast<std::uint32_t>(kMaxTriples));
  put_u32(out, static_cast<std::uint32_t>(kPartsPerTriple));
  put_u32(out, static_cast<std::uint32_t>(kPartDim));
  put_u64(out, bundles.size());
  for (const EmbeddingBundle& b : bundles) {
    if (b.sentence_vec.size() != kSentenceDim ||
        b.triple_parts.size() != kMaxTriples * kSlotSize) {
      raise(ErrorKind::Dimension, "bundle \"" + b.source_id + "\" has unexpected dimensions");
    }
    out += encode_record(b);
  }
  write_binary_file(path, out);
  return bundles.size();
}

std::vector<EmbeddingBundle> load_bundles(const std::filesystem::path& path) {
  const std::string content = read_binary_file(path, ErrorKind::MissingInput);
  ByteReader reader(content, ErrorKind::Integrity);

  if (reader.take(4) != std::string_view(kCacheMagic, 4)) {
    raise(ErrorKind::Integrity, path.string() + ": bad cache magic");
  }
  const std::uint32_t sentence_dim = reader.u32();
  const std::uint32_t max_triples = reader.u32();
  const std::uint32_t parts = reader.u32();
  const std::uint32_t part_dim = reader.u32();
  if (sentence_dim != kSentenceDim || max_triples != kMaxTriples ||
      parts != kPartsPerTriple || part_dim != kPartDim) {
    raise(ErrorKind::Integrity, path.string() + ": cache dimensions do not match this build");
  }
  const std::uint64_t count = reader.u64();

  std::vector<EmbeddingBundle> bundles;
  bundles.reserve(count);
  for (std::uint64_t r = 0; r < count; ++r) {
    const std::size_t record_start = reader.position();
    EmbeddingBundle b = zero_bundle();
    const std::uint32_t id_len = reader.u32();
    b.source_id = std::string(reader.take(id_len));
    for (std::size_t i = 0; i < kSentenceDim; ++i) b.sentence_vec[i] = reader.f64();
    for (std::size_t i = 0; i < kMaxTriples * kSlotSize; ++i) b.triple_parts[i] = reader.f64();
    for (std::size_t i = 0; i < kMaxTriples; ++i) b.mask[i] = reader.u8() != 0;

    const std::size_t record_end = reader.position();
    const std::uint32_t stored_crc = reader.u32();
    const std::uint32_t actual_crc =
        crc32_of(std::string_view(content).substr(record_start, record_end - record_start));
    if (stored_crc != actual_crc) {
      raise(ErrorKind::Integrity, path.string() + ": CRC mismatch in record " +
                                      std::to_string(r) + " (id \"" + b.source_id + "\")");
    }
    bundles.push_back(std::move(b));
  }
  if (reader.remaining() != 0) {
    raise(ErrorKind::Integrity, path.string() + ": trailing bytes after last record");
  }
  return bundles;
}

}  // namespace cw
