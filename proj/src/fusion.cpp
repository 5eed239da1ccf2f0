#include "fusion.hpp"

#include <algorithm>
#include <cmath>

#include "io_util.hpp"
#include "rng.hpp"

namespace cw {

namespace {

constexpr double kProbEpsilon = 1e-12;
constexpr char kModelMagic[4] = {'C', 'W', 'F', 'M'};
constexpr std::uint8_t kModelVersion = 1;

double sigmoid(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void relu_inplace(std::span<double> v) {
  for (double& x : v) x = x > 0.0 ? x : 0.0;
}

void check_stage_finite(std::span<const double> v, const char* stage) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      raise(ErrorKind::Numeric, std::string("non-finite activation at stage ") + stage);
    }
  }
}

void check_bundle_dims(const EmbeddingBundle& b) {
  if (b.sentence_vec.size() != kSentenceDim ||
      b.triple_parts.size() != kMaxTriples * kCatDim) {
    raise(ErrorKind::Dimension, "bundle \"" + b.source_id + "\" does not match the model input shape");
  }
}

void check_model_dims(const FusionModel& m) {
  const bool ok = m.w_part.rows == kPartDim && m.w_part.cols == kPartDim &&
                  m.b_part.size() == kPartDim && m.w_proj.rows == kSentenceDim &&
                  m.w_proj.cols == kCatDim && m.b_proj.size() == kSentenceDim &&
                  m.hidden >= 1 && m.w_hid.rows == m.hidden &&
                  m.w_hid.cols == kConcatDim && m.b_hid.size() == m.hidden &&
                  m.w_out.size() == m.hidden;
  if (!ok) raise(ErrorKind::Dimension, "fusion model has inconsistent parameter shapes");
}

// Glorot-uniform fill: uniform(-a, a), a = scale * sqrt(6 / (fan_in + fan_out)).
void glorot_fill(Matrix& w, std::size_t fan_in, std::size_t fan_out, double scale,
                 Rng& rng) {
  const double a = scale * std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& x : w.data) x = rng.uniform(-a, a);
}

void glorot_fill(Vector& w, std::size_t fan_in, std::size_t fan_out, double scale,
                 Rng& rng) {
  const double a = scale * std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& x : w) x = rng.uniform(-a, a);
}

}  // namespace

FusionModel init_fusion_model(std::uint64_t seed, std::size_t hidden, double init_scale) {
  if (hidden < 1) raise(ErrorKind::Config, "hidden size must be at least 1");

  FusionModel m;
  m.hidden = hidden;
  m.init_seed = seed;
  m.init_scale = init_scale;
  m.w_part = Matrix(kPartDim, kPartDim);
  m.b_part.assign(kPartDim, 0.0);
  m.w_proj = Matrix(kSentenceDim, kCatDim);
  m.b_proj.assign(kSentenceDim, 0.0);
  m.w_hid = Matrix(hidden, kConcatDim);
  m.b_hid.assign(hidden, 0.0);
  m.w_out.assign(hidden, 0.0);
  m.b_out = 0.0;

  // Fixed draw order: w_part, w_proj, w_hid, w_out.
  Rng rng(derive_seed(seed, 0x696e6974ull));
  glorot_fill(m.w_part, kPartDim, kPartDim, init_scale, rng);
  glorot_fill(m.w_proj, kCatDim, kSentenceDim, init_scale, rng);
  glorot_fill(m.w_hid, kConcatDim, hidden, init_scale, rng);
  glorot_fill(m.w_out, hidden, 1, init_scale, rng);
  return m;
}

ForwardTrace forward(const FusionModel& m, const EmbeddingBundle& b, ForwardMode mode) {
  check_model_dims(m);
  check_bundle_dims(b);

  ForwardTrace t;
  t.mode = mode;
  t.part_act.assign(kMaxTriples * kCatDim, 0.0);
  t.mean_act.assign(kCatDim, 0.0);

  // Shared dense layer over every valid (triple, component) part vector.
  std::size_t valid = 0;
  for (std::size_t i = 0; i < kMaxTriples; ++i) {
    const bool active = mode.padding_inclusive_mean || b.mask[i];
    if (!active) continue;
    ++valid;
    for (std::size_t p = 0; p < kPartsPerTriple; ++p) {
      std::span<double> h =
          std::span<double>(t.part_act).subspan((i * kPartsPerTriple + p) * kPartDim, kPartDim);
      affine(m.w_part, b.part(i, p), m.b_part, h);
      // Checked before the ReLU: relu(nan) would otherwise clamp to 0.
      check_stage_finite(h, "part layer");
      if (!mode.linear_surrogate) relu_inplace(h);
    }
  }
  t.valid_count = mode.padding_inclusive_mean ? kMaxTriples : b.valid_count();

  // Per-component mean over the active slots; all-zero when no triples.
  if (valid > 0) {
    const double inv = 1.0 / static_cast<double>(valid);
    for (std::size_t i = 0; i < kMaxTriples; ++i) {
      const bool active = mode.padding_inclusive_mean || b.mask[i];
      if (!active) continue;
      for (std::size_t c = 0; c < kCatDim; ++c) {
        t.mean_act[c] += t.part_act[i * kCatDim + c];
      }
    }
    for (double& x : t.mean_act) x *= inv;
  }

  // Linear projection of the concatenated means back to the sentence width.
  t.projection.assign(kSentenceDim, 0.0);
  affine(m.w_proj, t.mean_act, m.b_proj, t.projection);
  check_stage_finite(t.projection, "projection");

  t.concat_in.assign(kConcatDim, 0.0);
  std::copy(b.sentence_vec.begin(), b.sentence_vec.end(), t.concat_in.begin());
  std::copy(t.projection.begin(), t.projection.end(), t.concat_in.begin() + kSentenceDim);

  t.hidden_act.assign(m.hidden, 0.0);
  affine(m.w_hid, t.concat_in, m.b_hid, t.hidden_act);
  check_stage_finite(t.hidden_act, "hidden layer");
  if (!mode.linear_surrogate) relu_inplace(t.hidden_act);

  t.logit = dot(m.w_out.data(), t.hidden_act.data(), m.hidden) + m.b_out;
  if (!std::isfinite(t.logit)) {
    raise(ErrorKind::Numeric, "non-finite activation at stage logit");
  }
  t.prob = sigmoid(t.logit);
  return t;
}

double loss(const FusionModel& m, const EmbeddingBundle& b, int label, ForwardMode mode) {
  const double p = std::clamp(forward(m, b, mode).prob, kProbEpsilon, 1.0 - kProbEpsilon);
  return label == 1 ? -std::log(p) : -std::log(1.0 - p);
}

double mean_loss(const FusionModel& m, std::span<const EmbeddingBundle> bundles,
                 std::span<const int> labels, ForwardMode mode) {
  if (bundles.size() != labels.size() || bundles.empty()) {
    raise(ErrorKind::Validation, "mean_loss: bundle/label lists must be nonempty and equal length");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < bundles.size(); ++i) {
    total += loss(m, bundles[i], labels[i], mode);
  }
  return total / static_cast<double>(bundles.size());
}

namespace {

// Shared backward walk. `d_logit` seeds the chain; parameter gradients are
// skipped when `grads` is null (the integrated-gradients path only needs
// input gradients).
void backward_from_logit(const FusionModel& m, const EmbeddingBundle& b,
                         const ForwardTrace& t, double d_logit,
                         FusionGradients* grads, InputGradients& inputs) {
  const ForwardMode mode = t.mode;

  inputs.sentence.assign(kSentenceDim, 0.0);
  inputs.triple_parts.assign(kMaxTriples * kCatDim, 0.0);

  if (grads != nullptr) {
    grads->b_out = d_logit;
    grads->w_out.assign(m.hidden, 0.0);
    axpy(d_logit, t.hidden_act, grads->w_out);
  }

  // Through the hidden ReLU layer.
  Vector d_hidden(m.hidden, 0.0);
  for (std::size_t r = 0; r < m.hidden; ++r) {
    const bool active = mode.linear_surrogate || t.hidden_act[r] > 0.0;
    d_hidden[r] = active ? d_logit * m.w_out[r] : 0.0;
  }
  if (grads != nullptr) {
    add_outer(grads->w_hid, d_hidden, t.concat_in);
    axpy(1.0, d_hidden, grads->b_hid);
  }

  Vector d_concat(kConcatDim, 0.0);
  add_matvec_transposed(m.w_hid, d_hidden, d_concat);
  std::copy(d_concat.begin(), d_concat.begin() + kSentenceDim, inputs.sentence.begin());

  // Through the linear projection.
  Vector d_proj(d_concat.begin() + kSentenceDim, d_concat.end());
  if (grads != nullptr) {
    add_outer(grads->w_proj, d_proj, t.mean_act);
    axpy(1.0, d_proj, grads->b_proj);
  }
  Vector d_mean(kCatDim, 0.0);
  add_matvec_transposed(m.w_proj, d_proj, d_mean);

  // Through the mean and the shared part layer.
  if (t.valid_count == 0) return;
  const double inv = 1.0 / static_cast<double>(t.valid_count);

  Vector d_part(kPartDim, 0.0);
  for (std::size_t i = 0; i < kMaxTriples; ++i) {
    const bool active = mode.padding_inclusive_mean || b.mask[i];
    if (!active) continue;
    for (std::size_t p = 0; p < kPartsPerTriple; ++p) {
      const std::size_t offset = (i * kPartsPerTriple + p) * kPartDim;
      for (std::size_t c = 0; c < kPartDim; ++c) {
        const double h = t.part_act[offset + c];
        const bool on = mode.linear_surrogate || h > 0.0;
        d_part[c] = on ? d_mean[p * kPartDim + c] * inv : 0.0;
      }
      if (grads != nullptr) {
        add_outer(grads->w_part, d_part, b.part(i, p));
        axpy(1.0, d_part, grads->b_part);
      }
      add_matvec_transposed(
          m.w_part, d_part,
          std::span<double>(inputs.triple_parts).subspan(offset, kPartDim));
    }
  }
}

}  // namespace

FusionGradients backward(const FusionModel& m, const EmbeddingBundle& b, int label,
                         ForwardMode mode) {
  if (label != 0 && label != 1) {
    raise(ErrorKind::Validation, "label must be 0 or 1");
  }
  const ForwardTrace t = forward(m, b, mode);

  FusionGradients g;
  g.w_part = Matrix(kPartDim, kPartDim);
  g.b_part.assign(kPartDim, 0.0);
  g.w_proj = Matrix(kSentenceDim, kCatDim);
  g.b_proj.assign(kSentenceDim, 0.0);
  g.w_hid = Matrix(m.hidden, kConcatDim);
  g.b_hid.assign(m.hidden, 0.0);
  g.w_out.assign(m.hidden, 0.0);

  // d loss / d logit for sigmoid + binary cross-entropy.
  const double d_logit = t.prob - static_cast<double>(label);
  backward_from_logit(m, b, t, d_logit, &g, g.inputs);
  return g;
}

InputGradients logit_input_gradients(const FusionModel& m, const EmbeddingBundle& b,
                                     ForwardMode mode) {
  const ForwardTrace t = forward(m, b, mode);
  InputGradients inputs;
  backward_from_logit(m, b, t, 1.0, nullptr, inputs);
  return inputs;
}

EmbeddingBundle zero_baseline_of(const EmbeddingBundle& b) {
  EmbeddingBundle base = zero_bundle(b.source_id);
  base.mask = b.mask;
  return base;
}

Attribution integrated_gradients(const FusionModel& m, const EmbeddingBundle& b,
                                 const EmbeddingBundle& baseline, std::size_t steps,
                                 ForwardMode mode) {
  if (steps < 1) raise(ErrorKind::Config, "integrated gradients needs steps >= 1");
  check_bundle_dims(b);
  check_bundle_dims(baseline);
  if (baseline.mask != b.mask) {
    raise(ErrorKind::Config, "baseline mask must match the bundle mask");
  }

  Vector mean_grad_sentence(kSentenceDim, 0.0);
  Vector mean_grad_parts(kMaxTriples * kCatDim, 0.0);

  EmbeddingBundle point = zero_bundle(b.source_id);
  point.mask = b.mask;
  for (std::size_t k = 0; k < steps; ++k) {
    const double alpha = (static_cast<double>(k) + 0.5) / static_cast<double>(steps);
    for (std::size_t i = 0; i < kSentenceDim; ++i) {
      point.sentence_vec[i] =
          baseline.sentence_vec[i] + alpha * (b.sentence_vec[i] - baseline.sentence_vec[i]);
    }
    for (std::size_t i = 0; i < mean_grad_parts.size(); ++i) {
      point.triple_parts[i] =
          baseline.triple_parts[i] + alpha * (b.triple_parts[i] - baseline.triple_parts[i]);
    }
    const InputGradients g = logit_input_gradients(m, point, mode);
    axpy(1.0, g.sentence, mean_grad_sentence);
    axpy(1.0, g.triple_parts, mean_grad_parts);
  }
  const double inv = 1.0 / static_cast<double>(steps);

  Attribution a;
  a.sentence.assign(kSentenceDim, 0.0);
  a.triple_parts.assign(kMaxTriples * kCatDim, 0.0);
  for (std::size_t i = 0; i < kSentenceDim; ++i) {
    a.sentence[i] = (b.sentence_vec[i] - baseline.sentence_vec[i]) * mean_grad_sentence[i] * inv;
    a.total += a.sentence[i];
  }
  for (std::size_t i = 0; i < kMaxTriples; ++i) {
    for (std::size_t j = 0; j < kCatDim; ++j) {
      const std::size_t idx = i * kCatDim + j;
      a.triple_parts[idx] =
          (b.triple_parts[idx] - baseline.triple_parts[idx]) * mean_grad_parts[idx] * inv;
      a.per_triple[i] += a.triple_parts[idx];
      a.total += a.triple_parts[idx];
    }
  }
  a.logit_input = forward(m, b, mode).logit;
  a.logit_baseline = forward(m, baseline, mode).logit;
  return a;
}

std::string model_to_bytes(const FusionModel& m) {
  check_model_dims(m);
  std::string out;
  put_bytes(out, std::string_view(kModelMagic, 4));
  put_u8(out, kModelVersion);
  put_u32(out, static_cast<std::uint32_t>(kPartDim));
  put_u32(out, static_cast<std::uint32_t>(kCatDim));
  put_u32(out, static_cast<std::uint32_t>(kSentenceDim));
  put_u32(out, static_cast<std::uint32_t>(kConcatDim));
  put_u32(out, static_cast<std::uint32_t>(m.hidden));
  put_u64(out, m.init_seed);
  put_f64(out, m.init_scale);
  for (double v : m.w_part.data) put_f64(out, v);
  for (double v : m.b_part) put_f64(out, v);
  for (double v : m.w_proj.data) put_f64(out, v);
  for (double v : m.b_proj) put_f64(out, v);
  for (double v : m.w_hid.data) put_f64(out, v);
  for (double v : m.b_hid) put_f64(out, v);
  for (double v : m.w_out) put_f64(out, v);
  put_f64(out, m.b_out);
  put_u32(out, crc32_of(out));
  return out;
}

FusionModel model_from_bytes(std::string_view bytes) {
  if (bytes.size() < 4 + 1 + 5 * 4 + 8 + 8 + 4) {
    raise(ErrorKind::ModelFormat, "model file is too short");
  }

  ByteReader reader(bytes, ErrorKind::ModelFormat);
  if (reader.take(4) != std::string_view(kModelMagic, 4)) {
    raise(ErrorKind::ModelFormat, "bad model magic bytes");
  }
  if (reader.u8() != kModelVersion) {
    raise(ErrorKind::ModelFormat, "unsupported model version");
  }
  const std::uint32_t part_dim = reader.u32();
  const std::uint32_t cat_dim = reader.u32();
  const std::uint32_t sentence_dim = reader.u32();
  const std::uint32_t concat_dim = reader.u32();
  const std::uint32_t hidden = reader.u32();
  if (part_dim != kPartDim || cat_dim != kCatDim || sentence_dim != kSentenceDim ||
      concat_dim != kConcatDim || hidden < 1) {
    raise(ErrorKind::ModelFormat, "model dimensions do not match this build");
  }

  FusionModel m;
  m.hidden = hidden;
  m.init_seed = reader.u64();
  m.init_scale = reader.f64();
  m.w_part = Matrix(kPartDim, kPartDim);
  for (double& v : m.w_part.data) v = reader.f64();
  m.b_part.assign(kPartDim, 0.0);
  for (double& v : m.b_part) v = reader.f64();
  m.w_proj = Matrix(kSentenceDim, kCatDim);
  for (double& v : m.w_proj.data) v = reader.f64();
  m.b_proj.assign(kSentenceDim, 0.0);
  for (double& v : m.b_proj) v = reader.f64();
  m.w_hid = Matrix(hidden, kConcatDim);
  for (double& v : m.w_hid.data) v = reader.f64();
  m.b_hid.assign(hidden, 0.0);
  for (double& v : m.b_hid) v = reader.f64();
  m.w_out.assign(hidden, 0.0);
  for (double& v : m.w_out) v = reader.f64();
  m.b_out = reader.f64();

  const std::size_t payload_end = reader.position();
  const std::uint32_t crc = reader.u32();
  if (reader.remaining() != 0) {
    raise(ErrorKind::ModelFormat, "trailing bytes after model checksum");
  }
  if (crc != crc32_of(bytes.substr(0, payload_end))) {
    raise(ErrorKind::ModelFormat, "model checksum mismatch");
  }
  return m;
}

void save_model(const FusionModel& m, const std::filesystem::path& path) {
  write_binary_file(path, model_to_bytes(m));
}

FusionModel load_model(const std::filesystem::path& path) {
  const std::string bytes = read_binary_file(path, ErrorKind::MissingModel);
  try {
    return model_from_bytes(bytes);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ModelFormat) {
      throw Error(ErrorKind::ModelFormat, path.string() + ": " + e.what());
    }
    throw;
  }
}

}  // namespace cw
