#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>

#include "embedding.hpp"
#include "linalg.hpp"

namespace cw {

constexpr std::size_t kCatDim = kPartsPerTriple * kPartDim;      // 900
constexpr std::size_t kConcatDim = kSentenceDim + kSentenceDim;  // 1536

// The fusion classifier. Triple parts share one dense layer (w_part/b_part),
// per-component means are concatenated and projected back to the sentence
// dimension (w_proj/b_proj), then [sentence; projection] runs through a dense
// ReLU layer (w_hid/b_hid) and a sigmoid head (w_out/b_out).
struct FusionModel {
  Matrix w_part;  // kPartDim x kPartDim, shared across subject/predicate/object
  Vector b_part;  // kPartDim
  Matrix w_proj;  // kSentenceDim x kCatDim
  Vector b_proj;  // kSentenceDim
  Matrix w_hid;   // hidden x kConcatDim
  Vector b_hid;   // hidden
  Vector w_out;   // hidden
  double b_out = 0.0;

  std::size_t hidden = 0;
  std::uint64_t init_seed = 0;
  double init_scale = 1.0;
};

// Forward-pass options. linear_surrogate swaps every ReLU for the identity
// (test-only mode that makes the logit affine in the inputs);
// padding_inclusive_mean averages over all 4 slots instead of the valid ones
// (ablation knob).
struct ForwardMode {
  bool linear_surrogate = false;
  bool padding_inclusive_mean = false;
};

struct ForwardTrace {
  Vector part_act;       // kMaxTriples * kCatDim, zero in unused slots
  Vector mean_act;       // kCatDim: [m_subject; m_predicate; m_object]
  Vector projection;     // kSentenceDim (z)
  Vector concat_in;      // kConcatDim: [sentence_vec; z]
  Vector hidden_act;     // hidden (post-ReLU)
  double logit = 0.0;
  double prob = 0.5;
  std::size_t valid_count = 0;
  ForwardMode mode;
};

struct InputGradients {
  Vector sentence;      // kSentenceDim
  Vector triple_parts;  // kMaxTriples * kCatDim
};

struct FusionGradients {
  Matrix w_part;
  Vector b_part;
  Matrix w_proj;
  Vector b_proj;
  Matrix w_hid;
  Vector b_hid;
  Vector w_out;
  double b_out = 0.0;
  InputGradients inputs;
};

// Per-bundle attribution from integrated gradients, taken on the logit.
struct Attribution {
  Vector sentence;                          // kSentenceDim
  Vector triple_parts;                      // kMaxTriples * kCatDim
  std::array<double, kMaxTriples> per_triple{};
  double total = 0.0;                       // sum over every attribution cell
  double logit_input = 0.0;
  double logit_baseline = 0.0;
};

FusionModel init_fusion_model(std::uint64_t seed, std::size_t hidden,
                              double init_scale = 1.0);

ForwardTrace forward(const FusionModel& m, const EmbeddingBundle& b,
                     ForwardMode mode = {});

// Binary cross-entropy with the probability clamped to [1e-12, 1 - 1e-12].
double loss(const FusionModel& m, const EmbeddingBundle& b, int label,
            ForwardMode mode = {});
double mean_loss(const FusionModel& m, std::span<const EmbeddingBundle> bundles,
                 std::span<const int> labels, ForwardMode mode = {});

// Analytic gradients of the per-sample loss with respect to every parameter
// and to the bundle inputs. ReLU subgradient at 0 is 0; masked slots get
// exactly zero input gradient under the default mean mode.
FusionGradients backward(const FusionModel& m, const EmbeddingBundle& b, int label,
                         ForwardMode mode = {});

// d logit / d inputs; the parameter-free slice of backward used by
// integrated gradients.
InputGradients logit_input_gradients(const FusionModel& m, const EmbeddingBundle& b,
                                     ForwardMode mode = {});

// Riemann-midpoint integrated gradients on the logit along the straight path
// from baseline to b. The baseline must share b's mask; pass zero_baseline_of
// for the conventional all-zero reference.
Attribution integrated_gradients(const FusionModel& m, const EmbeddingBundle& b,
                                 const EmbeddingBundle& baseline, std::size_t steps,
                                 ForwardMode mode = {});
EmbeddingBundle zero_baseline_of(const EmbeddingBundle& b);

// Model container: magic "CWFM", version byte, dimension header, little-endian
// float64 parameter blocks, trailing CRC32. Round-trips bit-exactly.
std::string model_to_bytes(const FusionModel& m);
FusionModel model_from_bytes(std::string_view bytes);
void save_model(const FusionModel& m, const std::filesystem::path& path);
FusionModel load_model(const std::filesystem::path& path);

}  // namespace cw
