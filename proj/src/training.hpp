#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fusion.hpp"

namespace cw {

enum class OptimizerKind { Sgd, Adam };
enum class SelectionSplit { Dev, Devtest };

struct TrainConfig {
  std::size_t epochs = 5;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  OptimizerKind optimizer = OptimizerKind::Adam;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 0;
  SelectionSplit selection_split = SelectionSplit::Dev;
  double threshold = 0.5;
};

struct LabeledBundle {
  EmbeddingBundle bundle;
  int label = 0;
};

struct EpochStats {
  double train_loss = 0.0;          // mean per-sample loss over the epoch
  double selection_macro_f1 = 0.0;  // on the selection split, at cfg.threshold
};

struct TrainRecord {
  std::vector<EpochStats> epochs;
  std::size_t best_epoch = 0;  // 1-based; earliest epoch on ties
  double best_macro_f1 = 0.0;
  FusionModel best_model;
};

struct Prediction {
  std::string id;
  double probability = 0.0;
  int label = 0;
};

// Earliest index (1-based) attaining the maximum score.
std::size_t select_best_epoch(std::span<const double> scores);

// Mini-batch gradient descent with per-epoch shuffling (one RNG stream per
// (seed, epoch)), a macro-F1 evaluation on the selection set after every
// epoch, and a snapshot of the best epoch's parameters. Deterministic given
// (model0, data order, cfg).
TrainRecord train(const FusionModel& model0, std::span<const LabeledBundle> train_set,
                  std::span<const LabeledBundle> selection_set, const TrainConfig& cfg);

// Same loop with the triple branch silenced: every bundle's triple parts and
// mask are zeroed, so the classifier sees only the sentence vector. This is
// the language-model-only baseline at identical capacity.
TrainRecord ablate_lm_only(const FusionModel& model0,
                           std::span<const LabeledBundle> train_set,
                           std::span<const LabeledBundle> selection_set,
                           const TrainConfig& cfg);

EmbeddingBundle zero_triples(const EmbeddingBundle& b);

std::vector<Prediction> predict(const FusionModel& m,
                                std::span<const EmbeddingBundle> bundles,
                                double threshold);

}  // namespace cw
