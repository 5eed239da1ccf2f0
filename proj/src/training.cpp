#include "training.hpp"

#include <cmath>

#include "evaluation.hpp"
#include "rng.hpp"

namespace cw {

namespace {

// Flat views over the trainable blocks, in a fixed order shared by the
// optimizer state and the update loop.
struct ParamViews {
  std::vector<std::span<double>> blocks;
  std::size_t total = 0;

  explicit ParamViews(FusionModel& m) {
    add(m.w_part.data);
    add(m.b_part);
    add(m.w_proj.data);
    add(m.b_proj);
    add(m.w_hid.data);
    add(m.b_hid);
    add(m.w_out);
    add(std::span<double>(&m.b_out, 1));
  }

  void add(std::span<double> s) {
    blocks.push_back(s);
    total += s.size();
  }
};

struct GradViews {
  std::vector<std::span<const double>> blocks;

  explicit GradViews(const FusionGradients& g) {
    add(g.w_part.data);
    add(g.b_part);
    add(g.w_proj.data);
    add(g.b_proj);
    add(g.w_hid.data);
    add(g.b_hid);
    add(g.w_out);
    add(std::span<const double>(&g.b_out, 1));
  }

  void add(std::span<const double> s) { blocks.push_back(s); }
};

class Optimizer {
 public:
  Optimizer(const TrainConfig& cfg, std::size_t total_params)
      : cfg_(cfg) {
    if (cfg.optimizer == OptimizerKind::Adam) {
      first_moment_.assign(total_params, 0.0);
      second_moment_.assign(total_params, 0.0);
    }
  }

  void step(ParamViews& params, const std::vector<double>& grad) {
    ++step_count_;
    if (cfg_.optimizer == OptimizerKind::Sgd) {
      std::size_t k = 0;
      for (auto& block : params.blocks) {
        for (double& p : block) p -= cfg_.learning_rate * grad[k++];
      }
      return;
    }
    const double b1 = cfg_.adam_beta1;
    const double b2 = cfg_.adam_beta2;
    const double correction1 = 1.0 - std::pow(b1, static_cast<double>(step_count_));
    const double correction2 = 1.0 - std::pow(b2, static_cast<double>(step_count_));
    std::size_t k = 0;
    for (auto& block : params.blocks) {
      for (double& p : block) {
        first_moment_[k] = b1 * first_moment_[k] + (1.0 - b1) * grad[k];
        second_moment_[k] = b2 * second_moment_[k] + (1.0 - b2) * grad[k] * grad[k];
        const double m_hat = first_moment_[k] / correction1;
        const double v_hat = second_moment_[k] / correction2;
        p -= cfg_.learning_rate * m_hat / (std::sqrt(v_hat) + cfg_.adam_epsilon);
        ++k;
      }
    }
  }

 private:
  TrainConfig cfg_;
  std::vector<double> first_moment_;
  std::vector<double> second_moment_;
  std::size_t step_count_ = 0;
};

void accumulate(std::vector<double>& sum, const FusionGradients& g) {
  GradViews views(g);
  std::size_t k = 0;
  for (const auto& block : views.blocks) {
    for (double v : block) sum[k++] += v;
  }
}

double evaluate_macro_f1(const FusionModel& m, std::span<const LabeledBundle> bundles,
                         double threshold) {
  std::vector<int> y_true;
  std::vector<int> y_pred;
  y_true.reserve(bundles.size());
  y_pred.reserve(bundles.size());
  for (const LabeledBundle& lb : bundles) {
    y_true.push_back(lb.label);
    y_pred.push_back(forward(m, lb.bundle).prob >= threshold ? 1 : 0);
  }
  return macro_f1(y_true, y_pred).value;
}

}  // namespace

std::size_t select_best_epoch(std::span<const double> scores) {
  if (scores.empty()) raise(ErrorKind::Validation, "select_best_epoch: no scores");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best + 1;
}

TrainRecord train(const FusionModel& model0, std::span<const LabeledBundle> train_set,
                  std::span<const LabeledBundle> selection_set, const TrainConfig& cfg) {
  if (train_set.empty()) {
    raise(ErrorKind::Config, "training set is empty");
  }
  if (cfg.epochs < 1 || cfg.batch_size < 1 || !(cfg.learning_rate > 0.0)) {
    raise(ErrorKind::Config, "invalid training configuration");
  }
  for (const LabeledBundle& lb : train_set) {
    if (lb.label != 0 && lb.label != 1) {
      raise(ErrorKind::Validation, "unlabeled or non-binary training bundle \"" +
                                       lb.bundle.source_id + "\"");
    }
  }

  FusionModel model = model0;
  ParamViews params(model);
  Optimizer optimizer(cfg, params.total);

  TrainRecord record;
  std::vector<std::size_t> order(train_set.size());
  std::vector<double> grad_sum(params.total);

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    // Dedicated shuffle stream per (seed, epoch); init draws are elsewhere.
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng shuffle_rng(derive_seed(cfg.seed, 0x73687566ull + epoch));
    shuffle_rng.shuffle(order);

    double epoch_loss = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::fill(grad_sum.begin(), grad_sum.end(), 0.0);
      double batch_loss = 0.0;
      try {
        for (std::size_t k = start; k < end; ++k) {
          const LabeledBundle& lb = train_set[order[k]];
          batch_loss += loss(model, lb.bundle, lb.label);
          accumulate(grad_sum, backward(model, lb.bundle, lb.label));
        }
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::Numeric) {
          throw Error(ErrorKind::Numeric,
                      "epoch " + std::to_string(epoch) + ", batch " +
                          std::to_string(batch_index + 1) + ": " + e.what());
        }
        throw;
      }
      if (!std::isfinite(batch_loss)) {
        raise(ErrorKind::Numeric, "epoch " + std::to_string(epoch) + ", batch " +
                                      std::to_string(batch_index + 1) + ": non-finite loss");
      }
      epoch_loss += batch_loss;

      const double inv = 1.0 / static_cast<double>(end - start);
      for (double& g : grad_sum) g *= inv;
      optimizer.step(params, grad_sum);
    }

    EpochStats stats;
    stats.train_loss = epoch_loss / static_cast<double>(train_set.size());
    stats.selection_macro_f1 =
        selection_set.empty() ? 0.0 : evaluate_macro_f1(model, selection_set, cfg.threshold);
    record.epochs.push_back(stats);

    // Strict > keeps the earliest epoch on ties, matching select_best_epoch.
    if (record.epochs.size() == 1 || stats.selection_macro_f1 > record.best_macro_f1) {
      record.best_macro_f1 = stats.selection_macro_f1;
      record.best_epoch = epoch;
      record.best_model = model;
    }
  }
  return record;
}

EmbeddingBundle zero_triples(const EmbeddingBundle& b) {
  EmbeddingBundle out = b;
  std::fill(out.triple_parts.begin(), out.triple_parts.end(), 0.0);
  out.mask.fill(false);
  return out;
}

TrainRecord ablate_lm_only(const FusionModel& model0,
                           std::span<const LabeledBundle> train_set,
                           std::span<const LabeledBundle> selection_set,
                           const TrainConfig& cfg) {
  std::vector<LabeledBundle> train_zeroed(train_set.begin(), train_set.end());
  std::vector<LabeledBundle> selection_zeroed(selection_set.begin(), selection_set.end());
  for (LabeledBundle& lb : train_zeroed) lb.bundle = zero_triples(lb.bundle);
  for (LabeledBundle& lb : selection_zeroed) lb.bundle = zero_triples(lb.bundle);
  return train(model0, train_zeroed, selection_zeroed, cfg);
}

std::vector<Prediction> predict(const FusionModel& m,
                                std::span<const EmbeddingBundle> bundles,
                                double threshold) {
  std::vector<Prediction> out;
  out.reserve(bundles.size());
  for (const EmbeddingBundle& b : bundles) {
    Prediction p;
    p.id = b.source_id;
    p.probability = forward(m, b).prob;
    p.label = p.probability >= threshold ? 1 : 0;
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace cw
