#pragma once

// Independent oracles used by the unit and acceptance suites. Everything here
// is written straight from the defining formulas with plain loops and no
// library helpers, so it exercises a genuinely different code path than the
// implementation it checks.

#include <cmath>
#include <functional>
#include <vector>

#include "embedding.hpp"
#include "fusion.hpp"

namespace oracles {

// Straight-line transcription of the fusion forward pass:
//   h_{i,p} = relu(W_part v_{i,p} + b_part)          for valid slots
//   m_p     = mean_i h_{i,p}                         (0 with no valid slots)
//   z       = W_proj [m_s; m_r; m_o] + b_proj
//   u       = relu(W_hid [sentence; z] + b_hid)
//   logit   = w_out . u + b_out,  p = 1 / (1 + e^-logit)
inline double forward_logit(const cw::FusionModel& m, const cw::EmbeddingBundle& b) {
  const std::size_t part_dim = 300;
  const std::size_t parts = 3;
  const std::size_t slots = 4;
  const std::size_t sentence_dim = 768;

  std::vector<double> part_act(slots * parts * part_dim, 0.0);
  std::size_t valid = 0;
  for (std::size_t i = 0; i < slots; ++i) {
    if (!b.mask[i]) continue;
    ++valid;
    for (std::size_t p = 0; p < parts; ++p) {
      for (std::size_t r = 0; r < part_dim; ++r) {
        double acc = m.b_part[r];
        for (std::size_t c = 0; c < part_dim; ++c) {
          acc += m.w_part.data[r * part_dim + c] *
                 b.triple_parts[(i * parts + p) * part_dim + c];
        }
        part_act[(i * parts + p) * part_dim + r] = acc > 0.0 ? acc : 0.0;
      }
    }
  }

  std::vector<double> mean(parts * part_dim, 0.0);
  if (valid > 0) {
    for (std::size_t i = 0; i < slots; ++i) {
      if (!b.mask[i]) continue;
      for (std::size_t p = 0; p < parts; ++p) {
        for (std::size_t r = 0; r < part_dim; ++r) {
          mean[p * part_dim + r] += part_act[(i * parts + p) * part_dim + r];
        }
      }
    }
    for (std::size_t k = 0; k < mean.size(); ++k) {
      mean[k] /= static_cast<double>(valid);
    }
  }

  std::vector<double> z(sentence_dim, 0.0);
  for (std::size_t r = 0; r < sentence_dim; ++r) {
    double acc = m.b_proj[r];
    for (std::size_t c = 0; c < parts * part_dim; ++c) {
      acc += m.w_proj.data[r * (parts * part_dim) + c] * mean[c];
    }
    z[r] = acc;
  }

  std::vector<double> concat(2 * sentence_dim, 0.0);
  for (std::size_t i = 0; i < sentence_dim; ++i) concat[i] = b.sentence_vec[i];
  for (std::size_t i = 0; i < sentence_dim; ++i) concat[sentence_dim + i] = z[i];

  double logit = m.b_out;
  for (std::size_t r = 0; r < m.hidden; ++r) {
    double acc = m.b_hid[r];
    for (std::size_t c = 0; c < 2 * sentence_dim; ++c) {
      acc += m.w_hid.data[r * (2 * sentence_dim) + c] * concat[c];
    }
    const double u = acc > 0.0 ? acc : 0.0;
    logit += m.w_out[r] * u;
  }
  return logit;
}

inline double forward_prob(const cw::FusionModel& m, const cw::EmbeddingBundle& b) {
  return 1.0 / (1.0 + std::exp(-forward_logit(m, b)));
}

// Central finite difference of f with respect to the parameter behind `x`.
inline double central_difference(const std::function<double()>& f, double& x,
                                 double step = 1e-6) {
  const double saved = x;
  x = saved + step;
  const double plus = f();
  x = saved - step;
  const double minus = f();
  x = saved;
  return (plus - minus) / (2.0 * step);
}

// Relative error with a denominator floor. Below the floor the comparison is
// effectively absolute: central differences at step 1e-6 carry ~1e-10 of
// cancellation noise, which would swamp a pure ratio on near-zero gradients.
inline double gradient_mismatch(double analytic, double numeric) {
  const double scale = std::max(std::abs(analytic), std::abs(numeric));
  return std::abs(analytic - numeric) / std::max(scale, 1e-4);
}

// From-scratch confusion-matrix metrics, one class at a time.
inline double bruteforce_f1_of_class(const std::vector<int>& y_true,
                                     const std::vector<int>& y_pred, int cls) {
  std::size_t tp = 0;
  std::size_t predicted = 0;
  std::size_t actual = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_pred[i] == cls) ++predicted;
    if (y_true[i] == cls) ++actual;
    if (y_true[i] == cls && y_pred[i] == cls) ++tp;
  }
  const double precision =
      predicted == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(predicted);
  const double recall =
      actual == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(actual);
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

inline double bruteforce_macro_f1(const std::vector<int>& y_true,
                                  const std::vector<int>& y_pred) {
  return (bruteforce_f1_of_class(y_true, y_pred, 0) +
          bruteforce_f1_of_class(y_true, y_pred, 1)) /
         2.0;
}

inline double bruteforce_positive_f1(const std::vector<int>& y_true,
                                     const std::vector<int>& y_pred) {
  return bruteforce_f1_of_class(y_true, y_pred, 1);
}

}  // namespace oracles
