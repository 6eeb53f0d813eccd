#pragma once

#include <span>
#include <vector>

#include "paramine/geometry.hpp"

namespace paramine {

// Scale s, additive angular margin m (radians) and hard-negative weight g.
struct LossParams {
  double scale = 0.5;
  double margin = 0.5;
  double hard_weight = 1.0;

  // Throws DomainError unless s > 0, 0 <= m < pi/2, g >= 0.
  void validate() const;
};

// One training batch: N anchor/positive pairs plus an optional ragged list of
// hard negatives per anchor. In-batch negatives for anchor i are the other
// positives {y_n : n != i}; they are implied, not stored.
struct LossBatch {
  std::vector<Embedding> anchors;
  std::vector<Embedding> positives;
  // Either empty (no anchor has hard negatives) or one list per anchor.
  std::vector<std::vector<Embedding>> hard_negatives;

  std::size_t size() const { return anchors.size(); }
};

// Raw (non-log) component values for one anchor: p, n and the unweighted h.
struct AnchorTerms {
  double positive = 0.0;
  double negative = 0.0;
  double hard = 0.0;
};

struct LossValue {
  double total = 0.0;
  std::vector<double> per_anchor;
  std::vector<AnchorTerms> terms;
};

// Gradients with respect to every embedding slot of the batch, same shapes.
struct LossGrad {
  std::vector<std::vector<double>> anchors;
  std::vector<std::vector<double>> positives;
  std::vector<std::vector<std::vector<double>>> hard_negatives;
};

// exp(s * cos(angle(x, y) + m)).
double positive_term(const Embedding& x, const Embedding& y, const LossParams& params);

// Sum of exp(s * cos(angle(x, v))) over in-batch negatives. No margin.
// The caller provides the list with the paired positive already excluded.
double negative_term(const Embedding& x, std::span<const Embedding> in_batch,
                     const LossParams& params);

// Same functional form over hard negatives, before the g weighting.
double hard_term(const Embedding& x, std::span<const Embedding> hards,
                 const LossParams& params);

// L = -(1/N) * sum_i log(p_i / (p_i + n_i + g*h_i)). Per-anchor values are
// computed in log space so large scales cannot overflow.
LossValue ams_loss(const LossBatch& batch, const LossParams& params);

// Analytic gradient of ams_loss through exp, cos, arccos, dot products and
// the normalization map, so it matches central finite differences on the raw
// slot values even when a perturbation leaves the unit sphere.
LossGrad ams_loss_grad(const LossBatch& batch, const LossParams& params);

}  // namespace paramine
