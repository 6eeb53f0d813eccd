#include "paramine/loss.hpp"

#include <algorithm>
#include <cmath>

#include "paramine/error.hpp"

namespace paramine {

namespace {

// Keeps arccos' derivative finite near theta = 0 and pi. The bias this
// introduces on the positive-term derivative is below test tolerance.
constexpr double kGradCosineClamp = 1.0 - 1e-7;

// Similarity of two raw vectors: dot of their normalized forms. On unit-norm
// inputs this is the plain clamped dot product.
struct PairSim {
  double cos;        // clamped to [-1, 1]
  double inv_norm_u; // 1 / ||u||
  double inv_norm_v; // 1 / ||v||
};

PairSim pair_sim(const Embedding& u, const Embedding& v) {
  const double nu = norm(u.span());
  const double nv = norm(v.span());
  if (nu < 1e-12 || nv < 1e-12) throw ZeroVectorError();
  PairSim s;
  s.inv_norm_u = 1.0 / nu;
  s.inv_norm_v = 1.0 / nv;
  s.cos = clamp_unit(dot(u.span(), v.span()) * s.inv_norm_u * s.inv_norm_v);
  return s;
}

// Margined positive logit s*cos(theta + m) as a function of cos(theta).
double positive_logit(double c, const LossParams& p) {
  const double theta = std::acos(c);
  return p.scale * std::cos(theta + p.margin);
}

// d/dc of the margined positive logit, evaluated at the gradient-clamped c.
double positive_logit_dc(double c, const LossParams& p) {
  const double cc = std::clamp(c, -kGradCosineClamp, kGradCosineClamp);
  return p.scale * (std::cos(p.margin) +
                    std::sin(p.margin) * cc / std::sqrt(1.0 - cc * cc));
}

double logsumexp(std::span<const double> logits) {
  double m = logits[0];
  for (double l : logits) m = std::max(m, l);
  long double acc = 0.0L;
  for (double l : logits) acc += std::exp(static_cast<long double>(l - m));
  return m + static_cast<double>(std::log(acc));
}

void validate_batch(const LossBatch& batch, const LossParams& params) {
  params.validate();
  if (batch.anchors.empty()) throw EmptyBatchError();
  if (batch.anchors.size() != batch.positives.size()) {
    throw DimensionMismatchError("anchor count " + std::to_string(batch.anchors.size()) +
                                 " != positive count " + std::to_string(batch.positives.size()));
  }
  if (!batch.hard_negatives.empty() && batch.hard_negatives.size() != batch.anchors.size()) {
    throw DimensionMismatchError("hard negative lists cover " +
                                 std::to_string(batch.hard_negatives.size()) + " of " +
                                 std::to_string(batch.anchors.size()) + " anchors");
  }
  const std::size_t d = batch.anchors[0].dim();
  auto check = [d](const Embedding& e) {
    if (e.dim() != d) throw DimensionMismatchError(e.dim(), d);
  };
  for (const auto& e : batch.anchors) check(e);
  for (const auto& e : batch.positives) check(e);
  for (const auto& hs : batch.hard_negatives) {
    for (const auto& e : hs) check(e);
  }
}

std::span<const Embedding> hards_of(const LossBatch& batch, std::size_t i) {
  if (batch.hard_negatives.empty()) return {};
  return batch.hard_negatives[i];
}

}  // namespace

void LossParams::validate() const {
  if (!(scale > 0.0)) throw DomainError("loss scale s must be positive");
  if (!(margin >= 0.0 && margin < M_PI_2)) {
    throw DomainError("loss margin m must lie in [0, pi/2)");
  }
  if (!(hard_weight >= 0.0)) throw DomainError("hard-negative weight g must be non-negative");
}

double positive_term(const Embedding& x, const Embedding& y, const LossParams& params) {
  params.validate();
  return std::exp(positive_logit(pair_sim(x, y).cos, params));
}

double negative_term(const Embedding& x, std::span<const Embedding> in_batch,
                     const LossParams& params) {
  params.validate();
  long double acc = 0.0L;
  for (const auto& v : in_batch) {
    acc += std::exp(static_cast<long double>(params.scale * pair_sim(x, v).cos));
  }
  return static_cast<double>(acc);
}

double hard_term(const Embedding& x, std::span<const Embedding> hards,
                 const LossParams& params) {
  return negative_term(x, hards, params);
}

LossValue ams_loss(const LossBatch& batch, const LossParams& params) {
  validate_batch(batch, params);
  const std::size_t n = batch.size();
  const double g = params.hard_weight;

  LossValue out;
  out.per_anchor.resize(n);
  out.terms.resize(n);

  for (std::size_t i = 0; i < n; ++i) {
    const Embedding& x = batch.anchors[i];
    std::vector<double> logits;
    logits.reserve(n + hards_of(batch, i).size());

    const double pos_logit = positive_logit(pair_sim(x, batch.positives[i]).cos, params);
    logits.push_back(pos_logit);

    long double neg_acc = 0.0L;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double l = params.scale * pair_sim(x, batch.positives[j]).cos;
      logits.push_back(l);
      neg_acc += std::exp(static_cast<long double>(l));
    }

    long double hard_acc = 0.0L;
    const double log_g = g > 0.0 ? std::log(g) : 0.0;
    for (const auto& h : hards_of(batch, i)) {
      const double l = params.scale * pair_sim(x, h).cos;
      if (g > 0.0) logits.push_back(l + log_g);
      hard_acc += std::exp(static_cast<long double>(l));
    }

    out.per_anchor[i] = -pos_logit + logsumexp(logits);
    out.terms[i].positive = std::exp(pos_logit);
    out.terms[i].negative = static_cast<double>(neg_acc);
    out.terms[i].hard = static_cast<double>(hard_acc);
  }

  long double total = 0.0L;
  for (double l : out.per_anchor) total += l;
  out.total = static_cast<double>(total / static_cast<long double>(n));
  return out;
}

LossGrad ams_loss_grad(const LossBatch& batch, const LossParams& params) {
  validate_batch(batch, params);
  const std::size_t n = batch.size();
  const std::size_t d = batch.anchors[0].dim();
  const double g = params.hard_weight;
  const double inv_n = 1.0 / static_cast<double>(n);

  LossGrad grad;
  grad.anchors.assign(n, std::vector<double>(d, 0.0));
  grad.positives.assign(n, std::vector<double>(d, 0.0));
  grad.hard_negatives.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    grad.hard_negatives[i].assign(hards_of(batch, i).size(), std::vector<double>(d, 0.0));
  }

  // d(cos)/du = (v_hat - cos * u_hat) / ||u||, the normalization-map Jacobian
  // folded into the similarity. `weight` already includes dL/d(logit) and
  // d(logit)/d(cos).
  auto add_pair_grad = [d](std::vector<double>& gu, std::vector<double>& gv,
                           const Embedding& u, const Embedding& v, const PairSim& s,
                           double weight) {
    for (std::size_t k = 0; k < d; ++k) {
      const double u_hat = u[k] * s.inv_norm_u;
      const double v_hat = v[k] * s.inv_norm_v;
      gu[k] += weight * (v_hat - s.cos * u_hat) * s.inv_norm_u;
      gv[k] += weight * (u_hat - s.cos * v_hat) * s.inv_norm_v;
    }
  };

  for (std::size_t i = 0; i < n; ++i) {
    const Embedding& x = batch.anchors[i];
    const auto hards = hards_of(batch, i);

    // Forward pass per anchor, keeping the similarities for the backward.
    const PairSim pos_sim = pair_sim(x, batch.positives[i]);
    std::vector<PairSim> neg_sims;
    neg_sims.reserve(n - 1);
    std::vector<PairSim> hard_sims;
    hard_sims.reserve(hards.size());

    std::vector<double> logits;
    logits.push_back(positive_logit(pos_sim.cos, params));
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      neg_sims.push_back(pair_sim(x, batch.positives[j]));
      logits.push_back(params.scale * neg_sims.back().cos);
    }
    const double log_g = g > 0.0 ? std::log(g) : 0.0;
    for (const auto& h : hards) {
      hard_sims.push_back(pair_sim(x, h));
      if (g > 0.0) logits.push_back(params.scale * hard_sims.back().cos + log_g);
    }

    const double lse = logsumexp(logits);

    // Softmax weight of each logit; dL_i/d(logit_pos) = w_pos - 1.
    const double w_pos = std::exp(logits[0] - lse);
    const double pos_coeff = inv_n * (w_pos - 1.0) * positive_logit_dc(pos_sim.cos, params);
    add_pair_grad(grad.anchors[i], grad.positives[i], x, batch.positives[i], pos_sim, pos_coeff);

    std::size_t slot = 1;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const PairSim& s = neg_sims[slot - 1];
      const double w = std::exp(logits[slot] - lse);
      add_pair_grad(grad.anchors[i], grad.positives[j], x, batch.positives[j], s,
                    inv_n * w * params.scale);
      ++slot;
    }

    if (g > 0.0) {
      for (std::size_t k = 0; k < hards.size(); ++k) {
        const PairSim& s = hard_sims[k];
        const double w = std::exp(logits[slot] - lse);
        add_pair_grad(grad.anchors[i], grad.hard_negatives[i][k], x, hards[k], s,
                      inv_n * w * params.scale);
        ++slot;
      }
    }
  }

  return grad;
}

}  // namespace paramine
