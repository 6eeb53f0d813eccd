#include "paramine/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <deque>
#include <ostream>

#include "paramine/error.hpp"
#include "paramine/eval.hpp"

namespace paramine {

namespace {

// Splits the shuffled epoch into mega-batch groups of at most M * B pairs
// while keeping every anchor unique within a group. Colliding pairs are
// deferred to the next group in stable order; whatever cannot be placed at
// the end of the epoch is dropped and counted.
std::vector<std::vector<PairRecord>> schedule_mega_groups(std::vector<PairRecord> shuffled,
                                                          std::size_t batch_size,
                                                          std::size_t mega_m) {
  const std::size_t capacity = batch_size * mega_m;
  std::deque<PairRecord> pending(shuffled.begin(), shuffled.end());
  std::vector<std::vector<PairRecord>> groups;
  while (!pending.empty()) {
    std::vector<PairRecord> group;
    std::set<std::string> anchors;
    std::deque<PairRecord> deferred;
    while (!pending.empty() && group.size() < capacity) {
      PairRecord rec = std::move(pending.front());
      pending.pop_front();
      if (anchors.insert(rec.anchor_id).second) {
        group.push_back(std::move(rec));
      } else {
        deferred.push_back(std::move(rec));
      }
    }
    for (auto it = deferred.rbegin(); it != deferred.rend(); ++it) {
      pending.push_front(std::move(*it));
    }
    groups.push_back(std::move(group));
  }
  return groups;
}

std::vector<std::vector<PairRecord>> chunk_minis(std::vector<PairRecord> group,
                                                 std::size_t batch_size,
                                                 std::size_t* dropped) {
  std::vector<std::vector<PairRecord>> minis;
  for (std::size_t start = 0; start < group.size(); start += batch_size) {
    const std::size_t end = std::min(group.size(), start + batch_size);
    if (end - start < 2) {
      *dropped += end - start;  // a single pair has no in-batch negative
      break;
    }
    minis.emplace_back(group.begin() + static_cast<std::ptrdiff_t>(start),
                       group.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return minis;
}

struct SlotRef {
  enum class Kind { Anchor, Positive, Hard };
  Kind kind;
  std::size_t member;
  std::size_t hard_index;
};

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (mini_batch_size < 2) {
    throw ConfigError("mini_batch_size must be >= 2 (in-batch negatives need a second pair)");
  }
  if (mega_batch_m < 1) throw ConfigError("mega_batch_m must be >= 1");
  if (!(learning_rate >= 0.0)) throw ConfigError("learning_rate must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  try {
    loss.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  if (mining) mining->validate();
}

EpochStats train_epoch(TrainState& state, const TrainData& data, const TrainConfig& config) {
  EpochStats stats;
  if (data.train_positives.empty()) {
    throw EmptyInputError("no training pairs after filtering");
  }

  std::vector<PairRecord> shuffled = data.train_positives;
  state.rng.shuffle(shuffled);

  const auto groups =
      schedule_mega_groups(std::move(shuffled), config.mini_batch_size, config.mega_batch_m);

  long double loss_sum = 0.0L;  // sum of per-anchor losses, ascending order
  std::size_t anchor_count = 0;

  for (const auto& group : groups) {
    auto minis = chunk_minis(group, config.mini_batch_size, &stats.pairs_dropped);
    if (minis.empty()) continue;
    const MegaBatch mega = aggregate_mega_batch(minis);

    // Mining snapshot: one encode pass per mega-batch with the current head.
    std::vector<std::vector<std::string>> mined;
    if (config.mining) {
      EmbeddingMap snapshot;
      for (const auto& m : mega.members) {
        for (const std::string* id : {&m.anchor_id, &m.positive_id}) {
          if (!snapshot.count(*id)) {
            snapshot.emplace(*id, encode(state.head, data.bases->row_of(*id)));
          }
        }
      }
      mined = mine(mega, snapshot, *config.mining, config.threads);
    }

    std::vector<std::vector<std::string>> dataset_hards;
    if (config.mining) {
      dataset_hards.reserve(mega.members.size());
      for (const auto& m : mega.members) {
        const auto it = data.dataset_hards.find(m.anchor_id);
        dataset_hards.push_back(it == data.dataset_hards.end() ? std::vector<std::string>{}
                                                               : it->second);
      }
    }

    const auto plans = split_mini_batches(mega, mined, dataset_hards);

    for (const auto& plan : plans) {
      if (plan.empty()) continue;

      // Encode each distinct sentence once; remember which slots share it.
      std::vector<std::string> unique_ids;
      std::unordered_map<std::string, std::size_t> id_slot;
      auto slot_of = [&](const std::string& id) {
        const auto it = id_slot.find(id);
        if (it != id_slot.end()) return it->second;
        const std::size_t slot = unique_ids.size();
        unique_ids.push_back(id);
        id_slot.emplace(id, slot);
        return slot;
      };

      LossBatch batch;
      std::vector<std::size_t> anchor_slots, positive_slots;
      std::vector<std::vector<std::size_t>> hard_slots;
      for (const auto& member : plan) {
        anchor_slots.push_back(slot_of(member.anchor_id));
        positive_slots.push_back(slot_of(member.positive_id));
        hard_slots.emplace_back();
        for (const auto& id : member.hard_ids) hard_slots.back().push_back(slot_of(id));
      }

      std::vector<std::vector<double>> base_rows(unique_ids.size());
      std::vector<Embedding> encoded(unique_ids.size());
      for (std::size_t s = 0; s < unique_ids.size(); ++s) {
        const auto row = data.bases->row_of(unique_ids[s]);
        base_rows[s].assign(row.begin(), row.end());
        encoded[s] = encode(state.head, base_rows[s]);
      }

      for (std::size_t i = 0; i < plan.size(); ++i) {
        batch.anchors.push_back(encoded[anchor_slots[i]]);
        batch.positives.push_back(encoded[positive_slots[i]]);
        batch.hard_negatives.emplace_back();
        for (const std::size_t s : hard_slots[i]) {
          batch.hard_negatives.back().push_back(encoded[s]);
        }
      }

      const LossValue value = ams_loss(batch, config.loss);
      for (double l : value.per_anchor) loss_sum += l;
      anchor_count += value.per_anchor.size();

      const LossGrad grad = ams_loss_grad(batch, config.loss);

      // Fold slot gradients back onto the distinct sentences.
      std::vector<std::vector<double>> upstream(unique_ids.size(),
                                                std::vector<double>(state.head.d_out, 0.0));
      auto add_into = [&](std::size_t slot, const std::vector<double>& g) {
        for (std::size_t k = 0; k < g.size(); ++k) upstream[slot][k] += g[k];
      };
      for (std::size_t i = 0; i < plan.size(); ++i) {
        add_into(anchor_slots[i], grad.anchors[i]);
        add_into(positive_slots[i], grad.positives[i]);
        for (std::size_t h = 0; h < hard_slots[i].size(); ++h) {
          add_into(hard_slots[i][h], grad.hard_negatives[i][h]);
        }
      }

      const HeadGrad head_grad = head_gradient(state.head, base_rows, upstream);

      for (std::size_t k = 0; k < state.head.weights.size(); ++k) {
        state.velocity_w[k] = config.momentum * state.velocity_w[k] + head_grad.weights[k];
        state.head.weights[k] -= config.learning_rate * state.velocity_w[k];
      }
      for (std::size_t k = 0; k < state.head.bias.size(); ++k) {
        state.velocity_b[k] = config.momentum * state.velocity_b[k] + head_grad.bias[k];
        state.head.bias[k] -= config.learning_rate * state.velocity_b[k];
      }
    }
  }

  stats.pairs_trained = anchor_count;
  stats.mean_loss =
      anchor_count > 0 ? static_cast<double>(loss_sum / static_cast<long double>(anchor_count))
                       : 0.0;
  return stats;
}

FitResult fit(const Corpus& corpus, std::span<const PairRecord> records,
              const EmbeddingTable& bases, const TrainConfig& config) {
  config.validate();
  if (bases.dim < 2) throw DomainError("base embeddings must have dimension >= 2");

  TrainData data;
  data.bases = &bases;

  std::vector<PairRecord> train_all, dev;
  for (const auto& r : records) {
    if (r.split == Split::Train) train_all.push_back(r);
    if (r.split == Split::Dev) dev.push_back(r);
  }

  // Language holdout: filter the splits that drive training (train and dev).
  if (!config.language_include.empty()) {
    train_all = filter_languages(train_all, corpus, config.language_include).records;
    dev = filter_languages(dev, corpus, config.language_include).records;
  }

  FitResult result;
  std::vector<PairRecord> train_hards;
  for (const auto& r : train_all) {
    if (r.label == 1) {
      data.train_positives.push_back(r);
      result.trained_languages.insert(corpus.at(r.anchor_id).lang);
      result.trained_languages.insert(corpus.at(r.candidate_id).lang);
    } else {
      train_hards.push_back(r);
    }
  }
  if (data.train_positives.empty()) {
    throw EmptyResultError("no positive training pairs");
  }
  if (dev.empty()) {
    throw EmptyResultError("dev split is empty; per-epoch dev accuracy needs it");
  }

  // A label-0 record marks both directions: each side is a dataset hard
  // negative for the other.
  if (config.mining) {
    std::unordered_map<std::string, std::set<std::string>> seen;
    for (const auto& r : train_hards) {
      if (seen[r.anchor_id].insert(r.candidate_id).second) {
        data.dataset_hards[r.anchor_id].push_back(r.candidate_id);
      }
      if (seen[r.candidate_id].insert(r.anchor_id).second) {
        data.dataset_hards[r.candidate_id].push_back(r.anchor_id);
      }
    }
  }

  const std::size_t d_out = config.head_dim == 0 ? bases.dim : config.head_dim;
  TrainState state{ProjectionHead{}, {}, {}, Rng(config.seed)};
  state.head = init_head(bases.dim, d_out, config.activation, state.rng);
  state.velocity_w.assign(state.head.weights.size(), 0.0);
  state.velocity_b.assign(state.head.bias.size(), 0.0);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    EpochStats stats = train_epoch(state, data, config);
    stats.epoch = epoch;

    const auto scored = score_pairs(state.head, bases, corpus, dev, config.threads);
    const ThresholdReport calib =
        calibrate_threshold(scored, ThresholdStrategy::MaxAccuracy, "dev");
    stats.dev_accuracy = calib.achieved;
    const SpaceMetrics space = compute_space_metrics(state.head, bases, dev);
    stats.align = space.align;
    stats.uniform = space.uniform;
    stats.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.history.epochs.push_back(stats);

    if (result.best_epoch == 0 || stats.dev_accuracy > result.best_dev_accuracy) {
      result.best_epoch = epoch;
      result.best_dev_accuracy = stats.dev_accuracy;
      result.best_head = state.head;
    }
  }

  result.final_head = std::move(state.head);
  return result;
}

void write_history(std::ostream& out, const TrainHistory& history) {
  out << "epoch\tloss\tdev_acc\talign\tuniform\n";
  char buf[160];
  for (const auto& e : history.epochs) {
    std::snprintf(buf, sizeof(buf), "%d\t%.12g\t%.12g\t%.12g\t%.12g\n", e.epoch, e.mean_loss,
                  e.dev_accuracy, e.align, e.uniform);
    out << buf;
  }
}

}  // namespace paramine
