#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "paramine/dataset.hpp"
#include "paramine/head.hpp"
#include "paramine/loss.hpp"
#include "paramine/mining.hpp"
#include "paramine/rng.hpp"

namespace paramine {

struct TrainConfig {
  int epochs = 50;
  std::size_t mini_batch_size = 16;
  std::size_t mega_batch_m = 20;  // mini-batches per mega-batch
  LossParams loss;                // s = 0.5, m = 0.5, g = 1
  // No strategy means in-batch negatives only: no mining, no dataset hards.
  std::optional<MiningStrategy> mining = MiningStrategy{};
  double learning_rate = 0.2;
  double momentum = 0.9;
  std::uint64_t seed = 1;
  std::vector<std::string> language_include;  // empty = train on all languages
  std::size_t head_dim = 0;                   // 0 = keep the base dimension
  Activation activation = Activation::Identity;
  int threads = 1;

  void validate() const;  // throws ConfigError
};

struct EpochStats {
  int epoch = 0;
  double mean_loss = 0.0;
  double dev_accuracy = 0.0;
  double align = 0.0;
  double uniform = 0.0;
  double wall_seconds = 0.0;  // excluded from determinism comparisons
  std::size_t pairs_trained = 0;
  std::size_t pairs_dropped = 0;  // undersized tail batches / unplaceable duplicates
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
};

// Mutable training state owned by fit(); train_epoch advances it in place.
struct TrainState {
  ProjectionHead head;
  std::vector<double> velocity_w;
  std::vector<double> velocity_b;
  Rng rng;
};

// Everything train_epoch needs, prepared once by fit().
struct TrainData {
  const EmbeddingTable* bases = nullptr;
  std::vector<PairRecord> train_positives;
  // Dataset hard-negative ids per sentence id, from label-0 train records.
  std::unordered_map<std::string, std::vector<std::string>> dataset_hards;
};

struct FitResult {
  ProjectionHead final_head;
  ProjectionHead best_head;
  int best_epoch = 0;  // 1-based; 0 if no dev evaluation succeeded
  double best_dev_accuracy = 0.0;
  TrainHistory history;
  std::set<std::string> trained_languages;
};

// One pass over the positive pairs: seeded shuffle, mega-batch aggregation,
// hard-negative mining with the current head snapshot, then per-mini-batch
// AMS loss + SGD-with-momentum updates. Returns the epoch's mean per-anchor
// loss in stats (dev metrics are filled by fit).
EpochStats train_epoch(TrainState& state, const TrainData& data, const TrainConfig& config);

// Trains for config.epochs epochs on the train split, evaluating dev accuracy
// (max-accuracy threshold), align and uniform after each epoch. Base
// embeddings are never written.
FitResult fit(const Corpus& corpus, std::span<const PairRecord> records,
              const EmbeddingTable& bases, const TrainConfig& config);

// history.tsv: header `epoch\tloss\tdev_acc\talign\tuniform`.
void write_history(std::ostream& out, const TrainHistory& history);

}  // namespace paramine
