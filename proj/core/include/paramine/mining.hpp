#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "paramine/dataset.hpp"
#include "paramine/geometry.hpp"

namespace paramine {

struct MegaBatchMember {
  std::string anchor_id;
  std::string positive_id;
};

// M mini-batches aggregated into one mining pool. Members keep their source
// mini-batch assignment so they can be split back.
struct MegaBatch {
  std::vector<MegaBatchMember> members;
  std::vector<std::size_t> mini_batch_index;  // per member
  std::size_t mini_batch_count = 0;           // M
};

struct MiningStrategy {
  enum class Mode { TopN, Threshold };
  Mode mode = Mode::TopN;
  std::size_t top_n = 5;
  double tau = 0.0;                // Threshold mode: keep cosine > tau
  std::optional<std::size_t> cap;  // Threshold mode: optional per-anchor limit

  void validate() const;  // throws ConfigError
};

using EmbeddingMap = std::unordered_map<std::string, Embedding>;

// Concatenates mini-batches of positive pairs into one mega-batch. Label-0
// records do not become members. Throws EmptyInputError for zero or empty
// mini-batches and DuplicateAnchorError when one anchor id appears twice.
MegaBatch aggregate_mega_batch(const std::vector<std::vector<PairRecord>>& mini_batches);

// For each member: up to n pool candidates ranked by descending cosine to
// the anchor, excluding the member's own anchor and positive. The pool is
// every anchor and positive id in the mega-batch. Ties break by ascending id.
std::vector<std::vector<std::string>> mine_top_n(const MegaBatch& mega,
                                                 const EmbeddingMap& embeddings, std::size_t n,
                                                 int threads = 1);

// Same pool and ordering, keeping candidates with cosine > tau, truncated to
// cap when set.
std::vector<std::vector<std::string>> mine_threshold(const MegaBatch& mega,
                                                     const EmbeddingMap& embeddings, double tau,
                                                     std::optional<std::size_t> cap = std::nullopt,
                                                     int threads = 1);

std::vector<std::vector<std::string>> mine(const MegaBatch& mega, const EmbeddingMap& embeddings,
                                           const MiningStrategy& strategy, int threads = 1);

struct PlanMember {
  std::string anchor_id;
  std::string positive_id;
  std::vector<std::string> hard_ids;  // dataset entries first, then mined, deduplicated
};

using MiniBatchPlan = std::vector<PlanMember>;

// Restores the original M mini-batches, attaching each member's merged hard
// negative list. Entries equal to the member's own anchor or positive are
// dropped so the loss-batch invariant holds even on contradictory data.
std::vector<MiniBatchPlan> split_mini_batches(
    const MegaBatch& mega, const std::vector<std::vector<std::string>>& mined,
    const std::vector<std::vector<std::string>>& dataset_hards);

}  // namespace paramine
