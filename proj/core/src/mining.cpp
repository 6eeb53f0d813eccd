#include "paramine/mining.hpp"

#include <algorithm>
#include <set>

#include "paramine/error.hpp"
#include "paramine/parallel.hpp"

namespace paramine {

namespace {

struct Pool {
  std::vector<std::string> ids;          // sorted ascending, unique
  std::vector<const Embedding*> vectors; // aligned with ids
};

Pool build_pool(const MegaBatch& mega, const EmbeddingMap& embeddings) {
  std::set<std::string> unique;
  for (const auto& m : mega.members) {
    unique.insert(m.anchor_id);
    unique.insert(m.positive_id);
  }
  Pool pool;
  pool.ids.assign(unique.begin(), unique.end());
  pool.vectors.reserve(pool.ids.size());
  for (const auto& id : pool.ids) {
    const auto it = embeddings.find(id);
    if (it == embeddings.end()) throw MissingEmbeddingError(id);
    pool.vectors.push_back(&it->second);
  }
  return pool;
}

// Candidates for one member: (cosine, pool index), ranked by descending
// cosine with ascending-id tie break. Own anchor and positive are excluded.
std::vector<std::pair<double, std::size_t>> ranked_candidates(const MegaBatch& mega,
                                                              const Pool& pool,
                                                              const EmbeddingMap& embeddings,
                                                              std::size_t member) {
  const auto& m = mega.members[member];
  const auto anchor_it = embeddings.find(m.anchor_id);
  if (anchor_it == embeddings.end()) throw MissingEmbeddingError(m.anchor_id);
  const Embedding& anchor = anchor_it->second;

  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(pool.ids.size());
  for (std::size_t c = 0; c < pool.ids.size(); ++c) {
    if (pool.ids[c] == m.anchor_id || pool.ids[c] == m.positive_id) continue;
    scored.emplace_back(cosine(anchor, *pool.vectors[c]), c);
  }
  // Pool ids are sorted ascending, so equal cosines fall back to ascending id.
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  return scored;
}

}  // namespace

void MiningStrategy::validate() const {
  switch (mode) {
    case Mode::TopN:
      if (top_n < 1) throw ConfigError("mining top_n must be >= 1");
      break;
    case Mode::Threshold:
      if (!(tau > -1.0 && tau < 1.0)) throw ConfigError("mining tau must lie in (-1, 1)");
      if (cap && *cap < 1) throw ConfigError("mining cap must be >= 1 when set");
      break;
  }
}

MegaBatch aggregate_mega_batch(const std::vector<std::vector<PairRecord>>& mini_batches) {
  if (mini_batches.empty()) throw EmptyInputError("mega-batch needs at least one mini-batch");
  MegaBatch mega;
  mega.mini_batch_count = mini_batches.size();
  std::set<std::string> anchors_seen;
  for (std::size_t b = 0; b < mini_batches.size(); ++b) {
    if (mini_batches[b].empty()) {
      throw EmptyInputError("mini-batch " + std::to_string(b) + " is empty");
    }
    for (const auto& rec : mini_batches[b]) {
      if (rec.label != 1) continue;  // only positive pairs become members
      if (!anchors_seen.insert(rec.anchor_id).second) {
        throw DuplicateAnchorError(rec.anchor_id);
      }
      mega.members.push_back({rec.anchor_id, rec.candidate_id});
      mega.mini_batch_index.push_back(b);
    }
  }
  if (mega.members.empty()) {
    throw EmptyInputError("no positive-labeled pairs to aggregate");
  }
  return mega;
}

std::vector<std::vector<std::string>> mine_top_n(const MegaBatch& mega,
                                                 const EmbeddingMap& embeddings, std::size_t n,
                                                 int threads) {
  if (n < 1) throw ConfigError("mining top_n must be >= 1");
  const Pool pool = build_pool(mega, embeddings);
  std::vector<std::vector<std::string>> out(mega.members.size());
  parallel_for(mega.members.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto scored = ranked_candidates(mega, pool, embeddings, i);
      const std::size_t take = std::min(n, scored.size());
      out[i].reserve(take);
      for (std::size_t k = 0; k < take; ++k) out[i].push_back(pool.ids[scored[k].second]);
    }
  });
  return out;
}

std::vector<std::vector<std::string>> mine_threshold(const MegaBatch& mega,
                                                     const EmbeddingMap& embeddings, double tau,
                                                     std::optional<std::size_t> cap, int threads) {
  if (!(tau > -1.0 && tau < 1.0)) throw ConfigError("mining tau must lie in (-1, 1)");
  const Pool pool = build_pool(mega, embeddings);
  std::vector<std::vector<std::string>> out(mega.members.size());
  parallel_for(mega.members.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto scored = ranked_candidates(mega, pool, embeddings, i);
      for (const auto& [cos, c] : scored) {
        if (!(cos > tau)) break;  // sorted descending, nothing further passes
        if (cap && out[i].size() >= *cap) break;
        out[i].push_back(pool.ids[c]);
      }
    }
  });
  return out;
}

std::vector<std::vector<std::string>> mine(const MegaBatch& mega, const EmbeddingMap& embeddings,
                                           const MiningStrategy& strategy, int threads) {
  strategy.validate();
  switch (strategy.mode) {
    case MiningStrategy::Mode::TopN:
      return mine_top_n(mega, embeddings, strategy.top_n, threads);
    case MiningStrategy::Mode::Threshold:
      return mine_threshold(mega, embeddings, strategy.tau, strategy.cap, threads);
  }
  throw ConfigError("unreachable mining mode");
}

std::vector<MiniBatchPlan> split_mini_batches(
    const MegaBatch& mega, const std::vector<std::vector<std::string>>& mined,
    const std::vector<std::vector<std::string>>& dataset_hards) {
  if (!mined.empty() && mined.size() != mega.members.size()) {
    throw IndexMismatchError("mined lists cover " + std::to_string(mined.size()) + " of " +
                             std::to_string(mega.members.size()) + " members");
  }
  if (!dataset_hards.empty() && dataset_hards.size() != mega.members.size()) {
    throw IndexMismatchError("dataset hard lists cover " + std::to_string(dataset_hards.size()) +
                             " of " + std::to_string(mega.members.size()) + " members");
  }

  std::vector<MiniBatchPlan> plans(mega.mini_batch_count);
  for (std::size_t i = 0; i < mega.members.size(); ++i) {
    const auto& m = mega.members[i];
    PlanMember pm;
    pm.anchor_id = m.anchor_id;
    pm.positive_id = m.positive_id;

    std::set<std::string> seen;
    auto push = [&](const std::string& id) {
      if (id == m.anchor_id || id == m.positive_id) return;
      if (seen.insert(id).second) pm.hard_ids.push_back(id);
    };
    if (!dataset_hards.empty()) {
      for (const auto& id : dataset_hards[i]) push(id);
    }
    if (!mined.empty()) {
      for (const auto& id : mined[i]) push(id);
    }
    plans[mega.mini_batch_index[i]].push_back(std::move(pm));
  }
  return plans;
}

}  // namespace paramine
