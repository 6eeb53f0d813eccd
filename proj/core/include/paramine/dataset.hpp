#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "paramine/geometry.hpp"

namespace paramine {

struct Sentence {
  std::string id;
  std::string lang;
  // Sentences sharing group_id are translations of one underlying sentence.
  std::string group_id;
  std::string text;
};

enum class Split { Train, Dev, Test };

const char* split_name(Split s);
Split split_from_name(const std::string& name);

struct PairRecord {
  std::string anchor_id;
  std::string candidate_id;
  int label = 0;  // 1 = paraphrase, 0 = hard negative
  Split split = Split::Train;
};

enum class PairClass { IntraLingual, InterLingualTranslation, InterLingualParaphrase };

const char* pair_class_name(PairClass c);

struct Corpus {
  std::vector<Sentence> sentences;  // file order
  std::unordered_map<std::string, std::size_t> index;

  const Sentence& at(const std::string& id) const;
  bool contains(const std::string& id) const { return index.count(id) != 0; }
  void add(Sentence s);  // throws DuplicateIdError
};

// Base embeddings in corpus order, one fixed-dimension row per id.
struct EmbeddingTable {
  std::vector<std::string> ids;
  std::unordered_map<std::string, std::size_t> index;
  std::size_t dim = 0;
  std::vector<double> values;  // row-major, ids.size() x dim

  std::span<const double> row(std::size_t i) const { return {values.data() + i * dim, dim}; }
  std::span<const double> row_of(const std::string& id) const;  // throws MissingEmbeddingError
  bool contains(const std::string& id) const { return index.count(id) != 0; }
  void add(const std::string& id, std::span<const double> v);
};

struct IngestCounts {
  // keyed by (split, label)
  std::map<std::pair<Split, int>, std::size_t> pairs;
  std::size_t sentences = 0;
};

struct ParseResult {
  Corpus corpus;
  std::vector<PairRecord> records;
  IngestCounts counts;
};

// Reads the sentences.tsv / pairs.tsv formats. Every referenced id must
// resolve; errors carry file location.
ParseResult parse_pairs(std::istream& sentences, std::istream& pairs);

void write_sentences(std::ostream& out, const Corpus& corpus);
void write_pairs(std::ostream& out, std::span<const PairRecord> records);

PairClass classify_pair(const Sentence& a, const Sentence& b);

struct FilterResult {
  std::vector<PairRecord> records;
  std::size_t dropped = 0;
};

// Keeps records whose two sentences are both in `include`. Throws
// EmptyResultError when nothing survives (misconfigured holdout) and
// EmptyInputError for an empty include set.
FilterResult filter_languages(std::span<const PairRecord> records, const Corpus& corpus,
                              const std::vector<std::string>& include);

// Desk-scale stand-in for a multilingual paraphrase corpus. Each group is a
// meaning cluster: a shared center on the sphere, paraphrase sentences near
// it, and a hard-negative cluster at chordal distance delta. Every
// underlying sentence is realized once per language (its translations).
struct SyntheticConfig {
  std::size_t n_groups = 50;
  std::vector<std::string> langs = {"en", "de", "fr", "ko"};
  std::size_t dim = 32;
  double paraphrase_noise = 0.1;      // sigma_p: expected norm of meaning noise
  double hard_negative_offset = 0.35; // delta: chordal distance of the hard cluster
  std::uint64_t seed = 1;

  std::size_t paraphrases_per_group = 1;  // paraphrase sentences besides the original
  std::size_t hards_per_group = 1;        // hard-negative underlying sentences
  double language_offset = 0.05;          // norm of the per-language systematic shift
  double cross_pair_ratio = 2.0 / 3.0;    // fraction of positives that cross languages
  std::size_t pairs_per_group = 1;        // train positives per group (disjoint sentences)
  std::size_t hard_pairs_per_anchor = 1;  // label-0 train records per train anchor
  std::size_t dev_pairs_per_group = 4;    // alternating label 1 / label 0
  std::size_t test_pairs_per_group = 6;

  void validate() const;  // throws ConfigError
};

struct SyntheticData {
  Corpus corpus;
  std::vector<PairRecord> records;
  EmbeddingTable embeddings;
};

// Deterministic per seed; emitted vectors are quantized to f32 so the
// in-memory table matches an embeddings.bin round trip bit-for-bit.
SyntheticData generate_synthetic(const SyntheticConfig& cfg);

// Expected label-1 fraction implied by the config knobs, for property checks.
double expected_positive_fraction(const SyntheticConfig& cfg);

// embeddings.bin: magic "EMB1", u32 LE count, u32 LE dim, count*dim f32 LE in
// corpus id order. The .ids sidecar lists ids line by line in the same order.
void write_embeddings(std::ostream& bin, std::ostream& ids, const EmbeddingTable& table);
EmbeddingTable read_embeddings(std::istream& bin, std::istream& ids);

}  // namespace paramine
