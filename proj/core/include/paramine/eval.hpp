#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "paramine/dataset.hpp"
#include "paramine/geometry.hpp"
#include "paramine/head.hpp"

namespace paramine {

struct ScoredPair {
  PairRecord pair;
  double score = 0.0;  // cosine of the encoded pair
  PairClass pair_class = PairClass::IntraLingual;
};

enum class ThresholdStrategy { MaxAccuracy, EER, MaxF1 };

const char* strategy_name(ThresholdStrategy s);
ThresholdStrategy strategy_from_name(const std::string& name);

struct ThresholdReport {
  ThresholdStrategy strategy = ThresholdStrategy::MaxAccuracy;
  double threshold = 0.0;
  double achieved = 0.0;       // accuracy / F1 / (FAR+FRR)/2 on the calibration split
  std::string calibrated_on;   // provenance tag, e.g. "dev"
};

struct ClassStats {
  std::size_t count = 0;
  std::size_t correct = 0;
  double accuracy = 0.0;
};

struct EvalReport {
  std::size_t total = 0;
  std::size_t total_correct = 0;
  double overall_accuracy = 0.0;
  std::map<PairClass, ClassStats> per_class;  // classes with zero pairs are absent
  std::optional<double> align;
  std::optional<double> uniform;
  std::size_t align_pairs = 0;
  std::size_t uniform_points = 0;
};

// score = cosine(encode(anchor), encode(candidate)); class via classify_pair.
std::vector<ScoredPair> score_pairs(const ProjectionHead& head, const EmbeddingTable& bases,
                                    const Corpus& corpus, std::span<const PairRecord> pairs,
                                    int threads = 1);

// Scans midpoints between adjacent distinct sorted scores plus the sentinels
// -1 and +1; classification rule is predict 1 iff score >= threshold. Metric
// ties break toward the smaller threshold.
ThresholdReport calibrate_threshold(std::span<const ScoredPair> scored,
                                    ThresholdStrategy strategy,
                                    const std::string& calibrated_on = "");

// Accuracy overall and per pair class at a fixed threshold. align/uniform
// stay unset; attach them via space metrics when embeddings are at hand.
EvalReport evaluate(std::span<const ScoredPair> scored, double threshold);

// Mean over pairs of ||u - v||^alpha; 0 iff all pairs coincide.
double align_loss(std::span<const Embedding> us, std::span<const Embedding> vs,
                  double alpha = 2.0);

// log mean over unordered distinct pairs of exp(-t * ||u - v||^2).
double uniform_loss(std::span<const Embedding> points, double t = 2.0);

enum class UniformScope { AllSplitEmbeddings, PositivePairsOnly };

struct SpaceMetrics {
  double align = 0.0;
  double uniform = 0.0;
  std::size_t align_pairs = 0;
  std::size_t uniform_points = 0;
};

// Align over the split's positive pairs, uniform over the split's embeddings
// (all unique sentence ids, or only those in positive pairs).
SpaceMetrics compute_space_metrics(const ProjectionHead& head, const EmbeddingTable& bases,
                                   std::span<const PairRecord> pairs,
                                   UniformScope scope = UniformScope::AllSplitEmbeddings,
                                   double alpha = 2.0, double t = 2.0);

// report.tsv: header `metric\tclass\tvalue\tcount`.
void write_report(std::ostream& out, const EvalReport& report);
EvalReport read_report(std::istream& in);

}  // namespace paramine
