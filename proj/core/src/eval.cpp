#include "paramine/eval.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "paramine/error.hpp"
#include "paramine/parallel.hpp"

namespace paramine {

namespace {

std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

// Candidate thresholds: sentinels plus midpoints between adjacent distinct
// sorted scores. Accuracy-like metrics are piecewise constant with
// breakpoints only at observed scores, so this sweep is complete.
std::vector<double> candidate_thresholds(std::span<const ScoredPair> scored) {
  std::vector<double> scores;
  scores.reserve(scored.size());
  for (const auto& s : scored) scores.push_back(s.score);
  std::sort(scores.begin(), scores.end());
  scores.erase(std::unique(scores.begin(), scores.end()), scores.end());

  std::vector<double> candidates;
  candidates.reserve(scores.size() + 1);
  candidates.push_back(-1.0);
  for (std::size_t i = 1; i < scores.size(); ++i) {
    candidates.push_back(0.5 * (scores[i - 1] + scores[i]));
  }
  candidates.push_back(1.0);
  return candidates;
}

struct Counts {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

}  // namespace

const char* strategy_name(ThresholdStrategy s) {
  switch (s) {
    case ThresholdStrategy::MaxAccuracy: return "max_acc";
    case ThresholdStrategy::EER: return "eer";
    case ThresholdStrategy::MaxF1: return "max_f1";
  }
  return "?";
}

ThresholdStrategy strategy_from_name(const std::string& name) {
  if (name == "max_acc") return ThresholdStrategy::MaxAccuracy;
  if (name == "eer") return ThresholdStrategy::EER;
  if (name == "max_f1") return ThresholdStrategy::MaxF1;
  throw ConfigError("unknown strategy '" + name + "' (expected max_acc, eer or max_f1)");
}

std::vector<ScoredPair> score_pairs(const ProjectionHead& head, const EmbeddingTable& bases,
                                    const Corpus& corpus, std::span<const PairRecord> pairs,
                                    int threads) {
  // Encode each distinct sentence once.
  std::vector<std::string> unique_ids;
  {
    std::set<std::string> seen;
    for (const auto& p : pairs) {
      if (seen.insert(p.anchor_id).second) unique_ids.push_back(p.anchor_id);
      if (seen.insert(p.candidate_id).second) unique_ids.push_back(p.candidate_id);
    }
  }
  std::unordered_map<std::string, Embedding> encoded;
  encoded.reserve(unique_ids.size());
  for (const auto& id : unique_ids) {
    encoded.emplace(id, encode(head, bases.row_of(id)));
  }

  std::vector<ScoredPair> out(pairs.size());
  parallel_for(pairs.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto& p = pairs[i];
      out[i].pair = p;
      out[i].score = cosine(encoded.at(p.anchor_id), encoded.at(p.candidate_id));
      out[i].pair_class = classify_pair(corpus.at(p.anchor_id), corpus.at(p.candidate_id));
    }
  });
  return out;
}

ThresholdReport calibrate_threshold(std::span<const ScoredPair> scored,
                                    ThresholdStrategy strategy,
                                    const std::string& calibrated_on) {
  std::size_t positives = 0;
  for (const auto& s : scored) positives += s.pair.label == 1 ? 1 : 0;
  if (scored.empty() || positives == 0 || positives == scored.size()) {
    throw DegenerateLabelsError();
  }

  // Sort once; each candidate threshold needs only the suffix counts.
  std::vector<std::pair<double, int>> sorted;
  sorted.reserve(scored.size());
  for (const auto& s : scored) sorted.emplace_back(s.score, s.pair.label);
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::size_t> pos_suffix(sorted.size() + 1, 0);
  for (std::size_t i = sorted.size(); i > 0; --i) {
    pos_suffix[i - 1] = pos_suffix[i] + (sorted[i - 1].second == 1 ? 1 : 0);
  }
  const std::size_t total = sorted.size();
  const std::size_t total_pos = positives;
  const std::size_t total_neg = total - total_pos;

  auto counts_at = [&](double threshold) {
    const auto it = std::lower_bound(
        sorted.begin(), sorted.end(), threshold,
        [](const std::pair<double, int>& a, double t) { return a.first < t; });
    const std::size_t first = static_cast<std::size_t>(it - sorted.begin());
    Counts c;
    c.tp = pos_suffix[first];
    c.fp = (total - first) - c.tp;
    c.fn = total_pos - c.tp;
    c.tn = total_neg - c.fp;
    return c;
  };

  ThresholdReport report;
  report.strategy = strategy;
  report.calibrated_on = calibrated_on;

  const auto candidates = candidate_thresholds(scored);
  bool first = true;
  double best_objective = 0.0;  // maximized for acc/F1, minimized |FAR-FRR| for EER

  for (const double t : candidates) {
    const Counts c = counts_at(t);
    double objective = 0.0;
    double achieved = 0.0;
    switch (strategy) {
      case ThresholdStrategy::MaxAccuracy: {
        achieved = static_cast<double>(c.tp + c.tn) / static_cast<double>(total);
        objective = achieved;
        break;
      }
      case ThresholdStrategy::MaxF1: {
        const double denom = static_cast<double>(2 * c.tp + c.fp + c.fn);
        achieved = denom > 0.0 ? 2.0 * static_cast<double>(c.tp) / denom : 0.0;
        objective = achieved;
        break;
      }
      case ThresholdStrategy::EER: {
        const double far = static_cast<double>(c.fp) / static_cast<double>(total_neg);
        const double frr = static_cast<double>(c.fn) / static_cast<double>(total_pos);
        achieved = 0.5 * (far + frr);
        objective = -std::abs(far - frr);  // maximize closeness of the two rates
        break;
      }
    }
    // Candidates ascend, so strict improvement keeps the smallest threshold.
    if (first || objective > best_objective) {
      first = false;
      best_objective = objective;
      report.threshold = t;
      report.achieved = achieved;
    }
  }
  return report;
}

EvalReport evaluate(std::span<const ScoredPair> scored, double threshold) {
  if (scored.empty()) throw EmptyInputError("evaluate needs at least one scored pair");
  EvalReport report;
  report.total = scored.size();
  for (const auto& s : scored) {
    const bool predicted = s.score >= threshold;
    const bool correct = predicted == (s.pair.label == 1);
    auto& cls = report.per_class[s.pair_class];
    ++cls.count;
    if (correct) {
      ++cls.correct;
      ++report.total_correct;
    }
  }
  for (auto& [cls, stats] : report.per_class) {
    stats.accuracy = static_cast<double>(stats.correct) / static_cast<double>(stats.count);
  }
  report.overall_accuracy =
      static_cast<double>(report.total_correct) / static_cast<double>(report.total);
  return report;
}

double align_loss(std::span<const Embedding> us, std::span<const Embedding> vs, double alpha) {
  if (us.empty() || us.size() != vs.size()) {
    throw EmptyInputError("align_loss needs equally many non-empty u and v embeddings");
  }
  long double acc = 0.0L;
  for (std::size_t i = 0; i < us.size(); ++i) {
    if (us[i].dim() != vs[i].dim()) throw DimensionMismatchError(us[i].dim(), vs[i].dim());
    long double dist_sq = 0.0L;
    for (std::size_t k = 0; k < us[i].dim(); ++k) {
      const long double d = static_cast<long double>(us[i][k]) - vs[i][k];
      dist_sq += d * d;
    }
    acc += std::pow(static_cast<double>(dist_sq), alpha / 2.0);
  }
  return static_cast<double>(acc / static_cast<long double>(us.size()));
}

double uniform_loss(std::span<const Embedding> points, double t) {
  if (points.size() < 2) {
    throw EmptyInputError("uniform_loss needs at least two embeddings");
  }
  // log-mean-exp over pairs, stabilized by the largest exponent.
  std::vector<double> exponents;
  exponents.reserve(points.size() * (points.size() - 1) / 2);
  double max_e = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      if (points[i].dim() != points[j].dim()) {
        throw DimensionMismatchError(points[i].dim(), points[j].dim());
      }
      long double dist_sq = 0.0L;
      for (std::size_t k = 0; k < points[i].dim(); ++k) {
        const long double d = static_cast<long double>(points[i][k]) - points[j][k];
        dist_sq += d * d;
      }
      const double e = -t * static_cast<double>(dist_sq);
      exponents.push_back(e);
      max_e = std::max(max_e, e);
    }
  }
  long double acc = 0.0L;
  for (double e : exponents) acc += std::exp(static_cast<long double>(e - max_e));
  return max_e + static_cast<double>(std::log(acc / static_cast<long double>(exponents.size())));
}

SpaceMetrics compute_space_metrics(const ProjectionHead& head, const EmbeddingTable& bases,
                                   std::span<const PairRecord> pairs, UniformScope scope,
                                   double alpha, double t) {
  std::vector<Embedding> us, vs;
  std::vector<std::string> point_ids;
  std::set<std::string> seen;
  std::unordered_map<std::string, Embedding> cache;

  auto encoded = [&](const std::string& id) -> const Embedding& {
    auto it = cache.find(id);
    if (it == cache.end()) it = cache.emplace(id, encode(head, bases.row_of(id))).first;
    return it->second;
  };

  for (const auto& p : pairs) {
    const bool in_scope = scope == UniformScope::AllSplitEmbeddings || p.label == 1;
    if (p.label == 1) {
      us.push_back(encoded(p.anchor_id));
      vs.push_back(encoded(p.candidate_id));
    }
    if (in_scope) {
      if (seen.insert(p.anchor_id).second) point_ids.push_back(p.anchor_id);
      if (seen.insert(p.candidate_id).second) point_ids.push_back(p.candidate_id);
    }
  }

  SpaceMetrics m;
  m.align_pairs = us.size();
  m.align = align_loss(us, vs, alpha);
  std::vector<Embedding> points;
  points.reserve(point_ids.size());
  for (const auto& id : point_ids) points.push_back(encoded(id));
  m.uniform_points = points.size();
  m.uniform = uniform_loss(points, t);
  return m;
}

void write_report(std::ostream& out, const EvalReport& report) {
  out << "metric\tclass\tvalue\tcount\n";
  out << "accuracy\toverall\t" << format_value(report.overall_accuracy) << '\t' << report.total
      << '\n';
  for (const PairClass cls : {PairClass::IntraLingual, PairClass::InterLingualTranslation,
                              PairClass::InterLingualParaphrase}) {
    const auto it = report.per_class.find(cls);
    if (it == report.per_class.end()) continue;  // absent, not zero
    out << "accuracy\t" << pair_class_name(cls) << '\t' << format_value(it->second.accuracy)
        << '\t' << it->second.count << '\n';
  }
  if (report.align) {
    out << "align\t-\t" << format_value(*report.align) << '\t' << report.align_pairs << '\n';
  }
  if (report.uniform) {
    out << "uniform\t-\t" << format_value(*report.uniform) << '\t' << report.uniform_points
        << '\n';
  }
}

EvalReport read_report(std::istream& in) {
  EvalReport report;
  std::string line;
  if (!std::getline(in, line) || line != "metric\tclass\tvalue\tcount") {
    throw FormatError("report.tsv: bad header");
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string metric, cls, value, count;
    if (!std::getline(row, metric, '\t') || !std::getline(row, cls, '\t') ||
        !std::getline(row, value, '\t') || !std::getline(row, count)) {
      throw MalformedLineError("report.tsv", line_no, "expected 4 tab-separated fields");
    }
    const double v = std::stod(value);
    const std::size_t n = static_cast<std::size_t>(std::stoull(count));
    if (metric == "accuracy" && cls == "overall") {
      report.overall_accuracy = v;
      report.total = n;
      report.total_correct = static_cast<std::size_t>(std::llround(v * static_cast<double>(n)));
    } else if (metric == "accuracy") {
      for (const PairClass pc : {PairClass::IntraLingual, PairClass::InterLingualTranslation,
                                 PairClass::InterLingualParaphrase}) {
        if (cls == pair_class_name(pc)) {
          ClassStats stats;
          stats.count = n;
          stats.accuracy = v;
          stats.correct = static_cast<std::size_t>(std::llround(v * static_cast<double>(n)));
          report.per_class[pc] = stats;
        }
      }
    } else if (metric == "align") {
      report.align = v;
      report.align_pairs = n;
    } else if (metric == "uniform") {
      report.uniform = v;
      report.uniform_points = n;
    } else {
      throw MalformedLineError("report.tsv", line_no, "unknown metric '" + metric + "'");
    }
  }
  return report;
}

}  // namespace paramine
