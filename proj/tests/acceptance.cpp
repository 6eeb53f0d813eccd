// Acceptance suite: one pass/fail line per criterion, exit 0 only when all
// pass. argv[1] must point at the paramine CLI binary (used by criterion 8).
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "paramine/dataset.hpp"
#include "paramine/eval.hpp"
#include "paramine/head.hpp"
#include "paramine/loss.hpp"
#include "paramine/mining.hpp"
#include "paramine/rng.hpp"
#include "paramine/trainer.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace paramine;

namespace {

std::string g_cli;

struct Criterion {
  int number;
  std::string description;
  std::function<std::string()> body;  // returns detail text; throws on failure
  double time_limit_seconds;
};

void check(bool condition, const std::string& message) {
  if (!condition) throw std::runtime_error(message);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Criterion 1: analytic gradients vs central finite differences.

// Composite finite-difference check of the head backward: L(W, b) =
// ams_loss over encoded slots, every slot its own base vector.
double head_chain_max_rel_err(Rng& rng, std::size_t d, std::size_t n, const LossParams& params) {
  ProjectionHead head = init_head(d, d, Activation::Identity, rng);
  for (auto& b : head.bias) b = 0.05 * rng.gaussian();

  std::vector<std::vector<double>> bases;
  std::vector<std::size_t> hard_counts;
  for (std::size_t i = 0; i < n; ++i) {
    bases.push_back(rng.unit_vector(d));  // anchor i
    bases.push_back(rng.unit_vector(d));  // positive i
  }
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = rng.uniform_int(4);
    hard_counts.push_back(k);
    for (std::size_t h = 0; h < k; ++h) bases.push_back(rng.unit_vector(d));
  }

  auto build_batch = [&](const ProjectionHead& h) {
    LossBatch batch;
    std::size_t slot = 0;
    for (std::size_t i = 0; i < n; ++i) {
      batch.anchors.push_back(encode(h, bases[slot++]));
      batch.positives.push_back(encode(h, bases[slot++]));
    }
    for (std::size_t i = 0; i < n; ++i) {
      batch.hard_negatives.emplace_back();
      for (std::size_t k = 0; k < hard_counts[i]; ++k) {
        batch.hard_negatives.back().push_back(encode(h, bases[slot++]));
      }
    }
    return batch;
  };

  // Analytic: loss slot gradients fed through head_gradient.
  const LossBatch batch = build_batch(head);
  const LossGrad grad = ams_loss_grad(batch, params);
  std::vector<std::vector<double>> upstream;
  for (std::size_t i = 0; i < n; ++i) {
    upstream.push_back(grad.anchors[i]);
    upstream.push_back(grad.positives[i]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& h : grad.hard_negatives[i]) upstream.push_back(h);
  }
  const HeadGrad analytic = head_gradient(head, bases, upstream);

  auto objective = [&](const ProjectionHead& h) { return ams_loss(build_batch(h), params).total; };

  const double step = 1e-4;
  double worst = 0.0;
  auto probe = [&](double& slot_ref, double analytic_value) {
    const double saved = slot_ref;
    slot_ref = saved + step;
    const double up = objective(head);
    slot_ref = saved - step;
    const double down = objective(head);
    slot_ref = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double denom = std::max({std::abs(analytic_value), std::abs(numeric), 1e-3});
    worst = std::max(worst, std::abs(analytic_value - numeric) / denom);
  };
  for (std::size_t k = 0; k < head.weights.size(); ++k) probe(head.weights[k], analytic.weights[k]);
  for (std::size_t k = 0; k < head.bias.size(); ++k) probe(head.bias[k], analytic.bias[k]);
  return worst;
}

std::string criterion_gradients() {
  const LossParams params{0.5, 0.5, 1.0};
  Rng rng(1001);
  const std::size_t dims[] = {4, 8, 16};
  const std::size_t batch_sizes[] = {2, 4, 8};
  double worst_loss = 0.0;
  double worst_head = 0.0;
  int count = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = dims[trial % 3];
    const std::size_t n = batch_sizes[(trial / 3) % 3];
    const LossBatch batch = oracles::random_batch(rng, d, n, 3);
    worst_loss = std::max(worst_loss, oracles::check_loss_gradient(batch, params).max_rel_err);
    // The head backward is checked through the full loss-on-encoded-slots
    // composition on a rotating subset (it probes every W and b entry).
    if (trial % 10 == 0) {
      worst_head = std::max(worst_head, head_chain_max_rel_err(rng, d, n, params));
    }
    ++count;
  }
  check(worst_loss <= 1e-4, "loss gradient max rel err " + fmt(worst_loss) + " > 1e-4");
  check(worst_head <= 1e-4, "head gradient max rel err " + fmt(worst_head) + " > 1e-4");
  return std::to_string(count) + " batches, loss grad max rel err " + fmt(worst_loss) +
         ", head grad max rel err " + fmt(worst_head);
}

// ---------------------------------------------------------------------------
// Criterion 2: m = 0, g = 0 reduces to softmax cross-entropy.

std::string criterion_reduction() {
  Rng rng(1002);
  const std::size_t dims[] = {4, 8, 16};
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t d = dims[trial % 3];
    const std::size_t n = 2 + rng.uniform_int(7);
    const LossBatch batch = oracles::random_batch(rng, d, n, 0);
    const double s = 0.25 + 4.0 * rng.uniform();
    const double ours = ams_loss(batch, LossParams{s, 0.0, 0.0}).total;
    const double reference = oracles::softmax_cross_entropy(batch, s);
    worst = std::max(worst, std::abs(ours - reference));
  }
  check(worst <= 1e-9, "max |ams - cross_entropy| = " + fmt(worst) + " > 1e-9");
  return "1000 batches, max deviation " + fmt(worst);
}

// ---------------------------------------------------------------------------
// Criterion 3: mining matches the exhaustive scan.

std::string criterion_mining() {
  Rng rng(1003);
  int megas = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t members = 20 + rng.uniform_int(481);  // up to 500
    const std::size_t per_mini = 10 + rng.uniform_int(40);
    std::vector<std::vector<PairRecord>> minis;
    EmbeddingMap embeddings;
    for (std::size_t i = 0; i < members; ++i) {
      if (i % per_mini == 0) minis.emplace_back();
      char buf[32];
      std::snprintf(buf, sizeof(buf), "a%05zu", i);
      const std::string anchor = buf;
      std::snprintf(buf, sizeof(buf), "p%05zu", i);
      const std::string positive = buf;
      embeddings.emplace(anchor, Embedding(rng.unit_vector(8)));
      embeddings.emplace(positive, Embedding(rng.unit_vector(8)));
      minis.back().push_back(PairRecord{anchor, positive, 1, Split::Train});
    }
    const MegaBatch mega = aggregate_mega_batch(minis);

    for (const std::size_t n : {1u, 5u, 20u}) {
      const auto mined = mine_top_n(mega, embeddings, n);
      const auto expected = oracles::BruteMiner::run(
          mega, embeddings, [](double) { return true; }, n);
      check(mined == expected,
            "top_n(" + std::to_string(n) + ") mismatch on mega of " + std::to_string(members));
    }
    for (const double tau : {-0.5, 0.0, 0.5}) {
      const auto mined = mine_threshold(mega, embeddings, tau);
      const auto expected = oracles::BruteMiner::run(
          mega, embeddings, [tau](double c) { return c > tau; },
          std::numeric_limits<std::size_t>::max());
      check(mined == expected,
            "threshold(" + fmt(tau) + ") mismatch on mega of " + std::to_string(members));
    }
    ++megas;
  }
  return std::to_string(megas) + " mega-batches, exact id and order equality";
}

// ---------------------------------------------------------------------------
// Criterion 4: calibration matches the exhaustive sweep.

std::string criterion_calibration() {
  Rng rng(1004);
  int sets = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 4 + rng.uniform_int(397);  // sizes 4..400
    std::vector<ScoredPair> scored;
    bool has_pos = false, has_neg = false;
    for (std::size_t i = 0; i < n; ++i) {
      ScoredPair s;
      s.pair.label = rng.uniform() < 0.5 ? 1 : 0;
      // Mix a continuous and a coarse component so duplicate scores occur.
      s.score = rng.uniform() < 0.3 ? -1.0 + 0.25 * static_cast<double>(rng.uniform_int(9))
                                    : 2.0 * rng.uniform() - 1.0;
      has_pos |= s.pair.label == 1;
      has_neg |= s.pair.label == 0;
      scored.push_back(s);
    }
    if (!has_pos) scored[0].pair.label = 1;
    if (!has_neg) scored[n - 1].pair.label = 0;

    for (const auto strategy :
         {ThresholdStrategy::MaxAccuracy, ThresholdStrategy::MaxF1, ThresholdStrategy::EER}) {
      const ThresholdReport ours = calibrate_threshold(scored, strategy);
      const auto expected = oracles::sweep_calibrate(scored, strategy);
      check(ours.achieved == expected.achieved && ours.threshold == expected.threshold,
            std::string(strategy_name(strategy)) + " mismatch: got (" + fmt(ours.threshold) +
                ", " + fmt(ours.achieved) + "), want (" + fmt(expected.threshold) + ", " +
                fmt(expected.achieved) + ")");
    }
    ++sets;
  }
  return std::to_string(sets) + " score sets, exact threshold and metric equality";
}

// ---------------------------------------------------------------------------
// Criteria 5 and 6: end-to-end synthetic runs.

SyntheticConfig acceptance_synthetic() {
  SyntheticConfig cfg;
  cfg.n_groups = 50;
  cfg.langs = {"en", "de", "fr", "ko"};
  cfg.dim = 32;
  cfg.paraphrase_noise = 0.1;
  cfg.hard_negative_offset = 0.35;
  cfg.seed = 7;
  return cfg;
}

TrainConfig acceptance_train() {
  TrainConfig cfg;  // defaults: 50 epochs, M = 20, s = 0.5, m = 0.5, g = 1
  cfg.mining = MiningStrategy{MiningStrategy::Mode::TopN, 5, 0.0, {}};
  cfg.seed = 7;
  return cfg;
}

std::string criterion_end_to_end() {
  const SyntheticData data = generate_synthetic(acceptance_synthetic());

  const FitResult mined = fit(data.corpus, data.records, data.embeddings, acceptance_train());
  check(mined.best_dev_accuracy >= 0.95,
        "mining run best dev accuracy " + fmt(mined.best_dev_accuracy) + " < 0.95");

  TrainConfig in_batch_only = acceptance_train();
  in_batch_only.mining.reset();
  in_batch_only.loss.hard_weight = 0.0;
  const FitResult baseline = fit(data.corpus, data.records, data.embeddings, in_batch_only);
  check(mined.best_dev_accuracy >= baseline.best_dev_accuracy,
        "mining run (" + fmt(mined.best_dev_accuracy) + ") below in-batch-only baseline (" +
            fmt(baseline.best_dev_accuracy) + ")");

  return "mining dev acc " + fmt(mined.best_dev_accuracy) + " >= 0.95, baseline " +
         fmt(baseline.best_dev_accuracy);
}

std::string criterion_zero_shot() {
  const SyntheticData data = generate_synthetic(acceptance_synthetic());

  TrainConfig cfg = acceptance_train();
  cfg.language_include = {"en", "de"};  // hold out fr and ko
  const FitResult r = fit(data.corpus, data.records, data.embeddings, cfg);
  check(r.trained_languages == std::set<std::string>{"en", "de"},
        "training touched a held-out language");

  // Test pairs with at least one held-out-language sentence.
  std::vector<PairRecord> held_out;
  for (const auto& rec : data.records) {
    if (rec.split != Split::Test) continue;
    const auto& a = data.corpus.at(rec.anchor_id).lang;
    const auto& b = data.corpus.at(rec.candidate_id).lang;
    if (a == "fr" || a == "ko" || b == "fr" || b == "ko") held_out.push_back(rec);
  }
  check(!held_out.empty(), "no held-out-language test pairs generated");

  // Calibrate on (filtered) dev, evaluate the held-out slice of test.
  std::vector<PairRecord> dev;
  for (const auto& rec : data.records) {
    if (rec.split == Split::Dev) dev.push_back(rec);
  }
  const auto dev_scored = score_pairs(r.best_head, data.embeddings, data.corpus,
                                      filter_languages(dev, data.corpus, {"en", "de"}).records);
  const double threshold =
      calibrate_threshold(dev_scored, ThresholdStrategy::MaxAccuracy, "dev").threshold;

  const auto scored = score_pairs(r.best_head, data.embeddings, data.corpus, held_out);
  const EvalReport report = evaluate(scored, threshold);
  check(report.per_class.count(PairClass::InterLingualTranslation) == 1,
        "held-out slice has no inter-lingual translation pairs");
  const double trans_acc = report.per_class.at(PairClass::InterLingualTranslation).accuracy;
  check(trans_acc > 0.5, "held-out translation accuracy " + fmt(trans_acc) + " <= 0.5 (chance)");

  std::string classes;
  for (const auto& [cls, stats] : report.per_class) {
    classes += std::string(" ") + pair_class_name(cls) + "=" + fmt(stats.accuracy);
  }
  return "held-out pairs " + std::to_string(held_out.size()) + ", per-class:" + classes;
}

// ---------------------------------------------------------------------------
// Criterion 7: align/uniform fixtures.

std::string criterion_metric_fixtures() {
  const Embedding ex(std::vector<double>{1.0, 0.0});
  const Embedding ey(std::vector<double>{0.0, 1.0});
  const Embedding mex(std::vector<double>{-1.0, 0.0});

  const std::vector<Embedding> same_u{ex, ey}, same_v{ex, ey};
  const double align_same = align_loss(same_u, same_v);
  check(std::abs(align_same - 0.0) <= 1e-9, "align(identical) = " + fmt(align_same));

  const std::vector<Embedding> orth_u{ex}, orth_v{ey};
  const double align_orth = align_loss(orth_u, orth_v);
  check(std::abs(align_orth - 2.0) <= 1e-9, "align(orthogonal) = " + fmt(align_orth));

  const std::vector<Embedding> antipodal{ex, mex};
  const double uniform_anti = uniform_loss(antipodal, 2.0);
  check(std::abs(uniform_anti - (-8.0)) <= 1e-9, "uniform(antipodal) = " + fmt(uniform_anti));

  return "align(identical)=0, align(orthogonal)=2, uniform(antipodal)=-8";
}

// ---------------------------------------------------------------------------
// Criterion 8: byte-identical CLI pipelines.

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("missing output file " + p.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string criterion_determinism() {
  check(!g_cli.empty(), "paramine binary path not provided (argv[1])");
  const fs::path work = fs::temp_directory_path() / "paramine_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);

  {
    std::ofstream gen_conf(work / "gen.conf");
    gen_conf << "n_groups = 20\ndim = 16\n";
    std::ofstream train_conf(work / "train.conf");
    train_conf << "epochs = 8\n";
  }

  auto pipeline = [&](const std::string& tag) {
    const fs::path data = work / ("data_" + tag);
    const fs::path run = work / ("run_" + tag);
    const std::string log = (work / ("log_" + tag)).string();
    const std::string steps[] = {
        g_cli + " gen --config " + (work / "gen.conf").string() + " --out " + data.string() +
            " --seed 7 >> " + log + " 2>&1",
        g_cli + " train --data " + data.string() + " --config " + (work / "train.conf").string() +
            " --out " + run.string() + " --seed 7 >> " + log + " 2>&1",
        g_cli + " eval --data " + data.string() + " --head " + (run / "head_best.bin").string() +
            " --out " + run.string() + " >> " + log + " 2>&1",
    };
    for (const auto& cmd : steps) {
      const int status = std::system(cmd.c_str());
      check(status == 0, "pipeline step failed (see " + log + "): " + cmd);
    }
    return run;
  };

  const fs::path a = pipeline("a");
  const fs::path b = pipeline("b");
  for (const char* name : {"head.bin", "history.tsv", "report.tsv"}) {
    check(slurp(a / name) == slurp(b / name),
          std::string(name) + " differs between identical-seed pipelines");
  }
  return "head.bin, history.tsv, report.tsv byte-identical across two pipelines";
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) g_cli = argv[1];

  const std::vector<Criterion> criteria = {
      {1, "gradient correctness vs central finite differences", criterion_gradients, 10.0},
      {2, "loss reduction to softmax cross-entropy at m=0, g=0", criterion_reduction, 5.0},
      {3, "mining equals exhaustive O(n^2) scan", criterion_mining, 10.0},
      {4, "threshold calibration equals exhaustive sweep", criterion_calibration, 10.0},
      {5, "end-to-end synthetic run reaches dev accuracy targets", criterion_end_to_end, 300.0},
      {6, "zero-shot language holdout beats chance on translations", criterion_zero_shot, 300.0},
      {7, "align/uniform closed-form fixtures", criterion_metric_fixtures, 5.0},
      {8, "seeded pipelines are byte-identical", criterion_determinism, 300.0},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = true;
    try {
      detail = c.body();
    } catch (const std::exception& e) {
      ok = false;
      detail = e.what();
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (ok && elapsed >= c.time_limit_seconds) {
      ok = false;
      detail += " [exceeded " + fmt(c.time_limit_seconds) + " s limit]";
    }
    if (!ok) ++failures;
    std::printf("[%s] criterion %d: %s (%s; %.2f s)\n", ok ? "PASS" : "FAIL", c.number,
                c.description.c_str(), detail.c_str(), elapsed);
    std::fflush(stdout);
  }

  if (failures > 0) {
    std::printf("%d of %zu criteria failed\n", failures, criteria.size());
    return 1;
  }
  std::printf("all %zu criteria passed\n", criteria.size());
  return 0;
}
