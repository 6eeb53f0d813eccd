// paramine: generate -> train -> calibrate -> evaluate pipelines over
// TSV/binary artifacts. Every run writes a manifest.json next to its outputs.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "paramine/config.hpp"
#include "paramine/dataset.hpp"
#include "paramine/error.hpp"
#include "paramine/eval.hpp"
#include "paramine/head.hpp"
#include "paramine/trainer.hpp"
#include "paramine/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw paramine::IoError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string digest_file(const fs::path& path) {
  std::ostringstream os;
  os << "fnv1a64:" << std::hex << fnv1a64(read_file(path));
  return os.str();
}

std::string timestamp_utc() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

struct Manifest {
  std::string command;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> config;
  std::map<std::string, std::string> inputs;
  std::string started_at;

  void write(const fs::path& out_dir) const {
    json j;
    j["command"] = command;
    j["tool_version"] = paramine::kVersion;
    j["seed"] = seed;
    j["config"] = config;
    j["inputs"] = inputs;
    j["started_at"] = started_at;
    j["finished_at"] = timestamp_utc();
    std::ofstream out(out_dir / "manifest.json");
    if (!out) throw paramine::IoError("cannot write manifest in '" + out_dir.string() + "'");
    out << j.dump(2) << '\n';
  }
};

void ensure_out_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw paramine::IoError("cannot create output directory '" + dir.string() + "'");
  }
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw paramine::IoError("cannot write '" + path.string() + "'");
  return out;
}

paramine::ConfigMap load_config(const std::string& path) {
  if (path.empty()) return {};
  return paramine::parse_config_file(path);
}

paramine::SyntheticConfig synthetic_config(paramine::ConfigReader& cfg, std::uint64_t seed) {
  paramine::SyntheticConfig c;
  c.n_groups = static_cast<std::size_t>(cfg.get_int("n_groups", static_cast<long long>(c.n_groups)));
  c.langs = cfg.get_list("langs", c.langs);
  c.dim = static_cast<std::size_t>(cfg.get_int("dim", static_cast<long long>(c.dim)));
  c.paraphrase_noise = cfg.get_double("paraphrase_noise", c.paraphrase_noise);
  c.hard_negative_offset = cfg.get_double("hard_negative_offset", c.hard_negative_offset);
  c.paraphrases_per_group = static_cast<std::size_t>(
      cfg.get_int("paraphrases_per_group", static_cast<long long>(c.paraphrases_per_group)));
  c.hards_per_group = static_cast<std::size_t>(
      cfg.get_int("hards_per_group", static_cast<long long>(c.hards_per_group)));
  c.language_offset = cfg.get_double("language_offset", c.language_offset);
  c.cross_pair_ratio = cfg.get_double("cross_pair_ratio", c.cross_pair_ratio);
  c.pairs_per_group = static_cast<std::size_t>(
      cfg.get_int("pairs_per_group", static_cast<long long>(c.pairs_per_group)));
  c.hard_pairs_per_anchor = static_cast<std::size_t>(
      cfg.get_int("hard_pairs_per_anchor", static_cast<long long>(c.hard_pairs_per_anchor)));
  c.dev_pairs_per_group = static_cast<std::size_t>(
      cfg.get_int("dev_pairs_per_group", static_cast<long long>(c.dev_pairs_per_group)));
  c.test_pairs_per_group = static_cast<std::size_t>(
      cfg.get_int("test_pairs_per_group", static_cast<long long>(c.test_pairs_per_group)));
  c.seed = seed;
  cfg.finish();
  return c;
}

paramine::TrainConfig train_config(paramine::ConfigReader& cfg, std::uint64_t seed,
                                   const std::string& mining_flag, int threads) {
  paramine::TrainConfig c;
  c.epochs = static_cast<int>(cfg.get_int("epochs", c.epochs));
  c.mini_batch_size = static_cast<std::size_t>(
      cfg.get_int("mini_batch_size", static_cast<long long>(c.mini_batch_size)));
  c.mega_batch_m = static_cast<std::size_t>(
      cfg.get_int("mega_batch_m", static_cast<long long>(c.mega_batch_m)));
  c.loss.scale = cfg.get_double("scale", c.loss.scale);
  c.loss.margin = cfg.get_double("margin", c.loss.margin);
  c.loss.hard_weight = cfg.get_double("gamma", c.loss.hard_weight);
  c.learning_rate = cfg.get_double("learning_rate", c.learning_rate);
  c.momentum = cfg.get_double("momentum", c.momentum);
  c.language_include = cfg.get_list("language_include", {});
  c.head_dim = static_cast<std::size_t>(cfg.get_int("head_dim", 0));
  c.activation = paramine::activation_from_name(
      cfg.get_string("activation", paramine::activation_name(c.activation)));

  // --mining flag overrides the config file's mining key.
  std::string mode = cfg.get_string("mining", "top_n");
  if (!mining_flag.empty()) mode = mining_flag;
  const auto top_n =
      static_cast<std::size_t>(cfg.get_int("mining_n", 5));
  const double tau = cfg.get_double("mining_tau", 0.5);
  const auto cap = cfg.get_int("mining_cap", 0);
  if (mode == "none") {
    c.mining.reset();
  } else if (mode == "top_n") {
    c.mining = paramine::MiningStrategy{paramine::MiningStrategy::Mode::TopN, top_n, 0.0, {}};
  } else if (mode == "threshold") {
    c.mining = paramine::MiningStrategy{
        paramine::MiningStrategy::Mode::Threshold, 1, tau,
        cap > 0 ? std::optional<std::size_t>(static_cast<std::size_t>(cap)) : std::nullopt};
  } else {
    throw paramine::ConfigError("key 'mining': expected top_n, threshold or none, got '" + mode +
                                "'");
  }
  c.seed = seed;
  c.threads = threads;
  cfg.finish();
  return c;
}

struct DataDir {
  paramine::Corpus corpus;
  std::vector<paramine::PairRecord> records;
  paramine::EmbeddingTable bases;
  std::map<std::string, std::string> digests;
};

DataDir load_data_dir(const fs::path& dir) {
  DataDir d;
  const fs::path sentences = dir / "sentences.tsv";
  const fs::path pairs = dir / "pairs.tsv";
  const fs::path bin = dir / "embeddings.bin";
  const fs::path ids = dir / "embeddings.ids";
  for (const auto& p : {sentences, pairs, bin, ids}) {
    if (!fs::exists(p)) throw paramine::IoError("missing input file '" + p.string() + "'");
    d.digests[p.filename().string()] = digest_file(p);
  }
  std::ifstream sent_in(sentences);
  std::ifstream pair_in(pairs);
  auto parsed = paramine::parse_pairs(sent_in, pair_in);
  d.corpus = std::move(parsed.corpus);
  d.records = std::move(parsed.records);
  std::ifstream bin_in(bin, std::ios::binary);
  std::ifstream ids_in(ids);
  d.bases = paramine::read_embeddings(bin_in, ids_in);
  for (const auto& s : d.corpus.sentences) {
    if (!d.bases.contains(s.id)) throw paramine::MissingEmbeddingError(s.id);
  }
  return d;
}

int cmd_gen(const std::string& config_path, const std::string& out, std::uint64_t seed) {
  Manifest manifest;
  manifest.command = "gen";
  manifest.seed = seed;
  manifest.started_at = timestamp_utc();

  paramine::ConfigReader cfg(load_config(config_path));
  const paramine::SyntheticConfig synth = synthetic_config(cfg, seed);
  manifest.config = cfg.resolved();
  if (!config_path.empty()) manifest.inputs["config"] = digest_file(config_path);

  const auto data = paramine::generate_synthetic(synth);

  const fs::path dir(out);
  ensure_out_dir(dir);
  {
    auto s = open_out(dir / "sentences.tsv");
    paramine::write_sentences(s, data.corpus);
    auto p = open_out(dir / "pairs.tsv");
    paramine::write_pairs(p, data.records);
    auto bin = open_out(dir / "embeddings.bin", std::ios::binary);
    auto ids = open_out(dir / "embeddings.ids");
    paramine::write_embeddings(bin, ids, data.embeddings);
  }
  manifest.write(dir);

  std::size_t pos = 0, neg = 0;
  for (const auto& r : data.records) (r.label == 1 ? pos : neg)++;
  std::cout << "gen: " << data.corpus.sentences.size() << " sentences, " << data.records.size()
            << " pairs (" << pos << " positive, " << neg << " negative) -> " << dir.string()
            << "\n";
  return 0;
}

int cmd_train(const std::string& data_dir, const std::string& config_path, const std::string& out,
              std::uint64_t seed, const std::string& mining_flag, int threads) {
  Manifest manifest;
  manifest.command = "train";
  manifest.seed = seed;
  manifest.started_at = timestamp_utc();

  paramine::ConfigReader cfg(load_config(config_path));
  const paramine::TrainConfig config = train_config(cfg, seed, mining_flag, threads);
  manifest.config = cfg.resolved();
  if (!mining_flag.empty()) manifest.config["mining"] = mining_flag;
  if (!config_path.empty()) manifest.inputs["config"] = digest_file(config_path);

  DataDir data = load_data_dir(data_dir);
  for (const auto& [name, digest] : data.digests) manifest.inputs[name] = digest;

  const auto result = paramine::fit(data.corpus, data.records, data.bases, config);

  const fs::path dir(out);
  ensure_out_dir(dir);
  {
    auto head = open_out(dir / "head.bin", std::ios::binary);
    paramine::write_head(head, result.final_head);
    auto best = open_out(dir / "head_best.bin", std::ios::binary);
    paramine::write_head(best, result.best_head);
    auto hist = open_out(dir / "history.tsv");
    paramine::write_history(hist, result.history);
  }
  manifest.config["best_epoch"] = std::to_string(result.best_epoch);
  manifest.write(dir);

  const auto& last = result.history.epochs.back();
  std::cout << "train: " << config.epochs << " epochs, final loss " << last.mean_loss
            << ", best dev_acc " << result.best_dev_accuracy << " (epoch " << result.best_epoch
            << ") -> " << dir.string() << "\n";
  return 0;
}

int cmd_eval(const std::string& data_dir, const std::string& head_path, const std::string& out,
             const std::string& strategy_flag, int threads) {
  Manifest manifest;
  manifest.command = "eval";
  manifest.started_at = timestamp_utc();

  const paramine::ThresholdStrategy strategy = paramine::strategy_from_name(strategy_flag);

  DataDir data = load_data_dir(data_dir);
  for (const auto& [name, digest] : data.digests) manifest.inputs[name] = digest;
  manifest.inputs["head"] = digest_file(head_path);

  std::ifstream head_in(head_path, std::ios::binary);
  if (!head_in) throw paramine::IoError("cannot open head file '" + head_path + "'");
  const paramine::ProjectionHead head = paramine::read_head(head_in);

  std::vector<paramine::PairRecord> dev, test;
  for (const auto& r : data.records) {
    if (r.split == paramine::Split::Dev) dev.push_back(r);
    if (r.split == paramine::Split::Test) test.push_back(r);
  }
  if (dev.empty()) throw paramine::EmptyResultError("data dir has no dev pairs to calibrate on");
  if (test.empty()) throw paramine::EmptyResultError("data dir has no test pairs");

  // Split discipline: the threshold comes from dev, never from test.
  const auto dev_scored = paramine::score_pairs(head, data.bases, data.corpus, dev, threads);
  const auto calib = paramine::calibrate_threshold(dev_scored, strategy, "dev");
  if (calib.calibrated_on != "dev") {
    throw paramine::DomainError("threshold provenance must be dev");
  }

  const auto test_scored = paramine::score_pairs(head, data.bases, data.corpus, test, threads);
  paramine::EvalReport report = paramine::evaluate(test_scored, calib.threshold);
  const auto space = paramine::compute_space_metrics(head, data.bases, test);
  report.align = space.align;
  report.uniform = space.uniform;
  report.align_pairs = space.align_pairs;
  report.uniform_points = space.uniform_points;

  const fs::path dir(out);
  ensure_out_dir(dir);
  {
    auto r = open_out(dir / "report.tsv");
    paramine::write_report(r, report);
  }
  manifest.config["strategy"] = paramine::strategy_name(strategy);
  {
    std::ostringstream t;
    t << calib.threshold;
    manifest.config["threshold"] = t.str();
    std::ostringstream a;
    a << calib.achieved;
    manifest.config["calibration_achieved"] = a.str();
  }
  manifest.config["calibrated_on"] = calib.calibrated_on;
  manifest.write(dir);

  std::cout << "eval: threshold " << calib.threshold << " (" << paramine::strategy_name(strategy)
            << " on dev, achieved " << calib.achieved << ")\n";
  std::cout << "  overall accuracy " << report.overall_accuracy << " over " << report.total
            << " test pairs\n";
  for (const auto& [cls, stats] : report.per_class) {
    std::cout << "  " << paramine::pair_class_name(cls) << " accuracy " << stats.accuracy
              << " over " << stats.count << "\n";
  }
  std::cout << "  align " << *report.align << ", uniform " << *report.uniform << "\n";
  return 0;
}

int cmd_report(const std::string& data_dir) {
  const fs::path dir(data_dir);
  const fs::path report_path = dir / "report.tsv";
  const fs::path history_path = dir / "history.tsv";
  bool printed = false;

  if (fs::exists(report_path)) {
    std::ifstream in(report_path);
    const paramine::EvalReport report = paramine::read_report(in);
    std::cout << "report.tsv (" << report_path.string() << ")\n";
    std::cout << "  overall accuracy " << report.overall_accuracy << " over " << report.total
              << " pairs\n";
    for (const auto& [cls, stats] : report.per_class) {
      std::cout << "  " << paramine::pair_class_name(cls) << " accuracy " << stats.accuracy
                << " over " << stats.count << "\n";
    }
    if (report.align) std::cout << "  align " << *report.align << "\n";
    if (report.uniform) std::cout << "  uniform " << *report.uniform << "\n";
    printed = true;
  }

  if (fs::exists(history_path)) {
    std::ifstream in(history_path);
    std::string line;
    std::getline(in, line);  // header
    int best_epoch = 0;
    double best_acc = 0.0;
    int rows = 0;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::istringstream row(line);
      int epoch;
      double loss, acc, align, uniform;
      if (row >> epoch >> loss >> acc >> align >> uniform) {
        ++rows;
        if (best_epoch == 0 || acc > best_acc) {
          best_epoch = epoch;
          best_acc = acc;
        }
      }
    }
    std::cout << "history.tsv: " << rows << " epochs, best dev_acc " << best_acc << " at epoch "
              << best_epoch << "\n";
    printed = true;
  }

  if (!printed) {
    throw paramine::IoError("no report.tsv or history.tsv under '" + dir.string() + "'");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"paramine: contrastive bi-encoder training for paraphrase identification"};
  app.require_subcommand(1);

  std::string config_path, data_dir, out_dir, head_path;
  std::string strategy = "max_acc", mining;
  std::uint64_t seed = 1;
  int threads = 1;

  auto* gen = app.add_subcommand("gen", "Generate a synthetic multilingual corpus");
  gen->add_option("--config", config_path, "key = value config file");
  gen->add_option("--out", out_dir, "output directory")->required();
  gen->add_option("--seed", seed, "random seed (default 1)");

  auto* train = app.add_subcommand("train", "Train a projection head over frozen base embeddings");
  train->add_option("--data", data_dir, "directory with sentences.tsv/pairs.tsv/embeddings.*")
      ->required();
  train->add_option("--config", config_path, "key = value config file");
  train->add_option("--out", out_dir, "output directory")->required();
  train->add_option("--seed", seed, "random seed (default 1)");
  train->add_option("--mining", mining, "top_n | threshold | none (overrides config)");
  train->add_option("--threads", threads, "worker thread cap (default 1)");

  auto* eval = app.add_subcommand("eval", "Calibrate on dev, evaluate on test");
  eval->add_option("--data", data_dir, "directory with the ingestion triplet")->required();
  eval->add_option("--head", head_path, "trained head.bin path")->required();
  eval->add_option("--out", out_dir, "output directory")->required();
  eval->add_option("--strategy", strategy, "max_acc | eer | max_f1 (default max_acc)");
  eval->add_option("--threads", threads, "worker thread cap (default 1)");

  auto* report = app.add_subcommand("report", "Print a run directory's report/history");
  report->add_option("--data", data_dir, "run directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen(config_path, out_dir, seed);
    if (train->parsed()) return cmd_train(data_dir, config_path, out_dir, seed, mining, threads);
    if (eval->parsed()) return cmd_eval(data_dir, head_path, out_dir, strategy, threads);
    if (report->parsed()) return cmd_report(data_dir);
  } catch (const paramine::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 3;
  } catch (const paramine::FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return 2;
  } catch (const paramine::DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
