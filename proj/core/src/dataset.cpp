#include "paramine/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <iomanip>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "paramine/error.hpp"
#include "paramine/rng.hpp"

namespace paramine {

namespace {

std::string escape_text(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      default: out += c;
    }
  }
  return out;
}

std::string unescape_text(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\\' && i + 1 < text.size()) {
      switch (text[i + 1]) {
        case '\\': out += '\\'; ++i; continue;
        case 't': out += '\t'; ++i; continue;
        case 'n': out += '\n'; ++i; continue;
      }
    }
    out += text[i];
  }
  return out;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find('\t', start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

// getline that tolerates a trailing \r from CRLF files.
bool read_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

void put_u32_le(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> b = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                                 static_cast<char>((v >> 16) & 0xff),
                                 static_cast<char>((v >> 24) & 0xff)};
  out.write(b.data(), 4);
}

std::uint32_t get_u32_le(std::istream& in, const char* what) {
  std::array<unsigned char, 4> b;
  if (!in.read(reinterpret_cast<char*>(b.data()), 4)) {
    throw FormatError(std::string("embeddings.bin truncated while reading ") + what);
  }
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

const char* split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Dev: return "dev";
    case Split::Test: return "test";
  }
  return "?";
}

Split split_from_name(const std::string& name) {
  if (name == "train") return Split::Train;
  if (name == "dev") return Split::Dev;
  if (name == "test") return Split::Test;
  throw FormatError("unknown split '" + name + "' (expected train/dev/test)");
}

const char* pair_class_name(PairClass c) {
  switch (c) {
    case PairClass::IntraLingual: return "intra_lingual";
    case PairClass::InterLingualTranslation: return "inter_lingual_translation";
    case PairClass::InterLingualParaphrase: return "inter_lingual_paraphrase";
  }
  return "?";
}

const Sentence& Corpus::at(const std::string& id) const {
  const auto it = index.find(id);
  if (it == index.end()) throw UnknownIdError(id, "corpus lookup");
  return sentences[it->second];
}

void Corpus::add(Sentence s) {
  if (index.count(s.id)) throw DuplicateIdError(s.id);
  index.emplace(s.id, sentences.size());
  sentences.push_back(std::move(s));
}

std::span<const double> EmbeddingTable::row_of(const std::string& id) const {
  const auto it = index.find(id);
  if (it == index.end()) throw MissingEmbeddingError(id);
  return row(it->second);
}

void EmbeddingTable::add(const std::string& id, std::span<const double> v) {
  if (dim == 0) dim = v.size();
  if (v.size() != dim) throw DimensionMismatchError(v.size(), dim);
  if (index.count(id)) throw DuplicateIdError(id);
  index.emplace(id, ids.size());
  ids.push_back(id);
  values.insert(values.end(), v.begin(), v.end());
}

ParseResult parse_pairs(std::istream& sentences, std::istream& pairs) {
  ParseResult result;
  std::string line;

  std::size_t line_no = 0;
  if (!read_line(sentences, line)) {
    throw MalformedLineError("sentences.tsv", 1, "missing header");
  }
  ++line_no;
  if (line != "id\tlang\tgroup_id\ttext") {
    throw MalformedLineError("sentences.tsv", line_no, "bad header: '" + line + "'");
  }
  while (read_line(sentences, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_tabs(line);
    if (f.size() != 4) {
      throw MalformedLineError("sentences.tsv", line_no,
                               "expected 4 tab-separated fields, got " + std::to_string(f.size()));
    }
    if (f[0].empty() || f[1].empty()) {
      throw MalformedLineError("sentences.tsv", line_no, "id and lang must be non-empty");
    }
    result.corpus.add(Sentence{f[0], f[1], f[2], unescape_text(f[3])});
  }
  result.counts.sentences = result.corpus.sentences.size();

  line_no = 0;
  if (!read_line(pairs, line)) {
    throw MalformedLineError("pairs.tsv", 1, "missing header");
  }
  ++line_no;
  if (line != "anchor_id\tcandidate_id\tlabel\tsplit") {
    throw MalformedLineError("pairs.tsv", line_no, "bad header: '" + line + "'");
  }
  while (read_line(pairs, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_tabs(line);
    if (f.size() != 4) {
      throw MalformedLineError("pairs.tsv", line_no,
                               "expected 4 tab-separated fields, got " + std::to_string(f.size()));
    }
    PairRecord rec;
    rec.anchor_id = f[0];
    rec.candidate_id = f[1];
    if (f[2] == "0") {
      rec.label = 0;
    } else if (f[2] == "1") {
      rec.label = 1;
    } else {
      throw MalformedLineError("pairs.tsv", line_no, "label must be 0 or 1, got '" + f[2] + "'");
    }
    try {
      rec.split = split_from_name(f[3]);
    } catch (const FormatError& e) {
      throw MalformedLineError("pairs.tsv", line_no, e.what());
    }
    if (rec.anchor_id == rec.candidate_id) {
      throw MalformedLineError("pairs.tsv", line_no, "anchor and candidate ids are equal");
    }
    if (!result.corpus.contains(rec.anchor_id)) {
      throw UnknownIdError(rec.anchor_id, "pairs.tsv:" + std::to_string(line_no));
    }
    if (!result.corpus.contains(rec.candidate_id)) {
      throw UnknownIdError(rec.candidate_id, "pairs.tsv:" + std::to_string(line_no));
    }
    ++result.counts.pairs[{rec.split, rec.label}];
    result.records.push_back(std::move(rec));
  }

  return result;
}

void write_sentences(std::ostream& out, const Corpus& corpus) {
  out << "id\tlang\tgroup_id\ttext\n";
  for (const auto& s : corpus.sentences) {
    out << s.id << '\t' << s.lang << '\t' << s.group_id << '\t' << escape_text(s.text) << '\n';
  }
}

void write_pairs(std::ostream& out, std::span<const PairRecord> records) {
  out << "anchor_id\tcandidate_id\tlabel\tsplit\n";
  for (const auto& r : records) {
    out << r.anchor_id << '\t' << r.candidate_id << '\t' << r.label << '\t'
        << split_name(r.split) << '\n';
  }
}

PairClass classify_pair(const Sentence& a, const Sentence& b) {
  if (a.lang == b.lang) return PairClass::IntraLingual;
  if (a.group_id == b.group_id) return PairClass::InterLingualTranslation;
  return PairClass::InterLingualParaphrase;
}

FilterResult filter_languages(std::span<const PairRecord> records, const Corpus& corpus,
                              const std::vector<std::string>& include) {
  if (include.empty()) throw EmptyInputError("language include set must be non-empty");
  const std::set<std::string> langs(include.begin(), include.end());
  FilterResult out;
  for (const auto& r : records) {
    if (langs.count(corpus.at(r.anchor_id).lang) && langs.count(corpus.at(r.candidate_id).lang)) {
      out.records.push_back(r);
    } else {
      ++out.dropped;
    }
  }
  if (out.records.empty()) {
    throw EmptyResultError("no pairs survive the language filter (misconfigured holdout?)");
  }
  return out;
}

void SyntheticConfig::validate() const {
  if (n_groups < 2) throw ConfigError("n_groups must be >= 2");
  if (langs.size() < 2) throw ConfigError("need at least 2 languages");
  {
    std::set<std::string> uniq(langs.begin(), langs.end());
    if (uniq.size() != langs.size()) throw ConfigError("duplicate language code in langs");
  }
  if (dim < 4) throw ConfigError("dim must be >= 4");
  if (!(paraphrase_noise > 0.0)) throw ConfigError("paraphrase_noise must be > 0");
  if (!(hard_negative_offset > 0.0) || hard_negative_offset >= 2.0) {
    throw ConfigError("hard_negative_offset must lie in (0, 2)");
  }
  if (language_offset < 0.0) throw ConfigError("language_offset must be >= 0");
  if (cross_pair_ratio < 0.0 || cross_pair_ratio > 1.0) {
    throw ConfigError("cross_pair_ratio must lie in [0, 1]");
  }
  if (paraphrases_per_group < 1) throw ConfigError("paraphrases_per_group must be >= 1");
  if (hards_per_group < 1) throw ConfigError("hards_per_group must be >= 1");
  if (pairs_per_group < 1) throw ConfigError("pairs_per_group must be >= 1");
  const std::size_t realizations = (1 + paraphrases_per_group) * langs.size();
  if (pairs_per_group * 2 > realizations) {
    throw ConfigError("pairs_per_group needs 2 unused sentences per pair; group has only " +
                      std::to_string(realizations));
  }
}

namespace {

struct Underlying {
  std::string group_id;
  std::vector<double> point;  // meaning point before language offsets
  bool is_hard = false;
};

std::string lang_tag(const SyntheticConfig& cfg, std::size_t li) { return cfg.langs[li]; }

std::string sent_id(const std::string& group_id, const std::string& lang) {
  return group_id + "_" + lang;
}

// Point on the sphere at exact chordal distance `delta` from unit vector c,
// along a random tangent direction.
std::vector<double> offset_on_sphere(const std::vector<double>& c, double delta, Rng& rng) {
  const std::size_t d = c.size();
  std::vector<double> t = rng.unit_vector(d);
  // Gram-Schmidt against c, retry if nearly parallel.
  while (true) {
    long double proj = 0.0L;
    for (std::size_t i = 0; i < d; ++i) proj += static_cast<long double>(t[i]) * c[i];
    std::vector<double> tang(d);
    long double nsq = 0.0L;
    for (std::size_t i = 0; i < d; ++i) {
      tang[i] = t[i] - static_cast<double>(proj) * c[i];
      nsq += static_cast<long double>(tang[i]) * tang[i];
    }
    if (nsq > 1e-12) {
      const double inv = 1.0 / std::sqrt(static_cast<double>(nsq));
      const double alpha = 2.0 * std::asin(delta / 2.0);
      std::vector<double> out(d);
      for (std::size_t i = 0; i < d; ++i) {
        out[i] = std::cos(alpha) * c[i] + std::sin(alpha) * tang[i] * inv;
      }
      return out;
    }
    t = rng.unit_vector(d);
  }
}

// Isotropic Gaussian with expected norm sigma (per-component std sigma/sqrt(d)).
std::vector<double> meaning_noise(std::size_t d, double sigma, Rng& rng) {
  const double comp = sigma / std::sqrt(static_cast<double>(d));
  std::vector<double> v(d);
  for (auto& x : v) x = comp * rng.gaussian();
  return v;
}

std::vector<double> quantize_f32(std::span<const double> v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<double>(static_cast<float>(v[i]));
  return out;
}

enum class PosKind { Intra, Translation, CrossParaphrase };

PosKind draw_pos_kind(const SyntheticConfig& cfg, Rng& rng) {
  if (rng.uniform() >= cfg.cross_pair_ratio) return PosKind::Intra;
  return rng.uniform() < 0.5 ? PosKind::Translation : PosKind::CrossParaphrase;
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  SyntheticData data;
  data.embeddings.dim = cfg.dim;

  const std::size_t n_langs = cfg.langs.size();
  const std::size_t n_pos = 1 + cfg.paraphrases_per_group;  // original + paraphrases

  // Per-language systematic offsets, shared across groups.
  std::vector<std::vector<double>> lang_offsets(n_langs, std::vector<double>(cfg.dim, 0.0));
  if (cfg.language_offset > 0.0) {
    for (auto& o : lang_offsets) {
      o = rng.unit_vector(cfg.dim);
      for (auto& x : o) x *= cfg.language_offset;
    }
  }

  auto group_tag = [&](std::size_t g) {
    std::ostringstream os;
    os << "g" << std::setw(4) << std::setfill('0') << g;
    return os.str();
  };

  for (std::size_t g = 0; g < cfg.n_groups; ++g) {
    const std::string gtag = group_tag(g);
    const std::vector<double> center = rng.unit_vector(cfg.dim);
    const std::vector<double> hard_center = offset_on_sphere(center, cfg.hard_negative_offset, rng);

    // Underlying sentences: s0 at the center, paraphrases near it, hard
    // negatives near the offset cluster. Each is realized in every language.
    std::vector<Underlying> underlying;
    underlying.push_back({gtag + "_s0", center, false});
    for (std::size_t j = 1; j < n_pos; ++j) {
      auto point = center;
      const auto noise = meaning_noise(cfg.dim, cfg.paraphrase_noise, rng);
      for (std::size_t k = 0; k < cfg.dim; ++k) point[k] += noise[k];
      underlying.push_back({gtag + "_s" + std::to_string(j), std::move(point), false});
    }
    for (std::size_t j = 0; j < cfg.hards_per_group; ++j) {
      auto point = hard_center;
      const auto noise = meaning_noise(cfg.dim, cfg.paraphrase_noise, rng);
      for (std::size_t k = 0; k < cfg.dim; ++k) point[k] += noise[k];
      underlying.push_back({gtag + "_h" + std::to_string(j), std::move(point), true});
    }

    for (const auto& u : underlying) {
      for (std::size_t li = 0; li < n_langs; ++li) {
        std::vector<double> v = u.point;
        for (std::size_t k = 0; k < cfg.dim; ++k) v[k] += lang_offsets[li][k];
        const Embedding e = l2_normalize(v);
        const std::string id = sent_id(u.group_id, lang_tag(cfg, li));
        data.corpus.add(Sentence{id, lang_tag(cfg, li), u.group_id,
                                 (u.is_hard ? "hard negative " : "paraphrase ") + u.group_id +
                                     " in " + lang_tag(cfg, li)});
        data.embeddings.add(id, quantize_f32(e.span()));
      }
    }

    // Train positives on disjoint sentences so no sentence fights its own
    // label when mega-batch mining treats near neighbours as negatives.
    std::vector<std::pair<std::size_t, std::size_t>> free_slots;  // (underlying j, lang)
    for (std::size_t j = 0; j < n_pos; ++j) {
      for (std::size_t li = 0; li < n_langs; ++li) free_slots.emplace_back(j, li);
    }
    auto take_slot = [&](auto pred) -> std::pair<std::size_t, std::size_t> {
      std::vector<std::size_t> candidates;
      for (std::size_t i = 0; i < free_slots.size(); ++i) {
        if (pred(free_slots[i])) candidates.push_back(i);
      }
      const std::size_t pick = candidates[rng.uniform_int(candidates.size())];
      const auto slot = free_slots[pick];
      free_slots.erase(free_slots.begin() + static_cast<std::ptrdiff_t>(pick));
      return slot;
    };
    auto slot_id = [&](std::pair<std::size_t, std::size_t> s) {
      return sent_id(underlying[s.first].group_id, lang_tag(cfg, s.second));
    };

    std::vector<std::string> train_anchor_ids;
    for (std::size_t p = 0; p < cfg.pairs_per_group; ++p) {
      const auto anchor = take_slot([](auto) { return true; });
      PosKind kind = draw_pos_kind(cfg, rng);
      auto partner_pred = [&](std::pair<std::size_t, std::size_t> s) {
        switch (kind) {
          case PosKind::Intra: return s.second == anchor.second && s.first != anchor.first;
          case PosKind::Translation: return s.first == anchor.first && s.second != anchor.second;
          case PosKind::CrossParaphrase:
            return s.first != anchor.first && s.second != anchor.second;
        }
        return false;
      };
      bool found = std::any_of(free_slots.begin(), free_slots.end(), partner_pred);
      if (!found) {
        // Fall back to any free slot; the requested kind is unavailable.
        kind = PosKind::Intra;
        auto any_pred = [](auto) { return true; };
        const auto partner = take_slot(any_pred);
        data.records.push_back({slot_id(anchor), slot_id(partner), 1, Split::Train});
      } else {
        const auto partner = take_slot(partner_pred);
        data.records.push_back({slot_id(anchor), slot_id(partner), 1, Split::Train});
      }
      train_anchor_ids.push_back(data.records.back().anchor_id);
    }

    // Dataset hard negatives: label-0 records from each train anchor to the
    // group's hard cluster.
    for (const auto& anchor_id : train_anchor_ids) {
      for (std::size_t h = 0; h < cfg.hard_pairs_per_anchor; ++h) {
        const std::size_t hj = rng.uniform_int(cfg.hards_per_group);
        const std::size_t hl = rng.uniform_int(n_langs);
        data.records.push_back({anchor_id,
                                sent_id(gtag + "_h" + std::to_string(hj), lang_tag(cfg, hl)), 0,
                                Split::Train});
      }
    }

    // Dev and test pairs reuse sentences freely; labels alternate for balance.
    auto emit_eval_pairs = [&](Split split, std::size_t count) {
      for (std::size_t p = 0; p < count; ++p) {
        const bool positive = (p % 2 == 0);
        const std::size_t aj = rng.uniform_int(n_pos);
        const std::size_t al = rng.uniform_int(n_langs);
        std::string a = sent_id(underlying[aj].group_id, lang_tag(cfg, al));
        if (positive) {
          const PosKind kind = draw_pos_kind(cfg, rng);
          std::size_t bj = aj;
          std::size_t bl = al;
          switch (kind) {
            case PosKind::Intra:
              bj = (aj + 1 + rng.uniform_int(n_pos - 1)) % n_pos;
              break;
            case PosKind::Translation:
              bl = (al + 1 + rng.uniform_int(n_langs - 1)) % n_langs;
              break;
            case PosKind::CrossParaphrase:
              bj = (aj + 1 + rng.uniform_int(n_pos - 1)) % n_pos;
              bl = (al + 1 + rng.uniform_int(n_langs - 1)) % n_langs;
              break;
          }
          data.records.push_back({a, sent_id(underlying[bj].group_id, lang_tag(cfg, bl)), 1, split});
        } else {
          const std::size_t hj = rng.uniform_int(cfg.hards_per_group);
          const std::size_t hl = rng.uniform_int(n_langs);
          data.records.push_back(
              {a, sent_id(gtag + "_h" + std::to_string(hj), lang_tag(cfg, hl)), 0, split});
        }
      }
    };
    emit_eval_pairs(Split::Dev, cfg.dev_pairs_per_group);
    emit_eval_pairs(Split::Test, cfg.test_pairs_per_group);
  }

  return data;
}

double expected_positive_fraction(const SyntheticConfig& cfg) {
  const double train_pos = static_cast<double>(cfg.pairs_per_group);
  const double train_neg = train_pos * static_cast<double>(cfg.hard_pairs_per_anchor);
  const double dev_pos = std::ceil(static_cast<double>(cfg.dev_pairs_per_group) / 2.0);
  const double dev_neg = static_cast<double>(cfg.dev_pairs_per_group) - dev_pos;
  const double test_pos = std::ceil(static_cast<double>(cfg.test_pairs_per_group) / 2.0);
  const double test_neg = static_cast<double>(cfg.test_pairs_per_group) - test_pos;
  const double pos = train_pos + dev_pos + test_pos;
  const double neg = train_neg + dev_neg + test_neg;
  return pos / (pos + neg);
}

void write_embeddings(std::ostream& bin, std::ostream& ids, const EmbeddingTable& table) {
  bin.write("EMB1", 4);
  put_u32_le(bin, static_cast<std::uint32_t>(table.ids.size()));
  put_u32_le(bin, static_cast<std::uint32_t>(table.dim));
  for (double v : table.values) {
    const float f = static_cast<float>(v);
    put_u32_le(bin, std::bit_cast<std::uint32_t>(f));
  }
  for (const auto& id : table.ids) ids << id << '\n';
}

EmbeddingTable read_embeddings(std::istream& bin, std::istream& ids) {
  char magic[4];
  if (!bin.read(magic, 4) || std::memcmp(magic, "EMB1", 4) != 0) {
    throw FormatError("embeddings.bin: bad magic (expected EMB1)");
  }
  const std::uint32_t count = get_u32_le(bin, "count");
  const std::uint32_t dim = get_u32_le(bin, "dim");

  EmbeddingTable table;
  table.dim = dim;
  table.values.reserve(static_cast<std::size_t>(count) * dim);

  std::vector<std::string> id_list;
  std::string line;
  while (std::getline(ids, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) id_list.push_back(line);
  }
  if (id_list.size() != count) {
    throw FormatError("embeddings.ids lists " + std::to_string(id_list.size()) +
                      " ids but embeddings.bin declares " + std::to_string(count));
  }

  std::vector<double> row(dim);
  for (std::uint32_t i = 0; i < count; ++i) {
    for (std::uint32_t k = 0; k < dim; ++k) {
      const std::uint32_t bits = get_u32_le(bin, "vector data");
      row[k] = static_cast<double>(std::bit_cast<float>(bits));
    }
    table.add(id_list[i], row);
  }
  return table;
}

}  // namespace paramine
