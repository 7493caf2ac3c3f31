#include "cde/core/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "cde/core/hash.hpp"
#include "cde/error.hpp"

namespace cde::data {

using nlohmann::json;

PairDataset::PairDataset(std::vector<Pair> pairs) : pairs_(std::move(pairs)) {
  for (std::size_t i = 0; i < pairs_.size(); ++i) {
    const Pair& p = pairs_[i];
    if (p.query.domain != p.document.domain) {
      throw FormatError("pair " + std::to_string(i) +
                        ": query and document domains differ");
    }
    domains_.insert(p.query.domain);
  }
}

std::map<std::string, std::vector<std::size_t>> PairDataset::indices_by_domain()
    const {
  std::map<std::string, std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < pairs_.size(); ++i) {
    out[pairs_[i].query.domain].push_back(i);
  }
  return out;
}

PairDataset PairDataset::subset(const std::vector<std::size_t>& indices) const {
  std::vector<Pair> picked;
  picked.reserve(indices.size());
  for (std::size_t i : indices) picked.push_back(pairs_.at(i));
  return PairDataset(std::move(picked));
}

std::uint64_t PairDataset::fingerprint() const {
  std::uint64_t h = kFnvOffset;
  auto feed = [&h](std::string_view s) {
    h = fnv1a64(s, h);
    h = fnv1a64(std::string_view("\x1f", 1), h);
  };
  for (const Pair& p : pairs_) {
    for (const TextRecord* r : {&p.query, &p.document}) {
      feed(r->id);
      feed(r->text);
      feed(r->domain);
    }
  }
  return h;
}

const PrefixPair* PrefixConfig::lookup(const std::string& domain) const {
  if (auto it = by_domain.find(domain); it != by_domain.end()) {
    return &it->second;
  }
  return fallback ? &*fallback : nullptr;
}

namespace {

TextRecord make_record(std::string id, std::string body, std::string domain,
                       const std::string* prefix, const std::string& sep) {
  TextRecord r;
  r.id = std::move(id);
  r.domain = std::move(domain);
  if (prefix != nullptr && !prefix->empty()) {
    r.prefix = *prefix;
    r.text = *prefix + sep + body;
  } else {
    r.text = body;
  }
  r.body = std::move(body);
  return r;
}

std::string require_string(const json& obj, const char* field,
                           std::string_view source, std::size_t line_no) {
  auto it = obj.find(field);
  if (it == obj.end()) {
    throw FormatError(std::string(source) + ":" + std::to_string(line_no) +
                      ": missing field \"" + field + "\"");
  }
  if (!it->is_string()) {
    throw FormatError(std::string(source) + ":" + std::to_string(line_no) +
                      ": field \"" + field + "\" is not a string");
  }
  return it->get<std::string>();
}

}  // namespace

PairDataset parse_pairs_jsonl(std::string_view contents,
                              const PrefixConfig& prefixes,
                              std::string_view source) {
  std::vector<Pair> pairs;
  std::unordered_set<std::string> seen_ids;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < contents.size()) {
    std::size_t end = contents.find('\n', pos);
    if (end == std::string_view::npos) end = contents.size();
    std::string_view line = contents.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw FormatError(std::string(source) + ":" + std::to_string(line_no) +
                        ": malformed JSON (" + e.what() + ")");
    }
    if (!obj.is_object()) {
      throw FormatError(std::string(source) + ":" + std::to_string(line_no) +
                        ": expected a JSON object");
    }
    std::string query = require_string(obj, "query", source, line_no);
    std::string document = require_string(obj, "document", source, line_no);
    std::string domain = require_string(obj, "domain", source, line_no);

    const std::size_t index = pairs.size();
    std::string base;
    if (obj.contains("id")) {
      base = require_string(obj, "id", source, line_no);
      if (!seen_ids.insert(base).second) {
        throw FormatError(std::string(source) + ":" + std::to_string(line_no) +
                          ": duplicate id \"" + base + "\"");
      }
    }
    std::string qid = base.empty() ? "q" + std::to_string(index) : base + "/q";
    std::string did = base.empty() ? "d" + std::to_string(index) : base + "/d";

    const PrefixPair* pp = prefixes.lookup(domain);
    Pair p;
    p.query = make_record(std::move(qid), std::move(query), domain,
                          pp ? &pp->query : nullptr, prefixes.separator);
    p.document = make_record(std::move(did), std::move(document), domain,
                             pp ? &pp->document : nullptr, prefixes.separator);
    if (p.query.text.empty() || p.document.text.empty()) {
      throw FormatError(std::string(source) + ":" + std::to_string(line_no) +
                        ": empty text");
    }
    pairs.push_back(std::move(p));
  }
  return PairDataset(std::move(pairs));
}

PairDataset load_pairs_jsonl(const std::filesystem::path& path,
                             const PrefixConfig& prefixes) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open pairs file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_pairs_jsonl(buf.str(), prefixes, path.string());
}

std::string to_jsonl(const PairDataset& dataset) {
  std::string out;
  for (const Pair& p : dataset.pairs()) {
    json obj = {{"query", p.query.body},
                {"document", p.document.body},
                {"domain", p.query.domain}};
    out += obj.dump();
    out += '\n';
  }
  return out;
}

void write_pairs_jsonl(const PairDataset& dataset,
                       const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out << to_jsonl(dataset);
}

namespace {

// Byte length of a Unicode whitespace sequence starting at s[i], or 0.
std::size_t unicode_space_len(std::string_view s, std::size_t i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  if (b0 == ' ' || (b0 >= 0x09 && b0 <= 0x0d)) return 1;
  if (b0 == 0xc2 && i + 1 < s.size()) {
    const auto b1 = static_cast<unsigned char>(s[i + 1]);
    if (b1 == 0x85 || b1 == 0xa0) return 2;  // NEL, NBSP
  }
  if (i + 2 < s.size()) {
    const auto b1 = static_cast<unsigned char>(s[i + 1]);
    const auto b2 = static_cast<unsigned char>(s[i + 2]);
    if (b0 == 0xe1 && b1 == 0x9a && b2 == 0x80) return 3;  // U+1680
    if (b0 == 0xe2 && b1 == 0x80 &&
        (b2 <= 0x8a || b2 == 0xa8 || b2 == 0xa9 || b2 == 0xaf)) {
      return 3;  // U+2000..200A, U+2028, U+2029, U+202F
    }
    if (b0 == 0xe2 && b1 == 0x81 && b2 == 0x9f) return 3;  // U+205F
    if (b0 == 0xe3 && b1 == 0x80 && b2 == 0x80) return 3;  // U+3000
  }
  return 0;
}

bool ascii_punct(unsigned char c) {
  return (c >= 0x21 && c <= 0x2f) || (c >= 0x3a && c <= 0x40) ||
         (c >= 0x5b && c <= 0x60) || (c >= 0x7b && c <= 0x7e);
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (std::size_t n = unicode_space_len(text, i); n > 0) {
      if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
      i += n;
      continue;
    }
    if (ascii_punct(c)) {
      if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
      ++i;
      continue;
    }
    cur.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c + 32)
                                       : static_cast<char>(c));
    ++i;
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::optional<std::uint32_t> Vocab::id(std::string_view term) const {
  auto it = ids_.find(std::string(term));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

std::uint32_t Vocab::df(std::string_view term) const {
  auto found = id(term);
  return found ? df_[*found] : 0;
}

Vocab build_vocab(const std::vector<std::string>& texts) {
  Vocab v;
  v.num_docs_ = texts.size();
  std::unordered_set<std::uint32_t> seen;
  for (const std::string& text : texts) {
    seen.clear();
    for (std::string& tok : tokenize(text)) {
      auto [it, inserted] =
          v.ids_.try_emplace(tok, static_cast<std::uint32_t>(v.terms_.size()));
      if (inserted) {
        v.terms_.push_back(std::move(tok));
        v.df_.push_back(0);
      }
      if (seen.insert(it->second).second) ++v.df_[it->second];
    }
  }
  return v;
}

std::vector<std::string> all_texts(const PairDataset& dataset) {
  std::vector<std::string> out;
  out.reserve(2 * dataset.size());
  for (const Pair& p : dataset.pairs()) out.push_back(p.query.text);
  for (const Pair& p : dataset.pairs()) out.push_back(p.document.text);
  return out;
}

std::vector<std::string> document_texts(const PairDataset& dataset) {
  std::vector<std::string> out;
  out.reserve(dataset.size());
  for (const Pair& p : dataset.pairs()) out.push_back(p.document.text);
  return out;
}

PairDataset generate_synthetic_corpus(const SyntheticConfig& cfg) {
  if (cfg.n_domains < 1 || cfg.pairs_per_domain < 1 ||
      cfg.vocab_per_domain < 1 || cfg.doc_length < 1) {
    throw ConfigError("synthetic corpus: counts must be >= 1");
  }
  if (cfg.boilerplate_fraction < 0.0 || cfg.boilerplate_fraction > 1.0) {
    throw ConfigError("synthetic corpus: boilerplate_fraction must lie in [0, 1]");
  }
  if (cfg.noise < 0.0 || cfg.noise > 1.0) {
    throw ConfigError("synthetic corpus: noise must lie in [0, 1]");
  }
  std::mt19937_64 rng(cfg.seed);

  auto zipf = [&](std::size_t n) {
    std::vector<double> w(n);
    for (std::size_t r = 0; r < n; ++r) {
      w[r] = 1.0 / std::pow(static_cast<double>(r + 1), cfg.zipf_exponent);
    }
    return w;
  };
  const double shared_p = cfg.shared_vocab == 0 ? 0.0 : cfg.shared_fraction;

  std::vector<Pair> pairs;
  pairs.reserve(cfg.n_domains * cfg.pairs_per_domain);
  for (std::size_t dom = 0; dom < cfg.n_domains; ++dom) {
    const std::string domain = "domain" + std::to_string(dom);
    std::vector<std::string> core(cfg.vocab_per_domain);
    for (std::size_t i = 0; i < core.size(); ++i) {
      core[i] = "d" + std::to_string(dom) + "w" + std::to_string(i);
    }
    // Each domain ranks the shared vocabulary differently.
    std::vector<std::string> shared(cfg.shared_vocab);
    for (std::size_t i = 0; i < shared.size(); ++i) {
      shared[i] = "s" + std::to_string(i);
    }
    std::shuffle(shared.begin(), shared.end(), rng);

    const auto core_w = zipf(core.size());
    std::discrete_distribution<std::size_t> core_dist(core_w.begin(),
                                                      core_w.end());
    auto shared_w = zipf(std::max<std::size_t>(shared.size(), 1));
    std::discrete_distribution<std::size_t> shared_dist(shared_w.begin(),
                                                        shared_w.end());
    std::bernoulli_distribution from_shared(shared_p);
    const std::size_t n_filler = std::min(cfg.boilerplate_terms, shared.size());
    std::bernoulli_distribution filler(n_filler == 0 ? 0.0 : cfg.boilerplate_fraction);
    std::uniform_int_distribution<std::size_t> filler_pick(0, n_filler == 0 ? 0 : n_filler - 1);
    auto draw = [&]() -> const std::string& {
      if (filler(rng)) return shared[filler_pick(rng)];
      if (from_shared(rng)) return shared[shared_dist(rng)];
      return core[core_dist(rng)];
    };

    std::bernoulli_distribution corrupt(cfg.noise);
    for (std::size_t j = 0; j < cfg.pairs_per_domain; ++j) {
      std::vector<std::string> doc;
      doc.reserve(cfg.doc_length);
      for (std::size_t t = 0; t < cfg.doc_length; ++t) doc.push_back(draw());

      auto keep = static_cast<std::size_t>(
          std::lround(cfg.query_ratio * static_cast<double>(doc.size())));
      keep = std::clamp<std::size_t>(keep, 1, doc.size());
      std::vector<std::size_t> positions(doc.size());
      for (std::size_t t = 0; t < positions.size(); ++t) positions[t] = t;
      std::shuffle(positions.begin(), positions.end(), rng);
      positions.resize(keep);
      std::sort(positions.begin(), positions.end());

      std::string qtext;
      for (std::size_t t : positions) {
        const std::string& tok = corrupt(rng) ? draw() : doc[t];
        if (!qtext.empty()) qtext += ' ';
        qtext += tok;
      }
      std::string dtext;
      for (const std::string& tok : doc) {
        if (!dtext.empty()) dtext += ' ';
        dtext += tok;
      }
      const std::size_t index = pairs.size();
      Pair p;
      p.query = make_record("q" + std::to_string(index), std::move(qtext),
                            domain, nullptr, "");
      p.document = make_record("d" + std::to_string(index), std::move(dtext),
                               domain, nullptr, "");
      pairs.push_back(std::move(p));
    }
  }
  return PairDataset(std::move(pairs));
}

}  // namespace cde::data

namespace cde::data {

std::pair<PairDataset, PairDataset> split_holdout(const PairDataset& dataset,
                                                  double test_fraction,
                                                  std::uint64_t seed) {
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) {
    throw ConfigError("holdout fraction must lie in [0, 1)");
  }
  std::vector<std::size_t> train, test;
  for (const auto& [domain, idx] : dataset.indices_by_domain()) {
    std::vector<std::size_t> shuffled = idx;
    std::mt19937_64 rng(mix64(seed ^ fnv1a64(domain)));
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    auto n_test = static_cast<std::size_t>(
        std::lround(test_fraction * static_cast<double>(idx.size())));
    if (test_fraction > 0.0 && idx.size() >= 2) n_test = std::clamp<std::size_t>(n_test, 1, idx.size() - 1);
    test.insert(test.end(), shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_test));
    train.insert(train.end(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_test), shuffled.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {dataset.subset(train), dataset.subset(test)};
}

}  // namespace cde::data
