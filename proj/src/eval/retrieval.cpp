#include "cde/eval/retrieval.hpp"

#include <sstream>

namespace cde::eval {

std::vector<EvalCorpus> build_eval_corpora(const data::PairDataset& dataset,
                                           const model::TokenEncoder& enc,
                                           const model::ModelConfig& cfg) {
  std::vector<EvalCorpus> out;
  for (const auto& [domain, idx] : dataset.indices_by_domain()) {
    EvalCorpus c;
    c.domain = domain;
    for (std::size_t i : idx) {
      const auto& pair = dataset[i];
      c.relevant.push_back({c.doc_ids.size()});
      c.doc_ids.push_back(pair.document.id);
      c.doc_texts.push_back(pair.document.text);
      c.documents.push_back(enc.encode(pair.document.text, model::Role::document, cfg.max_len));
      c.context_documents.push_back(
          enc.encode(pair.document.text, model::Role::document, cfg.context_doc_tokens));
      c.query_ids.push_back(pair.query.id);
      c.query_texts.push_back(pair.query.text);
      c.queries.push_back(enc.encode(pair.query.text, model::Role::query, cfg.max_len));
    }
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<ContextPool> build_context_pools(const data::PairDataset& dataset,
                                             const model::TokenEncoder& enc,
                                             const model::ModelConfig& cfg) {
  std::vector<ContextPool> out;
  for (const auto& [domain, idx] : dataset.indices_by_domain()) {
    ContextPool p;
    p.domain = domain;
    for (std::size_t i : idx) {
      p.ids.push_back(dataset[i].document.id);
      p.documents.push_back(
          enc.encode(dataset[i].document.text, model::Role::document, cfg.context_doc_tokens));
    }
    out.push_back(std::move(p));
  }
  return out;
}

ContextPool pool_from_corpus(const EvalCorpus& corpus) {
  return {corpus.domain, corpus.doc_ids, corpus.context_documents};
}

namespace {

std::vector<std::size_t> topk_rows(const EmbeddingMatrix& docs, std::span<const float> probe,
                                   std::size_t k) {
  std::vector<double> score(docs.rows());
  for (std::size_t j = 0; j < docs.rows(); ++j) score[j] = surrogate::surrogate_score(probe, docs.row(j));
  std::vector<std::size_t> order(docs.rows());
  std::iota(order.begin(), order.end(), 0);
  k = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (score[a] != score[b]) return score[a] > score[b];
                      return a < b;
                    });
  order.resize(k);
  return order;
}

}  // namespace

std::vector<std::size_t> SurrogateRetriever::topk_for_document(std::size_t i, std::size_t k) const {
  return topk_rows(documents, documents.row(i), k);
}

std::vector<std::size_t> SurrogateRetriever::topk_for_query(std::size_t i, std::size_t k) const {
  return topk_rows(documents, queries.row(i), k);
}

SurrogateRetriever make_surrogate_retriever(const EvalCorpus& corpus,
                                            const surrogate::SurrogateConfig& cfg) {
  const auto vocab = data::build_vocab(corpus.doc_texts);
  return {surrogate::embed_texts(corpus.doc_texts, corpus.doc_ids, vocab, cfg),
          surrogate::embed_texts(corpus.query_texts, corpus.query_ids, vocab, cfg)};
}

ContextSource parse_context_source(std::string_view name) {
  if (name == "null") return ContextSource::null;
  if (name == "random_in_domain" || name == "random") return ContextSource::random_in_domain;
  if (name == "topk") return ContextSource::topk;
  if (name == "full_sample") return ContextSource::full_sample;
  throw ConfigError("unknown context source '" + std::string(name) + "'");
}

std::string_view context_source_name(ContextSource s) {
  switch (s) {
    case ContextSource::null: return "null";
    case ContextSource::random_in_domain: return "random_in_domain";
    case ContextSource::topk: return "topk";
    case ContextSource::full_sample: return "full_sample";
  }
  return "?";
}

std::string InferenceStrategy::name() const {
  return std::string(context_source_name(doc_context)) + "-" +
         std::string(context_source_name(query_context));
}

InferenceStrategy InferenceStrategy::parse(std::string_view name) {
  const auto dash = name.find('-');
  if (dash == std::string_view::npos) {
    throw ConfigError("strategy must look like <doc>-<query>, got '" + std::string(name) + "'");
  }
  InferenceStrategy s;
  s.doc_context = parse_context_source(name.substr(0, dash));
  s.query_context = parse_context_source(name.substr(dash + 1));
  if (s.query_context == ContextSource::full_sample) {
    throw ConfigError("query context cannot be full_sample");
  }
  return s;
}

namespace detail {

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k == 0) return {};
  return train::subsample_context(n, k, seed, 0);
}

}  // namespace detail

std::string sweep_csv(const std::vector<SweepPoint>& points) {
  std::ostringstream out;
  out.precision(17);
  out << "context_size,mean_ndcg10\n";
  for (const auto& p : points) out << p.context_size << ',' << p.mean_ndcg10 << '\n';
  return out.str();
}

std::vector<SweepPoint> parse_sweep_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != "context_size,mean_ndcg10") {
    throw FormatError("sweep csv: bad header");
  }
  std::vector<SweepPoint> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw FormatError("sweep csv: missing column");
    try {
      out.push_back({std::stoul(line.substr(0, comma)), std::stod(line.substr(comma + 1))});
    } catch (const std::exception&) {
      throw FormatError("sweep csv: bad number in '" + line + "'");
    }
  }
  return out;
}

void apply_highlight(DomainMatrix& m, double margin) {
  m.highlight.assign(m.cells.size(), std::vector<std::uint8_t>(m.eval_domains.size(), 0));
  for (std::size_t j = 0; j < m.eval_domains.size(); ++j) {
    double best = -1.0;
    for (const auto& row : m.cells) best = std::max(best, row[j]);
    for (std::size_t i = 0; i < m.cells.size(); ++i) {
      m.highlight[i][j] = m.cells[i][j] >= best - margin ? 1 : 0;
    }
  }
}

std::string DomainMatrix::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "context_domain,eval_domain,mean_ndcg10,highlight\n";
  for (std::size_t i = 0; i < context_domains.size(); ++i) {
    for (std::size_t j = 0; j < eval_domains.size(); ++j) {
      out << context_domains[i] << ',' << eval_domains[j] << ',' << cells[i][j] << ','
          << (highlight.empty() ? 0 : static_cast<int>(highlight[i][j])) << '\n';
    }
  }
  return out.str();
}

DomainMatrix DomainMatrix::from_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != "context_domain,eval_domain,mean_ndcg10,highlight") {
    throw FormatError("domain matrix csv: bad header");
  }
  struct Cell {
    std::string ctx, ev;
    double v;
    int h;
  };
  std::vector<Cell> cells;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string part; std::getline(ss, part, ',');) f.push_back(part);
    if (f.size() != 4) throw FormatError("domain matrix csv: expected 4 columns");
    try {
      cells.push_back({f[0], f[1], std::stod(f[2]), std::stoi(f[3])});
    } catch (const std::exception&) {
      throw FormatError("domain matrix csv: bad number in '" + line + "'");
    }
  }
  DomainMatrix m;
  auto index_of = [](std::vector<std::string>& names, const std::string& n) {
    auto it = std::find(names.begin(), names.end(), n);
    if (it != names.end()) return static_cast<std::size_t>(it - names.begin());
    names.push_back(n);
    return names.size() - 1;
  };
  for (const auto& c : cells) {
    index_of(m.context_domains, c.ctx);
    index_of(m.eval_domains, c.ev);
  }
  m.cells.assign(m.context_domains.size(), std::vector<double>(m.eval_domains.size()));
  m.highlight.assign(m.context_domains.size(), std::vector<std::uint8_t>(m.eval_domains.size()));
  for (const auto& c : cells) {
    const auto i = index_of(m.context_domains, c.ctx);
    const auto j = index_of(m.eval_domains, c.ev);
    m.cells[i][j] = c.v;
    m.highlight[i][j] = static_cast<std::uint8_t>(c.h);
  }
  return m;
}

}  // namespace cde::eval
