#include "experiment.hpp"

#include <set>

#include "cde/core/hash.hpp"

namespace cde::experiment {

DeskConfig DeskConfig::standard() {
  DeskConfig c;
  // Many small domains with a fully shared vocabulary: domains differ only
  // in word frequencies, and half of every text is domain filler.
  c.synth.n_domains = 24;
  c.synth.pairs_per_domain = 96;
  c.synth.vocab_per_domain = 150;
  c.synth.shared_vocab = 200;
  c.synth.shared_fraction = 1.0;
  c.synth.boilerplate_terms = 20;
  c.synth.boilerplate_fraction = 0.5;
  c.synth.doc_length = 16;
  c.synth.query_ratio = 0.5;
  c.synth.noise = 0.1;
  c.synth.zipf_exponent = 0.0;
  c.holdout = 0.5;
  c.unseen_domains = 4;
  c.train_pairs_per_domain = 48;

  c.model.vocab_size = 1024;
  c.model.dim = 32;
  c.model.max_len = 24;
  c.model.context_capacity = 48;
  c.model.context_doc_tokens = 12;
  c.model.blocks = 1;

  c.train.temperature = 0.05;
  c.train.lr_peak = 5e-3;
  c.train.warmup_steps = 20;
  c.train.epochs = 12;
  c.train.seq_dropout_p = 0.2;
  c.train.context_k = 48;

  c.cluster.target_size = 16;
  c.cluster.restarts = 1;
  c.cluster.max_iters = 30;
  c.pack.batch_size = 16;
  return c;
}

DeskConfig seeded(DeskConfig cfg, std::uint64_t seed) {
  cfg.synth.seed = mix64(seed ^ 0x73796eULL);
  cfg.model.seed = mix64(seed ^ 0x6d6f64ULL);
  cfg.train.seed = mix64(seed ^ 0x747261ULL);
  cfg.cluster.seed = mix64(seed ^ 0x636c75ULL);
  cfg.pack.seed = mix64(seed ^ 0x70616bULL);
  return cfg;
}

SeedData prepare_seed(const DeskConfig& base, std::uint64_t seed) {
  const DeskConfig cfg = seeded(base, seed);
  if (cfg.unseen_domains >= cfg.synth.n_domains) {
    throw ConfigError("experiment: need at least one training domain");
  }
  SeedData d;
  auto corpus = data::generate_synthetic_corpus(cfg.synth);
  auto [train_all, test_all] = data::split_holdout(corpus, cfg.holdout, cfg.synth.seed);
  std::set<std::string> unseen;
  for (std::size_t i = cfg.synth.n_domains - cfg.unseen_domains; i < cfg.synth.n_domains; ++i) {
    unseen.insert("domain" + std::to_string(i));
  }
  auto pick = [&](const data::PairDataset& ds, bool want_unseen) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      if ((unseen.count(ds[i].query.domain) != 0) == want_unseen) idx.push_back(i);
    }
    return ds.subset(idx);
  };
  d.train_set = pick(train_all, false);
  if (cfg.train_pairs_per_domain > 0) {
    std::vector<std::size_t> keep;
    for (const auto& [domain, idx] : d.train_set.indices_by_domain()) {
      const std::size_t n = std::min(idx.size(), cfg.train_pairs_per_domain);
      keep.insert(keep.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n));
    }
    std::sort(keep.begin(), keep.end());
    d.train_set = d.train_set.subset(keep);
  }
  d.test_set = pick(test_all, cfg.unseen_domains > 0);
  const auto unseen_pool = pick(train_all, true);
  const auto seen_test = pick(test_all, false);

  d.index = pipeline::build_surrogate_index(d.train_set, cfg.surrogate);
  d.encoder = model::TokenEncoder(d.index.vocab, cfg.model.vocab_size);
  d.tokens = train::tokenize_pairs(d.train_set, d.encoder, cfg.model);
  d.clustered = pipeline::clustered_plan(d.train_set, d.index, cfg.cluster, cfg.pack);
  d.masks = pipeline::build_masks(d.clustered, d.train_set, d.index, cfg.filter);
  d.random = pack::random_batches(pipeline::pair_domains(d.train_set), cfg.pack);
  d.corpora = eval::build_eval_corpora(d.test_set, d.encoder, cfg.model);
  d.pools = eval::build_context_pools(cfg.unseen_domains > 0 ? unseen_pool : d.train_set,
                                      d.encoder, cfg.model);
  d.seen_corpora = eval::build_eval_corpora(seen_test, d.encoder, cfg.model);
  d.seen_pools = eval::build_context_pools(d.train_set, d.encoder, cfg.model);
  return d;
}

train::TrainInputs clustered_inputs(const SeedData& d, bool with_masks) {
  train::TrainInputs in;
  in.tokens = &d.tokens;
  in.plan = &d.clustered;
  if (with_masks) in.masks = d.masks;
  return in;
}

train::TrainInputs random_inputs(const SeedData& d) {
  train::TrainInputs in;
  in.tokens = &d.tokens;
  in.plan = &d.random;
  return in;
}

model::BiencoderParams<float> train_biencoder(const DeskConfig& cfg, const train::TrainInputs& in) {
  auto p = model::BiencoderParams<float>::init(cfg.model);
  train::train_biencoder(p, in, cfg.train);
  return p;
}

model::CdeParams<float> train_cde(const DeskConfig& cfg, const train::TrainInputs& in) {
  auto p = model::CdeParams<float>::init(cfg.model);
  train::train_cde(p, in, cfg.train);
  return p;
}

double eval_biencoder(const model::BiencoderParams<float>& p, const SeedData& d) {
  return eval::evaluate_all(p, d.corpora, {}).mean_ndcg10;
}

double eval_cde_in_domain(const model::CdeParams<float>& p, const SeedData& d, std::uint64_t seed,
                          std::size_t k) {
  eval::InferenceStrategy s{eval::ContextSource::full_sample,
                            eval::ContextSource::random_in_domain, k, seed};
  std::vector<eval::ContextPool> own;
  for (const auto& c : d.corpora) own.push_back(eval::pool_from_corpus(c));
  return eval::evaluate_all(p, d.corpora, s, &own).mean_ndcg10;
}

double eval_cde_cross_domain(const model::CdeParams<float>& p, const SeedData& d,
                             std::uint64_t seed) {
  std::vector<eval::ContextPool> shifted;
  for (std::size_t i = 0; i < d.corpora.size(); ++i) {
    shifted.push_back(eval::pool_from_corpus(d.corpora[(i + 1) % d.corpora.size()]));
  }
  eval::InferenceStrategy s{eval::ContextSource::random_in_domain,
                            eval::ContextSource::random_in_domain, 0, seed};
  return eval::evaluate_all(p, d.corpora, s, &shifted).mean_ndcg10;
}

double eval_cde_null(const model::CdeParams<float>& p, const SeedData& d) {
  return eval::evaluate_all(p, d.corpora, {}).mean_ndcg10;
}

std::vector<eval::SweepPoint> eval_cde_sweep(const model::CdeParams<float>& p, const SeedData& d,
                                             std::uint64_t seed, std::span<const std::size_t> sizes) {
  eval::InferenceStrategy s{eval::ContextSource::full_sample,
                            eval::ContextSource::random_in_domain, 0, seed};
  std::vector<eval::ContextPool> own;
  for (const auto& c : d.corpora) own.push_back(eval::pool_from_corpus(c));
  return eval::context_size_sweep(p, d.corpora, sizes, s, &own);
}

}  // namespace cde::experiment
