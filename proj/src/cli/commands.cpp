#include "cde/cli/commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <iostream>
#include <set>

#include "cde/cli/manifest.hpp"
#include "cde/core/embedding_matrix.hpp"
#include "cde/error.hpp"
#include "cde/eval/analysis.hpp"
#include "cde/eval/retrieval.hpp"
#include "cde/model/checkpoint.hpp"
#include "cde/pipeline.hpp"
#include "cde/train/trainer.hpp"

namespace cde::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Tracks what a run reads and writes so the manifest can record it.
class Run {
 public:
  explicit Run(const Invocation& inv) : inv_(inv) {
    manifest_.command = inv.command;
    manifest_.args = inv.args;
    manifest_.config = inv.config.echo();
    manifest_.seeds = inv.config.seeds();
    manifest_.started_at = utc_timestamp();
  }

  const RunConfig& cfg() const { return inv_.config; }
  bool has(const std::string& arg) const { return inv_.args.count(arg) != 0; }

  const std::string& arg(const std::string& name) const {
    auto it = inv_.args.find(name);
    if (it == inv_.args.end() || it->second.empty()) {
      throw InputError(inv_.command + ": --" + name + " is required");
    }
    return it->second;
  }

  std::string read(const fs::path& path) {
    std::string bytes = read_file_bytes(path);
    manifest_.inputs[path.string()] = sha256_hex(bytes);
    return bytes;
  }

  data::PairDataset pairs(const std::string& name) {
    const std::string& path = arg(name);
    return data::parse_pairs_jsonl(read(path), {}, path);
  }

  void write(const std::string& name, std::string_view bytes) {
    write_file_bytes(inv_.out_dir / name, bytes);
    manifest_.outputs.push_back(name);
  }

  fs::path finish() {
    manifest_.finished_at = utc_timestamp();
    const fs::path path = inv_.out_dir / (inv_.command + ".manifest.json");
    write_file_bytes(path, manifest_.to_json().dump(2) + "\n");
    return path;
  }

 private:
  const Invocation& inv_;
  Manifest manifest_;
};

pipeline::SurrogateIndex surrogate_index(Run& run, const data::PairDataset& ds) {
  if (!run.has("embeddings")) return pipeline::build_surrogate_index(ds, run.cfg().surrogate);
  const fs::path dir = run.arg("embeddings");
  pipeline::SurrogateIndex index;
  index.vocab = data::build_vocab(data::all_texts(ds));
  index.embeddings.documents = decode_embedding_cache(run.read(dir / "documents.cde"));
  index.embeddings.queries = decode_embedding_cache(run.read(dir / "queries.cde"));
  if (index.embeddings.documents.rows() != ds.size() ||
      index.embeddings.queries.rows() != ds.size()) {
    throw InputError("embedding cache rows do not match the pairs file");
  }
  return index;
}

pack::BatchPlan load_plan(Run& run) {
  const fs::path plan_path = run.arg("plan");
  std::string drops;
  if (run.has("drops")) {
    drops = run.read(run.arg("drops"));
  } else if (fs::exists(plan_path.parent_path() / "drops.json")) {
    drops = run.read(plan_path.parent_path() / "drops.json");
  }
  return pack::parse_plan(run.read(plan_path), drops);
}

void check_plan(const pack::BatchPlan& plan, std::size_t n) {
  for (const auto& b : plan.batches) {
    for (std::size_t i : b.pair_indices) {
      if (i >= n) throw InputError("batch plan refers to pair " + std::to_string(i) +
                                   " of a " + std::to_string(n) + "-pair dataset");
    }
  }
}

// ---------------------------------------------------------------------------

void cmd_synth(Run& run) {
  const auto corpus = data::generate_synthetic_corpus(run.cfg().synth);
  auto [train, test] = data::split_holdout(corpus, run.cfg().holdout, run.cfg().synth.seed);
  run.write("pairs.jsonl", data::to_jsonl(corpus));
  run.write("train.jsonl", data::to_jsonl(train));
  run.write("test.jsonl", data::to_jsonl(test));
  std::cout << "pairs " << corpus.size() << " train " << train.size() << " test " << test.size()
            << "\n";
}

void cmd_embed(Run& run) {
  const auto ds = run.pairs("pairs");
  const auto index = pipeline::build_surrogate_index(ds, run.cfg().surrogate);
  run.write("documents.cde", encode_embedding_cache(index.embeddings.documents));
  run.write("queries.cde", encode_embedding_cache(index.embeddings.queries));
  std::cout << "rows " << ds.size() << " dim " << run.cfg().surrogate.hash_dim << "\n";
}

void cmd_cluster(Run& run) {
  const auto ds = run.pairs("pairs");
  const auto index = surrogate_index(run, ds);
  const auto domains = pipeline::pair_domains(ds);
  const auto a = cluster::cluster_pairs(index.embeddings.documents, index.embeddings.queries,
                                        run.cfg().cluster, domains);
  run.write("clusters.jsonl", cluster::cluster_file_jsonl(a));
  std::cout << "clusters " << a.k << " objective " << a.objective << "\n";
}

void cmd_pack(Run& run) {
  const auto ds = run.pairs("pairs");
  const auto index = surrogate_index(run, ds);
  std::size_t k = 0;
  auto ids = cluster::parse_cluster_file(run.read(run.arg("clusters")), ds.size(), &k);
  const auto domains = pipeline::pair_domains(ds);
  const auto a = cluster::assignment_from_ids(std::move(ids), k, index.embeddings.documents,
                                              index.embeddings.queries, domains);
  const auto plan = pack::pack_batches(a, domains, run.cfg().pack);
  run.write("plan.jsonl", pack::plan_jsonl(plan));
  run.write("drops.json", pack::drop_report_json(plan));
  std::cout << "batches " << plan.batches.size() << " dropped " << plan.dropped.size() << "\n";
}

void cmd_filter_stats(Run& run) {
  const auto ds = run.pairs("pairs");
  const auto plan = load_plan(run);
  check_plan(plan, ds.size());
  const auto index = surrogate_index(run, ds);
  std::size_t collisions = 0;
  const auto masks = pipeline::build_masks(plan, ds, index, run.cfg().filter, &collisions);
  const auto stats = pipeline::mask_stats(masks, collisions);
  run.write("mask_stats.json", stats.to_json() + "\n");
  std::cout << stats.to_json() << "\n";
}

void cmd_train(Run& run) {
  const std::string& variant = run.arg("variant");
  const auto kind = model::parse_kind(variant);
  const RunConfig& cfg = run.cfg();
  const auto ds = run.pairs("pairs");
  const auto index = surrogate_index(run, ds);
  pack::BatchPlan plan;
  if (run.has("plan")) {
    plan = load_plan(run);
    check_plan(plan, ds.size());
  } else {
    plan = pipeline::clustered_plan(ds, index, cfg.cluster, cfg.pack);
  }
  if (plan.batches.empty()) throw InputError("train: the batch plan is empty");

  const model::TokenEncoder enc(index.vocab, cfg.model.vocab_size);
  const auto tokens = train::tokenize_pairs(ds, enc, cfg.model);
  train::TrainInputs in;
  in.tokens = &tokens;
  in.plan = &plan;
  if (cfg.filter.enabled) in.masks = pipeline::build_masks(plan, ds, index, cfg.filter);
  in.hardness = pipeline::plan_hardness(plan, index);

  std::vector<train::TrainLogRow> log;
  auto save = [&](const auto& params, const std::string& name) {
    run.write(name, model::encode_checkpoint(model::make_checkpoint(params, enc)));
  };
  if (kind == model::ModelKind::biencoder) {
    auto p = model::BiencoderParams<float>::init(cfg.model);
    log = train::train_biencoder(p, in, cfg.train, [&](std::size_t epoch) {
      save(p, "model_epoch" + std::to_string(epoch) + ".ckpt");
    });
    save(p, "model.ckpt");
  } else {
    auto p = model::CdeParams<float>::init(cfg.model);
    log = train::train_cde(p, in, cfg.train, [&](std::size_t epoch) {
      save(p, "model_epoch" + std::to_string(epoch) + ".ckpt");
    });
    save(p, "model.ckpt");
  }
  run.write("train_log.csv", train::train_log_csv(log));
  std::cout << "steps " << log.size() << " final_loss " << log.back().loss << "\n";
}

// Evaluation helpers shared by eval, sweep-context and domain-matrix.
struct EvalSetup {
  model::Checkpoint ckpt;
  std::vector<eval::EvalCorpus> corpora;
  /// Aligned with corpora.
  std::vector<eval::ContextPool> pools;
};

EvalSetup eval_setup(Run& run) {
  EvalSetup s;
  s.ckpt = model::decode_checkpoint(run.read(run.arg("model")));
  const auto enc = s.ckpt.encoder();
  const auto ds = run.pairs("pairs");
  s.corpora = eval::build_eval_corpora(ds, enc, s.ckpt.config);
  std::vector<eval::ContextPool> given;
  if (run.has("context")) given = eval::build_context_pools(run.pairs("context"), enc, s.ckpt.config);
  for (const auto& c : s.corpora) {
    auto it = std::find_if(given.begin(), given.end(),
                           [&](const eval::ContextPool& p) { return p.domain == c.domain; });
    s.pools.push_back(it != given.end() ? *it : eval::pool_from_corpus(c));
  }
  return s;
}

model::CdeParams<float> require_cde(const EvalSetup& s, const std::string& command) {
  if (s.ckpt.kind != model::ModelKind::cde) {
    throw ConfigError(command + " needs a contextual model checkpoint");
  }
  return model::load_cde(s.ckpt);
}

void cmd_eval(Run& run) {
  const RunConfig& cfg = run.cfg();
  auto s = eval_setup(run);
  auto strategy = eval::InferenceStrategy::parse(cfg.eval.strategy);
  strategy.k = cfg.eval.k;
  strategy.seed = cfg.seed;
  std::vector<eval::EvalReport> parts;
  std::string name;
  if (s.ckpt.kind == model::ModelKind::biencoder) {
    const auto p = model::load_biencoder(s.ckpt);
    for (const auto& c : s.corpora) parts.push_back(eval::evaluate_retrieval(p, c));
    name = "null-null";
  } else {
    const auto p = model::load_cde(s.ckpt);
    const bool topk = strategy.doc_context == eval::ContextSource::topk ||
                      strategy.query_context == eval::ContextSource::topk;
    for (std::size_t i = 0; i < s.corpora.size(); ++i) {
      std::optional<eval::SurrogateRetriever> retriever;
      if (topk) retriever = eval::make_surrogate_retriever(s.corpora[i], cfg.surrogate);
      eval::EvalOptions opts;
      opts.pool = &s.pools[i];
      opts.retriever = retriever ? &*retriever : nullptr;
      parts.push_back(eval::evaluate_retrieval(p, s.corpora[i], strategy, opts));
    }
    name = strategy.name();
  }
  const auto report = eval::EvalReport::merge(name, parts);
  run.write("eval_report.json", report.to_json() + "\n");
  std::cout << "strategy " << report.strategy << " mean_ndcg10 " << report.mean_ndcg10
            << " skipped " << report.skipped << "\n";
}

void cmd_sweep(Run& run) {
  const RunConfig& cfg = run.cfg();
  auto s = eval_setup(run);
  const auto p = require_cde(s, "sweep-context");
  auto base = eval::InferenceStrategy::parse(cfg.eval.strategy);
  if (base.doc_context == eval::ContextSource::null &&
      base.query_context == eval::ContextSource::null) {
    throw ConfigError("sweep-context: eval.strategy " + cfg.eval.strategy +
                      " uses no context; choose a sampling strategy");
  }
  base.seed = cfg.seed;
  const auto sizes = parse_size_list(cfg.eval.sizes);
  const auto points = eval::context_size_sweep(p, s.corpora, sizes, base, &s.pools);
  run.write("sweep.csv", eval::sweep_csv(points));
  for (const auto& pt : points) std::cout << pt.context_size << " " << pt.mean_ndcg10 << "\n";
}

void cmd_domain_matrix(Run& run) {
  const RunConfig& cfg = run.cfg();
  auto s = eval_setup(run);
  const auto p = require_cde(s, "domain-matrix");
  const auto m = eval::cross_domain_context_matrix(p, s.corpora, s.pools, cfg.eval.k, cfg.seed,
                                                   cfg.eval.highlight_margin);
  run.write("domain_matrix.csv", m.to_csv());
  std::size_t diagonal = 0;
  for (std::size_t j = 0; j < m.eval_domains.size(); ++j) {
    if (j < m.context_domains.size() && m.highlight[j][j]) ++diagonal;
  }
  std::cout << "domains " << m.eval_domains.size() << " diagonal_highlighted " << diagonal << "\n";
}

void cmd_analyze_idf(Run& run) {
  const RunConfig& cfg = run.cfg();
  const auto train_set = run.pairs("train");
  const auto test_set = run.pairs("test");
  const auto kind = cfg.eval.divergence == "l1" ? eval::DivergenceKind::l1
                                                : eval::DivergenceKind::cosine;
  const auto train_vocab = data::build_vocab(data::document_texts(train_set));

  std::optional<model::Checkpoint> ckpt;
  if (run.has("model")) ckpt = model::decode_checkpoint(run.read(run.arg("model")));
  const model::ModelConfig mcfg = ckpt ? ckpt->config : cfg.model;
  const model::TokenEncoder enc = ckpt ? ckpt->encoder() : model::TokenEncoder(train_vocab, mcfg.vocab_size);
  const auto corpora = eval::build_eval_corpora(test_set, enc, mcfg);

  json rows = json::array();
  std::vector<double> divergences, deltas;
  for (const auto& c : corpora) {
    const auto vocab = data::build_vocab(c.doc_texts);
    const double div = eval::idf_divergence(train_vocab, vocab, kind);
    // Lexical baseline: tf-idf with the evaluated corpus's own statistics.
    const auto lex = eval::make_surrogate_retriever(c, cfg.surrogate);
    auto to_tensor = [](const EmbeddingMatrix& m) {
      return ag::Tensor<float>(m.rows(), m.dim(), m.values());
    };
    const double lexical =
        eval::score_rankings(c, to_tensor(lex.queries), to_tensor(lex.documents), "lexical")
            .mean_ndcg10;
    json row = {{"domain", c.domain}, {"divergence", div}, {"lexical_ndcg10", lexical}};
    if (ckpt) {
      const double model_ndcg =
          ckpt->kind == model::ModelKind::cde
              ? eval::evaluate_retrieval(model::load_cde(*ckpt), c, {}).mean_ndcg10
              : eval::evaluate_retrieval(model::load_biencoder(*ckpt), c).mean_ndcg10;
      row["model_ndcg10"] = model_ndcg;
      row["delta_ndcg10"] = model_ndcg - lexical;
      divergences.push_back(div);
      deltas.push_back(model_ndcg - lexical);
    }
    rows.push_back(row);
  }
  json out = {{"divergence_kind", cfg.eval.divergence},
              {"train_vs_test",
               eval::idf_divergence(train_vocab,
                                    data::build_vocab(data::document_texts(test_set)), kind)},
              {"domains", rows},
              {"pearson", nullptr}};
  if (divergences.size() >= 2) out["pearson"] = eval::pearson(divergences, deltas);
  run.write("idf_analysis.json", out.dump(2) + "\n");
  std::cout << "domains " << corpora.size() << " train_vs_test " << out["train_vs_test"] << "\n";
}

void cmd_inspect_plan(Run& run) {
  const auto plan = load_plan(run);
  std::size_t min_size = plan.batches.empty() ? 0 : SIZE_MAX, max_size = 0;
  std::set<std::size_t> seen;
  std::size_t repeats = 0;
  for (const auto& b : plan.batches) {
    min_size = std::min(min_size, b.pair_indices.size());
    max_size = std::max(max_size, b.pair_indices.size());
    for (std::size_t i : b.pair_indices) repeats += !seen.insert(i).second;
  }
  for (std::size_t i : plan.dropped) repeats += !seen.insert(i).second;
  json out = {{"batches", plan.batches.size()},
              {"covered_pairs", plan.covered_pairs()},
              {"dropped", plan.dropped.size()},
              {"min_batch", min_size},
              {"max_batch", max_size},
              {"repeated_indices", repeats}};
  if (run.has("pairs")) {
    const auto ds = run.pairs("pairs");
    check_plan(plan, ds.size());
    std::size_t pure = 0;
    for (const auto& b : plan.batches) {
      const bool same = std::all_of(b.pair_indices.begin(), b.pair_indices.end(), [&](std::size_t i) {
        return ds[i].query.domain == ds[b.pair_indices.front()].query.domain;
      });
      pure += same;
    }
    const auto index = surrogate_index(run, ds);
    const auto hardness = pipeline::plan_hardness(plan, index);
    const auto adversarial = pipeline::plan_adversarial(plan, index);
    out["dataset_pairs"] = ds.size();
    out["coverage_complete"] =
        repeats == 0 && plan.covered_pairs() + plan.dropped.size() == ds.size();
    out["domain_pure_batches"] = pure;
    out["mean_batch_hardness"] = eval::mean(hardness);
    out["mean_adversarial_score"] = eval::mean(adversarial);
  }
  run.write("plan_report.json", out.dump(2) + "\n");
  std::cout << out.dump() << "\n";
}

using Handler = void (*)(Run&);

const std::map<std::string, Handler>& handlers() {
  static const std::map<std::string, Handler> h = {
      {"synth-data", cmd_synth},         {"embed", cmd_embed},
      {"cluster", cmd_cluster},          {"pack", cmd_pack},
      {"filter-stats", cmd_filter_stats}, {"train", cmd_train},
      {"eval", cmd_eval},                {"sweep-context", cmd_sweep},
      {"domain-matrix", cmd_domain_matrix}, {"analyze-idf", cmd_analyze_idf},
      {"inspect-plan", cmd_inspect_plan}};
  return h;
}

std::string_view error_kind(int code) {
  switch (code) {
    case 2: return "input";
    case 3: return "config";
    case 4: return "numeric";
    default: return "internal";
  }
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {
      "synth-data", "embed", "cluster", "pack", "filter-stats", "train",
      "eval", "sweep-context", "domain-matrix", "analyze-idf", "inspect-plan"};
  return names;
}

fs::path run_command(Invocation inv) {
  auto it = handlers().find(inv.command);
  if (it == handlers().end()) throw ConfigError("unknown command '" + inv.command + "'");
  inv.config.derive_seeds();
  inv.config.validate();
  fs::create_directories(inv.out_dir);
  Run run(inv);
  it->second(run);
  return run.finish();
}

Invocation invocation_from_manifest(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_file_bytes(path));
  } catch (const json::exception& e) {
    throw FormatError("manifest " + path.string() + ": " + e.what());
  }
  const Manifest m = Manifest::from_json(j);
  Invocation inv;
  inv.command = m.command;
  inv.args = m.args;
  for (const auto& [key, value] : m.config.items()) {
    inv.config.set(key, value.is_string() ? value.get<std::string>() : value.dump());
  }
  return inv;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const InputError*>(&e) != nullptr) return 2;
  if (dynamic_cast<const FormatError*>(&e) != nullptr) return 2;
  if (dynamic_cast<const SizeError*>(&e) != nullptr) return 2;
  if (dynamic_cast<const ConfigError*>(&e) != nullptr) return 3;
  if (dynamic_cast<const CLI::ParseError*>(&e) != nullptr) return 3;
  if (dynamic_cast<const NumericError*>(&e) != nullptr) return 4;
  return 1;
}

std::string error_line(const std::exception& e) {
  const int code = exit_code_for(e);
  return json{{"error", error_kind(code)}, {"exit_code", code}, {"message", e.what()}}.dump();
}

int main_entry(int argc, char** argv) {
  CLI::App app{"Contextual document embedding toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(kToolVersion));

  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::string config_path, out_dir = ".";
  std::vector<std::string> overrides;
  app.add_option("--seed", seed, "Run seed; every module seed derives from it");
  app.add_option("--config", config_path, "Flat key = value config file");
  app.add_option("--out-dir", out_dir, "Directory for outputs and the manifest");
  app.add_option("--threads", threads, "Parallelism cap");
  app.add_option("--set", overrides, "key=value override, applied after --config")
      ->allow_extra_args(false);

  std::map<std::string, std::string> args;
  auto path_opt = [&](CLI::App* sub, const std::string& name, bool required,
                      const std::string& help) {
    auto* opt = sub->add_option_function<std::string>(
        "--" + name, [&args, name](const std::string& v) { args[name] = v; }, help);
    if (required) opt->required();
  };

  app.add_subcommand("synth-data", "Write a synthetic multi-domain pairs corpus");
  auto* embed = app.add_subcommand("embed", "Surrogate tf-idf embeddings of a pairs file");
  path_opt(embed, "pairs", true, "Pairs JSONL");
  auto* clus = app.add_subcommand("cluster", "Cluster pairs into pseudo-domains");
  path_opt(clus, "pairs", true, "Pairs JSONL");
  path_opt(clus, "embeddings", false, "Directory holding documents.cde and queries.cde");
  auto* pack = app.add_subcommand("pack", "Pack clusters into fixed-size batches");
  path_opt(pack, "pairs", true, "Pairs JSONL");
  path_opt(pack, "clusters", true, "Cluster file from `cluster`");
  path_opt(pack, "embeddings", false, "Directory holding documents.cde and queries.cde");
  auto* fstats = app.add_subcommand("filter-stats", "False-negative mask statistics of a plan");
  path_opt(fstats, "pairs", true, "Pairs JSONL");
  path_opt(fstats, "plan", true, "Batch plan JSONL");
  path_opt(fstats, "drops", false, "Drop report (default: drops.json next to the plan)");
  auto* train = app.add_subcommand("train", "Train a biencoder or contextual model");
  train->add_option_function<std::string>(
           "variant", [&](const std::string& v) { args["variant"] = v; }, "biencoder | cde")
      ->required()
      ->check(CLI::IsMember({"biencoder", "cde"}));
  path_opt(train, "pairs", true, "Training pairs JSONL");
  path_opt(train, "plan", false, "Batch plan (default: cluster and pack the pairs)");
  path_opt(train, "drops", false, "Drop report (default: drops.json next to the plan)");
  auto* ev = app.add_subcommand("eval", "NDCG@10 of a checkpoint on held-out pairs");
  auto* sweep = app.add_subcommand("sweep-context", "NDCG@10 against context size");
  auto* matrix = app.add_subcommand("domain-matrix", "Context-domain by eval-domain NDCG@10");
  for (auto* sub : {ev, sweep, matrix}) {
    path_opt(sub, "model", true, "Checkpoint");
    path_opt(sub, "pairs", true, "Evaluation pairs JSONL");
    path_opt(sub, "context", false, "Pairs whose documents form per-domain context pools");
  }
  auto* idf = app.add_subcommand("analyze-idf", "IDF divergence between train and test domains");
  path_opt(idf, "train", true, "Training pairs JSONL");
  path_opt(idf, "test", true, "Test pairs JSONL");
  path_opt(idf, "model", false, "Checkpoint for the NDCG delta against the lexical baseline");
  auto* inspect = app.add_subcommand("inspect-plan", "Coverage and hardness report of a plan");
  path_opt(inspect, "plan", true, "Batch plan JSONL");
  path_opt(inspect, "drops", false, "Drop report (default: drops.json next to the plan)");
  path_opt(inspect, "pairs", false, "Pairs JSONL, for coverage and hardness");
  std::string manifest_path;
  auto* rerun = app.add_subcommand("rerun", "Repeat the run a manifest records");
  rerun->add_option("manifest", manifest_path, "Manifest JSON")->required();

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::Success& e) {
      return app.exit(e);
    }
    Invocation inv;
    if (rerun->parsed()) {
      inv = invocation_from_manifest(manifest_path);
    } else {
      inv.command = app.get_subcommands().front()->get_name();
      inv.args = args;
    }
    if (!config_path.empty()) inv.config.apply_file(config_path);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
      inv.config.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (seed) inv.config.seed = *seed;
    if (threads) inv.config.threads = *threads;
    inv.out_dir = out_dir;
    const auto manifest = run_command(std::move(inv));
    std::cout << "manifest " << manifest.string() << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << error_line(e) << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << error_line(e) << "\n";
    return exit_code_for(e);
  }
}

}  // namespace cde::cli
