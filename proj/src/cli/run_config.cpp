#include "cde/cli/run_config.hpp"

#include <charconv>

#include "cde/core/hash.hpp"
#include "cde/core/embedding_matrix.hpp"
#include "cde/error.hpp"

namespace cde::cli {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view want) {
  throw ConfigError("config key " + std::string(key) + ": '" + std::string(value) + "' is not " +
                    std::string(want));
}

template <class Int>
Int parse_int(std::string_view key, std::string_view v) {
  Int out{};
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v, "a non-negative integer");
  return out;
}

double parse_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v, "a number");
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_value(key, v, "true or false");
}

// Visits every (key, field) pair. The single list keeps set(), echo() and
// keys() in agreement.
template <class Config, class F>
void visit(Config& c, F&& f) {
  f("seed", c.seed);
  f("threads", c.threads);

  f("synth.n_domains", c.synth.n_domains);
  f("synth.pairs_per_domain", c.synth.pairs_per_domain);
  f("synth.vocab_per_domain", c.synth.vocab_per_domain);
  f("synth.shared_vocab", c.synth.shared_vocab);
  f("synth.shared_fraction", c.synth.shared_fraction);
  f("synth.noise", c.synth.noise);
  f("synth.doc_length", c.synth.doc_length);
  f("synth.query_ratio", c.synth.query_ratio);
  f("synth.zipf_exponent", c.synth.zipf_exponent);
  f("synth.boilerplate_terms", c.synth.boilerplate_terms);
  f("synth.boilerplate_fraction", c.synth.boilerplate_fraction);
  f("synth.holdout", c.holdout);

  f("surrogate.hash_dim", c.surrogate.hash_dim);
  f("surrogate.idf_smoothing", c.surrogate.idf_smoothing);
  f("surrogate.normalize", c.surrogate.normalize);

  f("cluster.k", c.cluster.k);
  f("cluster.target_size", c.cluster.target_size);
  f("cluster.max_iters", c.cluster.max_iters);
  f("cluster.restarts", c.cluster.restarts);
  f("cluster.per_domain", c.cluster.per_domain);
  f("cluster.tol", c.cluster.tol);

  f("pack.batch_size", c.pack.batch_size);
  f("pack.strategy", c.pack.strategy);
  f("pack.allow_cross_domain", c.pack.allow_cross_domain);
  f("pack.keep_short_tail", c.pack.keep_short_tail);

  f("filter.enabled", c.filter.enabled);
  f("filter.epsilon", c.filter.epsilon);
  f("filter.collision_mode", c.filter.collision_mode);

  f("model.vocab_size", c.model.vocab_size);
  f("model.dim", c.model.dim);
  f("model.max_len", c.model.max_len);
  f("model.context_capacity", c.model.context_capacity);
  f("model.context_doc_tokens", c.model.context_doc_tokens);
  f("model.blocks", c.model.blocks);
  f("model.init_std", c.model.init_std);

  f("train.temperature", c.train.temperature);
  f("train.lr_peak", c.train.lr_peak);
  f("train.warmup_steps", c.train.warmup_steps);
  f("train.epochs", c.train.epochs);
  f("train.seq_dropout_p", c.train.seq_dropout_p);
  f("train.context_k", c.train.context_k);
  f("train.gradcache", c.train.gradcache);
  f("train.gradcache_chunk", c.train.gradcache_chunk);
  f("train.symmetric", c.train.symmetric);

  f("eval.strategy", c.eval.strategy);
  f("eval.k", c.eval.k);
  f("eval.sizes", c.eval.sizes);
  f("eval.highlight_margin", c.eval.highlight_margin);
  f("eval.divergence", c.eval.divergence);
}

struct Setter {
  std::string_view key;
  std::string_view value;
  bool found = false;

  template <class Field>
  void operator()(std::string_view k, Field& field) {
    if (k != key) return;
    found = true;
    if constexpr (std::is_same_v<Field, bool>) {
      field = parse_bool(key, value);
    } else if constexpr (std::is_same_v<Field, double>) {
      field = parse_double(key, value);
    } else if constexpr (std::is_integral_v<Field>) {
      field = parse_int<Field>(key, value);
    } else if constexpr (std::is_same_v<Field, std::string>) {
      field = std::string(value);
    } else if constexpr (std::is_same_v<Field, pack::Strategy>) {
      field = pack::parse_strategy(value);
    } else {
      field = filter::parse_collision_mode(value);
    }
  }
};

}  // namespace

void RunConfig::set(std::string_view key, std::string_view value) {
  Setter s{trim(key), trim(value)};
  visit(*this, s);
  if (!s.found) throw ConfigError("unknown config key '" + std::string(key) + "'");
}

void RunConfig::apply_text(std::string_view text, std::string_view source) {
  std::size_t pos = 0, line_no = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(std::string(source) + ":" + std::to_string(line_no) +
                        ": expected key = value");
    }
    set(line.substr(0, eq), line.substr(eq + 1));
  }
}

void RunConfig::apply_file(const std::filesystem::path& path) {
  apply_text(read_file_bytes(path), path.string());
}

void RunConfig::derive_seeds() {
  synth.seed = mix64(seed ^ 0x73796eULL);
  cluster.seed = mix64(seed ^ 0x636c75ULL);
  pack.seed = mix64(seed ^ 0x70616bULL);
  model.seed = mix64(seed ^ 0x6d6f64ULL);
  train.seed = mix64(seed ^ 0x747261ULL);
}

nlohmann::json RunConfig::seeds() const {
  return {{"run", seed},         {"synth", synth.seed}, {"cluster", cluster.seed},
          {"pack", pack.seed},   {"model", model.seed}, {"train", train.seed}};
}

nlohmann::json RunConfig::echo() const {
  nlohmann::json out = nlohmann::json::object();
  RunConfig copy = *this;
  visit(copy, [&](std::string_view k, const auto& field) {
    using Field = std::decay_t<decltype(field)>;
    if constexpr (std::is_same_v<Field, pack::Strategy>) {
      out[std::string(k)] = pack::strategy_name(field);
    } else if constexpr (std::is_same_v<Field, filter::CollisionMode>) {
      out[std::string(k)] = filter::collision_mode_name(field);
    } else {
      out[std::string(k)] = field;
    }
  });
  return out;
}

std::vector<std::string> RunConfig::keys() {
  std::vector<std::string> out;
  RunConfig c;
  visit(c, [&](std::string_view k, const auto&) { out.emplace_back(k); });
  return out;
}

void RunConfig::validate() const {
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (!(holdout >= 0.0 && holdout < 1.0)) throw ConfigError("synth.holdout must lie in [0, 1)");
  surrogate.validate();
  cluster.validate();
  pack.validate();
  model.validate();
  train.validate();
  if (!(eval.highlight_margin >= 0.0)) throw ConfigError("eval.highlight_margin must be >= 0");
  if (eval.divergence != "cosine" && eval.divergence != "l1") {
    throw ConfigError("eval.divergence must be cosine or l1");
  }
  parse_size_list(eval.sizes);
}

std::vector<std::size_t> parse_size_list(std::string_view text) {
  std::vector<std::size_t> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find(',', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto item = trim(text.substr(pos, end - pos));
    if (item.empty()) throw ConfigError("eval.sizes: empty entry in '" + std::string(text) + "'");
    out.push_back(parse_int<std::size_t>("eval.sizes", item));
    pos = end + 1;
  }
  return out;
}

}  // namespace cde::cli
