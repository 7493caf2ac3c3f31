#include "cde/model/checkpoint.hpp"

#include <cstring>
#include <map>

#include <json.hpp>

#include "cde/core/embedding_matrix.hpp"
#include "cde/error.hpp"

namespace cde::model {

namespace {

using nlohmann::json;

json config_json(const ModelConfig& c) {
  return {{"vocab_size", c.vocab_size},
          {"dim", c.dim},
          {"max_len", c.max_len},
          {"context_capacity", c.context_capacity},
          {"context_doc_tokens", c.context_doc_tokens},
          {"blocks", c.blocks},
          {"init_std", c.init_std},
          {"seed", c.seed}};
}

ModelConfig config_from(const json& j) {
  ModelConfig c;
  c.vocab_size = j.at("vocab_size").get<std::size_t>();
  c.dim = j.at("dim").get<std::size_t>();
  c.max_len = j.at("max_len").get<std::size_t>();
  c.context_capacity = j.at("context_capacity").get<std::size_t>();
  c.context_doc_tokens = j.at("context_doc_tokens").get<std::size_t>();
  c.blocks = j.at("blocks").get<std::size_t>();
  c.init_std = j.at("init_std").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

template <class Params>
Checkpoint collect(ModelKind kind, const Params& p, const TokenEncoder& enc) {
  Checkpoint c;
  c.kind = kind;
  c.config = p.config;
  c.terms = enc.terms();
  Params copy = p;
  for (auto* param : copy.all()) {
    c.sections.emplace_back(param->name, param->value);
  }
  return c;
}

template <class Params>
Params restore(ModelKind want, const Checkpoint& c) {
  if (c.kind != want) {
    throw FormatError("checkpoint: holds a " + std::string(kind_name(c.kind)) + " model, expected " +
                      std::string(kind_name(want)));
  }
  std::map<std::string, const ag::Param<float>*> by_name;
  for (const auto& s : c.sections) {
    if (!by_name.emplace(s.name, &s).second) {
      throw FormatError("checkpoint: duplicate section " + s.name);
    }
  }
  // init() only fixes names and shapes here; every value is overwritten.
  ModelConfig cfg = c.config;
  Params p = Params::init(cfg);
  auto params = p.all();
  if (params.size() != by_name.size()) {
    throw FormatError("checkpoint: " + std::to_string(by_name.size()) + " sections, model has " +
                      std::to_string(params.size()) + " parameters");
  }
  for (auto* param : params) {
    auto it = by_name.find(param->name);
    if (it == by_name.end()) throw FormatError("checkpoint: missing section " + param->name);
    if (!it->second->value.same_shape(param->value)) {
      throw ShapeError("checkpoint: section " + param->name + " has the wrong shape");
    }
    param->value = it->second->value;
    param->zero_grad();
  }
  return p;
}

}  // namespace

std::string_view kind_name(ModelKind k) { return k == ModelKind::cde ? "cde" : "biencoder"; }

ModelKind parse_kind(std::string_view s) {
  if (s == "biencoder") return ModelKind::biencoder;
  if (s == "cde") return ModelKind::cde;
  throw ConfigError("unknown model kind '" + std::string(s) + "'");
}

Checkpoint make_checkpoint(const BiencoderParams<float>& p, const TokenEncoder& enc) {
  return collect(ModelKind::biencoder, p, enc);
}

Checkpoint make_checkpoint(const CdeParams<float>& p, const TokenEncoder& enc) {
  return collect(ModelKind::cde, p, enc);
}

BiencoderParams<float> load_biencoder(const Checkpoint& c) {
  return restore<BiencoderParams<float>>(ModelKind::biencoder, c);
}

CdeParams<float> load_cde(const Checkpoint& c) {
  return restore<CdeParams<float>>(ModelKind::cde, c);
}

std::string encode_checkpoint(const Checkpoint& c) {
  std::string out(cache::kMagic, 4);
  le::put_u32(out, cache::kCheckpointVersion);
  const std::string meta =
      json{{"kind", kind_name(c.kind)}, {"config", config_json(c.config)}, {"terms", c.terms}}.dump();
  le::put_u32(out, static_cast<std::uint32_t>(meta.size()));
  out += meta;
  le::put_u32(out, static_cast<std::uint32_t>(c.sections.size()));
  for (const auto& s : c.sections) {
    le::put_u32(out, static_cast<std::uint32_t>(s.name.size()));
    out += s.name;
    le::put_u32(out, static_cast<std::uint32_t>(s.value.rows()));
    le::put_u32(out, static_cast<std::uint32_t>(s.value.cols()));
    for (float x : s.value.values()) le::put_f32(out, x);
  }
  return out;
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), cache::kMagic, 4) != 0) {
    throw FormatError("checkpoint: bad magic");
  }
  le::Reader r(bytes.substr(4));
  const std::uint32_t version = r.u32();
  if (version != cache::kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  }
  Checkpoint c;
  try {
    const json meta = json::parse(r.take(r.u32()));
    c.kind = parse_kind(meta.at("kind").get<std::string>());
    c.config = config_from(meta.at("config"));
    c.terms = meta.at("terms").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint: bad metadata: ") + e.what());
  }
  const std::uint32_t n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    std::string name(r.take(r.u32()));
    const std::uint64_t rows = r.u32();
    const std::uint64_t cols = r.u32();
    if (rows * cols > r.remaining() / 4) {
      throw SizeError("checkpoint: section " + name + " is truncated");
    }
    ag::Tensor<float> t(rows, cols);
    for (float& x : t.values()) x = r.f32();
    c.sections.emplace_back(std::move(name), std::move(t));
  }
  if (r.remaining() != 0) {
    throw SizeError("checkpoint: " + std::to_string(r.remaining()) + " trailing bytes");
  }
  return c;
}

void write_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
  write_file_bytes(path, encode_checkpoint(c));
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file_bytes(path));
}

}  // namespace cde::model
