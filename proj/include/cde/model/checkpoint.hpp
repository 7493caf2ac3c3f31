#pragma once

// Parameter checkpoints. Same container as the embedding cache ("CDE1"
// magic, little-endian) at version 2:
//   u32 version, u32 metadata length, metadata JSON (model kind, config,
//   tokenizer terms), u32 section count, then per section
//   u32 name length, name, u32 rows, u32 cols, rows*cols f32.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "cde/model/biencoder.hpp"
#include "cde/model/cde.hpp"
#include "cde/model/config.hpp"
#include "cde/model/tokens.hpp"

namespace cde::model {

enum class ModelKind { biencoder, cde };

std::string_view kind_name(ModelKind k);
ModelKind parse_kind(std::string_view s);

struct Checkpoint {
  ModelKind kind = ModelKind::biencoder;
  ModelConfig config;
  std::vector<std::string> terms;
  std::vector<ag::Param<float>> sections;

  TokenEncoder encoder() const { return TokenEncoder(terms, config.vocab_size); }
};

Checkpoint make_checkpoint(const BiencoderParams<float>& p, const TokenEncoder& enc);
Checkpoint make_checkpoint(const CdeParams<float>& p, const TokenEncoder& enc);

/// Rebuild parameters from a checkpoint. Every parameter must be present
/// with the shape the stored config implies; extra sections are an error.
BiencoderParams<float> load_biencoder(const Checkpoint& c);
CdeParams<float> load_cde(const Checkpoint& c);

std::string encode_checkpoint(const Checkpoint& c);
Checkpoint decode_checkpoint(std::string_view bytes);

void write_checkpoint(const Checkpoint& c, const std::filesystem::path& path);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace cde::model
