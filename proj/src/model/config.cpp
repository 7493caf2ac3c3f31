#include "cde/model/config.hpp"

#include <string>

#include "cde/error.hpp"
#include "cde/model/tokens.hpp"

namespace cde::model {

void ModelConfig::validate() const {
  if (vocab_size <= TokenEncoder::kFirstTerm) {
    throw ConfigError("vocab_size must exceed the reserved ids, got " + std::to_string(vocab_size));
  }
  if (dim == 0) throw ConfigError("dim must be positive");
  if (max_len < 2) throw ConfigError("max_len must be at least 2");
  if (context_capacity == 0) throw ConfigError("context_capacity must be positive");
  if (context_doc_tokens < 2) throw ConfigError("context_doc_tokens must be at least 2");
  if (blocks == 0) throw ConfigError("blocks must be positive");
  if (!(init_std > 0.0)) throw ConfigError("init_std must be positive");
}

}  // namespace cde::model
