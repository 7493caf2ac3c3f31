#include "cde/model/tokens.hpp"

#include "cde/core/hash.hpp"
#include "cde/error.hpp"

namespace cde::model {

TokenEncoder::TokenEncoder(std::vector<std::string> terms, std::size_t table_size)
    : terms_(std::move(terms)), table_size_(table_size) {
  if (table_size_ <= kFirstTerm) {
    throw ConfigError("token table must hold more than the " +
                      std::to_string(kFirstTerm) + " reserved ids");
  }
  const std::size_t slots = table_size_ - kFirstTerm;
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    const auto mid = i < slots ? kFirstTerm + i
                               : kFirstTerm + fnv1a64(terms_[i]) % slots;
    ids_.emplace(terms_[i], static_cast<std::uint32_t>(mid));
  }
}

std::uint32_t TokenEncoder::id(std::string_view term) const {
  auto it = ids_.find(std::string(term));
  return it == ids_.end() ? kOov : it->second;
}

std::vector<std::uint32_t> TokenEncoder::encode(std::string_view text,
                                                Role role,
                                                std::size_t max_len) const {
  std::vector<std::uint32_t> out;
  if (role == Role::query) out.push_back(kQueryMarker);
  if (role == Role::document) out.push_back(kDocumentMarker);
  for (const std::string& tok : data::tokenize(text)) {
    if (out.size() >= max_len) break;
    out.push_back(id(tok));
  }
  return out;
}

}  // namespace cde::model
