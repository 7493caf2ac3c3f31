#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cde/core/dataset.hpp"

namespace cde::model {

/// Marks which side of the retrieval problem a text is on. Realized as a
/// reserved marker token at the start of the sequence.
enum class Role { none, query, document };

/// Text -> model token ids. Id 0 is the OOV id, 1 and 2 are the query and
/// document markers, and known terms start at 3. Terms that do not fit in
/// the table are hashed into the term range.
class TokenEncoder {
 public:
  static constexpr std::uint32_t kOov = 0;
  static constexpr std::uint32_t kQueryMarker = 1;
  static constexpr std::uint32_t kDocumentMarker = 2;
  static constexpr std::uint32_t kFirstTerm = 3;

  TokenEncoder() = default;
  TokenEncoder(std::vector<std::string> terms, std::size_t table_size);
  TokenEncoder(const data::Vocab& vocab, std::size_t table_size)
      : TokenEncoder(vocab.terms(), table_size) {}

  std::size_t table_size() const noexcept { return table_size_; }
  const std::vector<std::string>& terms() const noexcept { return terms_; }

  std::uint32_t id(std::string_view term) const;

  /// Marker (unless Role::none) followed by term ids, truncated to
  /// `max_len` entries in total.
  std::vector<std::uint32_t> encode(std::string_view text, Role role,
                                    std::size_t max_len) const;

 private:
  std::vector<std::string> terms_;
  std::unordered_map<std::string, std::uint32_t> ids_;
  std::size_t table_size_ = 0;
};

}  // namespace cde::model
