#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace cde {

/// Dense row-major f32 matrix with one record id per row.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  explicit EmbeddingMatrix(std::size_t dim);
  EmbeddingMatrix(std::size_t dim, std::vector<float> values,
                  std::vector<std::string> ids);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t rows() const noexcept { return ids_.size(); }

  std::span<const float> row(std::size_t i) const {
    return {values_.data() + i * dim_, dim_};
  }
  std::span<float> row(std::size_t i) {
    return {values_.data() + i * dim_, dim_};
  }
  const std::string& id(std::size_t i) const { return ids_[i]; }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  const std::vector<float>& values() const noexcept { return values_; }

  void append(std::span<const float> row, std::string id);

  /// Marks the matrix unit-norm after checking every row is within
  /// `tol` of length 1. Throws NumericError otherwise.
  void mark_unit_norm(double tol = 1e-5);
  bool unit_norm() const noexcept { return unit_norm_; }

  /// Bitwise equality of dim, values and ids.
  bool operator==(const EmbeddingMatrix& other) const;

 private:
  std::size_t dim_ = 0;
  std::vector<float> values_;
  std::vector<std::string> ids_;
  bool unit_norm_ = false;
};

namespace cache {

inline constexpr char kMagic[4] = {'C', 'D', 'E', '1'};
inline constexpr std::uint32_t kEmbeddingVersion = 1;
inline constexpr std::uint32_t kCheckpointVersion = 2;

}  // namespace cache

// Little-endian layout: "CDE1", u32 version=1, u32 dim, u64 rows, rows*dim
// f32 values, then per row a u32 byte length followed by the UTF-8 id.
std::string encode_embedding_cache(const EmbeddingMatrix& m);
EmbeddingMatrix decode_embedding_cache(std::string_view bytes);

void write_embedding_cache(const EmbeddingMatrix& m,
                           const std::filesystem::path& path);
EmbeddingMatrix read_embedding_cache(const std::filesystem::path& path);

/// Little-endian primitives shared by the cache and checkpoint codecs.
namespace le {

void put_u32(std::string& out, std::uint32_t v);
void put_u64(std::string& out, std::uint64_t v);
void put_f32(std::string& out, float v);

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}
  std::uint32_t u32();
  std::uint64_t u64();
  float f32();
  std::string_view take(std::size_t n);
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace le

std::string read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::string_view bytes);

}  // namespace cde
