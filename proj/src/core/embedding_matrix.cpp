#include "cde/core/embedding_matrix.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "cde/error.hpp"

namespace cde {

EmbeddingMatrix::EmbeddingMatrix(std::size_t dim) : dim_(dim) {}

EmbeddingMatrix::EmbeddingMatrix(std::size_t dim, std::vector<float> values,
                                 std::vector<std::string> ids)
    : dim_(dim), values_(std::move(values)), ids_(std::move(ids)) {
  if (values_.size() != dim_ * ids_.size()) {
    throw ShapeError("embedding matrix: " + std::to_string(values_.size()) +
                     " values for " + std::to_string(ids_.size()) +
                     " rows of dim " + std::to_string(dim_));
  }
}

void EmbeddingMatrix::append(std::span<const float> row, std::string id) {
  if (row.size() != dim_) {
    throw ShapeError("embedding matrix: appending row of dim " +
                     std::to_string(row.size()) + " to dim " +
                     std::to_string(dim_));
  }
  values_.insert(values_.end(), row.begin(), row.end());
  ids_.push_back(std::move(id));
  unit_norm_ = false;
}

void EmbeddingMatrix::mark_unit_norm(double tol) {
  for (std::size_t i = 0; i < rows(); ++i) {
    double sq = 0.0;
    for (float x : row(i)) sq += static_cast<double>(x) * x;
    if (std::abs(std::sqrt(sq) - 1.0) > tol) {
      throw NumericError("row " + std::to_string(i) + " (" + ids_[i] +
                         ") is not unit norm");
    }
  }
  unit_norm_ = true;
}

bool EmbeddingMatrix::operator==(const EmbeddingMatrix& other) const {
  if (dim_ != other.dim_ || ids_ != other.ids_) return false;
  if (values_.size() != other.values_.size()) return false;
  return values_.empty() ||
         std::memcmp(values_.data(), other.values_.data(),
                     values_.size() * sizeof(float)) == 0;
}

namespace le {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float v) {
  put_u32(out, std::bit_cast<std::uint32_t>(v));
}

std::string_view Reader::take(std::size_t n) {
  if (n > remaining()) {
    throw SizeError("truncated payload: need " + std::to_string(n) +
                    " bytes at offset " + std::to_string(pos_) + ", have " +
                    std::to_string(remaining()));
  }
  std::string_view out = bytes_.substr(pos_, n);
  pos_ += n;
  return out;
}

std::uint32_t Reader::u32() {
  auto b = take(4);
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(b[i]);
  return v;
}

std::uint64_t Reader::u64() {
  auto b = take(8);
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(b[i]);
  return v;
}

float Reader::f32() { return std::bit_cast<float>(u32()); }

}  // namespace le

std::string encode_embedding_cache(const EmbeddingMatrix& m) {
  if (m.dim() < 1) throw ShapeError("embedding cache: dim must be >= 1");
  std::string out(cache::kMagic, 4);
  le::put_u32(out, cache::kEmbeddingVersion);
  le::put_u32(out, static_cast<std::uint32_t>(m.dim()));
  le::put_u64(out, m.rows());
  out.reserve(out.size() + m.values().size() * 4);
  for (float x : m.values()) le::put_f32(out, x);
  for (const std::string& id : m.ids()) {
    le::put_u32(out, static_cast<std::uint32_t>(id.size()));
    out += id;
  }
  return out;
}

EmbeddingMatrix decode_embedding_cache(std::string_view bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), cache::kMagic, 4) != 0) {
    throw FormatError("embedding cache: bad magic");
  }
  le::Reader r(bytes.substr(4));
  const std::uint32_t version = r.u32();
  if (version != cache::kEmbeddingVersion) {
    throw FormatError("embedding cache: unsupported version " +
                      std::to_string(version));
  }
  const std::uint32_t dim = r.u32();
  const std::uint64_t rows = r.u64();
  if (dim == 0) throw FormatError("embedding cache: dim is zero");
  if (rows * dim > r.remaining() / 4) {
    throw SizeError("embedding cache: header claims " + std::to_string(rows) +
                    " rows of dim " + std::to_string(dim) +
                    " but payload is shorter");
  }
  std::vector<float> values(rows * dim);
  for (float& x : values) x = r.f32();
  std::vector<std::string> ids;
  ids.reserve(rows);
  for (std::uint64_t i = 0; i < rows; ++i) {
    const std::uint32_t len = r.u32();
    ids.emplace_back(r.take(len));
  }
  if (r.remaining() != 0) {
    throw SizeError("embedding cache: " + std::to_string(r.remaining()) +
                    " trailing bytes");
  }
  return EmbeddingMatrix(dim, std::move(values), std::move(ids));
}

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file_bytes(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

void write_embedding_cache(const EmbeddingMatrix& m,
                           const std::filesystem::path& path) {
  write_file_bytes(path, encode_embedding_cache(m));
}

EmbeddingMatrix read_embedding_cache(const std::filesystem::path& path) {
  return decode_embedding_cache(read_file_bytes(path));
}

}  // namespace cde
