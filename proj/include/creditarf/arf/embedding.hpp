#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "creditarf/arf/text.hpp"
#include "creditarf/numerics/tensor.hpp"

namespace creditarf::arf {

using nx::Tensor;

std::uint64_t fnv1a64(std::string_view bytes);

// Deterministic stand-in for a pretrained sentence encoder: each lowercase
// token seeds a normal draw of an m-vector; the sentence is the unit-norm mean.
std::vector<float> hash_embed(std::string_view sentence, std::size_t m, std::uint64_t provider_seed);

// Maps a document to one embedding row per sentence, [n x m].
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual Tensor<float> embed(const ReportDocument& doc) const = 0;
  virtual std::size_t dim() const = 0;
  virtual std::string identity() const = 0;
};

class HashEmbedder final : public EmbeddingProvider {
 public:
  HashEmbedder(std::size_t m, std::uint64_t seed) : m_(m), seed_(seed) {}
  Tensor<float> embed(const ReportDocument& doc) const override;
  std::size_t dim() const override { return m_; }
  std::string identity() const override { return "hash:" + std::to_string(m_) + ":" + std::to_string(seed_); }

 private:
  std::size_t m_;
  std::uint64_t seed_;
};

// ARFE file: "ARFE", u16 version, u32 m, u32 count, then per entry a u16
// length-prefixed key, u32 row count n and n*m little-endian float32 values.
struct ArfeCache {
  static constexpr std::uint16_t kVersion = 1;

  std::uint32_t dim = 0;
  std::map<std::string, Tensor<float>> entries;  // key -> [n x dim]

  void insert(const std::string& key, Tensor<float> rows);
  // Throws InputError naming the key when absent.
  const Tensor<float>& at(const std::string& key) const;

  std::vector<std::uint8_t> serialize() const;
  static ArfeCache parse(const std::vector<std::uint8_t>& bytes, const std::string& what = "ARFE cache");

  void save(const std::filesystem::path& path) const;
  static ArfeCache load(const std::filesystem::path& path);
};

// Serves precomputed rows; the cached row count is authoritative over the
// document's own sentence split.
class CachedEmbedder final : public EmbeddingProvider {
 public:
  // Throws InputError when the cache dimension differs from `expected_dim`.
  CachedEmbedder(ArfeCache cache, std::size_t expected_dim, std::string source = "memory");
  Tensor<float> embed(const ReportDocument& doc) const override;
  std::size_t dim() const override { return cache_.dim; }
  std::string identity() const override { return "arfe:" + source_; }

 private:
  ArfeCache cache_;
  std::string source_;
};

}  // namespace creditarf::arf
