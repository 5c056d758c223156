#include "creditarf/arf/embedding.hpp"

#include <cmath>
#include <limits>

#include "creditarf/error.hpp"
#include "creditarf/io/binary.hpp"
#include "creditarf/numerics/rng.hpp"

namespace creditarf::arf {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<float> hash_embed(std::string_view sentence, std::size_t m, std::uint64_t provider_seed) {
  const auto tokens = tokenize(sentence);
  if (tokens.empty()) throw InputError("cannot embed an empty sentence");
  std::vector<double> acc(m, 0.0);
  for (const auto& t : tokens) {
    nx::Rng rng(nx::mix64(fnv1a64(t) ^ provider_seed));
    for (auto& v : acc) v += rng.normal();
  }
  double norm = 0;
  for (double v : acc) norm += v * v;
  norm = std::sqrt(norm);
  std::vector<float> out(m);
  for (std::size_t i = 0; i < m; ++i) out[i] = static_cast<float>(acc[i] / norm);
  return out;
}

Tensor<float> HashEmbedder::embed(const ReportDocument& doc) const {
  if (doc.sentences.empty()) throw InputError("document " + doc.key() + " has no sentences");
  Tensor<float> out({doc.sentences.size(), m_});
  for (std::size_t s = 0; s < doc.sentences.size(); ++s) {
    const auto row = hash_embed(doc.sentences[s], m_, seed_);
    std::copy(row.begin(), row.end(), out.data() + s * m_);
  }
  return out;
}

void ArfeCache::insert(const std::string& key, Tensor<float> rows) {
  if (rows.rank() != 2 || rows.cols() != dim) {
    throw ShapeError("cache entry " + key + " must be [n x " + std::to_string(dim) + "], got " +
                     nx::to_string(rows.shape()));
  }
  if (key.size() > std::numeric_limits<std::uint16_t>::max()) throw InputError("cache key too long: " + key);
  entries.insert_or_assign(key, std::move(rows));
}

const Tensor<float>& ArfeCache::at(const std::string& key) const {
  auto it = entries.find(key);
  if (it == entries.end()) throw InputError("embedding cache has no entry for " + key);
  return it->second;
}

std::vector<std::uint8_t> ArfeCache::serialize() const {
  io::ByteWriter w;
  w.raw("ARFE");
  w.u16(kVersion);
  w.u32(dim);
  w.u32(static_cast<std::uint32_t>(entries.size()));
  for (const auto& [key, rows] : entries) {
    w.u16(static_cast<std::uint16_t>(key.size()));
    w.raw(key);
    w.u32(static_cast<std::uint32_t>(rows.rows()));
    for (float v : rows.values()) w.f32(v);
  }
  return w.take();
}

ArfeCache ArfeCache::parse(const std::vector<std::uint8_t>& bytes, const std::string& what) {
  io::ByteReader r(bytes.data(), bytes.size(), what);
  if (bytes.size() < 4 || r.raw(4) != "ARFE") throw InputError(what + ": bad magic, not an ARFE file");
  const auto version = r.u16();
  if (version != kVersion) throw InputError(what + ": unsupported ARFE version " + std::to_string(version));
  ArfeCache cache;
  cache.dim = r.u32();
  if (cache.dim == 0) throw InputError(what + ": embedding dimension is zero");
  const auto count = r.u32();
  for (std::uint32_t e = 0; e < count; ++e) {
    const auto klen = r.u16();
    std::string key = r.raw(klen);
    const auto n = r.u32();
    if (n == 0) throw InputError(what + ": entry " + key + " has no rows");
    r.need(static_cast<std::size_t>(n) * cache.dim * 4);
    Tensor<float> rows({n, cache.dim});
    for (auto& v : rows.values()) v = r.f32();
    if (cache.entries.count(key)) throw InputError(what + ": duplicate entry " + key);
    cache.entries.emplace(std::move(key), std::move(rows));
  }
  if (r.remaining() != 0) throw InputError(what + ": " + std::to_string(r.remaining()) + " trailing bytes");
  return cache;
}

void ArfeCache::save(const std::filesystem::path& path) const { io::write_file(path, serialize()); }

ArfeCache ArfeCache::load(const std::filesystem::path& path) { return parse(io::read_file(path), path.string()); }

CachedEmbedder::CachedEmbedder(ArfeCache cache, std::size_t expected_dim, std::string source)
    : cache_(std::move(cache)), source_(std::move(source)) {
  if (cache_.dim != expected_dim) {
    throw InputError("embedding cache dimension " + std::to_string(cache_.dim) + " does not match configured m = " +
                     std::to_string(expected_dim));
  }
}

Tensor<float> CachedEmbedder::embed(const ReportDocument& doc) const { return cache_.at(doc.key()); }

}  // namespace creditarf::arf
