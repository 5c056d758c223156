#include "creditarf/crp/checkpoint.hpp"

#include <bit>
#include <map>

#include <zlib.h>

#include "creditarf/error.hpp"
#include "creditarf/io/binary.hpp"

namespace creditarf::crp {
namespace {

using nx::Tensor;

constexpr const char* kDigestName = "meta.spec_digest";
constexpr const char* kEpochsName = "meta.epochs";
constexpr const char* kLrName = "meta.final_lr";

Tensor<float> chunks(std::uint64_t v, std::size_t n) {
  Tensor<float> t({n});
  for (std::size_t i = 0; i < n; ++i) t[i] = static_cast<float>((v >> (16 * i)) & 0xFFFFu);
  return t;
}

std::uint64_t unchunk(const Tensor<float>& t, std::size_t n, const std::string& what) {
  if (t.rank() != 1 || t.size() != n) throw InputError(what + ": malformed metadata tensor");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const float f = t[i];
    if (!(f >= 0.0f && f <= 65535.0f) || f != static_cast<float>(static_cast<std::uint32_t>(f))) {
      throw InputError(what + ": malformed metadata tensor");
    }
    v |= static_cast<std::uint64_t>(f) << (16 * i);
  }
  return v;
}

std::uint32_t crc32_of(const std::uint8_t* data, std::size_t n) {
  return static_cast<std::uint32_t>(::crc32(::crc32(0L, Z_NULL, 0), data, static_cast<uInt>(n)));
}

void write_tensor(io::ByteWriter& w, const std::string& name, const Tensor<float>& t) {
  if (name.size() > 0xFFFF) throw InputError("tensor name too long: " + name);
  if (t.rank() > 0xFF) throw ShapeError("tensor rank too large: " + name);
  w.u16(static_cast<std::uint16_t>(name.size()));
  w.raw(name);
  w.u8(static_cast<std::uint8_t>(t.rank()));
  for (auto d : t.shape()) w.u32(static_cast<std::uint32_t>(d));
  for (float v : t.values()) w.f32(v);
}

}  // namespace

Checkpoint Checkpoint::capture(const nx::ParameterSet<float>& params, const TrainingMeta& meta) {
  Checkpoint c;
  c.meta = meta;
  for (const auto& p : params) c.tensors.emplace_back(p.name, p.var.value());
  return c;
}

void Checkpoint::restore(nx::ParameterSet<float>& params) const {
  if (params.size() != tensors.size()) {
    throw InputError("checkpoint holds " + std::to_string(tensors.size()) + " tensors, model has " +
                     std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    const auto& [name, value] = tensors[i];
    if (params[i].name != name) {
      throw InputError("checkpoint tensor " + std::to_string(i) + " is '" + name + "', model expects '" +
                       params[i].name + "'");
    }
    if (params[i].var.value().shape() != value.shape()) {
      throw InputError("checkpoint tensor '" + name + "' has shape " + nx::to_string(value.shape()) +
                       ", model expects " + nx::to_string(params[i].var.value().shape()));
    }
  }
  for (std::size_t i = 0; i < tensors.size(); ++i) nx::Var<float>(params[i].var).mutable_value() = tensors[i].second;
}

std::vector<std::uint8_t> Checkpoint::serialize() const {
  io::ByteWriter w;
  w.raw("CARF");
  w.u16(kVersion);
  w.u32(static_cast<std::uint32_t>(tensors.size() + 3));
  for (const auto& [name, t] : tensors) {
    if (name.rfind("meta.", 0) == 0) throw InputError("parameter name collides with metadata: " + name);
    write_tensor(w, name, t);
  }
  write_tensor(w, kDigestName, chunks(meta.spec_digest, 4));
  write_tensor(w, kEpochsName, chunks(meta.epochs, 2));
  write_tensor(w, kLrName, chunks(std::bit_cast<std::uint64_t>(meta.final_lr), 4));
  const auto crc = crc32_of(w.bytes().data(), w.bytes().size());
  w.u32(crc);
  return w.take();
}

Checkpoint Checkpoint::parse(const std::vector<std::uint8_t>& bytes, const std::string& what) {
  if (bytes.size() < 4 || std::string(bytes.begin(), bytes.begin() + 4) != "CARF") {
    throw InputError(what + ": bad magic, not a CARF checkpoint");
  }
  if (bytes.size() < 14) throw InputError(what + ": truncated");
  const std::size_t body = bytes.size() - 4;
  io::ByteReader tail(bytes.data() + body, 4, what);
  const auto stored = tail.u32();
  const auto actual = crc32_of(bytes.data(), body);
  if (stored != actual) throw InputError(what + ": CRC mismatch, file is corrupt");

  io::ByteReader r(bytes.data(), body, what);
  r.raw(4);
  const auto version = r.u16();
  if (version != kVersion) throw InputError(what + ": unsupported CARF version " + std::to_string(version));
  const auto count = r.u32();
  Checkpoint c;
  std::map<std::string, Tensor<float>> meta;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto nlen = r.u16();
    std::string name = r.raw(nlen);
    const auto rank = r.u8();
    nx::Shape shape(rank);
    for (auto& d : shape) {
      d = r.u32();
      if (d == 0) throw InputError(what + ": tensor '" + name + "' has a zero extent");
    }
    const std::size_t n = nx::numel(shape);
    r.need(n * 4);
    Tensor<float> t(shape);
    for (auto& v : t.values()) v = r.f32();
    if (name.rfind("meta.", 0) == 0) {
      if (!meta.emplace(name, std::move(t)).second) throw InputError(what + ": duplicate tensor " + name);
    } else {
      for (const auto& existing : c.tensors) {
        if (existing.first == name) throw InputError(what + ": duplicate tensor " + name);
      }
      c.tensors.emplace_back(std::move(name), std::move(t));
    }
  }
  if (r.remaining() != 0) throw InputError(what + ": " + std::to_string(r.remaining()) + " trailing bytes");
  for (const char* key : {kDigestName, kEpochsName, kLrName}) {
    if (!meta.count(key)) throw InputError(what + ": missing " + key);
  }
  if (meta.size() != 3) throw InputError(what + ": unknown metadata tensor");
  c.meta.spec_digest = unchunk(meta.at(kDigestName), 4, what);
  c.meta.epochs = static_cast<std::uint32_t>(unchunk(meta.at(kEpochsName), 2, what));
  c.meta.final_lr = std::bit_cast<double>(unchunk(meta.at(kLrName), 4, what));
  return c;
}

void Checkpoint::save(const std::filesystem::path& path) const { io::write_file(path, serialize()); }

Checkpoint Checkpoint::load(const std::filesystem::path& path) { return parse(io::read_file(path), path.string()); }

}  // namespace creditarf::crp
