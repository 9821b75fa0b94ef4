#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pgorder/digest.hpp"
#include "pgorder/models/factory.hpp"

namespace pgo {

// Layout (all integers little-endian):
//   "PGOR" | u16 version | sha256(header json) | u32 len, header json
//   | u32 record count | records: u16 len, name | u8 rank | u32 dims... | f32 values...
//   | sha256 of every preceding byte
inline constexpr std::uint16_t kCheckpointVersion = 1;
inline constexpr char kCheckpointMagic[4] = {'P', 'G', 'O', 'R'};

struct LoadedCheckpoint {
  std::unique_ptr<OrderingModel<float>> model;
  std::uint64_t training_seed = 0;
};

namespace detail {

class ByteWriter {
 public:
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    bytes.insert(bytes.end(), b, b + n);
  }
  void u8(std::uint8_t v) { bytes.push_back(v); }
  void u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void str32(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    raw(s.data(), s.size());
  }
  std::vector<std::uint8_t> bytes;
};

class ByteReader {
 public:
  ByteReader(const std::uint8_t* p, std::size_t n) : p_(p), n_(n) {}
  void need(std::size_t k) const {
    if (pos_ + k > n_) throw TruncatedFile("checkpoint ends unexpectedly");
  }
  std::uint8_t u8() {
    need(1);
    return p_[pos_++];
  }
  std::uint16_t u16() {
    need(2);
    std::uint16_t v = static_cast<std::uint16_t>(p_[pos_] | (p_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p_[pos_ + static_cast<std::size_t>(i)]) << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string str(std::size_t len) {
    need(len);
    std::string s(reinterpret_cast<const char*>(p_ + pos_), len);
    pos_ += len;
    return s;
  }
  [[nodiscard]] std::size_t pos() const { return pos_; }

 private:
  const std::uint8_t* p_;
  std::size_t n_;
  std::size_t pos_ = 0;
};

inline std::string checkpoint_header(const ModelConfig& config, std::uint64_t training_seed) {
  return nlohmann::json{{"config", config}, {"training_seed", training_seed}}.dump();
}

}  // namespace detail

template <class T>
std::vector<std::uint8_t> serialize_checkpoint(const OrderingModel<T>& model, std::uint64_t training_seed) {
  detail::ByteWriter w;
  w.raw(kCheckpointMagic, 4);
  w.u16(kCheckpointVersion);
  const auto header = detail::checkpoint_header(model.config(), training_seed);
  const auto config_digest = sha256(header);
  w.raw(config_digest.data(), config_digest.size());
  w.str32(header);
  w.u32(static_cast<std::uint32_t>(model.parameters().size()));
  for (const auto& [name, t] : model.parameters()) {
    w.u16(static_cast<std::uint16_t>(name.size()));
    w.raw(name.data(), name.size());
    w.u8(static_cast<std::uint8_t>(t.dims().size()));
    for (auto d : t.dims()) w.u32(static_cast<std::uint32_t>(d));
    for (auto v : t.value().data()) w.f32(static_cast<float>(v));
  }
  const auto file_digest = sha256(w.bytes);
  w.raw(file_digest.data(), file_digest.size());
  return std::move(w.bytes);
}

/// Parses a checkpoint image. `expected` (when given) must match the stored architecture.
inline LoadedCheckpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes,
                                               std::optional<Arch> expected = std::nullopt) {
  detail::ByteReader r(bytes.data(), bytes.size());
  if (r.str(4) != std::string(kCheckpointMagic, 4)) throw CheckpointError("not a checkpoint (bad magic)");
  const auto version = r.u16();
  if (version != kCheckpointVersion) {
    throw VersionMismatch("checkpoint format version " + std::to_string(version) + ", expected " +
                          std::to_string(kCheckpointVersion));
  }
  if (bytes.size() < 6 + 2 * 32) throw TruncatedFile("checkpoint ends unexpectedly");
  // integrity first, so a damaged length field cannot steer parsing
  const std::size_t body = bytes.size() - 32;
  const auto actual = sha256(std::span<const std::uint8_t>(bytes.data(), body));
  if (!std::equal(actual.begin(), actual.end(), bytes.begin() + static_cast<std::ptrdiff_t>(body))) {
    throw DigestMismatch("checkpoint integrity digest does not match contents");
  }
  r = detail::ByteReader(bytes.data(), body);
  r.str(6);

  Sha256 config_digest{};
  for (auto& b : config_digest) b = r.u8();
  const auto header = r.str(r.u32());

  struct Record {
    std::string name;
    nc::Dims dims;
    std::vector<float> values;
  };
  std::vector<Record> records(r.u32());
  for (auto& rec : records) {
    rec.name = r.str(r.u16());
    rec.dims.resize(r.u8());
    std::size_t count = 1;
    for (auto& d : rec.dims) {
      d = r.u32();
      count *= d;
    }
    r.need(count * 4);
    rec.values.resize(count);
    for (auto& v : rec.values) v = r.f32();
  }
  if (r.pos() != body) throw CheckpointError("trailing bytes after checkpoint records");
  if (sha256(header) != config_digest) throw DigestMismatch("checkpoint config digest does not match header");

  LoadedCheckpoint out;
  ModelConfig config;
  try {
    const auto j = nlohmann::json::parse(header);
    config = j.at("config").get<ModelConfig>();
    out.training_seed = j.at("training_seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("bad checkpoint header: ") + e.what());
  }
  if (expected && *expected != config.arch) {
    throw ArchMismatch("checkpoint holds a " + to_string(config.arch) + " model, expected " + to_string(*expected));
  }
  out.model = make_model<float>(config);
  const auto& params = out.model->parameters();
  if (params.size() != records.size()) throw CheckpointError("checkpoint parameter count does not match architecture");
  std::vector<nc::Array<float>> values;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].name != params[i].first || records[i].dims != params[i].second.dims()) {
      throw CheckpointError("checkpoint record '" + records[i].name + "' does not match parameter '" +
                            params[i].first + "'");
    }
    values.emplace_back(records[i].dims, std::move(records[i].values));
  }
  out.model->restore(values);
  return out;
}

template <class T>
void save_checkpoint(const OrderingModel<T>& model, const std::filesystem::path& path, std::uint64_t training_seed) {
  const auto bytes = serialize_checkpoint(model, training_seed);
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write " + tmp);
    os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw IoError("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

inline LoadedCheckpoint load_checkpoint(const std::filesystem::path& path, std::optional<Arch> expected = std::nullopt) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes, expected);
}

}  // namespace pgo
