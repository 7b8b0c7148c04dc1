#include "fforge/model_bundle.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace fforge {
namespace {

constexpr char kMagic[4] = {'F', 'F', 'R', 'G'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xffu));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  [[nodiscard]] bool done() const { return pos_ == bytes_.size(); }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }

  std::string str(std::size_t len) {
    need(len);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), len);
    pos_ += len;
    return s;
  }

  float f32() { return std::bit_cast<float>(u32()); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw std::runtime_error("ModelBundle: truncated file");
  }

  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

void ModelBundle::put(BundleEntry entry) {
  std::size_t expected = 1;
  for (auto d : entry.dims) expected *= d;
  if (expected != entry.values.size()) throw std::invalid_argument("ModelBundle: dims do not match payload for " + entry.name);
  for (auto& e : entries_) {
    if (e.name == entry.name) {
      e = std::move(entry);
      return;
    }
  }
  entries_.push_back(std::move(entry));
}

const BundleEntry* ModelBundle::find(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.name == name) return &e;
  return nullptr;
}

const BundleEntry& ModelBundle::at(const std::string& name) const {
  if (const BundleEntry* e = find(name)) return *e;
  throw std::runtime_error("ModelBundle: missing entry " + name);
}

void ModelBundle::set_meta(const std::string& key, double value) {
  put(BundleEntry{"meta." + key, {1}, {static_cast<float>(value)}});
}

std::optional<double> ModelBundle::meta(const std::string& key) const {
  if (const BundleEntry* e = find("meta." + key)) return e->values.at(0);
  return std::nullopt;
}

double ModelBundle::require_meta(const std::string& key) const {
  if (auto v = meta(key)) return *v;
  throw std::runtime_error("ModelBundle: missing metadata " + key);
}

std::vector<std::uint8_t> ModelBundle::serialize() const {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_u32(out, kVersion);
  for (const auto& e : entries_) {
    put_u32(out, static_cast<std::uint32_t>(e.name.size()));
    out.insert(out.end(), e.name.begin(), e.name.end());
    put_u32(out, static_cast<std::uint32_t>(e.dims.size()));
    for (auto d : e.dims) put_u32(out, d);
    for (float v : e.values) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

ModelBundle ModelBundle::deserialize(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw std::runtime_error("ModelBundle: bad magic");
  }
  std::vector<std::uint8_t> body(bytes.begin() + 4, bytes.end());
  Reader in(body);
  const std::uint32_t version = in.u32();
  if (version != kVersion) throw std::runtime_error("ModelBundle: unsupported version " + std::to_string(version));
  ModelBundle bundle;
  while (!in.done()) {
    BundleEntry e;
    e.name = in.str(in.u32());
    const std::uint32_t rank = in.u32();
    std::size_t count = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      e.dims.push_back(in.u32());
      count *= e.dims.back();
    }
    e.values.reserve(count);
    for (std::size_t i = 0; i < count; ++i) e.values.push_back(in.f32());
    bundle.put(std::move(e));
  }
  return bundle;
}

void ModelBundle::save(const std::string& path) const {
  const auto bytes = serialize();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error(path + ": write failed");
}

ModelBundle ModelBundle::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open model bundle");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

}  // namespace fforge
