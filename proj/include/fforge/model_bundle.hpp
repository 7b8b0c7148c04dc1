#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fforge/nn.hpp"

namespace fforge {

/// Named f32 tensor stored in a ModelBundle.
struct BundleEntry {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<float> values;
};

/// Serialized network parameters, running batch-norm statistics and scalar
/// metadata. On disk: magic "FFRG", u32 format version, then per entry a u32
/// name length, the UTF-8 name, u32 rank, u32 dims, and little-endian f32
/// values, until end of file.
class ModelBundle {
 public:
  static constexpr std::uint32_t kVersion = 1;

  void put(BundleEntry entry);
  [[nodiscard]] const BundleEntry* find(const std::string& name) const;
  [[nodiscard]] const BundleEntry& at(const std::string& name) const;
  [[nodiscard]] const std::vector<BundleEntry>& entries() const { return entries_; }
  [[nodiscard]] bool empty() const { return entries_.empty(); }

  void set_meta(const std::string& key, double value);
  [[nodiscard]] std::optional<double> meta(const std::string& key) const;
  [[nodiscard]] double require_meta(const std::string& key) const;

  [[nodiscard]] std::vector<std::uint8_t> serialize() const;
  static ModelBundle deserialize(const std::vector<std::uint8_t>& bytes);

  void save(const std::string& path) const;
  static ModelBundle load(const std::string& path);

 private:
  std::vector<BundleEntry> entries_;
};

namespace detail {
inline std::string strip_suffix(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0
             ? s.substr(0, s.size() - suffix.size())
             : s;
}

template <typename Array>
BundleEntry array_entry(const std::string& name, const Array& a, std::vector<std::uint32_t> dims) {
  BundleEntry e{name, std::move(dims), {}};
  e.values.reserve(static_cast<std::size_t>(a.size()));
  for (Eigen::Index i = 0; i < a.size(); ++i) e.values.push_back(static_cast<float>(a[i]));
  return e;
}
}  // namespace detail

/// Appends every parameter and running statistic of `module`.
template <typename Module>
void export_module(Module& module, ModelBundle& bundle) {
  module.visit([&](auto& item) {
    using T = std::decay_t<decltype(item)>;
    auto put_param = [&](const auto& p) {
      const Shape s = p.value.shape;
      bundle.put(detail::array_entry(p.name, p.value.data,
                                     {static_cast<std::uint32_t>(s.n), static_cast<std::uint32_t>(s.c),
                                      static_cast<std::uint32_t>(s.h), static_cast<std::uint32_t>(s.w)}));
    };
    if constexpr (is_batch_norm<T>::value) {
      put_param(item.gamma);
      put_param(item.beta);
      if (item.initialized) {
        const std::string base = detail::strip_suffix(item.gamma.name, ".gamma");
        const auto c = static_cast<std::uint32_t>(item.channels());
        bundle.put(detail::array_entry(base + ".running_mean", item.running_mean, {c}));
        bundle.put(detail::array_entry(base + ".running_var", item.running_var, {c}));
      }
    } else {
      put_param(item);
    }
  });
}

/// Loads values for every parameter of `module`; shapes must match exactly.
template <typename Module>
void import_module(Module& module, const ModelBundle& bundle) {
  module.visit([&](auto& item) {
    using T = std::decay_t<decltype(item)>;
    auto load_param = [&](auto& p) {
      const BundleEntry& e = bundle.at(p.name);
      const Shape s = p.value.shape;
      if (e.dims != std::vector<std::uint32_t>{static_cast<std::uint32_t>(s.n), static_cast<std::uint32_t>(s.c),
                                               static_cast<std::uint32_t>(s.h), static_cast<std::uint32_t>(s.w)}) {
        throw std::runtime_error("ModelBundle: shape mismatch for " + p.name);
      }
      for (std::size_t i = 0; i < e.values.size(); ++i) {
        p.value.data[static_cast<Eigen::Index>(i)] = static_cast<decltype(p.value.data[0] + 0)>(e.values[i]);
      }
    };
    if constexpr (is_batch_norm<T>::value) {
      load_param(item.gamma);
      load_param(item.beta);
      const std::string base = detail::strip_suffix(item.gamma.name, ".gamma");
      const BundleEntry* mean = bundle.find(base + ".running_mean");
      const BundleEntry* var = bundle.find(base + ".running_var");
      if (mean && var) {
        if (mean->values.size() != static_cast<std::size_t>(item.channels()) || var->values.size() != mean->values.size()) {
          throw std::runtime_error("ModelBundle: running statistics size mismatch for " + base);
        }
        for (int c = 0; c < item.channels(); ++c) {
          item.running_mean[c] = mean->values[static_cast<std::size_t>(c)];
          item.running_var[c] = var->values[static_cast<std::size_t>(c)];
        }
        item.initialized = true;
      }
    } else {
      load_param(item);
    }
  });
}

}  // namespace fforge
