#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "otclab/tensor.hpp"

namespace otclab {

// Named tensor collection with stable registration order. Used for model
// parameters and optimizer moments; order determines serialization layout.
class NamedTensors {
 public:
  Tensor& emplace(const std::string& name, Tensor t) {
    if (index_.count(name)) throw UsageError("duplicate tensor name: " + name);
    index_[name] = items_.size();
    items_.emplace_back(name, std::move(t));
    return items_.back().second;
  }

  bool has(const std::string& name) const { return index_.count(name) > 0; }

  Tensor& at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw UsageError("unknown tensor name: " + name);
    return items_[it->second].second;
  }
  const Tensor& at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw UsageError("unknown tensor name: " + name);
    return items_[it->second].second;
  }

  size_t count() const { return items_.size(); }
  size_t total_entries() const {
    size_t n = 0;
    for (const auto& [_, t] : items_) n += t.size();
    return n;
  }

  auto begin() { return items_.begin(); }
  auto end() { return items_.end(); }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

  bool all_finite() const {
    for (const auto& [_, t] : items_) {
      if (!t.all_finite()) return false;
    }
    return true;
  }

 private:
  std::vector<std::pair<std::string, Tensor>> items_;
  std::unordered_map<std::string, size_t> index_;
};

using Parameters = NamedTensors;

}  // namespace otclab
