#include "otclab/checkpoint.hpp"

#include <fstream>

#include <json.hpp>

#include "otclab/errors.hpp"

namespace otclab {

namespace {
constexpr const char* kFormatTag = "otclab-checkpoint-v1";
}

void save_checkpoint(const NamedTensors& tensors, const std::filesystem::path& path) {
  nlohmann::ordered_json root;
  root["format"] = kFormatTag;
  nlohmann::ordered_json body = nlohmann::ordered_json::object();
  for (const auto& [name, t] : tensors) {
    nlohmann::ordered_json entry;
    entry["shape"] = {t.rows(), t.cols()};
    std::vector<double> values(t.data(), t.data() + t.size());
    entry["values"] = std::move(values);
    body[name] = std::move(entry);
  }
  root["tensors"] = std::move(body);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open checkpoint for writing: " + path.string());
  out << root.dump() << "\n";
}

NamedTensors load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path.string());
  nlohmann::ordered_json root;
  try {
    in >> root;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed checkpoint " + path.string() + ": " + e.what());
  }
  if (!root.contains("format") || root["format"] != kFormatTag) {
    throw DataError("unrecognized checkpoint format in " + path.string());
  }
  NamedTensors out;
  for (const auto& [name, entry] : root.at("tensors").items()) {
    if (!entry.contains("shape") || !entry.contains("values")) {
      throw DataError("checkpoint tensor " + name + " missing shape/values");
    }
    const auto shape = entry["shape"].get<std::vector<int>>();
    if (shape.size() != 2) throw DataError("checkpoint tensor " + name + " must be rank 2");
    auto values = entry["values"].get<std::vector<double>>();
    if (values.size() != static_cast<size_t>(shape[0]) * static_cast<size_t>(shape[1])) {
      throw DataError("checkpoint tensor " + name + " value count mismatch");
    }
    out.emplace(name, Tensor(shape[0], shape[1], std::move(values)));
  }
  return out;
}

}  // namespace otclab
