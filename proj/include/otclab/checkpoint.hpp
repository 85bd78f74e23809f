#pragma once

#include <filesystem>

#include "otclab/params.hpp"

namespace otclab {

// Checkpoint file: a JSON map of tensor name -> {shape, values}, in
// registration order. Doubles are written with shortest round-trip
// formatting, so identical tensors always produce identical bytes.
void save_checkpoint(const NamedTensors& tensors, const std::filesystem::path& path);
NamedTensors load_checkpoint(const std::filesystem::path& path);

}  // namespace otclab
