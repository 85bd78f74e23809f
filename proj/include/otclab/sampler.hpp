#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "otclab/corpus.hpp"
#include "otclab/rng.hpp"
#include "otclab/tensor.hpp"

namespace otclab {

// One training batch. Paired batches carry M = batch_size/2 index-aligned
// original/translated rows; baseline batches carry batch_size originals and
// no pairing structure.
struct Minibatch {
  std::vector<const Example*> originals;
  std::vector<const Example*> translated;  // empty in baseline mode
  bool baseline = false;

  int pair_count() const { return static_cast<int>(translated.size()); }
  Tensor pairing_target() const {
    if (baseline) throw UsageError("baseline batches carry no pairing target");
    return Tensor::identity(pair_count());
  }
};

struct SamplerConfig {
  int batch_size = 32;
  std::string original_language;
  uint64_t seed = 0;
  bool baseline_mode = false;
  // Trailing groups of the original language excluded from training; they
  // serve as the held-out parallel pairs for the retrieval probe.
  int holdout_groups = 0;

  void validate() const {
    if (batch_size < 2 || batch_size % 2 != 0) {
      throw ConfigError("batch_size must be even and >= 2");
    }
    if (original_language.empty()) throw ConfigError("original_language is required");
    if (holdout_groups < 0) throw ConfigError("holdout_groups must be >= 0");
  }
};

// Training pool: original-language groups minus the holdout tail.
std::vector<const ExampleGroup*> training_pool(const CorpusSplit& corpus,
                                               const SamplerConfig& config);
// Holdout tail used for the retrieval probe.
std::vector<const ExampleGroup*> holdout_pool(const CorpusSplit& corpus,
                                              const SamplerConfig& config);

// Paired epoch: shuffle originals once, pick each original's translated
// counterpart uniformly among its available languages, emit batches of
// batch_size/2 pairs, drop the short remainder.
std::vector<Minibatch> epoch_plan(const CorpusSplit& corpus, const SamplerConfig& config,
                                  Rng& rng);

// Baseline epoch: batch_size original rows per batch, no translated half.
std::vector<Minibatch> baseline_plan(const CorpusSplit& corpus,
                                     const SamplerConfig& config, Rng& rng);

}  // namespace otclab
