#include "otclab/sampler.hpp"

#include <algorithm>

namespace otclab {

std::vector<const ExampleGroup*> training_pool(const CorpusSplit& corpus,
                                               const SamplerConfig& config) {
  config.validate();
  std::vector<const ExampleGroup*> pool;
  for (const auto& g : corpus.train) {
    if (g.original.language == config.original_language) pool.push_back(&g);
  }
  if (pool.empty()) {
    throw DataError("no training groups with original language " +
                    config.original_language);
  }
  if (config.holdout_groups >= static_cast<int>(pool.size())) {
    throw ConfigError("holdout_groups leaves no training data");
  }
  pool.resize(pool.size() - config.holdout_groups);
  return pool;
}

std::vector<const ExampleGroup*> holdout_pool(const CorpusSplit& corpus,
                                              const SamplerConfig& config) {
  config.validate();
  std::vector<const ExampleGroup*> pool;
  for (const auto& g : corpus.train) {
    if (g.original.language == config.original_language) pool.push_back(&g);
  }
  if (config.holdout_groups >= static_cast<int>(pool.size())) {
    throw ConfigError("holdout_groups leaves no training data");
  }
  return {pool.end() - config.holdout_groups, pool.end()};
}

std::vector<Minibatch> epoch_plan(const CorpusSplit& corpus, const SamplerConfig& config,
                                  Rng& rng) {
  if (config.baseline_mode) {
    throw UsageError("epoch_plan called with baseline_mode set; use baseline_plan");
  }
  std::vector<const ExampleGroup*> pool = training_pool(corpus, config);
  for (const auto* g : pool) {
    if (g->translations.empty()) {
      throw DataError("group " + std::to_string(g->id) + " has no translations");
    }
  }
  rng.shuffle(pool);

  const int pairs_per_batch = config.batch_size / 2;
  std::vector<Minibatch> plan;
  const size_t full_batches = pool.size() / pairs_per_batch;
  for (size_t b = 0; b < full_batches; ++b) {
    Minibatch batch;
    for (int i = 0; i < pairs_per_batch; ++i) {
      const ExampleGroup* g = pool[b * pairs_per_batch + i];
      const int pick = rng.uniform_int(static_cast<int>(g->translations.size()));
      batch.originals.push_back(&g->original);
      batch.translated.push_back(&g->translations[pick]);
    }
    plan.push_back(std::move(batch));
  }
  return plan;
}

std::vector<Minibatch> baseline_plan(const CorpusSplit& corpus,
                                     const SamplerConfig& config, Rng& rng) {
  if (!config.baseline_mode) {
    throw UsageError("baseline_plan requires baseline_mode");
  }
  std::vector<const ExampleGroup*> pool = training_pool(corpus, config);
  rng.shuffle(pool);

  std::vector<Minibatch> plan;
  const size_t full_batches = pool.size() / config.batch_size;
  for (size_t b = 0; b < full_batches; ++b) {
    Minibatch batch;
    batch.baseline = true;
    for (int i = 0; i < config.batch_size; ++i) {
      batch.originals.push_back(&pool[b * config.batch_size + i]->original);
    }
    plan.push_back(std::move(batch));
  }
  return plan;
}

}  // namespace otclab
