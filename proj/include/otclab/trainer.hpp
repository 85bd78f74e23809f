#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "otclab/corpus.hpp"
#include "otclab/encoder.hpp"
#include "otclab/loss.hpp"
#include "otclab/params.hpp"
#include "otclab/sampler.hpp"

namespace otclab {

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

struct OptimizerState {
  NamedTensors first_moment;
  NamedTensors second_moment;
  long long step = 0;
  AdamWConfig config;
};

OptimizerState init_optimizer(const Parameters& params, AdamWConfig config = {});

// Linear warmup to peak_lr over warmup_steps updates, constant afterwards.
// Steps are 1-based; lr(1) = peak/warmup.
struct Schedule {
  int warmup_steps = 500;
  double peak_lr = 2e-5;
};

double lr_at(const Schedule& schedule, long long step);

// Decoupled weight decay with bias-corrected moments. Throws NumericError on
// non-finite gradients, naming the step.
void adamw_step(Parameters& params, const Gradients& grads, OptimizerState& state,
                double lr);

struct RunConfig {
  std::string corpus_dir;
  std::string original_language;
  bool use_otc = true;
  bool baseline_mode = false;
  uint64_t seed = 0;
  int epochs = 5;
  ModelConfig model;
  SamplerConfig sampler;
  Schedule schedule;
  OtcConfig otc;
  AdamWConfig adamw;
  std::string output_dir;

  // Serialized as the same key=value format the CLI consumes.
  void save(const std::filesystem::path& path) const;
};

struct EpochStats {
  double mean_total = 0.0;
  double mean_ce = 0.0;
  double mean_otc = 0.0;
};

struct TrainResult {
  Parameters params;
  std::vector<EpochStats> epochs;
  std::filesystem::path metrics_path;
  std::filesystem::path checkpoint_path;
  long long steps = 0;
};

// Full optimization loop: per-step CSV metrics (step, lr, loss_total,
// loss_ce, loss_otc, tau), a checkpoint at the end of every epoch, and the
// run config serialized next to the outputs. Entirely determined by
// (config, seed).
TrainResult train(const RunConfig& config, const CorpusSplit& corpus);

// Shared batch encoding: prepend CLS, record true lengths, collect labels.
struct EncodedBatch {
  std::vector<std::vector<int>> tokens;
  std::vector<int> lengths;
  std::vector<int> labels;
};
EncodedBatch encode_examples(const std::vector<const Example*>& examples);

}  // namespace otclab
