#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "otclab/corpus.hpp"
#include "otclab/encoder.hpp"
#include "otclab/params.hpp"
#include "otclab/sampler.hpp"

namespace otclab {

struct ConfusionMatrix {
  std::array<std::array<long long, 5>, 5> counts{};  // [gold-1][pred-1]

  void add(int gold, int pred) { ++counts[gold - 1][pred - 1]; }
  long long total() const {
    long long n = 0;
    for (const auto& row : counts)
      for (long long c : row) n += c;
    return n;
  }
};

struct LanguageMetrics {
  std::string language;
  double f1_micro = 0.0;
  long long n_examples = 0;
  ConfusionMatrix confusion;
};

// Micro-averaged F1 over the 5 star classes. For single-label multiclass
// this equals accuracy; both routes are computed and cross-checked.
double f1_micro(const std::vector<int>& predictions, const std::vector<int>& golds);

// Argmax with ties broken toward the lower index.
int argmax_row(const Tensor& t, int row);

// Greedy class predictions for a set of examples, batched internally.
std::vector<int> predict(const Parameters& params, const ModelConfig& config,
                         const std::vector<const Example*>& examples);

// Per-language F1-micro over the original-only test split.
std::vector<LanguageMetrics> evaluate(const Parameters& params, const ModelConfig& config,
                                      const CorpusSplit& corpus);

// Fraction of index-aligned pairs whose argmax dot-product match is correct,
// averaged over both directions. Inputs are value tensors of normalized
// embeddings.
double retrieval_accuracy(const Tensor& orig_embeds, const Tensor& trans_embeds);

// Embeds the run's held-out parallel pairs and scores retrieval. Translated
// counterparts rotate deterministically through the other languages.
double holdout_retrieval(const Parameters& params, const ModelConfig& config,
                         const CorpusSplit& corpus, const SamplerConfig& sampler);

struct PermutationTestResult {
  double mean_delta = 0.0;
  double p_value = 1.0;
  long long num_permutations = 0;
  uint64_t seed = 0;
  bool exact = false;
};

// Two-sided sign-flip test on paired deltas: exact enumeration up to 20
// pairs, otherwise sampled flips with the recorded seed.
PermutationTestResult paired_permutation_test(const std::vector<double>& deltas,
                                              uint64_t seed = 0,
                                              long long sampled_flips = 10000);

}  // namespace otclab
