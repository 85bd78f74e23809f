#include "otclab/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "otclab/trainer.hpp"

namespace otclab {

double f1_micro(const std::vector<int>& predictions, const std::vector<int>& golds) {
  if (predictions.empty()) throw DataError("f1_micro: empty input");
  if (predictions.size() != golds.size()) {
    throw UsageError("f1_micro: prediction/gold length mismatch");
  }
  long long tp = 0, fp = 0, fn = 0, correct = 0;
  for (size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i] < 1 || predictions[i] > 5 || golds[i] < 1 || golds[i] > 5) {
      throw UsageError("f1_micro: labels must be in 1..5");
    }
    if (predictions[i] == golds[i]) ++correct;
  }
  for (int cls = 1; cls <= 5; ++cls) {
    for (size_t i = 0; i < predictions.size(); ++i) {
      const bool p = predictions[i] == cls;
      const bool g = golds[i] == cls;
      if (p && g) ++tp;
      else if (p) ++fp;
      else if (g) ++fn;
    }
  }
  const double denom = 2.0 * tp + fp + fn;
  const double f1 = denom == 0.0 ? 0.0 : 2.0 * tp / denom;
  const double accuracy = static_cast<double>(correct) / predictions.size();
  if (std::fabs(f1 - accuracy) > 1e-12) {
    throw NumericError("micro-F1 diverged from accuracy on single-label data");
  }
  return f1;
}

int argmax_row(const Tensor& t, int row) {
  const double* r = t.row_ptr(row);
  int best = 0;
  for (int c = 1; c < t.cols(); ++c) {
    if (r[c] > r[best]) best = c;
  }
  return best;
}

std::vector<int> predict(const Parameters& params, const ModelConfig& config,
                         const std::vector<const Example*>& examples) {
  std::vector<int> preds;
  preds.reserve(examples.size());
  constexpr size_t kChunk = 64;
  for (size_t start = 0; start < examples.size(); start += kChunk) {
    const size_t end = std::min(examples.size(), start + kChunk);
    std::vector<const Example*> chunk(examples.begin() + start, examples.begin() + end);
    EncodedBatch enc = encode_examples(chunk);
    Tape tape;
    BoundParams bound = bind_params(tape, params);
    EncoderOutput out = encoder_forward(tape, bound, config, enc.tokens, enc.lengths);
    const Tensor& logits = tape.value(out.logits);
    for (int r = 0; r < logits.rows(); ++r) preds.push_back(argmax_row(logits, r) + 1);
  }
  return preds;
}

std::vector<LanguageMetrics> evaluate(const Parameters& params, const ModelConfig& config,
                                      const CorpusSplit& corpus) {
  if (corpus.test.empty()) throw DataError("evaluate: empty test split");
  for (const auto& e : corpus.test) {
    if (e.translated) {
      throw DataError("evaluate: test split contains a translated row (group " +
                      std::to_string(e.id) + ")");
    }
  }
  std::vector<const Example*> rows;
  rows.reserve(corpus.test.size());
  for (const auto& e : corpus.test) rows.push_back(&e);
  const std::vector<int> preds = predict(params, config, rows);

  std::map<std::string, LanguageMetrics> by_lang;
  std::map<std::string, std::pair<std::vector<int>, std::vector<int>>> split;
  for (size_t i = 0; i < rows.size(); ++i) {
    auto& [p, g] = split[rows[i]->language];
    p.push_back(preds[i]);
    g.push_back(rows[i]->stars);
    auto& m = by_lang[rows[i]->language];
    m.language = rows[i]->language;
    m.confusion.add(rows[i]->stars, preds[i]);
  }

  std::vector<LanguageMetrics> out;
  for (const auto& lang : corpus.languages) {
    auto it = by_lang.find(lang);
    if (it == by_lang.end()) continue;
    LanguageMetrics m = it->second;
    m.f1_micro = f1_micro(split[lang].first, split[lang].second);
    m.n_examples = m.confusion.total();
    out.push_back(std::move(m));
  }
  return out;
}

double retrieval_accuracy(const Tensor& orig_embeds, const Tensor& trans_embeds) {
  if (!orig_embeds.same_shape(trans_embeds)) {
    throw ShapeError("retrieval_accuracy: embedding shapes differ");
  }
  const int m = orig_embeds.rows();
  if (m < 2) throw DataError("retrieval_accuracy: need at least 2 pairs");

  Tensor sim = matmul_plain(orig_embeds, transpose_plain(trans_embeds));
  long long hits = 0;
  for (int i = 0; i < m; ++i) {
    if (argmax_row(sim, i) == i) ++hits;
  }
  Tensor sim_t = transpose_plain(sim);
  for (int i = 0; i < m; ++i) {
    if (argmax_row(sim_t, i) == i) ++hits;
  }
  return static_cast<double>(hits) / (2.0 * m);
}

double holdout_retrieval(const Parameters& params, const ModelConfig& config,
                         const CorpusSplit& corpus, const SamplerConfig& sampler) {
  const std::vector<const ExampleGroup*> holdout = holdout_pool(corpus, sampler);
  if (holdout.size() < 2) {
    throw DataError("holdout_retrieval: need at least 2 held-out groups");
  }
  std::vector<const Example*> originals, translated;
  for (size_t i = 0; i < holdout.size(); ++i) {
    const ExampleGroup* g = holdout[i];
    if (g->translations.empty()) {
      throw DataError("holdout group " + std::to_string(g->id) + " has no translations");
    }
    originals.push_back(&g->original);
    translated.push_back(&g->translations[i % g->translations.size()]);
  }

  auto embed = [&](const std::vector<const Example*>& rows) {
    EncodedBatch enc = encode_examples(rows);
    Tape tape;
    BoundParams bound = bind_params(tape, params);
    EncoderOutput out = encoder_forward(tape, bound, config, enc.tokens, enc.lengths);
    return tape.value(out.cls_normalized);
  };
  return retrieval_accuracy(embed(originals), embed(translated));
}

PermutationTestResult paired_permutation_test(const std::vector<double>& deltas,
                                              uint64_t seed, long long sampled_flips) {
  if (deltas.size() < 5) {
    throw UsageError("paired_permutation_test: need at least 5 paired observations");
  }
  const int n = static_cast<int>(deltas.size());
  double mean = 0.0;
  for (double d : deltas) mean += d;
  mean /= n;
  const double observed = std::fabs(mean);

  PermutationTestResult result;
  result.mean_delta = mean;
  result.seed = seed;

  if (n <= 20) {
    result.exact = true;
    const uint64_t total = 1ULL << n;
    result.num_permutations = static_cast<long long>(total);
    long long at_least = 0;
    for (uint64_t mask = 0; mask < total; ++mask) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) {
        s += (mask >> i) & 1 ? -deltas[i] : deltas[i];
      }
      if (std::fabs(s / n) >= observed - 1e-15) ++at_least;
    }
    result.p_value = static_cast<double>(at_least) / static_cast<double>(total);
  } else {
    if (sampled_flips < 10000) {
      throw UsageError("paired_permutation_test: need >= 10000 sampled flips");
    }
    result.exact = false;
    result.num_permutations = sampled_flips;
    Rng rng(Rng::mix(seed, 0x9E47));
    long long at_least = 0;
    for (long long k = 0; k < sampled_flips; ++k) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) {
        s += rng.uniform() < 0.5 ? deltas[i] : -deltas[i];
      }
      if (std::fabs(s / n) >= observed - 1e-15) ++at_least;
    }
    result.p_value = static_cast<double>(at_least + 1) / static_cast<double>(sampled_flips + 1);
  }
  return result;
}

}  // namespace otclab
