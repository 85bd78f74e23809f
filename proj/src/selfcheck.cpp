#include "otclab/selfcheck.hpp"

#include "otclab/corpus.hpp"
#include "otclab/encoder.hpp"
#include "otclab/loss.hpp"
#include "otclab/trainer.hpp"

namespace otclab {

FiniteDiffReport run_model_gradcheck(const GradCheckConfig& config) {
  CorpusConfig corpus_config;
  corpus_config.num_languages = 2;
  corpus_config.groups_per_language = 50;
  corpus_config.test_groups_per_language = 5;
  corpus_config.min_len = 5;
  corpus_config.max_len = 8;
  corpus_config.concepts_per_valence = 4;
  corpus_config.noise = {0.1, 0.1};
  corpus_config.seed = config.seed;
  const CorpusSplit corpus = generate_corpus(corpus_config);

  std::vector<const Example*> rows;
  int taken = 0;
  for (const auto& g : corpus.train) {
    if (g.original.language != "l0") continue;
    rows.push_back(&g.original);
    if (++taken == config.pairs) break;
  }
  {
    std::vector<const Example*> translated;
    taken = 0;
    for (const auto& g : corpus.train) {
      if (g.original.language != "l0") continue;
      translated.push_back(&g.translations.front());
      if (++taken == config.pairs) break;
    }
    rows.insert(rows.end(), translated.begin(), translated.end());
  }
  const EncodedBatch batch = encode_examples(rows);

  ModelConfig model;
  model.vocab_size = corpus.vocab.size();
  model.embed_dim = config.embed_dim;
  model.num_blocks = config.num_blocks;
  model.num_heads = config.num_heads;
  model.ffn_dim = config.ffn_dim;
  model.max_len = corpus.max_tokens() + 1;
  const Parameters params = init_params(model, Rng::mix(config.seed, 0xC4EC));

  const int m = config.pairs;
  const Tensor target = Tensor::identity(m);
  LossGraphFn build = [&](Tape& tape, const std::map<std::string, Var>& bound) {
    EncoderOutput out = encoder_forward(tape, bound, model, batch.tokens, batch.lengths);
    Var orig = tape.slice_rows(out.cls_normalized, 0, m);
    Var trans = tape.slice_rows(out.cls_normalized, m, 2 * m);
    Var sim = similarity_matrix(tape, orig, trans);
    PairingVars dists = pairing_distributions(tape, sim, bound.at("log_tau"));
    Var otc = otc_loss(tape, dists, target, OtcConfig{});
    return total_loss(tape, out.logits, batch.labels, otc).total;
  };

  return finite_diff_check(build, params, config.eps);
}

}  // namespace otclab
