#include <doctest.h>

#include <cmath>

#include "otclab/corpus.hpp"
#include "otclab/encoder.hpp"
#include "otclab/loss.hpp"
#include "otclab/selfcheck.hpp"
#include "otclab/trainer.hpp"

using namespace otclab;

namespace {

ModelConfig tiny_config(int vocab) {
  ModelConfig c;
  c.vocab_size = vocab;
  c.embed_dim = 16;
  c.num_blocks = 2;
  c.num_heads = 2;
  c.ffn_dim = 24;
  c.max_len = 24;
  return c;
}

}  // namespace

TEST_CASE("config validation") {
  ModelConfig c = tiny_config(20);
  CHECK(c.head_dim() == 8);
  c.num_heads = 3;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.num_heads = 2;
  c.vocab_size = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("initialization is deterministic per seed") {
  const ModelConfig c = tiny_config(20);
  const Parameters a = init_params(c, 12);
  const Parameters b = init_params(c, 12);
  const Parameters other = init_params(c, 13);
  bool all_equal = true, any_differs = false;
  for (const auto& [name, t] : a) {
    if (!(b.at(name) == t)) all_equal = false;
    if (!(other.at(name) == t)) any_differs = true;
  }
  CHECK(all_equal);
  CHECK(any_differs);
  CHECK(a.at("log_tau").item() == doctest::Approx(std::log(0.07)).epsilon(1e-12));
}

TEST_CASE("padding never leaks into the outputs") {
  const ModelConfig c = tiny_config(30);
  const Parameters params = init_params(c, 5);
  std::vector<int> ids = {Vocabulary::kClsId, 7, 12, 3, 19, 4};
  std::vector<int> padded12(ids), padded20(ids);
  padded12.resize(12, 0);
  padded20.resize(20, 0);

  Tape t1;
  EncoderOutput o1 = encoder_forward(t1, bind_params(t1, params), c, {padded12},
                                     {static_cast<int>(ids.size())});
  Tape t2;
  EncoderOutput o2 = encoder_forward(t2, bind_params(t2, params), c, {padded20},
                                     {static_cast<int>(ids.size())});
  const Tensor& l1 = t1.value(o1.logits);
  const Tensor& l2 = t2.value(o2.logits);
  for (size_t i = 0; i < l1.size(); ++i) {
    CHECK(std::fabs(l1[i] - l2[i]) < 1e-9);
  }
}

TEST_CASE("duplicated rows produce identical outputs") {
  const ModelConfig c = tiny_config(30);
  const Parameters params = init_params(c, 6);
  std::vector<int> ids = {Vocabulary::kClsId, 2, 9, 9, 14};
  Tape tape;
  EncoderOutput out = encoder_forward(tape, bind_params(tape, params), c, {ids, ids},
                                      {5, 5});
  const Tensor& logits = tape.value(out.logits);
  for (int col = 0; col < logits.cols(); ++col) {
    CHECK(logits.at(0, col) == doctest::Approx(logits.at(1, col)).epsilon(1e-12));
  }
}

TEST_CASE("batch order only permutes the rows") {
  const ModelConfig c = tiny_config(40);
  const Parameters params = init_params(c, 8);
  std::vector<std::vector<int>> seqs = {
      {Vocabulary::kClsId, 3, 5, 8},
      {Vocabulary::kClsId, 22, 17, 30, 12},
      {Vocabulary::kClsId, 9},
  };
  std::vector<int> lens = {4, 5, 2};

  Tape t1;
  EncoderOutput fwd = encoder_forward(t1, bind_params(t1, params), c, seqs, lens);
  Tape t2;
  EncoderOutput rev = encoder_forward(t2, bind_params(t2, params), c,
                                      {seqs[2], seqs[0], seqs[1]}, {2, 4, 5});
  const Tensor& a = t1.value(fwd.logits);
  const Tensor& b = t2.value(rev.logits);
  const int perm[3] = {2, 0, 1};  // rev row r equals fwd row perm[r]
  for (int r = 0; r < 3; ++r) {
    for (int col = 0; col < a.cols(); ++col) {
      CHECK(b.at(r, col) == doctest::Approx(a.at(perm[r], col)).epsilon(1e-12));
    }
  }
}

TEST_CASE("normalized CLS rows are unit length") {
  const ModelConfig c = tiny_config(25);
  const Parameters params = init_params(c, 2);
  Tape tape;
  EncoderOutput out = encoder_forward(tape, bind_params(tape, params), c,
                                      {{1, 3, 4, 5}, {1, 8, 2, 9}}, {4, 4});
  const Tensor& n = tape.value(out.cls_normalized);
  for (int r = 0; r < n.rows(); ++r) {
    double ss = 0.0;
    for (int col = 0; col < n.cols(); ++col) ss += n.at(r, col) * n.at(r, col);
    CHECK(std::fabs(ss - 1.0) < 1e-12);
  }
}

TEST_CASE("bad inputs are rejected") {
  const ModelConfig c = tiny_config(10);
  const Parameters params = init_params(c, 1);
  Tape tape;
  BoundParams bound = bind_params(tape, params);
  CHECK_THROWS_AS(encoder_forward(tape, bound, c, {{1, 10}}, {2}), UsageError);
  std::vector<int> too_long(c.max_len + 2, 2);
  too_long[0] = 1;
  CHECK_THROWS_AS(
      encoder_forward(tape, bound, c, {too_long},
                      {static_cast<int>(too_long.size())}),
      UsageError);
}

TEST_CASE("untrained model starts near the uniform loss") {
  CorpusConfig cc;
  cc.num_languages = 2;
  cc.groups_per_language = 50;
  cc.seed = 17;
  const CorpusSplit corpus = generate_corpus(cc);

  ModelConfig c = tiny_config(corpus.vocab.size());
  c.embed_dim = 32;
  c.ffn_dim = 64;
  c.max_len = corpus.max_tokens() + 1;
  const Parameters params = init_params(c, 0);

  // One balanced batch: the first 20 train originals cycle through stars.
  std::vector<const Example*> rows;
  for (size_t i = 0; i < 20; ++i) rows.push_back(&corpus.train[i].original);
  EncodedBatch batch = encode_examples(rows);

  Tape tape;
  EncoderOutput out =
      encoder_forward(tape, bind_params(tape, params), c, batch.tokens, batch.lengths);
  LossVars loss = total_loss(tape, out.logits, batch.labels, std::nullopt);
  // ln 5 = 1.6094379124341003
  CHECK(std::fabs(tape.value(loss.total).item() - 1.6094379124341003) < 0.2);
}

TEST_CASE("full model gradients survive finite differences") {
  GradCheckConfig config;
  config.pairs = 2;
  config.embed_dim = 8;
  config.num_blocks = 2;
  const FiniteDiffReport report = run_model_gradcheck(config);
  INFO("worst: " << report.worst_param << "[" << report.worst_index
                 << "] analytic=" << report.worst_analytic
                 << " numeric=" << report.worst_numeric);
  CHECK(report.max_rel_error < 1e-4);
}
