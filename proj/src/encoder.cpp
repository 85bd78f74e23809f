#include "otclab/encoder.hpp"

#include <cmath>

#include "otclab/errors.hpp"
#include "otclab/rng.hpp"

namespace otclab {

void ModelConfig::validate() const {
  if (vocab_size < 2) throw ConfigError("vocab_size must be >= 2");
  if (embed_dim < 1 || num_blocks < 1 || num_heads < 1 || ffn_dim < 1) {
    throw ConfigError("model dimensions must be positive");
  }
  if (embed_dim % num_heads != 0) {
    throw ConfigError("embed_dim must be divisible by num_heads");
  }
  if (max_len < 2) throw ConfigError("max_len must be >= 2");
  if (num_classes < 2) throw ConfigError("num_classes must be >= 2");
  if (dropout != 0.0) throw ConfigError("dropout is fixed at 0 in this build");
}

namespace {

Tensor normal_init(int rows, int cols, double stddev, Rng& rng) {
  Tensor t(rows, cols);
  for (size_t i = 0; i < t.size(); ++i) t[i] = stddev * rng.normal();
  return t;
}

constexpr double kEmbedStd = 0.02;
constexpr double kHeadStd = 0.02;
constexpr double kTauInit = 0.07;

}  // namespace

Parameters init_params(const ModelConfig& config, uint64_t seed) {
  config.validate();
  Rng rng(Rng::mix(seed, 0x1417));
  const int d = config.embed_dim;
  const double proj_std = 1.0 / std::sqrt(static_cast<double>(d));

  Parameters p;
  p.emplace("tok_emb", normal_init(config.vocab_size, d, kEmbedStd, rng));
  p.emplace("pos_emb", normal_init(config.max_len, d, kEmbedStd, rng));
  for (int b = 0; b < config.num_blocks; ++b) {
    const std::string pre = "blk" + std::to_string(b) + ".";
    p.emplace(pre + "ln1.gain", Tensor::full(1, d, 1.0));
    p.emplace(pre + "ln1.bias", Tensor(1, d));
    for (const char* w : {"wq", "wk", "wv", "wo"}) {
      p.emplace(pre + "attn." + w, normal_init(d, d, proj_std, rng));
    }
    // No key bias: softmax scores are invariant to it, so it would never
    // receive gradient.
    for (const char* b2 : {"bq", "bv", "bo"}) {
      p.emplace(pre + "attn." + b2, Tensor(1, d));
    }
    p.emplace(pre + "ln2.gain", Tensor::full(1, d, 1.0));
    p.emplace(pre + "ln2.bias", Tensor(1, d));
    p.emplace(pre + "ffn.w1", normal_init(d, config.ffn_dim, proj_std, rng));
    p.emplace(pre + "ffn.b1", Tensor(1, config.ffn_dim));
    p.emplace(pre + "ffn.w2",
              normal_init(config.ffn_dim, d,
                          1.0 / std::sqrt(static_cast<double>(config.ffn_dim)), rng));
    p.emplace(pre + "ffn.b2", Tensor(1, d));
  }
  p.emplace("final_ln.gain", Tensor::full(1, d, 1.0));
  p.emplace("final_ln.bias", Tensor(1, d));
  p.emplace("head.w", normal_init(d, config.num_classes, kHeadStd, rng));
  p.emplace("head.b", Tensor(1, config.num_classes));
  p.emplace("log_tau", Tensor::scalar(std::log(kTauInit)));
  return p;
}

BoundParams bind_params(Tape& tape, const Parameters& params) {
  BoundParams bound;
  for (const auto& [name, t] : params) bound[name] = tape.param(name, t);
  return bound;
}

namespace {

Var attention(Tape& tape, const BoundParams& p, const std::string& pre, Var x,
              const ModelConfig& config) {
  const int dh = config.head_dim();
  Var q = tape.add_rowvec(tape.matmul(x, p.at(pre + "attn.wq")), p.at(pre + "attn.bq"));
  Var k = tape.matmul(x, p.at(pre + "attn.wk"));
  Var v = tape.add_rowvec(tape.matmul(x, p.at(pre + "attn.wv")), p.at(pre + "attn.bv"));
  std::vector<Var> heads;
  heads.reserve(config.num_heads);
  for (int h = 0; h < config.num_heads; ++h) {
    Var qh = tape.slice_cols(q, h * dh, (h + 1) * dh);
    Var kh = tape.slice_cols(k, h * dh, (h + 1) * dh);
    Var vh = tape.slice_cols(v, h * dh, (h + 1) * dh);
    Var scores = tape.scale(tape.matmul(qh, tape.transpose(kh)),
                            1.0 / std::sqrt(static_cast<double>(dh)));
    Var attn = tape.row_softmax(scores);
    heads.push_back(tape.matmul(attn, vh));
  }
  Var ctx = config.num_heads == 1 ? heads[0] : tape.concat_cols(heads);
  return tape.add_rowvec(tape.matmul(ctx, p.at(pre + "attn.wo")), p.at(pre + "attn.bo"));
}

Var encode_one(Tape& tape, const BoundParams& p, const ModelConfig& config,
               const std::vector<int>& ids) {
  std::vector<int> positions(ids.size());
  for (size_t i = 0; i < ids.size(); ++i) positions[i] = static_cast<int>(i);
  Var x = tape.add(tape.embedding_lookup(p.at("tok_emb"), ids),
                   tape.embedding_lookup(p.at("pos_emb"), positions));
  for (int b = 0; b < config.num_blocks; ++b) {
    const std::string pre = "blk" + std::to_string(b) + ".";
    Var h = tape.layer_norm(x, p.at(pre + "ln1.gain"), p.at(pre + "ln1.bias"));
    x = tape.add(x, attention(tape, p, pre, h, config));
    Var h2 = tape.layer_norm(x, p.at(pre + "ln2.gain"), p.at(pre + "ln2.bias"));
    Var f = tape.relu(tape.add_rowvec(tape.matmul(h2, p.at(pre + "ffn.w1")),
                                      p.at(pre + "ffn.b1")));
    f = tape.add_rowvec(tape.matmul(f, p.at(pre + "ffn.w2")), p.at(pre + "ffn.b2"));
    x = tape.add(x, f);
  }
  x = tape.layer_norm(x, p.at("final_ln.gain"), p.at("final_ln.bias"));
  return tape.slice_rows(x, 0, 1);
}

}  // namespace

EncoderOutput encoder_forward(Tape& tape, const BoundParams& params,
                              const ModelConfig& config,
                              const std::vector<std::vector<int>>& tokens,
                              const std::vector<int>& lengths) {
  config.validate();
  if (tokens.empty() || tokens.size() != lengths.size()) {
    throw UsageError("encoder_forward: tokens/lengths size mismatch");
  }
  std::vector<Var> cls_rows;
  cls_rows.reserve(tokens.size());
  for (size_t i = 0; i < tokens.size(); ++i) {
    const int len = lengths[i];
    if (len < 1 || len > static_cast<int>(tokens[i].size())) {
      throw UsageError("encoder_forward: bad length for sequence " + std::to_string(i));
    }
    if (len > config.max_len) {
      throw UsageError("encoder_forward: sequence " + std::to_string(i) +
                       " longer than max_len " + std::to_string(config.max_len));
    }
    std::vector<int> ids(tokens[i].begin(), tokens[i].begin() + len);
    for (int id : ids) {
      if (id < 0 || id >= config.vocab_size) {
        throw UsageError("encoder_forward: token id " + std::to_string(id) +
                         " outside vocabulary of size " +
                         std::to_string(config.vocab_size));
      }
    }
    cls_rows.push_back(encode_one(tape, params, config, ids));
  }
  EncoderOutput out;
  out.cls_raw = cls_rows.size() == 1 ? cls_rows[0] : tape.concat_rows(cls_rows);
  out.cls_normalized = tape.l2_normalize_rows(out.cls_raw);
  out.logits = tape.add_rowvec(tape.matmul(out.cls_raw, params.at("head.w")),
                               params.at("head.b"));
  return out;
}

}  // namespace otclab
