#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "otclab/params.hpp"
#include "otclab/tape.hpp"

namespace otclab {

struct ModelConfig {
  int vocab_size = 0;
  int embed_dim = 32;
  int num_blocks = 2;
  int num_heads = 2;
  int ffn_dim = 64;
  int max_len = 64;  // includes the CLS slot
  int num_classes = 5;
  double dropout = 0.0;  // fixed at 0; kept so configs round-trip

  void validate() const;
  int head_dim() const { return embed_dim / num_heads; }
};

// Parameter vars already registered on a tape.
using BoundParams = std::map<std::string, Var>;

struct EncoderOutput {
  Var cls_raw;         // batch x d, CLS position after the final block
  Var cls_normalized;  // L2-normalized rows of cls_raw
  Var logits;          // batch x num_classes, linear head on cls_raw
};

// Deterministic initialization: matrices ~ N(0, 1/fan_in), embeddings small,
// classifier head near zero so the initial loss sits at ln(num_classes),
// layer norm at identity, log_tau at ln(0.07).
Parameters init_params(const ModelConfig& config, uint64_t seed);

BoundParams bind_params(Tape& tape, const Parameters& params);

// Pre-norm transformer encoder over a batch of CLS-prefixed token sequences.
// tokens[i] may be padded past lengths[i]; only the first lengths[i] ids are
// read, so outputs are exactly independent of padding. Padding ids beyond the
// length are never validated or attended to.
EncoderOutput encoder_forward(Tape& tape, const BoundParams& params,
                              const ModelConfig& config,
                              const std::vector<std::vector<int>>& tokens,
                              const std::vector<int>& lengths);

}  // namespace otclab
