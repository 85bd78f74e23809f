#pragma once

#include <cstdint>

#include "otclab/gradcheck.hpp"

namespace otclab {

struct GradCheckConfig {
  int embed_dim = 8;
  int num_blocks = 2;
  int num_heads = 2;
  int ffn_dim = 16;
  int pairs = 4;  // minibatch = 2*pairs rows
  double eps = 1e-5;
  uint64_t seed = 0;
};

// Finite-difference sweep over every parameter of a small end-to-end model:
// encoder forward on a paired batch, classification cross-entropy plus the
// OTC term, checked entry by entry including log_tau.
FiniteDiffReport run_model_gradcheck(const GradCheckConfig& config);

}  // namespace otclab
