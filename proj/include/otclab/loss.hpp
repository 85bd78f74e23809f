#pragma once

#include <optional>
#include <vector>

#include "otclab/tape.hpp"

namespace otclab {

struct OtcConfig {
  double alpha_otc = 0.4;
  bool enabled = true;

  void validate() const {
    if (alpha_otc < 0.0) throw ConfigError("alpha_otc must be >= 0");
  }
};

// Row-stochastic pairing matrices: o2t[i] is original i's softmax match
// distribution over the batch's translated examples, t2o the reverse.
struct PairingVars {
  Var o2t;
  Var t2o;
};

// S[i][m] = dot(orig row i, trans row m). Inputs must be M x d with
// unit-norm rows (as produced by l2_normalize_rows).
Var similarity_matrix(Tape& tape, Var orig_embeds, Var trans_embeds);

// Softmax over S/tau row-wise (and over S^T/tau for the reverse direction),
// with tau = exp(log_tau). Gradients flow into S and log_tau.
PairingVars pairing_distributions(Tape& tape, Var similarity, Var log_tau);

// alpha/2 * [mean_i H(Y_i, p_o2t[i]) + mean_i H(Y_i, p_t2o[i])] where Y is
// the one-hot pairing target. Rows of both distributions must sum to 1
// within 1e-6.
Var otc_loss(Tape& tape, const PairingVars& dists, const Tensor& pairing_target,
             const OtcConfig& config);

struct LossVars {
  Var total;
  Var classification;
  std::optional<Var> otc;
};

// Mean categorical cross-entropy over every row (both batch halves), plus
// the OTC term when one is supplied. Labels are stars in 1..5.
LossVars total_loss(Tape& tape, Var logits, const std::vector<int>& labels,
                    std::optional<Var> otc_term);

}  // namespace otclab
