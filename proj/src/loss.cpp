#include "otclab/loss.hpp"

#include <cmath>

namespace otclab {

namespace {

void check_unit_rows(const Tensor& t, const char* which) {
  for (int r = 0; r < t.rows(); ++r) {
    double ss = 0.0;
    const double* row = t.row_ptr(r);
    for (int c = 0; c < t.cols(); ++c) ss += row[c] * row[c];
    if (std::fabs(ss - 1.0) > 1e-6) {
      throw NumericError(std::string(which) + " row " + std::to_string(r) +
                         " is not unit-norm");
    }
  }
}

void check_row_stochastic(const Tensor& t, const char* which) {
  for (int r = 0; r < t.rows(); ++r) {
    double sum = 0.0;
    const double* row = t.row_ptr(r);
    for (int c = 0; c < t.cols(); ++c) sum += row[c];
    if (std::fabs(sum - 1.0) > 1e-6) {
      throw NumericError(std::string(which) + " row " + std::to_string(r) +
                         " sums to " + std::to_string(sum) + ", not 1");
    }
  }
}

}  // namespace

Var similarity_matrix(Tape& tape, Var orig_embeds, Var trans_embeds) {
  const Tensor& o = tape.value(orig_embeds);
  const Tensor& t = tape.value(trans_embeds);
  if (o.rows() != t.rows() || o.cols() != t.cols()) {
    throw ShapeError("similarity_matrix: embedding shapes differ, " + o.shape_str() +
                     " vs " + t.shape_str());
  }
  check_unit_rows(o, "original embeddings");
  check_unit_rows(t, "translated embeddings");
  return tape.matmul(orig_embeds, tape.transpose(trans_embeds));
}

PairingVars pairing_distributions(Tape& tape, Var similarity, Var log_tau) {
  const Tensor& s = tape.value(similarity);
  if (s.rows() != s.cols()) {
    throw ShapeError("pairing_distributions: similarity must be square, got " +
                     s.shape_str());
  }
  if (!s.all_finite()) {
    throw NumericError("pairing_distributions: non-finite similarity matrix");
  }
  Var inv_tau = tape.exp_scalar(tape.scale(log_tau, -1.0));
  PairingVars out;
  out.o2t = tape.row_softmax(tape.mul_scalar(similarity, inv_tau));
  out.t2o = tape.row_softmax(tape.mul_scalar(tape.transpose(similarity), inv_tau));
  return out;
}

Var otc_loss(Tape& tape, const PairingVars& dists, const Tensor& pairing_target,
             const OtcConfig& config) {
  config.validate();
  const Tensor& o2t = tape.value(dists.o2t);
  const Tensor& t2o = tape.value(dists.t2o);
  if (!o2t.same_shape(pairing_target) || !t2o.same_shape(pairing_target)) {
    throw ShapeError("otc_loss: distribution/target shape mismatch");
  }
  check_row_stochastic(o2t, "p_o2t");
  check_row_stochastic(t2o, "p_t2o");

  Var target = tape.input(pairing_target);
  Var h_o2t = tape.mean_all(tape.cross_entropy_rows(dists.o2t, target));
  Var h_t2o = tape.mean_all(tape.cross_entropy_rows(dists.t2o, target));
  return tape.scale(tape.add(h_o2t, h_t2o), 0.5 * config.alpha_otc);
}

LossVars total_loss(Tape& tape, Var logits, const std::vector<int>& labels,
                    std::optional<Var> otc_term) {
  const Tensor& lg = tape.value(logits);
  if (lg.rows() != static_cast<int>(labels.size())) {
    throw ShapeError("total_loss: logits rows != label count");
  }
  Tensor onehot(lg.rows(), lg.cols());
  for (int r = 0; r < lg.rows(); ++r) {
    const int star = labels[r];
    if (star < 1 || star > lg.cols()) {
      throw UsageError("total_loss: label " + std::to_string(star) +
                       " outside {1.." + std::to_string(lg.cols()) + "}");
    }
    onehot.at(r, star - 1) = 1.0;
  }
  LossVars out;
  Var probs = tape.row_softmax(logits);
  out.classification =
      tape.mean_all(tape.cross_entropy_rows(probs, tape.input(std::move(onehot))));
  out.otc = otc_term;
  out.total = otc_term ? tape.add(out.classification, *otc_term) : out.classification;
  return out;
}

}  // namespace otclab
