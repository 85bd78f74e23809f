#include "otclab/trainer.hpp"

#include <cmath>
#include <fstream>

#include "otclab/checkpoint.hpp"
#include "otclab/format.hpp"

namespace otclab {

OptimizerState init_optimizer(const Parameters& params, AdamWConfig config) {
  OptimizerState state;
  state.config = config;
  for (const auto& [name, t] : params) {
    state.first_moment.emplace(name, Tensor(t.rows(), t.cols()));
    state.second_moment.emplace(name, Tensor(t.rows(), t.cols()));
  }
  return state;
}

double lr_at(const Schedule& schedule, long long step) {
  if (step < 1) throw UsageError("lr_at: steps are 1-based");
  if (step <= schedule.warmup_steps) {
    return schedule.peak_lr * static_cast<double>(step) /
           static_cast<double>(schedule.warmup_steps);
  }
  return schedule.peak_lr;
}

void adamw_step(Parameters& params, const Gradients& grads, OptimizerState& state,
                double lr) {
  if (lr < 0.0) throw UsageError("adamw_step: negative learning rate");
  ++state.step;
  const auto& c = state.config;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  for (auto& [name, theta] : params) {
    auto it = grads.find(name);
    if (it == grads.end()) {
      throw UsageError("adamw_step: missing gradient for " + name);
    }
    const Tensor& g = it->second;
    if (!g.same_shape(theta)) {
      throw ShapeError("adamw_step: gradient shape mismatch for " + name);
    }
    if (!g.all_finite()) {
      throw NumericError("adamw_step: non-finite gradient for " + name + " at step " +
                         std::to_string(state.step));
    }
    Tensor& m = state.first_moment.at(name);
    Tensor& v = state.second_moment.at(name);
    for (size_t i = 0; i < theta.size(); ++i) {
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      theta[i] -= lr * mhat / (std::sqrt(vhat) + c.eps) + lr * c.weight_decay * theta[i];
    }
  }
}

EncodedBatch encode_examples(const std::vector<const Example*>& examples) {
  EncodedBatch batch;
  batch.tokens.reserve(examples.size());
  for (const Example* e : examples) {
    std::vector<int> ids;
    ids.reserve(e->tokens.size() + 1);
    ids.push_back(Vocabulary::kClsId);
    ids.insert(ids.end(), e->tokens.begin(), e->tokens.end());
    batch.lengths.push_back(static_cast<int>(ids.size()));
    batch.tokens.push_back(std::move(ids));
    batch.labels.push_back(e->stars);
  }
  return batch;
}

namespace {

void dump_diagnostics(const std::filesystem::path& dir, long long step, double total,
                      double ce, double otc, double tau) {
  std::ofstream out(dir / "diagnostics.txt", std::ios::binary);
  out << "divergence at step " << step << "\n"
      << "loss_total=" << format_double(total) << "\n"
      << "loss_ce=" << format_double(ce) << "\n"
      << "loss_otc=" << format_double(otc) << "\n"
      << "tau=" << format_double(tau) << "\n";
}

}  // namespace

void RunConfig::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write config to " + path.string());
  out << "corpus_dir=" << corpus_dir << "\n"
      << "original_language=" << original_language << "\n"
      << "use_otc=" << (use_otc ? 1 : 0) << "\n"
      << "baseline_mode=" << (baseline_mode ? 1 : 0) << "\n"
      << "seed=" << seed << "\n"
      << "epochs=" << epochs << "\n"
      << "embed_dim=" << model.embed_dim << "\n"
      << "num_blocks=" << model.num_blocks << "\n"
      << "num_heads=" << model.num_heads << "\n"
      << "ffn_dim=" << model.ffn_dim << "\n"
      << "max_len=" << model.max_len << "\n"
      << "batch_size=" << sampler.batch_size << "\n"
      << "holdout_groups=" << sampler.holdout_groups << "\n"
      << "warmup_steps=" << schedule.warmup_steps << "\n"
      << "peak_lr=" << format_double(schedule.peak_lr) << "\n"
      << "alpha_otc=" << format_double(otc.alpha_otc) << "\n"
      << "weight_decay=" << format_double(adamw.weight_decay) << "\n"
      << "output_dir=" << output_dir << "\n";
}

TrainResult train(const RunConfig& run, const CorpusSplit& corpus) {
  if (run.epochs < 1) throw ConfigError("epochs must be >= 1");
  if (run.baseline_mode && run.use_otc) {
    throw UsageError("OTC loss requires paired batches; disable it for baseline runs");
  }

  ModelConfig model = run.model;
  if (model.vocab_size == 0) model.vocab_size = corpus.vocab.size();
  const int needed = corpus.max_tokens() + 1;  // CLS slot
  if (model.max_len < needed) {
    throw ConfigError("max_len " + std::to_string(model.max_len) +
                      " shorter than longest corpus sequence + CLS (" +
                      std::to_string(needed) + ")");
  }
  model.validate();

  SamplerConfig sampler = run.sampler;
  sampler.original_language = run.original_language;
  sampler.baseline_mode = run.baseline_mode;
  sampler.validate();

  const std::filesystem::path out_dir(run.output_dir);
  std::filesystem::create_directories(out_dir);
  run.save(out_dir / "config.cfg");

  Parameters params = init_params(model, Rng::mix(run.seed, 0xD1CE));
  OptimizerState opt = init_optimizer(params, run.adamw);

  const auto metrics_path = out_dir / "metrics.csv";
  std::ofstream metrics(metrics_path, std::ios::binary);
  if (!metrics) throw DataError("cannot write " + metrics_path.string());
  metrics << "step,lr,loss_total,loss_ce,loss_otc,tau\n";

  TrainResult result;
  long long step = 0;
  for (int epoch = 0; epoch < run.epochs; ++epoch) {
    Rng epoch_rng(Rng::mix(Rng::mix(run.seed, 0xE90C), static_cast<uint64_t>(epoch)));
    const std::vector<Minibatch> plan =
        run.baseline_mode ? baseline_plan(corpus, sampler, epoch_rng)
                          : epoch_plan(corpus, sampler, epoch_rng);
    if (plan.empty()) {
      throw DataError("epoch plan is empty; corpus too small for batch size");
    }

    EpochStats stats;
    for (const Minibatch& batch : plan) {
      ++step;
      Tape tape;
      BoundParams bound = bind_params(tape, params);

      std::vector<const Example*> rows = batch.originals;
      rows.insert(rows.end(), batch.translated.begin(), batch.translated.end());
      EncodedBatch enc = encode_examples(rows);
      EncoderOutput out = encoder_forward(tape, bound, model, enc.tokens, enc.lengths);

      std::optional<Var> otc_term;
      if (run.use_otc) {
        const int m = batch.pair_count();
        Var orig = tape.slice_rows(out.cls_normalized, 0, m);
        Var trans = tape.slice_rows(out.cls_normalized, m, 2 * m);
        Var sim = similarity_matrix(tape, orig, trans);
        PairingVars dists = pairing_distributions(tape, sim, bound.at("log_tau"));
        otc_term = otc_loss(tape, dists, batch.pairing_target(), run.otc);
      }
      LossVars loss = total_loss(tape, out.logits, enc.labels, otc_term);

      const double total = tape.value(loss.total).item();
      const double ce = tape.value(loss.classification).item();
      const double otc = loss.otc ? tape.value(*loss.otc).item() : 0.0;
      const double tau = std::exp(params.at("log_tau").item());
      if (!std::isfinite(total)) {
        dump_diagnostics(out_dir, step, total, ce, otc, tau);
        throw NumericError("training diverged at step " + std::to_string(step) +
                           "; diagnostics written to " +
                           (out_dir / "diagnostics.txt").string());
      }

      Gradients grads = tape.backward(loss.total);
      adamw_step(params, grads, opt, lr_at(run.schedule, step));

      metrics << step << "," << format_double(lr_at(run.schedule, step)) << ","
              << format_double(total) << "," << format_double(ce) << ","
              << format_double(otc) << "," << format_double(tau) << "\n";
      stats.mean_total += total;
      stats.mean_ce += ce;
      stats.mean_otc += otc;
    }
    stats.mean_total /= static_cast<double>(plan.size());
    stats.mean_ce /= static_cast<double>(plan.size());
    stats.mean_otc /= static_cast<double>(plan.size());
    result.epochs.push_back(stats);

    save_checkpoint(params, out_dir / ("checkpoint_epoch" + std::to_string(epoch + 1) +
                                       ".json"));
  }

  save_checkpoint(params, out_dir / "checkpoint.json");
  result.params = std::move(params);
  result.metrics_path = metrics_path;
  result.checkpoint_path = out_dir / "checkpoint.json";
  result.steps = step;
  return result;
}

}  // namespace otclab
