// otclab command-line interface: corpus generation, training runs, sweeps,
// evaluation, report emission and numeric self-checks.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "otclab/checkpoint.hpp"
#include "otclab/corpus.hpp"
#include "otclab/eval.hpp"
#include "otclab/format.hpp"
#include "otclab/kv.hpp"
#include "otclab/report.hpp"
#include "otclab/selfcheck.hpp"
#include "otclab/sweep.hpp"
#include "otclab/trainer.hpp"

namespace fs = std::filesystem;
using namespace otclab;

namespace {

fs::path resolve(const std::string& workdir, const std::string& path) {
  fs::path p(path);
  if (p.is_absolute()) return p;
  return fs::path(workdir) / p;
}

int default_jobs() {
  if (const char* env = std::getenv("OTCLAB_JOBS")) {
    const int j = std::atoi(env);
    if (j > 0) return j;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
}

std::vector<uint64_t> parse_seed_list(const std::string& csv) {
  std::vector<uint64_t> seeds;
  std::string cur;
  for (char ch : csv + ",") {
    if (ch == ',') {
      if (!cur.empty()) seeds.push_back(std::stoull(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (seeds.empty()) throw UsageError("empty seed list");
  return seeds;
}

std::vector<std::string> parse_lang_list(const std::string& csv) {
  std::vector<std::string> langs;
  std::string cur;
  for (char ch : csv + ",") {
    if (ch == ',') {
      if (!cur.empty()) langs.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  return langs;
}

struct TrainerFlags {
  int epochs = 5;
  int batch_size = 32;
  int holdout_groups = 0;
  int embed_dim = 32;
  int num_blocks = 2;
  int num_heads = 2;
  int ffn_dim = 64;
  int max_len = 64;
  int warmup_steps = 500;
  double peak_lr = 2e-5;
  double alpha_otc = 0.4;
  double weight_decay = 0.01;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--epochs", epochs, "Training epochs")->capture_default_str();
    cmd->add_option("--batch-size", batch_size, "Minibatch size")->capture_default_str();
    cmd->add_option("--holdout-groups", holdout_groups,
                    "Trailing original-language groups held out for the retrieval probe")
        ->capture_default_str();
    cmd->add_option("--embed-dim", embed_dim, "Embedding width")->capture_default_str();
    cmd->add_option("--blocks", num_blocks, "Encoder blocks")->capture_default_str();
    cmd->add_option("--heads", num_heads, "Attention heads")->capture_default_str();
    cmd->add_option("--ffn-dim", ffn_dim, "Feed-forward width")->capture_default_str();
    cmd->add_option("--max-len", max_len, "Maximum sequence length incl. CLS")
        ->capture_default_str();
    cmd->add_option("--warmup", warmup_steps, "Linear warmup steps")->capture_default_str();
    cmd->add_option("--lr", peak_lr, "Peak learning rate")->capture_default_str();
    cmd->add_option("--alpha-otc", alpha_otc, "OTC loss weight")->capture_default_str();
    cmd->add_option("--weight-decay", weight_decay, "AdamW weight decay")
        ->capture_default_str();
  }

  void apply(RunConfig& run) const {
    run.epochs = epochs;
    run.sampler.batch_size = batch_size;
    run.sampler.holdout_groups = holdout_groups;
    run.model.embed_dim = embed_dim;
    run.model.num_blocks = num_blocks;
    run.model.num_heads = num_heads;
    run.model.ffn_dim = ffn_dim;
    run.model.max_len = max_len;
    run.schedule.warmup_steps = warmup_steps;
    run.schedule.peak_lr = peak_lr;
    run.otc.alpha_otc = alpha_otc;
    run.adamw.weight_decay = weight_decay;
  }
};

RunConfig load_run_config(const fs::path& path) {
  const auto kv = read_kv_file(path);
  auto need = [&](const char* key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) {
      throw DataError("config " + path.string() + " missing key " + key);
    }
    return it->second;
  };
  RunConfig run;
  run.corpus_dir = need("corpus_dir");
  run.original_language = need("original_language");
  run.use_otc = need("use_otc") == "1";
  run.baseline_mode = need("baseline_mode") == "1";
  run.seed = std::stoull(need("seed"));
  run.epochs = std::stoi(need("epochs"));
  run.model.embed_dim = std::stoi(need("embed_dim"));
  run.model.num_blocks = std::stoi(need("num_blocks"));
  run.model.num_heads = std::stoi(need("num_heads"));
  run.model.ffn_dim = std::stoi(need("ffn_dim"));
  run.model.max_len = std::stoi(need("max_len"));
  run.sampler.batch_size = std::stoi(need("batch_size"));
  run.sampler.holdout_groups = std::stoi(need("holdout_groups"));
  run.schedule.warmup_steps = std::stoi(need("warmup_steps"));
  run.schedule.peak_lr = std::stod(need("peak_lr"));
  run.otc.alpha_otc = std::stod(need("alpha_otc"));
  run.adamw.weight_decay = std::stod(need("weight_decay"));
  run.output_dir = need("output_dir");
  return run;
}

int run_app(int argc, char** argv) {
  CLI::App app{"otclab: multilingual classifier training with "
               "original-translated contrastive loss"};
  app.require_subcommand(1);
  std::string workdir = ".";
  app.add_option("--workdir", workdir, "Root for relative paths")->capture_default_str();

  // gen-corpus
  auto* gen = app.add_subcommand("gen-corpus", "Generate a synthetic parallel corpus");
  gen->set_config("--config");
  CorpusConfig corpus_config;
  std::string gen_out = "corpus";
  gen->add_option("--out", gen_out, "Output directory")->capture_default_str();
  gen->add_option("--languages", corpus_config.num_languages, "Language count")
      ->capture_default_str();
  gen->add_option("--groups", corpus_config.groups_per_language,
                  "Training groups per language")->capture_default_str();
  gen->add_option("--test-groups", corpus_config.test_groups_per_language,
                  "Test groups per language (0 = derive)")->capture_default_str();
  gen->add_option("--min-len", corpus_config.min_len, "Minimum document length")
      ->capture_default_str();
  gen->add_option("--max-len", corpus_config.max_len, "Maximum document length")
      ->capture_default_str();
  gen->add_option("--concepts", corpus_config.concepts_per_valence,
                  "Concepts per valence class")->capture_default_str();
  gen->add_option("--noise-sub", corpus_config.noise.p_substitute,
                  "Translation substitution probability")->capture_default_str();
  gen->add_option("--noise-drop", corpus_config.noise.p_drop,
                  "Translation drop probability")->capture_default_str();
  gen->add_option("--seed", corpus_config.seed, "Generator seed")->capture_default_str();

  // train
  auto* train_cmd = app.add_subcommand("train", "Run one training configuration");
  train_cmd->set_config("--config");
  std::string train_corpus = "corpus", train_out = "run", train_lang;
  bool train_otc = false, train_no_otc = false, train_baseline = false;
  uint64_t train_seed = 0;
  TrainerFlags train_flags;
  train_cmd->add_option("--corpus", train_corpus, "Corpus directory")->capture_default_str();
  train_cmd->add_option("--out", train_out, "Run output directory")->capture_default_str();
  train_cmd->add_option("--original-language", train_lang,
                        "The single language trained on original data")->required();
  train_cmd->add_flag("--otc", train_otc, "Enable OTC loss");
  train_cmd->add_flag("--no-otc", train_no_otc, "Disable OTC loss");
  train_cmd->add_flag("--baseline", train_baseline,
                      "Original-only batches (no translated half, no OTC)");
  train_cmd->add_option("--seed", train_seed, "Run seed")->capture_default_str();
  train_flags.add_to(train_cmd);

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "Run a grid of training configurations");
  sweep_cmd->set_config("--config");
  std::string sweep_corpus = "corpus", sweep_out = "sweep";
  std::string sweep_langs, sweep_otc = "both", sweep_seeds = "0,1,2";
  bool sweep_baseline = false;
  int sweep_jobs = default_jobs();
  TrainerFlags sweep_flags;
  sweep_cmd->add_option("--corpus", sweep_corpus, "Corpus directory")->capture_default_str();
  sweep_cmd->add_option("--out", sweep_out, "Sweep output directory")->capture_default_str();
  sweep_cmd->add_option("--languages", sweep_langs,
                        "Comma-separated original languages (default: all)");
  sweep_cmd->add_option("--otc", sweep_otc, "OTC setting: on|off|both")
      ->capture_default_str();
  sweep_cmd->add_option("--seeds", sweep_seeds, "Comma-separated seeds")
      ->capture_default_str();
  sweep_cmd->add_flag("--baseline", sweep_baseline,
                      "Also run original-only baseline cells");
  sweep_cmd->add_option("--jobs", sweep_jobs,
                        "Parallel runs (default: OTCLAB_JOBS or hardware)")
      ->capture_default_str();
  sweep_flags.add_to(sweep_cmd);

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Score a finished run's checkpoint");
  std::string eval_run_dir;
  std::string eval_corpus_override;
  eval_cmd->add_option("--run-dir", eval_run_dir, "Run directory")->required();
  eval_cmd->add_option("--corpus", eval_corpus_override,
                       "Corpus directory (default: from run config)");

  // report
  auto* report_cmd = app.add_subcommand("report", "Emit result tables for a sweep");
  std::string report_dir;
  report_cmd->add_option("--sweep-dir", report_dir, "Sweep directory")->required();

  // grad-check
  auto* check_cmd = app.add_subcommand("grad-check", "Finite-difference gradient check");
  GradCheckConfig check_config;
  double check_tolerance = 1e-4;
  check_cmd->add_option("--embed-dim", check_config.embed_dim, "Embedding width")
      ->capture_default_str();
  check_cmd->add_option("--blocks", check_config.num_blocks, "Encoder blocks")
      ->capture_default_str();
  check_cmd->add_option("--heads", check_config.num_heads, "Attention heads")
      ->capture_default_str();
  check_cmd->add_option("--pairs", check_config.pairs, "Pairs per batch")
      ->capture_default_str();
  check_cmd->add_option("--eps", check_config.eps, "Finite-difference step")
      ->capture_default_str();
  check_cmd->add_option("--seed", check_config.seed, "Seed")->capture_default_str();
  check_cmd->add_option("--tolerance", check_tolerance, "Max relative error allowed")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (gen->parsed()) {
    const CorpusSplit corpus = generate_corpus(corpus_config);
    const fs::path out = resolve(workdir, gen_out);
    save_jsonl(corpus, out);
    std::cout << "wrote " << corpus.train.size() << " train groups and "
              << corpus.test.size() << " test examples to " << out.string() << "\n";
    return 0;
  }

  if (train_cmd->parsed()) {
    if (train_otc && train_no_otc) throw UsageError("--otc conflicts with --no-otc");
    RunConfig run;
    run.corpus_dir = resolve(workdir, train_corpus).string();
    run.original_language = train_lang;
    if (train_lang.find(',') != std::string::npos) {
      throw UsageError("runs take a single original language; mixtures of original "
                       "languages are not supported");
    }
    run.baseline_mode = train_baseline;
    run.use_otc = train_baseline ? false : (train_otc && !train_no_otc);
    if (train_baseline && train_otc) {
      throw UsageError("OTC loss requires paired batches; --baseline excludes it");
    }
    run.seed = train_seed;
    run.output_dir = resolve(workdir, train_out).string();
    train_flags.apply(run);
    const CorpusSplit corpus = load_jsonl(run.corpus_dir);
    const TrainResult result = train(run, corpus);
    std::cout << "trained " << result.steps << " steps; final epoch mean loss "
              << format_double(result.epochs.back().mean_total) << "; checkpoint at "
              << result.checkpoint_path.string() << "\n";
    return 0;
  }

  if (sweep_cmd->parsed()) {
    SweepSpec spec;
    spec.languages = parse_lang_list(sweep_langs);
    spec.otc_mode = parse_otc_mode(sweep_otc);
    spec.seeds = parse_seed_list(sweep_seeds);
    spec.include_baseline = sweep_baseline;
    spec.jobs = sweep_jobs;
    spec.base.corpus_dir = resolve(workdir, sweep_corpus).string();
    sweep_flags.apply(spec.base);
    const fs::path out = resolve(workdir, sweep_out);
    const CorpusSplit corpus = load_jsonl(spec.base.corpus_dir);
    run_sweep(spec, corpus, out);
    std::cout << "sweep complete: " << read_manifest(out).size() << " runs under "
              << out.string() << "\n";
    return 0;
  }

  if (eval_cmd->parsed()) {
    const fs::path run_dir = resolve(workdir, eval_run_dir);
    RunConfig run = load_run_config(run_dir / "config.cfg");
    run.output_dir = run_dir.string();
    const std::string corpus_dir = eval_corpus_override.empty()
                                       ? run.corpus_dir
                                       : resolve(workdir, eval_corpus_override).string();
    const CorpusSplit corpus = load_jsonl(corpus_dir);
    Parameters params = load_checkpoint(run_dir / "checkpoint.json");
    const RunRecord rec =
        evaluate_run(run, corpus, params, run_dir.filename().string());
    for (const auto& [lang, f1] : rec.f1_by_lang) {
      std::cout << lang << " f1_micro=" << format_double(f1) << "\n";
    }
    std::cout << "retrieval_acc=" << format_double(rec.retrieval_acc) << "\n";
    return 0;
  }

  if (report_cmd->parsed()) {
    emit_reports(resolve(workdir, report_dir));
    std::cout << "reports written under " << resolve(workdir, report_dir).string() << "\n";
    return 0;
  }

  if (check_cmd->parsed()) {
    const FiniteDiffReport report = run_model_gradcheck(check_config);
    std::cout << "checked " << report.entries_checked << " parameter entries\n"
              << "max relative error " << format_double(report.max_rel_error) << " at "
              << report.worst_param << "[" << report.worst_index << "]"
              << " (analytic " << format_double(report.worst_analytic) << ", numeric "
              << format_double(report.worst_numeric) << ")\n";
    if (report.max_rel_error >= check_tolerance) {
      std::cerr << "gradient check FAILED (tolerance " << format_double(check_tolerance)
                << ")\n";
      return 3;
    }
    std::cout << "gradient check passed (tolerance " << format_double(check_tolerance)
              << ")\n";
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_app(argc, argv);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
