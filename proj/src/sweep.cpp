#include "otclab/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include <json.hpp>

#include "otclab/eval.hpp"

namespace otclab {

OtcMode parse_otc_mode(const std::string& s) {
  if (s == "on") return OtcMode::kOn;
  if (s == "off") return OtcMode::kOff;
  if (s == "both") return OtcMode::kBoth;
  throw UsageError("otc mode must be one of on|off|both, got \"" + s + "\"");
}

std::vector<SweepCell> expand_sweep(const SweepSpec& spec,
                                    const std::vector<std::string>& corpus_languages,
                                    const std::filesystem::path& sweep_dir) {
  std::vector<std::string> langs = spec.languages;
  if (langs.empty()) langs = corpus_languages;
  for (const auto& lang : langs) {
    if (lang.find(',') != std::string::npos) {
      throw UsageError("runs take a single original language; mixtures of original "
                       "languages are not supported (got \"" + lang + "\")");
    }
    if (std::find(corpus_languages.begin(), corpus_languages.end(), lang) ==
        corpus_languages.end()) {
      throw DataError("language " + lang + " not present in corpus");
    }
  }
  if (spec.seeds.empty()) throw ConfigError("sweep needs at least one seed");

  std::vector<bool> otc_settings;
  if (spec.otc_mode == OtcMode::kOn) otc_settings = {true};
  else if (spec.otc_mode == OtcMode::kOff) otc_settings = {false};
  else otc_settings = {false, true};

  std::vector<SweepCell> cells;
  for (const auto& lang : langs) {
    for (bool otc : otc_settings) {
      for (uint64_t seed : spec.seeds) {
        SweepCell cell;
        cell.run_id = lang + (otc ? "_otc_s" : "_nootc_s") + std::to_string(seed);
        cell.config = spec.base;
        cell.config.original_language = lang;
        cell.config.use_otc = otc;
        cell.config.baseline_mode = false;
        cell.config.seed = seed;
        cell.config.output_dir = (sweep_dir / "runs" / cell.run_id).string();
        cells.push_back(std::move(cell));
      }
    }
    if (spec.include_baseline) {
      for (uint64_t seed : spec.seeds) {
        SweepCell cell;
        cell.run_id = lang + "_base_s" + std::to_string(seed);
        cell.config = spec.base;
        cell.config.original_language = lang;
        cell.config.use_otc = false;
        cell.config.baseline_mode = true;
        cell.config.seed = seed;
        cell.config.output_dir = (sweep_dir / "runs" / cell.run_id).string();
        cells.push_back(std::move(cell));
      }
    }
  }
  return cells;
}

namespace {

void write_manifest(const std::filesystem::path& sweep_dir,
                    const std::set<std::string>& completed) {
  nlohmann::ordered_json root;
  root["completed"] = std::vector<std::string>(completed.begin(), completed.end());
  std::ofstream out(sweep_dir / "manifest.json", std::ios::binary);
  if (!out) throw DataError("cannot write manifest under " + sweep_dir.string());
  out << root.dump(2) << "\n";
}

}  // namespace

std::vector<std::string> read_manifest(const std::filesystem::path& sweep_dir) {
  const auto path = sweep_dir / "manifest.json";
  if (!std::filesystem::exists(path)) return {};
  std::ifstream in(path, std::ios::binary);
  nlohmann::json root;
  try {
    in >> root;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed manifest " + path.string() + ": " + e.what());
  }
  return root.value("completed", std::vector<std::string>{});
}

RunRecord evaluate_run(const RunConfig& config, const CorpusSplit& corpus,
                       const Parameters& params, const std::string& run_id) {
  ModelConfig model = config.model;
  if (model.vocab_size == 0) model.vocab_size = corpus.vocab.size();

  RunRecord rec;
  rec.run_id = run_id;
  rec.seed = config.seed;
  rec.original_lang = config.original_language;
  rec.otc = config.use_otc;
  rec.baseline = config.baseline_mode;
  for (const auto& m : evaluate(params, model, corpus)) {
    rec.f1_by_lang[m.language] = m.f1_micro;
  }
  SamplerConfig sampler = config.sampler;
  sampler.original_language = config.original_language;
  sampler.baseline_mode = false;  // the probe always uses parallel pairs
  rec.retrieval_acc = holdout_retrieval(params, model, corpus, sampler);
  write_run_results(config.output_dir, rec);
  return rec;
}

void run_sweep(const SweepSpec& spec, const CorpusSplit& corpus,
               const std::filesystem::path& sweep_dir) {
  std::filesystem::create_directories(sweep_dir / "runs");
  std::vector<SweepCell> cells = expand_sweep(spec, corpus.languages, sweep_dir);

  std::set<std::string> completed;
  for (const auto& id : read_manifest(sweep_dir)) {
    // Trust the manifest only if the run products are actually present.
    if (std::filesystem::exists(sweep_dir / "runs" / id / "results.csv")) {
      completed.insert(id);
    }
  }

  std::vector<const SweepCell*> pending;
  for (const auto& cell : cells) {
    if (!completed.count(cell.run_id)) pending.push_back(&cell);
  }

  std::mutex manifest_mutex;
  std::atomic<size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&]() {
    for (;;) {
      const size_t idx = next.fetch_add(1);
      if (idx >= pending.size()) return;
      const SweepCell& cell = *pending[idx];
      try {
        TrainResult result = train(cell.config, corpus);
        evaluate_run(cell.config, corpus, result.params, cell.run_id);
        std::lock_guard<std::mutex> lock(manifest_mutex);
        completed.insert(cell.run_id);
        write_manifest(sweep_dir, completed);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  const int jobs = std::max(1, spec.jobs);
  std::vector<std::thread> threads;
  for (int j = 0; j < std::min<size_t>(jobs, std::max<size_t>(pending.size(), 1)); ++j) {
    threads.emplace_back(worker);
  }
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
  write_manifest(sweep_dir, completed);
}

}  // namespace otclab
