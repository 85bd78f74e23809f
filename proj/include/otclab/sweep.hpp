#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "otclab/report.hpp"
#include "otclab/trainer.hpp"

namespace otclab {

enum class OtcMode { kOn, kOff, kBoth };

OtcMode parse_otc_mode(const std::string& s);

struct SweepSpec {
  std::vector<std::string> languages;  // empty = every corpus language
  OtcMode otc_mode = OtcMode::kBoth;
  std::vector<uint64_t> seeds = {0, 1, 2};
  bool include_baseline = false;
  RunConfig base;  // shared model/trainer settings; per-cell fields overwritten
  int jobs = 1;
};

struct SweepCell {
  std::string run_id;
  RunConfig config;
};

// One cell per (language x otc setting x seed), plus baseline cells per
// (language x seed) when requested. Run ids: <lang>_<otc|nootc|base>_s<seed>.
std::vector<SweepCell> expand_sweep(const SweepSpec& spec,
                                    const std::vector<std::string>& corpus_languages,
                                    const std::filesystem::path& sweep_dir);

// Completed-run bookkeeping for resumable sweeps.
std::vector<std::string> read_manifest(const std::filesystem::path& sweep_dir);

// Trains and evaluates every pending cell, jobs cells in parallel. Each cell
// is fully isolated: its own rng streams, its own output directory. Completed
// run ids land in manifest.json as they finish.
void run_sweep(const SweepSpec& spec, const CorpusSplit& corpus,
               const std::filesystem::path& sweep_dir);

// Evaluates a finished run (test-split F1 plus the holdout retrieval probe)
// and writes its results.csv into config.output_dir.
RunRecord evaluate_run(const RunConfig& config, const CorpusSplit& corpus,
                       const Parameters& params, const std::string& run_id);

}  // namespace otclab
