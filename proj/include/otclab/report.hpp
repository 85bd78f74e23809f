#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace otclab {

// One completed run as read back from its run directory.
struct RunRecord {
  std::string run_id;
  uint64_t seed = 0;
  std::string original_lang;
  bool otc = false;
  bool baseline = false;
  std::map<std::string, double> f1_by_lang;
  double retrieval_acc = 0.0;
};

// Per-run results file, long format:
// run_id,seed,original_lang,test_lang,otc,f1_micro,retrieval_acc
void write_run_results(const std::filesystem::path& run_dir, const RunRecord& record);
RunRecord read_run_results(const std::filesystem::path& run_dir);

// All completed runs under sweep_dir/runs, ordered by run_id.
std::vector<RunRecord> collect_runs(const std::filesystem::path& sweep_dir);

// Emits sweep-level results.csv plus table1/2/3 in csv and aligned-text
// form. Cells are means over seeds; the seed list is recorded per row and
// missing cells are marked incomplete rather than filled. Deltas of .03 or
// greater get a flag. Rerunning over the same directory writes identical
// files and never mutates run directories.
void emit_reports(const std::filesystem::path& sweep_dir);

}  // namespace otclab
