#include "otclab/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "otclab/errors.hpp"
#include "otclab/format.hpp"
#include "otclab/kv.hpp"

namespace otclab {

namespace {

constexpr double kFlagThreshold = 0.03;

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  fields.push_back(cur);
  return fields;
}

struct Cell {
  std::vector<double> values;
  std::set<uint64_t> seeds;

  bool empty() const { return values.empty(); }
  double mean() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s / static_cast<double>(values.size());
  }
  std::string seed_list() const {
    std::string out;
    for (uint64_t s : seeds) {
      if (!out.empty()) out += ';';
      out += std::to_string(s);
    }
    return out;
  }
};

std::string pad(const std::string& s, size_t width) {
  std::string out = s;
  while (out.size() < width) out += ' ';
  return out;
}

}  // namespace

void write_run_results(const std::filesystem::path& run_dir, const RunRecord& record) {
  std::ofstream out(run_dir / "results.csv", std::ios::binary);
  if (!out) throw DataError("cannot write " + (run_dir / "results.csv").string());
  out << "run_id,seed,original_lang,test_lang,otc,f1_micro,retrieval_acc\n";
  for (const auto& [lang, f1] : record.f1_by_lang) {
    out << record.run_id << "," << record.seed << "," << record.original_lang << ","
        << lang << "," << (record.otc ? 1 : 0) << "," << format_double(f1) << ","
        << format_double(record.retrieval_acc) << "\n";
  }
}

RunRecord read_run_results(const std::filesystem::path& run_dir) {
  const auto path = run_dir / "results.csv";
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  RunRecord rec;
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty results file " + path.string());
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 7) {
      throw DataError("malformed results row at " + path.string() + ":" +
                      std::to_string(line_no));
    }
    rec.run_id = f[0];
    rec.seed = std::stoull(f[1]);
    rec.original_lang = f[2];
    rec.otc = f[4] == "1";
    rec.f1_by_lang[f[3]] = std::stod(f[5]);
    rec.retrieval_acc = std::stod(f[6]);
  }
  if (rec.f1_by_lang.empty()) {
    throw DataError("results file has no rows: " + path.string());
  }
  const auto cfg_path = run_dir / "config.cfg";
  if (std::filesystem::exists(cfg_path)) {
    const auto kv = read_kv_file(cfg_path);
    auto it = kv.find("baseline_mode");
    rec.baseline = it != kv.end() && it->second == "1";
  } else {
    rec.baseline = rec.run_id.find("_base_") != std::string::npos;
  }
  return rec;
}

std::vector<RunRecord> collect_runs(const std::filesystem::path& sweep_dir) {
  const auto runs_dir = sweep_dir / "runs";
  if (!std::filesystem::is_directory(runs_dir)) {
    throw DataError("no runs directory under " + sweep_dir.string());
  }
  std::vector<std::filesystem::path> dirs;
  for (const auto& entry : std::filesystem::directory_iterator(runs_dir)) {
    if (entry.is_directory() &&
        std::filesystem::exists(entry.path() / "results.csv")) {
      dirs.push_back(entry.path());
    }
  }
  std::sort(dirs.begin(), dirs.end());
  std::vector<RunRecord> records;
  for (const auto& d : dirs) records.push_back(read_run_results(d));
  return records;
}

void emit_reports(const std::filesystem::path& sweep_dir) {
  const std::vector<RunRecord> runs = collect_runs(sweep_dir);
  if (runs.empty()) throw DataError("no completed runs under " + sweep_dir.string());

  std::set<std::string> lang_set;
  for (const auto& r : runs) {
    lang_set.insert(r.original_lang);
    for (const auto& [l, _] : r.f1_by_lang) lang_set.insert(l);
  }
  const std::vector<std::string> languages(lang_set.begin(), lang_set.end());

  // Aggregated long-format results.
  {
    std::ofstream out(sweep_dir / "results.csv", std::ios::binary);
    if (!out) throw DataError("cannot write sweep results.csv");
    out << "run_id,seed,original_lang,test_lang,otc,f1_micro,retrieval_acc\n";
    for (const auto& r : runs) {
      for (const auto& [lang, f1] : r.f1_by_lang) {
        out << r.run_id << "," << r.seed << "," << r.original_lang << "," << lang << ","
            << (r.otc ? 1 : 0) << "," << format_double(f1) << ","
            << format_double(r.retrieval_acc) << "\n";
      }
    }
  }

  // Table 1: per tested language, no_data / translated / original columns.
  // Translated and original cells come from the paired no-OTC runs.
  {
    std::map<std::string, std::array<Cell, 3>> grid;  // lang -> [no_data, translated, original]
    for (const auto& r : runs) {
      for (const auto& [lang, f1] : r.f1_by_lang) {
        int col = -1;
        if (r.baseline && lang != r.original_lang) col = 0;
        if (!r.baseline && !r.otc) col = lang == r.original_lang ? 2 : 1;
        if (col < 0) continue;
        grid[lang][col].values.push_back(f1);
        grid[lang][col].seeds.insert(r.seed);
      }
    }
    std::ofstream csv(sweep_dir / "table1.csv", std::ios::binary);
    csv << "language,no_data,translated,original,seeds\n";
    std::ofstream txt(sweep_dir / "table1.txt", std::ios::binary);
    txt << "F1-micro by training condition (means over seeds; '--' = incomplete)\n";
    txt << pad("language", 10) << pad("no_data", 12) << pad("translated", 12)
        << pad("original", 12) << "seeds\n";
    for (const auto& lang : languages) {
      auto it = grid.find(lang);
      std::array<std::string, 3> cells{"--", "--", "--"};
      std::set<uint64_t> seeds;
      if (it != grid.end()) {
        for (int c = 0; c < 3; ++c) {
          if (!it->second[c].empty()) {
            cells[c] = fixed3(it->second[c].mean());
            seeds.insert(it->second[c].seeds.begin(), it->second[c].seeds.end());
          }
        }
      }
      std::string seed_list;
      for (uint64_t s : seeds) {
        if (!seed_list.empty()) seed_list += ';';
        seed_list += std::to_string(s);
      }
      csv << lang << "," << cells[0] << "," << cells[1] << "," << cells[2] << ","
          << seed_list << "\n";
      txt << pad(lang, 10) << pad(cells[0], 12) << pad(cells[1], 12) << pad(cells[2], 12)
          << seed_list << "\n";
    }
  }

  // Table 2: per tested language, no-OTC vs OTC over runs where the language
  // appeared only as translated data.
  {
    std::map<std::string, std::array<Cell, 2>> grid;  // lang -> [no_otc, otc]
    for (const auto& r : runs) {
      if (r.baseline) continue;
      for (const auto& [lang, f1] : r.f1_by_lang) {
        if (lang == r.original_lang) continue;
        auto& cell = grid[lang][r.otc ? 1 : 0];
        cell.values.push_back(f1);
        cell.seeds.insert(r.seed);
      }
    }
    std::ofstream csv(sweep_dir / "table2.csv", std::ios::binary);
    csv << "language,no_otc,otc,delta,flagged,seeds\n";
    std::ofstream txt(sweep_dir / "table2.txt", std::ios::binary);
    txt << "F1-micro on translated-only languages, with and without OTC loss\n";
    txt << "(* marks a difference of " << fixed3(kFlagThreshold) << " or greater)\n";
    txt << pad("language", 10) << pad("no_otc", 12) << pad("otc", 12) << "seeds\n";
    for (const auto& lang : languages) {
      auto it = grid.find(lang);
      if (it == grid.end() || (it->second[0].empty() && it->second[1].empty())) {
        csv << lang << ",--,--,,0,\n";
        txt << pad(lang, 10) << pad("--", 12) << pad("--", 12) << "\n";
        continue;
      }
      const Cell& off = it->second[0];
      const Cell& on = it->second[1];
      std::string c_off = off.empty() ? "--" : fixed3(off.mean());
      std::string c_on = on.empty() ? "--" : fixed3(on.mean());
      std::string delta, flagged = "0";
      if (!off.empty() && !on.empty()) {
        const double d = on.mean() - off.mean();
        delta = format_double(d);
        if (std::fabs(d) >= kFlagThreshold) {
          flagged = "1";
          (d > 0 ? c_on : c_off) += "*";
        }
      }
      std::set<uint64_t> seeds = off.seeds;
      seeds.insert(on.seeds.begin(), on.seeds.end());
      std::string seed_list;
      for (uint64_t s : seeds) {
        if (!seed_list.empty()) seed_list += ';';
        seed_list += std::to_string(s);
      }
      csv << lang << "," << c_off << "," << c_on << "," << delta << "," << flagged << ","
          << seed_list << "\n";
      txt << pad(lang, 10) << pad(c_off, 12) << pad(c_on, 12) << seed_list << "\n";
    }
  }

  // Table 3: original language x OTC rows, tested-language columns.
  {
    std::map<std::pair<std::string, bool>, std::map<std::string, Cell>> grid;
    for (const auto& r : runs) {
      if (r.baseline) continue;
      for (const auto& [lang, f1] : r.f1_by_lang) {
        auto& cell = grid[{r.original_lang, r.otc}][lang];
        cell.values.push_back(f1);
        cell.seeds.insert(r.seed);
      }
    }
    std::ofstream csv(sweep_dir / "table3.csv", std::ios::binary);
    csv << "original_lang,test_lang,no_otc,otc,delta,flagged,seeds\n";
    std::ofstream txt(sweep_dir / "table3.txt", std::ios::binary);
    txt << "F1-micro by original training language and OTC setting\n";
    txt << "(* marks the larger value when the OTC/no-OTC difference is >= "
        << fixed3(kFlagThreshold) << ")\n";
    txt << pad("orig", 8) << pad("otc", 8);
    for (const auto& lang : languages) txt << pad(lang, 12);
    txt << "\n";
    for (const auto& orig : languages) {
      const auto off_it = grid.find({orig, false});
      const auto on_it = grid.find({orig, true});
      if (off_it == grid.end() && on_it == grid.end()) continue;
      std::array<std::string, 2> rows;
      for (const auto& lang : languages) {
        const Cell* off = nullptr;
        const Cell* on = nullptr;
        if (off_it != grid.end()) {
          auto c = off_it->second.find(lang);
          if (c != off_it->second.end() && !c->second.empty()) off = &c->second;
        }
        if (on_it != grid.end()) {
          auto c = on_it->second.find(lang);
          if (c != on_it->second.end() && !c->second.empty()) on = &c->second;
        }
        std::string c_off = off ? fixed3(off->mean()) : "--";
        std::string c_on = on ? fixed3(on->mean()) : "--";
        std::string delta, flagged = "0";
        if (off && on) {
          const double d = on->mean() - off->mean();
          delta = format_double(d);
          if (std::fabs(d) >= kFlagThreshold) {
            flagged = "1";
            (d > 0 ? c_on : c_off) += "*";
          }
        }
        std::set<uint64_t> seeds;
        if (off) seeds.insert(off->seeds.begin(), off->seeds.end());
        if (on) seeds.insert(on->seeds.begin(), on->seeds.end());
        std::string seed_list;
        for (uint64_t s : seeds) {
          if (!seed_list.empty()) seed_list += ';';
          seed_list += std::to_string(s);
        }
        csv << orig << "," << lang << "," << (off ? fixed3(off->mean()) : "--") << ","
            << (on ? fixed3(on->mean()) : "--") << "," << delta << "," << flagged << ","
            << seed_list << "\n";
        rows[0] += pad(c_off, 12);
        rows[1] += pad(c_on, 12);
      }
      txt << pad(orig, 8) << pad("no", 8) << rows[0] << "\n";
      txt << pad("", 8) << pad("yes", 8) << rows[1] << "\n";
    }
  }
}

}  // namespace otclab
