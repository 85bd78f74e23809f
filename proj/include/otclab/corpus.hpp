#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "otclab/errors.hpp"
#include "otclab/rng.hpp"

namespace otclab {

// Word <-> id mapping. Ids 0 and 1 are reserved for padding and the CLS
// marker; corpus ids are assigned in first-seen order after those.
class Vocabulary {
 public:
  static constexpr int kPadId = 0;
  static constexpr int kClsId = 1;

  Vocabulary() {
    intern("<pad>");
    intern("<cls>");
  }

  int intern(const std::string& word) {
    auto it = index_.find(word);
    if (it != index_.end()) return it->second;
    const int id = static_cast<int>(words_.size());
    words_.push_back(word);
    index_.emplace(word, id);
    return id;
  }

  std::optional<int> id_of(const std::string& word) const {
    auto it = index_.find(word);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  const std::string& word(int id) const {
    if (id < 0 || id >= static_cast<int>(words_.size())) {
      throw UsageError("vocabulary id out of range: " + std::to_string(id));
    }
    return words_[id];
  }

  int size() const { return static_cast<int>(words_.size()); }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> index_;
};

// Language-neutral concept sequence. A concept's sentiment valence is a fixed
// function of its id: c % 3 - 1 in {-1, 0, +1}.
struct InterlinguaDoc {
  std::vector<int> concepts;
};

inline int valence_of(int concept_id) { return concept_id % 3 - 1; }

// Star label from the valence sum, five contiguous bands symmetric about 0:
// <= -5 -> 1, [-4,-2] -> 2, [-1,1] -> 3, [2,4] -> 4, >= 5 -> 5.
int label_of(const InterlinguaDoc& doc);

struct Example {
  long long id = 0;
  std::string language;
  bool translated = false;
  std::vector<int> tokens;  // vocabulary ids, CLS not included
  int stars = 0;
};

struct ExampleGroup {
  long long id = 0;
  Example original;
  std::vector<Example> translations;

  const Example* translation_in(const std::string& language) const {
    for (const auto& e : translations) {
      if (e.language == language) return &e;
    }
    return nullptr;
  }
};

// Per-language bijections concept id -> surface token id. Each language owns
// a contiguous, non-overlapping block of the vocabulary.
class LexiconSet {
 public:
  LexiconSet() = default;
  LexiconSet(const std::vector<std::string>& languages, int concept_count,
             Vocabulary& vocab);

  int surface_id(int lang_index, int concept_id) const;
  const std::string& surface_word(int lang_index, int concept_id) const;
  // Inverse map; throws DataError if the id is not in that language's block.
  int concept_of(int lang_index, int surface_id) const;
  int lang_index(const std::string& language) const;
  int concept_count() const { return concept_count_; }
  int num_languages() const { return static_cast<int>(languages_.size()); }
  // [first, last) surface id block for a language.
  std::pair<int, int> surface_range(int lang_index) const;

 private:
  std::vector<std::string> languages_;
  int concept_count_ = 0;
  std::vector<int> block_start_;  // first surface id per language
  const Vocabulary* vocab_ = nullptr;
};

struct NoiseConfig {
  double p_substitute = 0.0;
  double p_drop = 0.0;
};

struct CorpusSplit {
  std::vector<ExampleGroup> train;
  std::vector<Example> test;
  Vocabulary vocab;
  std::vector<std::string> languages;

  const ExampleGroup* find_group(long long id) const;
  // Longest token sequence across train and test (without CLS).
  int max_tokens() const;
};

struct CorpusConfig {
  int num_languages = 3;
  int groups_per_language = 600;
  // 0 means groups_per_language / 5, rounded down to a multiple of 5.
  int test_groups_per_language = 0;
  int min_len = 6;
  int max_len = 16;
  int concepts_per_valence = 24;  // concept vocabulary = 3x this
  NoiseConfig noise;
  uint64_t seed = 0;
};

// Balanced synthetic parallel corpus. Groups cycle through languages and
// stars so every (language, star) cell has identical counts; each group gets
// an original plus noisy translations into every other language. Document
// length is drawn from a star-conditioned distribution (extreme ratings run
// longer), which is the only label signal that survives into languages whose
// tokens a model has never seen.
CorpusSplit generate_corpus(const CorpusConfig& config);

Example translate_group(const Example& original, const InterlinguaDoc& doc,
                        const std::string& target_language, const LexiconSet& lexicons,
                        const NoiseConfig& noise, Rng& rng);

// JSONL persistence: dir/train.jsonl + dir/test.jsonl, one record per line
// with fields exactly {id, translated, language, text, stars}. Text is the
// space-joined surface words; ids are re-interned on load in first-seen
// order, so save -> load -> save is byte-identical.
void save_jsonl(const CorpusSplit& corpus, const std::filesystem::path& dir);
CorpusSplit load_jsonl(const std::filesystem::path& dir);

// Structural equality over the serialized view (groups, languages, flags,
// labels and surface words); token ids may differ between corpora.
bool structurally_equal(const CorpusSplit& a, const CorpusSplit& b);

}  // namespace otclab
