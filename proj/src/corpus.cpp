#include "otclab/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace otclab {

namespace {
// Band edges for the valence-sum score: inner band half-width and the outer
// threshold where the extreme stars begin.
constexpr int kInnerEdge = 1;   // |score| <= 1 -> 3 stars
constexpr int kOuterEdge = 5;   // score <= -5 -> 1 star, >= 5 -> 5 stars
}  // namespace

int label_of(const InterlinguaDoc& doc) {
  if (doc.concepts.empty()) throw DataError("label_of: empty document");
  int score = 0;
  for (int c : doc.concepts) score += valence_of(c);
  if (score <= -kOuterEdge) return 1;
  if (score < -kInnerEdge) return 2;
  if (score <= kInnerEdge) return 3;
  if (score < kOuterEdge) return 4;
  return 5;
}

LexiconSet::LexiconSet(const std::vector<std::string>& languages, int concept_count,
                       Vocabulary& vocab)
    : languages_(languages), concept_count_(concept_count), vocab_(&vocab) {
  block_start_.reserve(languages.size());
  for (size_t li = 0; li < languages.size(); ++li) {
    block_start_.push_back(vocab.size());
    for (int c = 0; c < concept_count; ++c) {
      const int id = vocab.intern(languages[li] + "w" + std::to_string(c));
      if (id != block_start_[li] + c) {
        throw DataError("lexicon words collide with existing vocabulary");
      }
    }
  }
}

int LexiconSet::surface_id(int lang_index, int concept_id) const {
  if (lang_index < 0 || lang_index >= num_languages()) {
    throw DataError("unknown language index " + std::to_string(lang_index));
  }
  if (concept_id < 0 || concept_id >= concept_count_) {
    throw DataError("concept id out of range: " + std::to_string(concept_id));
  }
  return block_start_[lang_index] + concept_id;
}

const std::string& LexiconSet::surface_word(int lang_index, int concept_id) const {
  return vocab_->word(surface_id(lang_index, concept_id));
}

int LexiconSet::concept_of(int lang_index, int surface_id) const {
  auto [first, last] = surface_range(lang_index);
  if (surface_id < first || surface_id >= last) {
    throw DataError("surface id " + std::to_string(surface_id) +
                    " is not in language " + languages_[lang_index]);
  }
  return surface_id - first;
}

int LexiconSet::lang_index(const std::string& language) const {
  for (size_t i = 0; i < languages_.size(); ++i) {
    if (languages_[i] == language) return static_cast<int>(i);
  }
  throw DataError("unknown language: " + language);
}

std::pair<int, int> LexiconSet::surface_range(int lang_index) const {
  if (lang_index < 0 || lang_index >= num_languages()) {
    throw DataError("unknown language index " + std::to_string(lang_index));
  }
  return {block_start_[lang_index], block_start_[lang_index] + concept_count_};
}

const ExampleGroup* CorpusSplit::find_group(long long id) const {
  for (const auto& g : train) {
    if (g.id == id) return &g;
  }
  return nullptr;
}

int CorpusSplit::max_tokens() const {
  size_t m = 0;
  for (const auto& g : train) {
    m = std::max(m, g.original.tokens.size());
    for (const auto& e : g.translations) m = std::max(m, e.tokens.size());
  }
  for (const auto& e : test) m = std::max(m, e.tokens.size());
  return static_cast<int>(m);
}

namespace {

void validate_config(const CorpusConfig& c) {
  if (c.num_languages < 2) throw ConfigError("num_languages must be >= 2");
  if (c.groups_per_language < 50) throw ConfigError("groups_per_language must be >= 50");
  if (c.groups_per_language % 5 != 0) {
    throw ConfigError("groups_per_language must be a multiple of 5 for exact balance");
  }
  if (c.test_groups_per_language != 0 && c.test_groups_per_language % 5 != 0) {
    throw ConfigError("test_groups_per_language must be a multiple of 5");
  }
  if (c.min_len < kOuterEdge) {
    throw ConfigError("min_len must be >= " + std::to_string(kOuterEdge) +
                      " so every star band is reachable");
  }
  if (c.max_len < c.min_len) throw ConfigError("max_len must be >= min_len");
  if (c.concepts_per_valence < 2) throw ConfigError("concepts_per_valence must be >= 2");
  if (c.noise.p_substitute < 0.0 || c.noise.p_substitute > 1.0 ||
      c.noise.p_drop < 0.0 || c.noise.p_drop > 1.0) {
    throw ConfigError("noise probabilities must lie in [0,1]");
  }
}

int test_groups_for(const CorpusConfig& c) {
  if (c.test_groups_per_language > 0) return c.test_groups_per_language;
  const int n = c.groups_per_language / 5;
  return std::max(5, n - n % 5);
}

// Length is coupled to the star so that extreme ratings tend to run longer.
// The overlap is deliberately wide: length alone supports above-chance but
// far-from-perfect classification, which is what carries label information
// into languages whose surface tokens a model has never trained on.
int sample_length(int star, const CorpusConfig& c, Rng& rng) {
  const double span = static_cast<double>(c.max_len - c.min_len);
  const double mu = c.min_len + span * (star - 1) / 4.0;
  const double sigma = span / 5.0;
  const int len = static_cast<int>(std::lround(mu + sigma * rng.normal()));
  return std::clamp(len, c.min_len, c.max_len);
}

// Uniform target score within the star's band, clipped to what the length
// can express.
int sample_score(int star, int len, Rng& rng) {
  int lo = 0, hi = 0;
  switch (star) {
    case 1: lo = -len; hi = -kOuterEdge; break;
    case 2: lo = -kOuterEdge + 1; hi = -kInnerEdge - 1; break;
    case 3: lo = -kInnerEdge; hi = kInnerEdge; break;
    case 4: lo = kInnerEdge + 1; hi = kOuterEdge - 1; break;
    case 5: lo = kOuterEdge; hi = len; break;
    default: throw ConfigError("star out of range");
  }
  return lo + rng.uniform_int(hi - lo + 1);
}

InterlinguaDoc sample_doc(int star, const CorpusConfig& c, Rng& rng) {
  const int len = sample_length(star, c, rng);
  const int score = sample_score(star, len, rng);
  const int surplus = std::abs(score);
  // Extra +/- pairs beyond the forced surplus keep the score fixed.
  const int pairs = rng.uniform_int((len - surplus) / 2 + 1);
  int n_plus = std::max(score, 0) + pairs;
  int n_minus = std::max(-score, 0) + pairs;
  std::vector<int> valences;
  valences.reserve(len);
  for (int i = 0; i < n_plus; ++i) valences.push_back(1);
  for (int i = 0; i < n_minus; ++i) valences.push_back(-1);
  while (static_cast<int>(valences.size()) < len) valences.push_back(0);
  rng.shuffle(valences);

  InterlinguaDoc doc;
  doc.concepts.reserve(len);
  for (int v : valences) {
    doc.concepts.push_back(3 * rng.uniform_int(c.concepts_per_valence) + (v + 1));
  }
  return doc;
}

std::vector<int> realize(const InterlinguaDoc& doc, int lang_index,
                         const LexiconSet& lexicons) {
  std::vector<int> tokens;
  tokens.reserve(doc.concepts.size());
  for (int c : doc.concepts) tokens.push_back(lexicons.surface_id(lang_index, c));
  return tokens;
}

}  // namespace

Example translate_group(const Example& original, const InterlinguaDoc& doc,
                        const std::string& target_language, const LexiconSet& lexicons,
                        const NoiseConfig& noise, Rng& rng) {
  const int target = lexicons.lang_index(target_language);
  if (target_language == original.language) {
    throw DataError("translate_group: target equals source language");
  }
  auto [first, last] = lexicons.surface_range(target);

  Example out;
  out.id = original.id;
  out.language = target_language;
  out.translated = true;
  out.stars = original.stars;
  out.tokens.reserve(doc.concepts.size());
  for (int concept_id : doc.concepts) {
    if (rng.uniform() < noise.p_drop) continue;
    if (rng.uniform() < noise.p_substitute) {
      out.tokens.push_back(first + rng.uniform_int(last - first));
    } else {
      out.tokens.push_back(lexicons.surface_id(target, concept_id));
    }
  }
  if (out.tokens.empty()) {
    // Keep the nonempty-token invariant even under total deletion.
    out.tokens.push_back(lexicons.surface_id(target, doc.concepts.front()));
  }
  return out;
}

CorpusSplit generate_corpus(const CorpusConfig& config) {
  validate_config(config);
  const int K = config.num_languages;
  const int n_train = config.groups_per_language;
  const int n_test = test_groups_for(config);

  CorpusSplit corpus;
  for (int i = 0; i < K; ++i) corpus.languages.push_back("l" + std::to_string(i));
  LexiconSet lexicons(corpus.languages, 3 * config.concepts_per_valence, corpus.vocab);

  long long next_id = 0;
  for (int g = 0; g < K * n_train; ++g, ++next_id) {
    const int lang = g % K;
    const int star = 1 + (g / K) % 5;
    Rng rng(Rng::mix(config.seed, static_cast<uint64_t>(next_id)));
    const InterlinguaDoc doc = sample_doc(star, config, rng);
    if (label_of(doc) != star) {
      throw NumericError("generated document violates its star band");
    }

    ExampleGroup group;
    group.id = next_id;
    group.original.id = next_id;
    group.original.language = corpus.languages[lang];
    group.original.translated = false;
    group.original.stars = star;
    group.original.tokens = realize(doc, lang, lexicons);
    for (int m = 0; m < K; ++m) {
      if (m == lang) continue;
      Rng trng(Rng::mix(Rng::mix(config.seed, static_cast<uint64_t>(next_id)),
                        0x7104 + static_cast<uint64_t>(m)));
      group.translations.push_back(translate_group(group.original, doc,
                                                   corpus.languages[m], lexicons,
                                                   config.noise, trng));
    }
    corpus.train.push_back(std::move(group));
  }

  for (int g = 0; g < K * n_test; ++g, ++next_id) {
    const int lang = g % K;
    const int star = 1 + (g / K) % 5;
    Rng rng(Rng::mix(config.seed, static_cast<uint64_t>(next_id)));
    const InterlinguaDoc doc = sample_doc(star, config, rng);
    Example e;
    e.id = next_id;
    e.language = corpus.languages[lang];
    e.translated = false;
    e.stars = star;
    e.tokens = realize(doc, lang, lexicons);
    corpus.test.push_back(std::move(e));
  }
  return corpus;
}

namespace {

void write_row(std::ofstream& out, const Example& e, const Vocabulary& vocab) {
  std::string text;
  for (size_t i = 0; i < e.tokens.size(); ++i) {
    if (i) text += ' ';
    text += vocab.word(e.tokens[i]);
  }
  nlohmann::ordered_json row;
  row["id"] = e.id;
  row["translated"] = e.translated ? 1 : 0;
  row["language"] = e.language;
  row["text"] = text;
  row["stars"] = e.stars;
  out << row.dump() << "\n";
}

Example parse_row(const std::string& line, const std::string& file, size_t line_no,
                  Vocabulary& vocab) {
  const std::string where = file + ":" + std::to_string(line_no);
  nlohmann::json row;
  try {
    row = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("parse error at " + where + ": " + e.what());
  }
  if (!row.is_object() || row.size() != 5) {
    throw DataError("parse error at " + where +
                    ": record must have exactly the fields "
                    "id, translated, language, text, stars");
  }
  for (const char* field : {"id", "translated", "language", "text", "stars"}) {
    if (!row.contains(field)) {
      throw DataError("parse error at " + where + ": missing field \"" +
                      std::string(field) + "\"");
    }
  }
  if (!row["id"].is_number_integer() || !row["translated"].is_number_integer() ||
      !row["language"].is_string() || !row["text"].is_string() ||
      !row["stars"].is_number_integer()) {
    throw DataError("parse error at " + where + ": field type mismatch");
  }
  Example e;
  e.id = row["id"].get<long long>();
  const int translated = row["translated"].get<int>();
  if (translated != 0 && translated != 1) {
    throw DataError("parse error at " + where + ": translated must be 0 or 1");
  }
  e.translated = translated == 1;
  e.language = row["language"].get<std::string>();
  if (e.language.empty()) {
    throw DataError("parse error at " + where + ": empty language");
  }
  e.stars = row["stars"].get<int>();
  if (e.stars < 1 || e.stars > 5) {
    throw DataError("parse error at " + where + ": stars must be in 1..5");
  }
  std::istringstream words(row["text"].get<std::string>());
  std::string w;
  while (words >> w) e.tokens.push_back(vocab.intern(w));
  if (e.tokens.empty()) {
    throw DataError("parse error at " + where + ": empty text");
  }
  return e;
}

}  // namespace

void save_jsonl(const CorpusSplit& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream train(dir / "train.jsonl", std::ios::binary);
  if (!train) throw DataError("cannot write " + (dir / "train.jsonl").string());
  for (const auto& g : corpus.train) {
    write_row(train, g.original, corpus.vocab);
    for (const auto& e : g.translations) write_row(train, e, corpus.vocab);
  }
  std::ofstream test(dir / "test.jsonl", std::ios::binary);
  if (!test) throw DataError("cannot write " + (dir / "test.jsonl").string());
  for (const auto& e : corpus.test) write_row(test, e, corpus.vocab);
}

CorpusSplit load_jsonl(const std::filesystem::path& dir) {
  CorpusSplit corpus;
  auto note_language = [&corpus](const std::string& lang) {
    for (const auto& l : corpus.languages) {
      if (l == lang) return;
    }
    corpus.languages.push_back(lang);
  };

  const auto train_path = dir / "train.jsonl";
  std::ifstream train(train_path, std::ios::binary);
  if (!train) throw DataError("cannot open " + train_path.string());
  std::unordered_map<long long, size_t> group_index;
  std::string line;
  size_t line_no = 0;
  while (std::getline(train, line)) {
    ++line_no;
    if (line.empty()) continue;
    Example e = parse_row(line, "train.jsonl", line_no, corpus.vocab);
    note_language(e.language);
    auto it = group_index.find(e.id);
    if (it == group_index.end()) {
      group_index.emplace(e.id, corpus.train.size());
      corpus.train.emplace_back();
      corpus.train.back().id = e.id;
      it = group_index.find(e.id);
    }
    ExampleGroup& g = corpus.train[it->second];
    if (!g.original.tokens.empty() || !g.translations.empty()) {
      const int have = g.original.tokens.empty() ? g.translations.front().stars
                                                 : g.original.stars;
      if (have != e.stars) {
        throw DataError("integrity error: group " + std::to_string(e.id) +
                        " mixes star labels " + std::to_string(have) + " and " +
                        std::to_string(e.stars));
      }
    }
    if (!e.translated) {
      if (!g.original.tokens.empty()) {
        throw DataError("integrity error: group " + std::to_string(e.id) +
                        " has more than one original row");
      }
      g.original = std::move(e);
    } else {
      if (g.translation_in(e.language) != nullptr) {
        throw DataError("integrity error: group " + std::to_string(e.id) +
                        " has duplicate translation for " + e.language);
      }
      g.translations.push_back(std::move(e));
    }
  }
  for (const auto& g : corpus.train) {
    if (g.original.tokens.empty()) {
      throw DataError("integrity error: group " + std::to_string(g.id) +
                      " has no original row");
    }
  }

  const auto test_path = dir / "test.jsonl";
  std::ifstream test(test_path, std::ios::binary);
  if (!test) throw DataError("cannot open " + test_path.string());
  line_no = 0;
  while (std::getline(test, line)) {
    ++line_no;
    if (line.empty()) continue;
    Example e = parse_row(line, "test.jsonl", line_no, corpus.vocab);
    if (e.translated) {
      throw DataError("integrity error: test.jsonl:" + std::to_string(line_no) +
                      " contains a translated row");
    }
    note_language(e.language);
    corpus.test.push_back(std::move(e));
  }
  return corpus;
}

namespace {
bool examples_equal(const Example& a, const Example& b, const Vocabulary& va,
                    const Vocabulary& vb) {
  if (a.id != b.id || a.language != b.language || a.translated != b.translated ||
      a.stars != b.stars || a.tokens.size() != b.tokens.size()) {
    return false;
  }
  for (size_t i = 0; i < a.tokens.size(); ++i) {
    if (va.word(a.tokens[i]) != vb.word(b.tokens[i])) return false;
  }
  return true;
}
}  // namespace

bool structurally_equal(const CorpusSplit& a, const CorpusSplit& b) {
  if (a.train.size() != b.train.size() || a.test.size() != b.test.size() ||
      a.languages != b.languages) {
    return false;
  }
  for (size_t i = 0; i < a.train.size(); ++i) {
    const auto& ga = a.train[i];
    const auto& gb = b.train[i];
    if (ga.id != gb.id || ga.translations.size() != gb.translations.size()) return false;
    if (!examples_equal(ga.original, gb.original, a.vocab, b.vocab)) return false;
    for (size_t j = 0; j < ga.translations.size(); ++j) {
      if (!examples_equal(ga.translations[j], gb.translations[j], a.vocab, b.vocab)) {
        return false;
      }
    }
  }
  for (size_t i = 0; i < a.test.size(); ++i) {
    if (!examples_equal(a.test[i], b.test[i], a.vocab, b.vocab)) return false;
  }
  return true;
}

}  // namespace otclab
