#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "otclab/sampler.hpp"

using namespace otclab;

namespace {

CorpusSplit six_language_corpus() {
  CorpusConfig config;
  config.num_languages = 6;
  config.groups_per_language = 300;
  config.noise = {0.1, 0.1};
  config.seed = 2;
  return generate_corpus(config);
}

}  // namespace

TEST_CASE("paired batches split sixteen and sixteen, index aligned") {
  const CorpusSplit corpus = six_language_corpus();
  SamplerConfig config;
  config.original_language = "l0";
  Rng rng(0);
  const auto plan = epoch_plan(corpus, config, rng);
  REQUIRE_FALSE(plan.empty());
  CHECK(plan.size() == 300 / 16);
  for (const auto& batch : plan) {
    CHECK(batch.originals.size() == 16);
    CHECK(batch.translated.size() == 16);
    CHECK(batch.pair_count() == 16);
    for (int i = 0; i < batch.pair_count(); ++i) {
      CHECK(batch.originals[i]->id == batch.translated[i]->id);
      CHECK_FALSE(batch.originals[i]->translated);
      CHECK(batch.translated[i]->translated);
      CHECK(batch.originals[i]->language == "l0");
      CHECK(batch.translated[i]->language != "l0");
    }
    const Tensor target = batch.pairing_target();
    for (int i = 0; i < 16; ++i)
      for (int j = 0; j < 16; ++j) CHECK(target.at(i, j) == (i == j ? 1.0 : 0.0));
  }
}

TEST_CASE("counterpart languages are drawn uniformly") {
  const CorpusSplit corpus = six_language_corpus();
  SamplerConfig config;
  config.original_language = "l2";
  Rng rng(99);
  std::map<std::string, long long> counts;
  long long draws = 0;
  while (draws < 10000) {
    for (const auto& batch : epoch_plan(corpus, config, rng)) {
      for (const auto* t : batch.translated) {
        ++counts[t->language];
        ++draws;
      }
    }
  }
  // Five candidate languages: expected n/5 each, sigma = sqrt(n * .2 * .8).
  const double expected = draws / 5.0;
  const double sigma = std::sqrt(draws * 0.2 * 0.8);
  CHECK(counts.size() == 5);
  double chi2 = 0.0;
  for (const auto& [lang, n] : counts) {
    CHECK(std::fabs(n - expected) <= 3.0 * sigma);
    chi2 += (n - expected) * (n - expected) / expected;
  }
  // 0.99 quantile of chi-squared with 4 degrees of freedom.
  CHECK(chi2 < 13.2767);
}

TEST_CASE("two languages force the single other choice") {
  CorpusConfig cc;
  cc.num_languages = 2;
  cc.groups_per_language = 50;
  cc.seed = 5;
  const CorpusSplit corpus = generate_corpus(cc);
  SamplerConfig config;
  config.original_language = "l0";
  Rng rng(1);
  for (const auto& batch : epoch_plan(corpus, config, rng)) {
    for (const auto* t : batch.translated) CHECK(t->language == "l1");
  }
}

TEST_CASE("same seed gives the same epoch plan") {
  const CorpusSplit corpus = six_language_corpus();
  SamplerConfig config;
  config.original_language = "l1";
  Rng rng_a(7), rng_b(7), rng_c(8);
  const auto plan_a = epoch_plan(corpus, config, rng_a);
  const auto plan_b = epoch_plan(corpus, config, rng_b);
  const auto plan_c = epoch_plan(corpus, config, rng_c);
  REQUIRE(plan_a.size() == plan_b.size());
  bool identical = true, differs_somewhere = false;
  for (size_t b = 0; b < plan_a.size(); ++b) {
    for (int i = 0; i < plan_a[b].pair_count(); ++i) {
      if (plan_a[b].originals[i]->id != plan_b[b].originals[i]->id ||
          plan_a[b].translated[i]->language != plan_b[b].translated[i]->language) {
        identical = false;
      }
      if (plan_a[b].originals[i]->id != plan_c[b].originals[i]->id) {
        differs_somewhere = true;
      }
    }
  }
  CHECK(identical);
  CHECK(differs_somewhere);
}

TEST_CASE("baseline batches are original-only and cover each row once") {
  const CorpusSplit corpus = six_language_corpus();
  SamplerConfig config;
  config.original_language = "l3";
  config.baseline_mode = true;
  Rng rng(4);
  const auto plan = baseline_plan(corpus, config, rng);
  CHECK(plan.size() == 300 / 32);
  std::set<long long> seen;
  for (const auto& batch : plan) {
    CHECK(batch.baseline);
    CHECK(batch.originals.size() == 32);
    CHECK(batch.translated.empty());
    CHECK_THROWS_AS(batch.pairing_target(), UsageError);
    for (const auto* e : batch.originals) {
      CHECK_FALSE(e->translated);
      CHECK(e->language == "l3");
      CHECK(seen.insert(e->id).second);  // no duplicates within an epoch
    }
  }
  CHECK(seen.size() == plan.size() * 32);
}

TEST_CASE("mode mismatches and missing data are rejected") {
  const CorpusSplit corpus = six_language_corpus();
  SamplerConfig config;
  config.original_language = "l0";
  Rng rng(0);
  config.baseline_mode = true;
  CHECK_THROWS_AS(epoch_plan(corpus, config, rng), UsageError);
  config.baseline_mode = false;
  CHECK_THROWS_AS(baseline_plan(corpus, config, rng), UsageError);

  config.original_language = "zz";
  CHECK_THROWS_AS(epoch_plan(corpus, config, rng), DataError);

  CorpusSplit stripped = six_language_corpus();
  const long long bad_id = stripped.train.front().id;
  stripped.train.front().translations.clear();
  config.original_language = stripped.train.front().original.language;
  try {
    epoch_plan(stripped, config, rng);
    FAIL("expected a DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find(std::to_string(bad_id)) != std::string::npos);
  }
}

TEST_CASE("holdout groups are fenced off from training") {
  const CorpusSplit corpus = six_language_corpus();
  SamplerConfig config;
  config.original_language = "l0";
  config.holdout_groups = 20;
  const auto train_groups = training_pool(corpus, config);
  const auto held = holdout_pool(corpus, config);
  CHECK(train_groups.size() == 280);
  CHECK(held.size() == 20);
  std::set<long long> train_ids;
  for (const auto* g : train_groups) train_ids.insert(g->id);
  for (const auto* g : held) CHECK(train_ids.count(g->id) == 0);

  Rng rng(6);
  for (const auto& batch : epoch_plan(corpus, config, rng)) {
    for (const auto* e : batch.originals) CHECK(train_ids.count(e->id) == 1);
  }
}
