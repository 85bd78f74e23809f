#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "otclab/checkpoint.hpp"
#include "otclab/rng.hpp"

using namespace otclab;
namespace fs = std::filesystem;

namespace {
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}
}  // namespace

TEST_CASE("checkpoint round trip is exact and stable") {
  const fs::path dir = fs::temp_directory_path() / "otclab_ckpt_test";
  fs::create_directories(dir);

  Rng rng(3);
  NamedTensors t;
  Tensor a(3, 4);
  for (size_t i = 0; i < a.size(); ++i) a[i] = rng.normal();
  t.emplace("weights", a);
  t.emplace("bias", Tensor(1, 4, {0.0, -1.5, 2.25, 1e-17}));
  t.emplace("scalar", Tensor::scalar(-0.07));

  save_checkpoint(t, dir / "a.json");
  NamedTensors back = load_checkpoint(dir / "a.json");
  CHECK(back.count() == 3);
  CHECK(back.at("weights") == t.at("weights"));
  CHECK(back.at("bias") == t.at("bias"));
  CHECK(back.at("scalar") == t.at("scalar"));

  save_checkpoint(back, dir / "b.json");
  CHECK(slurp(dir / "a.json") == slurp(dir / "b.json"));

  fs::remove_all(dir);
}

TEST_CASE("checkpoint loader rejects junk") {
  const fs::path dir = fs::temp_directory_path() / "otclab_ckpt_bad";
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "bad.json");
    out << "{\"format\": \"something-else\", \"tensors\": {}}\n";
  }
  CHECK_THROWS_AS(load_checkpoint(dir / "bad.json"), DataError);
  {
    std::ofstream out(dir / "bad2.json");
    out << "not json at all\n";
  }
  CHECK_THROWS_AS(load_checkpoint(dir / "bad2.json"), DataError);
  CHECK_THROWS_AS(load_checkpoint(dir / "missing.json"), DataError);
  fs::remove_all(dir);
}
