#include <doctest.h>

#include <cmath>

#include "otclab/gradcheck.hpp"
#include "otclab/rng.hpp"
#include "otclab/tape.hpp"

using namespace otclab;

namespace {

Tensor random_tensor(int rows, int cols, Rng& rng, double scale = 1.0) {
  Tensor t(rows, cols);
  for (size_t i = 0; i < t.size(); ++i) t[i] = scale * rng.normal();
  return t;
}

// Weighted scalar reduction so every output entry of an op influences the
// loss with its own coefficient.
Var weighted_sum(Tape& tape, Var v, const Tensor& weights) {
  Var w = tape.input(weights);
  return tape.scale(tape.mean_all(tape.mul(v, w)),
                    static_cast<double>(weights.size()));
}

}  // namespace

TEST_CASE("row_softmax of a constant row is uniform") {
  Tape tape;
  Var x = tape.input(Tensor(1, 3));
  const Tensor& y = tape.value(tape.row_softmax(x));
  for (int c = 0; c < 3; ++c) CHECK(y.at(0, c) == doctest::Approx(1.0 / 3).epsilon(1e-12));
}

TEST_CASE("row_softmax rows sum to one and stay inside (0,1)") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    Tape tape;
    Var x = tape.input(random_tensor(4, 7, rng, 5.0));
    const Tensor& y = tape.value(tape.row_softmax(x));
    CHECK(y.all_finite());
    for (int r = 0; r < y.rows(); ++r) {
      double sum = 0.0;
      for (int c = 0; c < y.cols(); ++c) {
        sum += y.at(r, c);
        CHECK(y.at(r, c) > 0.0);
        CHECK(y.at(r, c) < 1.0);
      }
      CHECK(std::fabs(sum - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("l2_normalize_rows on a 3-4-5 triangle") {
  Tape tape;
  Var x = tape.input(Tensor(1, 2, {3.0, 4.0}));
  const Tensor& y = tape.value(tape.l2_normalize_rows(x));
  CHECK(y.at(0, 0) == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(y.at(0, 1) == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("l2_normalize_rows rejects zero rows") {
  Tape tape;
  Var x = tape.input(Tensor(2, 3));
  CHECK_THROWS_AS(tape.l2_normalize_rows(x), NumericError);
}

TEST_CASE("cross entropy of uniform probabilities is ln M") {
  Tape tape;
  Var p = tape.input(Tensor::full(1, 16, 1.0 / 16));
  Tensor onehot(1, 16);
  onehot.at(0, 3) = 1.0;
  Var h = tape.cross_entropy_rows(p, tape.input(onehot));
  // ln 16 = 2.772588722239781
  CHECK(tape.value(h).item() == doctest::Approx(2.772588722239781).epsilon(1e-12));
}

TEST_CASE("shape mismatches raise shape errors") {
  Tape tape;
  Var a = tape.input(Tensor(2, 3));
  Var b = tape.input(Tensor(3, 3, std::vector<double>(9, 1.0)));
  CHECK_THROWS_AS(tape.add(a, b), ShapeError);
  CHECK_THROWS_AS(tape.mul(a, b), ShapeError);
  CHECK_THROWS_AS(tape.matmul(a, a), ShapeError);
  CHECK_THROWS_AS(tape.slice_rows(a, 0, 5), ShapeError);
  CHECK_THROWS_AS(tape.slice_cols(a, 2, 2), ShapeError);
}

TEST_CASE("backward of an elementwise quadratic") {
  Tape tape;
  Var w = tape.param("w", Tensor(1, 3, {1.0, 2.0, 3.0}));
  Var loss = tape.scale(tape.mean_all(tape.mul(w, w)), 3.0);  // sum of squares
  Gradients g = tape.backward(loss);
  CHECK(g.at("w").at(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(g.at("w").at(0, 1) == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(g.at("w").at(0, 2) == doctest::Approx(6.0).epsilon(1e-14));
}

TEST_CASE("parameters unreachable from the loss get exact zeros") {
  Tape tape;
  Var w = tape.param("w", Tensor(1, 2, {1.0, 2.0}));
  Var b = tape.param("b", Tensor(1, 2, {5.0, 6.0}));
  Var loss = tape.mean_all(tape.mul(w, w));
  Gradients g = tape.backward(loss);
  CHECK(g.count("b") == 1);
  CHECK(g.at("b").at(0, 0) == 0.0);
  CHECK(g.at("b").at(0, 1) == 0.0);
  (void)b;
}

TEST_CASE("backward rejects non-scalar roots") {
  Tape tape;
  Var w = tape.param("w", Tensor(2, 2, {1, 2, 3, 4}));
  Var y = tape.relu(w);
  CHECK_THROWS_AS(tape.backward(y), UsageError);
}

TEST_CASE("backward is linear in the loss") {
  Rng rng(42);
  for (int trial = 0; trial < 10; ++trial) {
    const Tensor w0 = random_tensor(3, 4, rng);
    const Tensor r1 = random_tensor(3, 4, rng);
    const Tensor r2 = random_tensor(1, 4, rng);
    const double alpha = 0.7, beta = -1.3;

    auto build = [&](Tape& tape, Var& l1, Var& l2) {
      Var w = tape.param("w", w0);
      l1 = weighted_sum(tape, tape.relu(w), r1);
      l2 = weighted_sum(tape, tape.mean_rows(tape.mul(w, w)), r2);
    };

    Tape t1;
    Var a1, a2;
    build(t1, a1, a2);
    Gradients g_combined = t1.backward(t1.add(t1.scale(a1, alpha), t1.scale(a2, beta)));

    Tape t2;
    Var b1, b2;
    build(t2, b1, b2);
    Gradients g1 = t2.backward(b1);
    Tape t3;
    Var c1, c2;
    build(t3, c1, c2);
    Gradients g2 = t3.backward(c2);

    for (size_t i = 0; i < g_combined.at("w").size(); ++i) {
      const double expect = alpha * g1.at("w")[i] + beta * g2.at("w")[i];
      CHECK(g_combined.at("w")[i] == doctest::Approx(expect).epsilon(1e-12));
    }
  }
}

// Per-primitive analytic gradients vs central finite differences on random
// small tensors, 20 seeded trials each.
TEST_CASE("primitive gradients pass finite differences") {
  constexpr double kTol = 1e-4;
  constexpr double kEps = 1e-5;

  auto run_trials = [&](const char* name, auto make_params, auto build) {
    for (uint64_t trial = 0; trial < 20; ++trial) {
      Rng rng(Rng::mix(0xBEEF, trial));
      Parameters params;
      make_params(params, rng);
      Tensor weights = random_tensor(64, 1, rng);  // oversized weight pool
      LossGraphFn fn = [&](Tape& tape, const std::map<std::string, Var>& bound) {
        return build(tape, bound, rng, weights);
      };
      const FiniteDiffReport report = finite_diff_check(fn, params, kEps);
      INFO(name << " trial " << trial << " worst " << report.worst_param);
      CHECK(report.max_rel_error < kTol);
    }
  };

  run_trials(
      "matmul+add_rowvec",
      [](Parameters& p, Rng& rng) {
        p.emplace("a", random_tensor(3, 4, rng));
        p.emplace("b", random_tensor(4, 2, rng));
        p.emplace("v", random_tensor(1, 2, rng));
      },
      [](Tape& tape, const std::map<std::string, Var>& b, Rng& rng, Tensor& w) {
        Var y = tape.add_rowvec(tape.matmul(b.at("a"), b.at("b")), b.at("v"));
        return weighted_sum(tape, y, Tensor(3, 2, {w[0], w[1], w[2], w[3], w[4], w[5]}));
      });

  run_trials(
      "relu (away from the kink)",
      [](Parameters& p, Rng& rng) {
        Tensor t = random_tensor(3, 3, rng);
        for (size_t i = 0; i < t.size(); ++i) {
          if (std::fabs(t[i]) < 0.1) t[i] = t[i] < 0 ? t[i] - 0.1 : t[i] + 0.1;
        }
        p.emplace("x", t);
      },
      [](Tape& tape, const std::map<std::string, Var>& b, Rng& rng, Tensor& w) {
        Tensor r(3, 3);
        for (size_t i = 0; i < r.size(); ++i) r[i] = w[i];
        return weighted_sum(tape, tape.relu(b.at("x")), r);
      });

  run_trials(
      "row_softmax",
      [](Parameters& p, Rng& rng) { p.emplace("x", random_tensor(3, 5, rng, 2.0)); },
      [](Tape& tape, const std::map<std::string, Var>& b, Rng& rng, Tensor& w) {
        Tensor r(3, 5);
        for (size_t i = 0; i < r.size(); ++i) r[i] = w[i];
        return weighted_sum(tape, tape.row_softmax(b.at("x")), r);
      });

  run_trials(
      "l2_normalize_rows",
      [](Parameters& p, Rng& rng) {
        Tensor t = random_tensor(3, 4, rng);
        for (int r = 0; r < t.rows(); ++r) t.at(r, 0) += t.at(r, 0) < 0 ? -1.0 : 1.0;
        p.emplace("x", t);
      },
      [](Tape& tape, const std::map<std::string, Var>& b, Rng& rng, Tensor& w) {
        Tensor r(3, 4);
        for (size_t i = 0; i < r.size(); ++i) r[i] = w[i];
        return weighted_sum(tape, tape.l2_normalize_rows(b.at("x")), r);
      });

  run_trials(
      "layer_norm",
      [](Parameters& p, Rng& rng) {
        p.emplace("x", random_tensor(3, 6, rng));
        p.emplace("gain", random_tensor(1, 6, rng, 0.5));
        p.emplace("bias", random_tensor(1, 6, rng, 0.5));
      },
      [](Tape& tape, const std::map<std::string, Var>& b, Rng& rng, Tensor& w) {
        Tensor r(3, 6);
        for (size_t i = 0; i < r.size(); ++i) r[i] = w[i];
        return weighted_sum(tape, tape.layer_norm(b.at("x"), b.at("gain"), b.at("bias")),
                            r);
      });

  run_trials(
      "embedding_lookup with repeated ids",
      [](Parameters& p, Rng& rng) { p.emplace("table", random_tensor(5, 3, rng)); },
      [](Tape& tape, const std::map<std::string, Var>& b, Rng& rng, Tensor& w) {
        Tensor r(4, 3);
        for (size_t i = 0; i < r.size(); ++i) r[i] = w[i];
        return weighted_sum(tape, tape.embedding_lookup(b.at("table"), {2, 0, 2, 4}), r);
      });

  run_trials(
      "softmax into clamped cross entropy",
      [](Parameters& p, Rng& rng) { p.emplace("x", random_tensor(4, 5, rng, 2.0)); },
      [](Tape& tape, const std::map<std::string, Var>& b, Rng& rng, Tensor& w) {
        Tensor onehot(4, 5);
        for (int r = 0; r < 4; ++r) onehot.at(r, r % 5) = 1.0;
        Var h = tape.cross_entropy_rows(tape.row_softmax(b.at("x")), tape.input(onehot));
        Tensor r(4, 1);
        for (size_t i = 0; i < r.size(); ++i) r[i] = w[i];
        return weighted_sum(tape, h, r);
      });

  run_trials(
      "scalar temperature path",
      [](Parameters& p, Rng& rng) {
        p.emplace("x", random_tensor(3, 3, rng));
        p.emplace("s", random_tensor(1, 1, rng, 0.3));
      },
      [](Tape& tape, const std::map<std::string, Var>& b, Rng& rng, Tensor& w) {
        Var scaled = tape.mul_scalar(b.at("x"), tape.exp_scalar(b.at("s")));
        Tensor r(3, 3);
        for (size_t i = 0; i < r.size(); ++i) r[i] = w[i];
        return weighted_sum(tape, scaled, r);
      });

  run_trials(
      "slices, concats, transpose and means",
      [](Parameters& p, Rng& rng) { p.emplace("x", random_tensor(4, 6, rng)); },
      [](Tape& tape, const std::map<std::string, Var>& b, Rng& rng, Tensor& w) {
        Var left = tape.slice_cols(b.at("x"), 0, 3);
        Var right = tape.slice_cols(b.at("x"), 3, 6);
        Var joined = tape.concat_cols({right, left});
        Var top = tape.slice_rows(joined, 0, 2);
        Var bottom = tape.slice_rows(joined, 2, 4);
        Var stacked = tape.concat_rows({bottom, top});
        Var t = tape.transpose(stacked);
        Tensor r(1, 6);
        for (size_t i = 0; i < r.size(); ++i) r[i] = w[i];
        return weighted_sum(tape, tape.mean_rows(tape.transpose(t)), r);
      });
}

TEST_CASE("forward ops keep finite inputs finite") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    Tape tape;
    Var x = tape.input(random_tensor(4, 8, rng, 3.0));
    Var g = tape.input(Tensor::full(1, 8, 1.0));
    Var b = tape.input(Tensor(1, 8));
    CHECK(tape.value(tape.row_softmax(x)).all_finite());
    CHECK(tape.value(tape.layer_norm(x, g, b)).all_finite());
    CHECK(tape.value(tape.l2_normalize_rows(tape.scale(x, 2.0))).all_finite());
    CHECK(tape.value(tape.relu(x)).all_finite());
  }
}
