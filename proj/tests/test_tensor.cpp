#include <doctest.h>

#include "otclab/tensor.hpp"

using namespace otclab;

TEST_CASE("tensor shape and storage basics") {
  Tensor t(2, 3);
  CHECK(t.rows() == 2);
  CHECK(t.cols() == 3);
  CHECK(t.size() == 6);
  for (size_t i = 0; i < t.size(); ++i) CHECK(t[i] == 0.0);

  t.at(1, 2) = 4.5;
  CHECK(t[5] == 4.5);

  CHECK_THROWS_AS(Tensor(2, 2, {1.0, 2.0, 3.0}), ShapeError);
}

TEST_CASE("scalar item accessor") {
  CHECK(Tensor::scalar(2.5).item() == 2.5);
  CHECK_THROWS_AS(Tensor(2, 2).item(), ShapeError);
}

TEST_CASE("plain matmul and transpose") {
  Tensor a(2, 3, {1, 2, 3, 4, 5, 6});
  Tensor b(3, 2, {7, 8, 9, 10, 11, 12});
  Tensor c = matmul_plain(a, b);
  CHECK(c.rows() == 2);
  CHECK(c.cols() == 2);
  CHECK(c.at(0, 0) == doctest::Approx(58));
  CHECK(c.at(0, 1) == doctest::Approx(64));
  CHECK(c.at(1, 0) == doctest::Approx(139));
  CHECK(c.at(1, 1) == doctest::Approx(154));

  Tensor at = transpose_plain(a);
  CHECK(at.rows() == 3);
  CHECK(at.at(0, 1) == 4);

  CHECK_THROWS_AS(matmul_plain(a, a), ShapeError);
}

TEST_CASE("identity constructor") {
  Tensor id = Tensor::identity(3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(id.at(i, j) == (i == j ? 1.0 : 0.0));
}
