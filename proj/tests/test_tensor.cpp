#include <cmath>
#include <cstring>
#include <limits>

#include <doctest.h>

#include "lpsim/tensor.hpp"
#include "oracle.hpp"

using namespace lpsim;

namespace {

bool bit_equal(const Tensor& a, const Tensor& b) {
  return a.same_shape(b) &&
         std::memcmp(a.data(), b.data(),
                     static_cast<std::size_t>(a.numel()) * sizeof(float)) == 0;
}

int float_ulp_distance(float a, float b) {
  std::int32_t ia, ib;
  std::memcpy(&ia, &a, 4);
  std::memcpy(&ib, &b, 4);
  if (ia < 0) ia = std::numeric_limits<std::int32_t>::min() - ia;
  if (ib < 0) ib = std::numeric_limits<std::int32_t>::min() - ib;
  return static_cast<int>(std::abs(static_cast<std::int64_t>(ia) - ib));
}

} // namespace

TEST_CASE("tensor construction validates shape and data") {
  CHECK_THROWS_AS(Tensor({2, -1}), shape_error);
  CHECK_THROWS_AS(Tensor({2, 2}, {1.0f, 2.0f}), shape_error);
  CHECK_THROWS_AS(Tensor({2}, {1.0f, std::numeric_limits<float>::quiet_NaN()}),
                  invalid_input_error);
  const Tensor t({2, 3});
  CHECK(t.numel() == 6);
  CHECK(Tensor::scalar(4.0f).rank() == 0);
  CHECK(Tensor::scalar(4.0f).numel() == 1);
}

TEST_CASE("matmul examples") {
  const Tensor eye({2, 2}, {1.0f, 0.0f, 0.0f, 1.0f});
  const Tensor m({2, 2}, {1.0f, 2.0f, 3.0f, 4.0f});
  CHECK(bit_equal(matmul(eye, m), m));

  const Tensor row({1, 2}, {1.0f, 2.0f});
  const Tensor col({2, 1}, {3.0f, 4.0f});
  const Tensor prod = matmul(row, col);
  CHECK(prod.numel() == 1);
  CHECK(prod[0] == 11.0f);

  CHECK_THROWS_AS(matmul(row, row), shape_error);
}

TEST_CASE("matmul equals the naive triple-loop reference exactly") {
  const Tensor a = random_uniform({5, 7}, RngStream{11}, 0, -2.0f, 2.0f);
  const Tensor b = random_uniform({7, 3}, RngStream{12}, 0, -2.0f, 2.0f);
  CHECK(bit_equal(matmul(a, b), oracle::naive_matmul(a, b)));
}

TEST_CASE("matmul is bit-deterministic and thread-count independent") {
  const Tensor a = random_uniform({33, 47}, RngStream{13}, 0, -1.0f, 1.0f);
  const Tensor b = random_uniform({47, 29}, RngStream{14}, 0, -1.0f, 1.0f);
  const Tensor once = matmul(a, b);
  CHECK(bit_equal(once, matmul(a, b)));
  set_num_threads(4);
  // force the parallel path despite the small size by padding? no: the
  // kernel splits on rows; 33 rows at 4 threads exercises the split once the
  // element count crosses the serial cutoff, so use a bigger product
  const Tensor big_a = random_uniform({70, 80}, RngStream{15}, 0, -1.0f, 1.0f);
  const Tensor big_b = random_uniform({80, 90}, RngStream{16}, 0, -1.0f, 1.0f);
  set_num_threads(1);
  const Tensor serial = matmul(big_a, big_b);
  set_num_threads(4);
  const Tensor parallel = matmul(big_a, big_b);
  set_num_threads(1);
  CHECK(bit_equal(serial, parallel));
}

TEST_CASE("matmul transpose consistency within 4 ulps") {
  const Tensor a = random_uniform({9, 17}, RngStream{17}, 0, -3.0f, 3.0f);
  const Tensor b = random_uniform({17, 5}, RngStream{18}, 0, -3.0f, 3.0f);
  const Tensor left = transpose(matmul(a, b));
  const Tensor right = matmul(transpose(b), transpose(a));
  REQUIRE(left.same_shape(right));
  for (std::int64_t i = 0; i < left.numel(); ++i)
    CHECK(float_ulp_distance(left[i], right[i]) <= 4);
}

TEST_CASE("elementwise examples") {
  const Tensor x({3}, {-1.0f, 0.0f, 2.0f});
  const Tensor r = relu(x);
  CHECK(r[0] == 0.0f);
  CHECK(r[1] == 0.0f);
  CHECK(r[2] == 2.0f);

  const Tensor a({2}, {1.0f, 2.0f});
  const Tensor b({2}, {3.0f, 4.0f});
  const Tensor s = add(a, b);
  CHECK(s[0] == 4.0f);
  CHECK(s[1] == 6.0f);

  const Tensor sc = scale(a, 0.5f);
  CHECK(sc[0] == 0.5f);
  CHECK(sc[1] == 1.0f);

  CHECK_THROWS_AS(add(a, x), shape_error);
}

TEST_CASE("division by zero is an error in validation mode") {
  const Tensor a({2}, {1.0f, 2.0f});
  const Tensor z({2}, {1.0f, 0.0f});
  REQUIRE(validation_enabled());
  CHECK_THROWS_AS(div(a, z), invalid_value_error);
  set_validation(false);
  const Tensor q = div(a, z); // produces inf, unchecked
  CHECK(std::isinf(q[1]));
  set_validation(true);
}

TEST_CASE("reduce_max_abs") {
  const Tensor v({3}, {-3.0f, 1.0f, 2.0f});
  const Tensor whole = reduce_max_abs(v);
  CHECK(whole.rank() == 0);
  CHECK(whole[0] == 3.0f);

  const Tensor m({2, 2}, {1.0f, -4.0f, 2.0f, 3.0f});
  const Tensor rows = reduce_max_abs(m, 0);
  CHECK(rows.shape() == Shape{2});
  CHECK(rows[0] == 4.0f);
  CHECK(rows[1] == 3.0f);
  const Tensor cols = reduce_max_abs(m, 1);
  CHECK(cols[0] == 2.0f);
  CHECK(cols[1] == 4.0f);

  CHECK_THROWS_AS(reduce_max_abs(m, 2), shape_error);

  const Tensor t = random_uniform({3, 4, 5}, RngStream{19}, 0, -9.0f, 9.0f);
  for (int d = 0; d < 3; ++d) {
    const Tensor got = reduce_max_abs(t, d);
    const Tensor want = oracle::naive_reduce_max_abs_dim(t, d);
    CHECK(bit_equal(got, want));
  }
}

TEST_CASE("pass counter counts one bump per kernel") {
  const Tensor a = random_uniform({64}, RngStream{23}, 0, -1.0f, 1.0f);
  const Tensor b = random_uniform({64}, RngStream{24}, 0, 1.0f, 2.0f);
  reset_pass_count();
  (void)add(a, b);
  CHECK(pass_count() == 1);
  (void)mul(a, b);
  (void)relu(a);
  CHECK(pass_count() == 3);
}

TEST_CASE("broadcast_from_dim") {
  const Tensor vals({2}, {5.0f, 7.0f});
  const Tensor full = broadcast_from_dim(vals, {2, 3}, 0);
  for (std::int64_t j = 0; j < 3; ++j) {
    CHECK(full.at(0, j) == 5.0f);
    CHECK(full.at(1, j) == 7.0f);
  }
  const Tensor s = broadcast_from_dim(Tensor::scalar(2.0f), {2, 2}, {});
  for (std::int64_t i = 0; i < 4; ++i) CHECK(s[i] == 2.0f);
  CHECK_THROWS_AS(broadcast_from_dim(vals, {3, 3}, 0), shape_error);
}

TEST_CASE("softmax rows sum to one") {
  const Tensor t = random_uniform({4, 6}, RngStream{29}, 0, -5.0f, 5.0f);
  const Tensor p = softmax_rows(t);
  for (std::int64_t i = 0; i < 4; ++i) {
    double sum = 0.0;
    for (std::int64_t j = 0; j < 6; ++j) {
      CHECK(p.at(i, j) >= 0.0f);
      sum += p.at(i, j);
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("elementwise ops are thread-count independent") {
  const Tensor a = random_uniform({10000}, RngStream{31}, 0, -4.0f, 4.0f);
  const Tensor b = random_uniform({10000}, RngStream{32}, 0, 0.5f, 4.0f);
  set_num_threads(1);
  const Tensor s1 = div(a, b);
  const Tensor e1 = lpsim::exp(scale(a, 0.1f));
  set_num_threads(8);
  const Tensor s8 = div(a, b);
  const Tensor e8 = lpsim::exp(scale(a, 0.1f));
  set_num_threads(1);
  CHECK(bit_equal(s1, s8));
  CHECK(bit_equal(e1, e8));
}
