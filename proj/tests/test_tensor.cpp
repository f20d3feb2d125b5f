#include <doctest.h>

#include <cmath>

#include "ldvae/tape.hpp"
#include "ldvae/rng.hpp"
#include "helpers.hpp"

using namespace ldvae;
using test_helpers::naive_matmul;
using test_helpers::random_tensor;

TEST_CASE("affine with identity weights passes input through") {
  GradientTape tape;
  const auto x = tape.constant(Tensor2(1, 2, {1.0, 2.0}));
  const auto w = tape.parameter(Tensor2(2, 2, {1.0, 0.0, 0.0, 1.0}));
  const auto b = tape.parameter(Tensor2(1, 2, {0.0, 0.0}));
  const auto y = tape.affine(x, w, b);
  CHECK(tape.value(y).at(0, 0) == doctest::Approx(1.0));
  CHECK(tape.value(y).at(0, 1) == doctest::Approx(2.0));
}

TEST_CASE("affine sums a row and adds the bias") {
  GradientTape tape;
  const auto x = tape.constant(Tensor2(1, 2, {1.0, 1.0}));
  const auto w = tape.parameter(Tensor2(2, 1, {1.0, 1.0}));
  const auto b = tape.parameter(Tensor2(1, 1, {1.0}));
  const auto y = tape.affine(x, w, b);
  CHECK(tape.value(y).at(0, 0) == doctest::Approx(3.0));
}

TEST_CASE("affine matches the naive triple-loop product") {
  KeyedRng rng(42, {1});
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor2 a = random_tensor(3, 4, rng, 2.0);
    const Tensor2 b = random_tensor(4, 2, rng, 2.0);
    const Tensor2 bias = random_tensor(1, 2, rng);

    GradientTape tape;
    const auto y = tape.affine(tape.constant(a), tape.parameter(b),
                               tape.parameter(bias));
    Tensor2 expected = naive_matmul(a, b);
    for (std::size_t c = 0; c < expected.cols(); ++c)
      for (std::size_t r = 0; r < expected.rows(); ++r)
        expected.at(r, c) += bias.at(0, c);
    for (std::size_t i = 0; i < expected.size(); ++i)
      CHECK(tape.value(y)[i] == doctest::Approx(expected[i]).epsilon(1e-12));
  }
}

TEST_CASE("affine rejects mismatched shapes") {
  GradientTape tape;
  const auto x = tape.constant(Tensor2(1, 3));
  const auto w = tape.parameter(Tensor2(2, 2));
  const auto b = tape.parameter(Tensor2(1, 2));
  CHECK_THROWS_AS(tape.affine(x, w, b), ShapeError);
}

TEST_CASE("activations evaluate the closed forms") {
  GradientTape tape;
  const auto x = tape.constant(Tensor2(1, 4, {0.0, -3.0, 100.0, 1.5}));

  const auto sp = tape.activation(x, Activation::softplus);
  CHECK(tape.value(sp)[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  // ln(1 + e^100) = 100 + log1p(e^-100); the correction is below 1e-40.
  CHECK(tape.value(sp)[2] == doctest::Approx(100.0).epsilon(1e-12));

  const auto re = tape.activation(x, Activation::relu);
  CHECK(tape.value(re)[1] == 0.0);
  CHECK(tape.value(re)[3] == doctest::Approx(1.5));

  const auto ex = tape.activation(x, Activation::exp);
  CHECK(tape.value(ex)[0] == doctest::Approx(1.0));
  CHECK(tape.value(ex)[1] == doctest::Approx(std::exp(-3.0)));
}

TEST_CASE("backward of a summed affine layer broadcasts the input") {
  GradientTape tape;
  const Tensor2 input(1, 3, {0.5, -1.0, 2.0});
  const auto x = tape.constant(input);
  const auto w = tape.parameter(Tensor2(3, 2, {0.1, 0.2, 0.3, 0.4, 0.5, 0.6}));
  const auto b = tape.parameter(Tensor2(1, 2));
  const auto total = tape.sum(tape.affine(x, w, b));

  const std::vector<Tensor2> grads = tape.backward(total);
  REQUIRE(grads.size() == 2);
  // d(sum)/dW[i][j] = x[i]; d(sum)/db[j] = 1.
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      CHECK(grads[0].at(i, j) == doctest::Approx(input[i]));
  CHECK(grads[1].at(0, 0) == doctest::Approx(1.0));
  CHECK(grads[1].at(0, 1) == doctest::Approx(1.0));
}

TEST_CASE("two-layer softplus net gradient matches finite differences") {
  KeyedRng rng(7, {2});
  const Tensor2 x = random_tensor(1, 4, rng);
  Tensor2 w1 = random_tensor(4, 3, rng);
  Tensor2 b1 = random_tensor(1, 3, rng);
  Tensor2 w2 = random_tensor(3, 2, rng);
  Tensor2 b2 = random_tensor(1, 2, rng);

  // Rebuilds the graph from the current parameter values. Registration
  // order fixes the order of the gradients backward() returns.
  const auto build = [&](GradientTape& tape) {
    const auto w1_id = tape.parameter(w1);
    const auto b1_id = tape.parameter(b1);
    const auto w2_id = tape.parameter(w2);
    const auto b2_id = tape.parameter(b2);
    const auto h1 =
        tape.activation(tape.affine(tape.constant(x), w1_id, b1_id),
                        Activation::softplus);
    const auto h2 =
        tape.activation(tape.affine(h1, w2_id, b2_id), Activation::softplus);
    return tape.sum(h2);
  };
  const auto eval = [&] {
    GradientTape tape;
    return tape.value(build(tape))[0];
  };

  GradientTape tape;
  const std::vector<Tensor2> grads = tape.backward(build(tape));

  const double h = 1e-5;
  std::vector<Tensor2*> params = {&w1, &b1, &w2, &b2};
  for (std::size_t p = 0; p < params.size(); ++p) {
    for (std::size_t i = 0; i < params[p]->size(); ++i) {
      const double saved = (*params[p])[i];
      (*params[p])[i] = saved + h;
      const double up = eval();
      (*params[p])[i] = saved - h;
      const double down = eval();
      (*params[p])[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      CHECK(test_helpers::close_rel(grads[p][i], numeric, 1e-4));
    }
  }
}

TEST_CASE("zero output gradient produces zero parameter gradients") {
  GradientTape tape;
  const auto x = tape.constant(Tensor2(1, 2, {1.0, 2.0}));
  const auto w = tape.parameter(Tensor2(2, 2, {1.0, 2.0, 3.0, 4.0}));
  const auto b = tape.parameter(Tensor2(1, 2, {0.5, 0.5}));
  const auto y = tape.affine(x, w, b);
  const std::vector<Tensor2> grads = tape.backward(y, Tensor2(1, 2));
  for (const Tensor2& g : grads)
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(g[i] == 0.0);
}

TEST_CASE("backward on an empty tape is a state error") {
  GradientTape tape;
  CHECK_THROWS_AS(tape.backward(0), StateError);
}

TEST_CASE("a tape is consumed by backward") {
  GradientTape tape;
  const auto x = tape.parameter(Tensor2(1, 1, {2.0}));
  const auto y = tape.scale(x, 3.0);
  tape.backward(y);
  CHECK_THROWS_AS(tape.backward(y), StateError);
  CHECK_THROWS_AS(tape.scale(x, 1.0), StateError);
}

TEST_CASE("elementwise ops and their gradients") {
  GradientTape tape;
  const auto a = tape.parameter(Tensor2(1, 3, {1.0, 2.0, 3.0}));
  const auto b = tape.parameter(Tensor2(1, 3, {4.0, 5.0, 6.0}));
  const auto prod = tape.mul(a, b);
  const auto shifted = tape.add_scalar(tape.scale(prod, 2.0), 1.0);
  const auto total = tape.sum(shifted);
  CHECK(tape.value(total)[0] == doctest::Approx(2.0 * (4.0 + 10.0 + 18.0) + 3.0));

  const std::vector<Tensor2> grads = tape.backward(total);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(grads[0][i] == doctest::Approx(2.0 * tape.value(b)[i]));
    CHECK(grads[1][i] == doctest::Approx(2.0 * tape.value(a)[i]));
  }
}

TEST_CASE("clamp keeps interior gradients and kills exterior ones") {
  GradientTape tape;
  const auto x = tape.parameter(Tensor2(1, 3, {-5.0, 0.5, 7.0}));
  const auto y = tape.clamp(x, -1.0, 1.0);
  CHECK(tape.value(y)[0] == -1.0);
  CHECK(tape.value(y)[1] == 0.5);
  CHECK(tape.value(y)[2] == 1.0);
  const std::vector<Tensor2> grads = tape.backward(tape.sum(y));
  CHECK(grads[0][0] == 0.0);
  CHECK(grads[0][1] == 1.0);
  CHECK(grads[0][2] == 0.0);
}

TEST_CASE("slice_cols extracts a block and scatters its gradient") {
  GradientTape tape;
  const auto x = tape.parameter(Tensor2(1, 4, {1.0, 2.0, 3.0, 4.0}));
  const auto y = tape.slice_cols(x, 1, 2);
  CHECK(tape.value(y)[0] == 2.0);
  CHECK(tape.value(y)[1] == 3.0);
  const std::vector<Tensor2> grads = tape.backward(tape.sum(y));
  CHECK(grads[0][0] == 0.0);
  CHECK(grads[0][1] == 1.0);
  CHECK(grads[0][2] == 1.0);
  CHECK(grads[0][3] == 0.0);
}

TEST_CASE("adam leaves parameters alone under zero gradients") {
  std::vector<Tensor2> params = {Tensor2(2, 2, {1.0, 2.0, 3.0, 4.0})};
  const std::vector<Tensor2> grads = {Tensor2(2, 2)};
  AdamState state = AdamState::create(params, 1e-2);
  adam_step(params, grads, state);
  CHECK(state.step == 1);
  CHECK(params[0] == Tensor2(2, 2, {1.0, 2.0, 3.0, 4.0}));
}

TEST_CASE("adam first step moves by the learning rate against the gradient") {
  std::vector<Tensor2> params = {Tensor2(1, 2, {0.0, 0.0})};
  const std::vector<Tensor2> grads = {Tensor2(1, 2, {0.37, -2.0})};
  AdamState state = AdamState::create(params, 1e-3);
  adam_step(params, grads, state);
  // Bias correction makes m_hat = g and v_hat = g^2 on step one.
  CHECK(params[0][0] == doctest::Approx(-1e-3).epsilon(1e-4));
  CHECK(params[0][1] == doctest::Approx(1e-3).epsilon(1e-4));
}

TEST_CASE("adam treats equal gradients identically") {
  std::vector<Tensor2> params = {Tensor2(1, 2, {1.0, 1.0})};
  const std::vector<Tensor2> grads = {Tensor2(1, 2, {0.3, 0.3})};
  AdamState state = AdamState::create(params, 1e-2);
  for (int i = 0; i < 5; ++i) adam_step(params, grads, state);
  CHECK(params[0][0] == params[0][1]);
}

TEST_CASE("adam rejects mismatched shapes") {
  std::vector<Tensor2> params = {Tensor2(1, 2)};
  const std::vector<Tensor2> grads = {Tensor2(2, 1)};
  AdamState state = AdamState::create(params, 1e-2);
  CHECK_THROWS_AS(adam_step(params, grads, state), ShapeError);
}

TEST_CASE("tape evaluation is deterministic") {
  KeyedRng rng(3, {9});
  const Tensor2 x = random_tensor(1, 5, rng);
  const Tensor2 w = random_tensor(5, 4, rng);
  const Tensor2 b = random_tensor(1, 4, rng);

  const auto run = [&] {
    GradientTape tape;
    const auto y = tape.activation(
        tape.affine(tape.constant(x), tape.parameter(w), tape.parameter(b)),
        Activation::softplus);
    return tape.value(y);
  };
  CHECK(run() == run());
}
