#include <gtest/gtest.h>

#include <functional>
#include <string>
#include <vector>

#include "acgan/autodiff.hpp"
#include "acgan/network.hpp"
#include "oracles.hpp"

using namespace acgan;

namespace {

// A primitive under test: builds its output from the bound inputs.
struct Primitive {
  std::string name;
  std::vector<std::pair<Index, Index>> shapes;
  std::function<ad::Var(std::vector<ad::Var>&)> build;
  bool positive = false;  // inputs kept away from zero (sqrt, reciprocal, kinks)
};

std::vector<Primitive> primitives() {
  using V = std::vector<ad::Var>;
  return {
      {"matmul", {{3, 4}, {4, 2}}, [](V& v) { return ad::matmul(v[0], v[1]); }},
      {"matmul_ta", {{4, 3}, {4, 2}}, [](V& v) { return ad::matmul(v[0], v[1], true, false); }},
      {"matmul_tb", {{3, 4}, {2, 4}}, [](V& v) { return ad::matmul(v[0], v[1], false, true); }},
      {"matmul_tab", {{4, 3}, {2, 4}}, [](V& v) { return ad::matmul(v[0], v[1], true, true); }},
      {"add_row_bias", {{3, 4}, {1, 4}}, [](V& v) { return ad::add_row_bias(v[0], v[1]); }},
      {"leaky_relu", {{3, 4}}, [](V& v) { return ad::leaky_relu(v[0], 0.2); }},
      {"tanh", {{3, 4}}, [](V& v) { return ad::tanh(v[0]); }},
      {"one_minus_square", {{3, 4}}, [](V& v) { return ad::one_minus_square(v[0]); }},
      {"add", {{3, 4}, {3, 4}}, [](V& v) { return ad::add(v[0], v[1]); }},
      {"sub", {{3, 4}, {3, 4}}, [](V& v) { return ad::sub(v[0], v[1]); }},
      {"mul", {{3, 4}, {3, 4}}, [](V& v) { return ad::mul(v[0], v[1]); }},
      {"scale", {{3, 4}}, [](V& v) { return ad::scale(v[0], -1.7); }},
      {"add_scalar", {{3, 4}}, [](V& v) { return ad::add_scalar(v[0], 0.3); }},
      {"square", {{3, 4}}, [](V& v) { return ad::square(v[0]); }},
      {"sqrt", {{3, 4}}, [](V& v) { return ad::sqrt(v[0]); }, true},
      {"reciprocal", {{3, 4}}, [](V& v) { return ad::reciprocal(v[0]); }, true},
      {"row_sum", {{3, 4}}, [](V& v) { return ad::row_sum(v[0]); }},
      {"col_sum", {{3, 4}}, [](V& v) { return ad::col_sum(v[0]); }},
      {"sum", {{3, 4}}, [](V& v) { return ad::sum(v[0]); }},
      {"mean", {{3, 4}}, [](V& v) { return ad::mean(v[0]); }},
      {"broadcast_cols", {{3, 1}}, [](V& v) { return ad::broadcast_cols(v[0], 5); }},
      {"broadcast_rows", {{1, 4}}, [](V& v) { return ad::broadcast_rows(v[0], 3); }},
      {"broadcast_scalar", {{1, 1}}, [](V& v) { return ad::broadcast_scalar(v[0], 3, 2); }},
      {"concat_cols", {{3, 2}, {3, 4}}, [](V& v) { return ad::concat_cols(v[0], v[1]); }},
      {"slice_cols", {{3, 6}}, [](V& v) { return ad::slice_cols(v[0], 2, 3); }},
      {"pad_cols", {{3, 2}}, [](V& v) { return ad::pad_cols(v[0], 1, 5); }},
      {"mse", {{3, 4}, {3, 4}}, [](V& v) { return ad::mse(v[0], v[1]); }},
      {"masked_scale", {{3, 4}, {3, 4}}, [](V& v) { return ad::masked_scale(v[0], v[1], 0.2); }},
  };
}

Tensor draw_input(Index r, Index c, CounterRng& rng, bool positive) {
  Tensor t = oracle::random_tensor(r, c, rng);
  // Keep every element at least 0.1 from zero: no kinks inside the stencil.
  for (Index i = 0; i < t.size(); ++i) {
    double& x = t.data()[i];
    if (positive) x = 0.2 + std::abs(x);
    else if (std::abs(x) < 0.1) x = x < 0 ? -0.1 - std::abs(x) : 0.1 + std::abs(x);
  }
  return t;
}

}  // namespace

TEST(Autodiff, EveryPrimitiveMatchesFiniteDifferencesOver100Trials) {
  const auto prims = primitives();
  CounterRng rng(42);
  for (const Primitive& p : prims) {
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<Tensor> inputs;
      for (auto [r, c] : p.shapes) inputs.push_back(draw_input(r, c, rng, p.positive));
      // Weighted sum so each output element gets a distinct adjoint.
      Tensor weights;
      auto loss = [&](std::vector<Tensor>& in, std::vector<Tensor>* grads) {
        ad::Tape tape;
        std::vector<ad::Var> vars;
        for (const Tensor& t : in) vars.push_back(tape.variable(t));
        ad::Var out = p.build(vars);
        if (weights.size() == 0) weights = oracle::random_tensor(out.rows(), out.cols(), rng);
        ad::Var total = ad::sum(ad::mul_const(out, weights));
        if (grads) *grads = tape.gradient(total, vars);
        return total.scalar();
      };
      std::vector<Tensor> analytic;
      loss(inputs, &analytic);
      for (std::size_t k = 0; k < inputs.size(); ++k) {
        const Tensor numeric = oracle::numeric_gradient(inputs[k], [&] { return loss(inputs, nullptr); }, 1e-5);
        worst = std::max(worst, oracle::rel_error(analytic[k], numeric));
      }
    }
    EXPECT_LE(worst, 1e-5) << p.name;
  }
}

TEST(Autodiff, LeakyRectifierExamples) {
  ad::Tape tape;
  Tensor x(1, 3);
  x << -1, 0, 2;
  ad::Var v = tape.variable(x);
  ad::Var y = ad::leaky_relu(v, 0.2);
  Tensor expected(1, 3);
  expected << -0.2, 0, 2;
  EXPECT_EQ(y.value(), expected);

  Tensor pos(2, 2);
  pos << 0.5, 1, 2, 3;
  EXPECT_EQ(ad::leaky_relu(tape.variable(pos), 0.2).value(), pos);

  ad::Tape t2;
  ad::Var at = t2.variable(Tensor::Constant(1, 1, -3.0));
  const ad::Var targets[] = {at};
  const auto g = t2.gradient(ad::sum(ad::leaky_relu(at, 0.2)), targets);
  EXPECT_DOUBLE_EQ(g[0](0, 0), 0.2);
  Tensor point = Tensor::Constant(1, 1, -3.0);
  const Tensor numeric = oracle::numeric_gradient(point, [&] {
    ad::Tape t;
    return ad::leaky_relu(t.constant(point), 0.2).scalar();
  });
  EXPECT_NEAR(numeric(0, 0), 0.2, 1e-9);
  EXPECT_THROW(ad::leaky_relu(at, 1.0), ParameterError);
}

TEST(Autodiff, DropoutModesAndRate) {
  CounterRng rng(7);
  ad::Tape tape;
  const Tensor x = oracle::random_tensor(100, 100, rng);
  ad::Var v = tape.constant(x);
  EXPECT_EQ(ad::dropout(v, 0.4, ad::Phase::Infer, rng).value(), x);
  EXPECT_EQ(ad::dropout(v, 0.0, ad::Phase::Train, rng).value(), x);

  const Tensor ones = Tensor::Ones(100, 100);
  const Tensor out = ad::dropout(tape.constant(ones), 0.4, ad::Phase::Train, rng).value();
  const double zeroed = static_cast<double>((out.array() == 0.0).count()) / 10000.0;
  EXPECT_NEAR(zeroed, 0.4, 0.02);
  for (Index i = 0; i < out.size(); ++i) {
    if (out.data()[i] != 0.0) {
      EXPECT_DOUBLE_EQ(out.data()[i], 1.0 / 0.6);
    }
  }
  EXPECT_THROW(ad::dropout(v, 1.0, ad::Phase::Train, rng), ParameterError);
  EXPECT_THROW(ad::dropout(v, -0.1, ad::Phase::Train, rng), ParameterError);
}

TEST(Autodiff, DropoutMaskIsPerSample) {
  // Row r's mask depends only on draws for that row: the first rows of a
  // taller batch match a shorter batch drawn from the same stream.
  CounterRng a(3), b(3);
  const Tensor small = ad::kernels::dropout_mask(2, 50, 0.4, a);
  const Tensor tall = ad::kernels::dropout_mask(5, 50, 0.4, b);
  EXPECT_EQ(tall.topRows(2), small);
}

namespace {

ParamSet small_mlp(Index inputs, CounterRng& rng, Activation last = Activation::None) {
  NetworkSpec spec;
  spec.layers = {{inputs, 7, Activation::Tanh}, {7, 5, Activation::LeakyRelu}, {5, 1, last}};
  return init_params(spec, rng);
}

}  // namespace

TEST(Autodiff, InputGradientOfLinearMapIsItsCoefficients) {
  NetworkSpec spec;
  spec.layers = {{4, 1, Activation::None}};
  CounterRng rng(1);
  ParamSet p = init_params(spec, rng);
  p.layers[0].weights << 0.5, -1.0, 2.0, 0.25;
  const Tensor x = oracle::random_tensor(3, 4, rng);
  const Tensor g = input_gradient(p, x);
  for (Index r = 0; r < 3; ++r) EXPECT_EQ(g.row(r), p.layers[0].weights.transpose());
}

TEST(Autodiff, InputGradientOfConstantMapIsZero) {
  NetworkSpec spec;
  spec.layers = {{4, 1, Activation::None}};
  CounterRng rng(1);
  ParamSet p = init_params(spec, rng);
  p.layers[0].weights.setZero();
  p.layers[0].bias.setConstant(3.0);
  const Tensor g = input_gradient(p, oracle::random_tensor(2, 4, rng));
  EXPECT_TRUE((g.array() == 0.0).all());
  const double penalty = (g.rowwise().norm().array() - 1.0).square().mean();
  EXPECT_EQ(penalty, 1.0);
}

TEST(Autodiff, InputGradientAndPenaltyGradientMatchFiniteDifferences) {
  CounterRng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    ParamSet p = small_mlp(6, rng);
    Tensor x = oracle::random_tensor(4, 6, rng);

    // dD/dx against differences of D itself.
    const Tensor analytic_x = input_gradient(p, x);
    Tensor numeric_x(4, 6);
    for (Index r = 0; r < 4; ++r) {
      Tensor row = x.row(r);
      const Tensor g = oracle::numeric_gradient(row, [&] {
        CounterRng unused;
        return forward(p, row, ad::Phase::Infer, unused)(0, 0);
      });
      numeric_x.row(r) = g;
    }
    EXPECT_LE(oracle::rel_error(analytic_x, numeric_x), 1e-5);

    // Parameter gradient of mean (||dD/dx|| - 1)^2: the backward pass is
    // differentiated a second time.
    auto penalty = [&](std::vector<Tensor>* grads) {
      ad::Tape tape;
      CounterRng unused;
      const auto bound = bind(tape, p, true);
      const ad::Var g = input_gradient(p, bound, tape.variable(x), ad::Phase::Infer, unused);
      const ad::Var pen = ad::mean(ad::square(ad::add_scalar(ad::sqrt(ad::row_sum(ad::square(g))), -1.0)));
      if (grads) *grads = tape.gradient(pen, bound);
      return pen.scalar();
    };
    std::vector<Tensor> analytic;
    penalty(&analytic);
    EXPECT_LE(oracle::check_network(p, analytic, [&] { return penalty(nullptr); }), 1e-4);
  }
}

TEST(Autodiff, ReplayIsBitIdenticalAndGradientsRepeat) {
  CounterRng rng(5);
  ParamSet p = small_mlp(5, rng, Activation::Tanh);
  const Tensor x = oracle::random_tensor(8, 5, rng);
  auto run = [&] {
    ad::Tape tape;
    CounterRng d(99);
    const auto bound = bind(tape, p, true);
    ad::Var y = forward(p, bound, tape.constant(x), ad::Phase::Train, d);
    ad::Var loss = ad::mean(ad::square(y));
    auto grads = tape.gradient(loss, bound);
    EXPECT_TRUE(tape.replay());
    return std::make_pair(loss.scalar(), grads);
  };
  const auto a = run(), b = run();
  EXPECT_EQ(a.first, b.first);
  ASSERT_EQ(a.second.size(), b.second.size());
  for (std::size_t k = 0; k < a.second.size(); ++k) EXPECT_EQ(a.second[k], b.second[k]);
}

TEST(Autodiff, ShapeAndFiniteErrors) {
  ad::Tape tape;
  ad::Var a = tape.variable(Tensor::Ones(2, 3));
  ad::Var b = tape.variable(Tensor::Ones(2, 3));
  EXPECT_THROW(ad::matmul(a, b), DimensionError);
  EXPECT_THROW(ad::add(a, tape.variable(Tensor::Ones(3, 2))), DimensionError);
  EXPECT_THROW(ad::add_row_bias(a, tape.variable(Tensor::Ones(1, 2))), DimensionError);
  EXPECT_THROW(ad::slice_cols(a, 2, 2), DimensionError);
  EXPECT_THROW(tape.variable(Tensor::Constant(1, 1, std::nan(""))), NumericError);
  EXPECT_THROW(ad::sqrt(tape.variable(Tensor::Constant(1, 1, -1.0))), DomainError);
  EXPECT_EQ(ad::reciprocal(tape.variable(Tensor::Zero(1, 1))).scalar(), 0.0);
  const ad::Var targets[] = {a};
  EXPECT_THROW(tape.gradient(a, targets), DimensionError);
  ad::Tape other;
  ad::Var foreign = other.variable(Tensor::Ones(1, 1));
  EXPECT_THROW(tape.gradient(ad::sum(a), std::span<const ad::Var>(&foreign, 1)), ParameterError);
}

TEST(Autodiff, UnusedInputsGetZeroGradients) {
  ad::Tape tape;
  ad::Var a = tape.variable(Tensor::Ones(2, 2));
  ad::Var unused = tape.variable(Tensor::Ones(3, 1));
  const ad::Var targets[] = {a, unused};
  const auto g = tape.gradient(ad::sum(ad::square(a)), targets);
  EXPECT_EQ(g[0], Tensor::Constant(2, 2, 2.0));
  EXPECT_EQ(g[1], Tensor::Zero(3, 1));
}
