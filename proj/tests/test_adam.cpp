#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "acgan/adam.hpp"

using namespace acgan;

TEST(Adam, ZeroGradientLeavesParameterUnchanged) {
  Tensor theta = Tensor::Constant(2, 3, 0.7);
  const Tensor before = theta;
  AdamState state;
  state.config.learning_rate = 0.01;
  std::vector<Tensor*> params{&theta};
  const std::vector<Tensor> grads{Tensor::Zero(2, 3)};
  for (int k = 0; k < 5; ++k) adam_step(params, grads, state);
  EXPECT_EQ(theta, before);
  EXPECT_EQ(state.step, 5u);
}

TEST(Adam, FirstStepHasLearningRateMagnitude) {
  Tensor theta = Tensor::Constant(1, 1, 1.0);
  AdamState state;
  state.config.learning_rate = 0.01;
  std::vector<Tensor*> params{&theta};
  const std::vector<Tensor> grads{Tensor::Constant(1, 1, 1.0)};
  adam_step(params, grads, state);
  EXPECT_NEAR(1.0 - theta(0, 0), 0.01, 1e-8);
}

TEST(Adam, MinimizesQuadratic) {
  Tensor theta = Tensor::Constant(1, 1, 1.0);
  AdamState state;
  state.config.learning_rate = 0.01;
  std::vector<Tensor*> params{&theta};
  for (int k = 0; k < 5000; ++k) {
    const std::vector<Tensor> grads{2.0 * theta};
    adam_step(params, grads, state);
  }
  EXPECT_LT(theta(0, 0) * theta(0, 0), 1e-6);
}

TEST(Adam, RejectsBadConfigAndShapes) {
  EXPECT_THROW(validate(AdamConfig{0.0, 0.5, 0.999, 1e-8}), ParameterError);
  EXPECT_THROW(validate(AdamConfig{1e-3, 1.0, 0.999, 1e-8}), ParameterError);
  EXPECT_THROW(validate(AdamConfig{1e-3, 0.5, 0.999, 0.0}), ParameterError);

  Tensor theta = Tensor::Zero(2, 2);
  AdamState state;
  std::vector<Tensor*> params{&theta};
  const std::vector<Tensor> wrong{Tensor::Zero(2, 3)};
  EXPECT_THROW(adam_step(params, wrong, state), DimensionError);
  const std::vector<Tensor> two{Tensor::Zero(2, 2), Tensor::Zero(2, 2)};
  EXPECT_THROW(adam_step(params, two, state), DimensionError);
}
