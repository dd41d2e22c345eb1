#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "acgan/adam.hpp"
#include "acgan/autodiff.hpp"
#include "acgan/random.hpp"
#include "acgan/tensor.hpp"

namespace acgan {

enum class Activation : std::uint8_t { None = 0, LeakyRelu = 1, Tanh = 2 };

// One fully connected layer; dropout (if any) is applied after the activation.
struct LayerSpec {
  Index inputs = 0;
  Index outputs = 0;
  Activation activation = Activation::None;
  double slope = 0.2;
  double dropout = 0.0;
};

struct NetworkSpec {
  std::vector<LayerSpec> layers;

  Index input_width() const { return layers.empty() ? 0 : layers.front().inputs; }
  Index output_width() const { return layers.empty() ? 0 : layers.back().outputs; }

  void validate() const {
    if (layers.empty()) throw DimensionError("network has no layers");
    for (std::size_t k = 0; k < layers.size(); ++k) {
      const LayerSpec& l = layers[k];
      if (l.inputs <= 0 || l.outputs <= 0) throw DimensionError("layer widths must be positive");
      if (k > 0 && layers[k - 1].outputs != l.inputs) {
        throw DimensionError("layer " + std::to_string(k) + " expects " + std::to_string(l.inputs) +
                             " inputs but previous layer emits " +
                             std::to_string(layers[k - 1].outputs));
      }
      if (l.activation == Activation::LeakyRelu && !(l.slope > 0.0 && l.slope < 1.0)) {
        throw ParameterError("leaky slope must lie in (0, 1)");
      }
      if (!(l.dropout >= 0.0 && l.dropout < 1.0)) throw ParameterError("dropout rate must lie in [0, 1)");
    }
  }

  friend bool operator==(const NetworkSpec& a, const NetworkSpec& b) {
    if (a.layers.size() != b.layers.size()) return false;
    for (std::size_t k = 0; k < a.layers.size(); ++k) {
      const LayerSpec& x = a.layers[k];
      const LayerSpec& y = b.layers[k];
      if (x.inputs != y.inputs || x.outputs != y.outputs || x.activation != y.activation ||
          x.slope != y.slope || x.dropout != y.dropout) {
        return false;
      }
    }
    return true;
  }
};

struct Layer {
  Tensor weights;  // inputs x outputs
  Tensor bias;     // 1 x outputs
};

// Learnable weights of one network plus its optimizer state.
struct ParamSet {
  NetworkSpec spec;
  std::vector<Layer> layers;
  AdamState adam;

  // Flat parameter order: W0, b0, W1, b1, ...
  std::vector<Tensor*> tensors() {
    std::vector<Tensor*> out;
    for (Layer& l : layers) {
      out.push_back(&l.weights);
      out.push_back(&l.bias);
    }
    return out;
  }

  std::vector<const Tensor*> tensors() const {
    std::vector<const Tensor*> out;
    for (const Layer& l : layers) {
      out.push_back(&l.weights);
      out.push_back(&l.bias);
    }
    return out;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const Tensor* t : tensors()) n += static_cast<std::size_t>(t->size());
    return n;
  }
};

// FNV-1a over the raw parameter bytes.
inline std::uint64_t parameter_hash(const ParamSet& p) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const Tensor* t : p.tensors()) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(t->data());
    const std::size_t n = sizeof(double) * static_cast<std::size_t>(t->size());
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

// Uniform fan-in initialization U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for both
// weights and biases.
inline ParamSet init_params(NetworkSpec spec, CounterRng& rng, AdamConfig adam = {}) {
  spec.validate();
  validate(adam);
  ParamSet p;
  p.spec = std::move(spec);
  p.adam.config = adam;
  for (const LayerSpec& l : p.spec.layers) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(l.inputs));
    Layer layer{Tensor(l.inputs, l.outputs), Tensor(1, l.outputs)};
    for (Index c = 0; c < l.outputs; ++c) {
      for (Index r = 0; r < l.inputs; ++r) layer.weights(r, c) = bound * (2.0 * rng.uniform() - 1.0);
    }
    for (Index c = 0; c < l.outputs; ++c) layer.bias(0, c) = bound * (2.0 * rng.uniform() - 1.0);
    p.layers.push_back(std::move(layer));
  }
  return p;
}

// Places the parameters on a tape, as differentiable variables or constants.
inline std::vector<ad::Var> bind(ad::Tape& tape, const ParamSet& p, bool trainable) {
  std::vector<ad::Var> vars;
  for (const Tensor* t : p.tensors()) vars.push_back(trainable ? tape.variable(*t) : tape.constant(*t));
  return vars;
}

inline ad::Var forward(const ParamSet& p, std::span<const ad::Var> bound, ad::Var x, ad::Phase phase,
                       CounterRng& rng) {
  if (bound.size() != 2 * p.layers.size()) throw DimensionError("bound parameter count mismatch");
  if (x.cols() != p.spec.input_width()) {
    throw DimensionError("network input: expected width " + std::to_string(p.spec.input_width()) +
                         ", got " + shape_string(x.value()));
  }
  ad::Var h = x;
  for (std::size_t k = 0; k < p.layers.size(); ++k) {
    const LayerSpec& l = p.spec.layers[k];
    h = ad::add_row_bias(ad::matmul(h, bound[2 * k]), bound[2 * k + 1]);
    if (l.activation == Activation::LeakyRelu) h = ad::leaky_relu(h, l.slope);
    else if (l.activation == Activation::Tanh) h = ad::tanh(h);
    if (l.dropout > 0.0) h = ad::dropout(h, l.dropout, phase, rng);
  }
  return h;
}

// Tape-free forward pass; bit-identical to the recorded one for the same rng.
inline Tensor forward(const ParamSet& p, const Tensor& x, ad::Phase phase, CounterRng& rng) {
  if (x.cols() != p.spec.input_width()) {
    throw DimensionError("network input: expected width " + std::to_string(p.spec.input_width()) +
                         ", got " + shape_string(x));
  }
  Tensor h = x;
  for (std::size_t k = 0; k < p.layers.size(); ++k) {
    const LayerSpec& l = p.spec.layers[k];
    h = ad::kernels::add_row_bias(ad::kernels::matmul(h, p.layers[k].weights, false, false),
                                  p.layers[k].bias);
    if (l.activation == Activation::LeakyRelu) h = ad::kernels::masked_scale(h, h, l.slope);
    else if (l.activation == Activation::Tanh) h = h.array().tanh().matrix();
    if (l.dropout > 0.0 && phase == ad::Phase::Train) {
      h = h.cwiseProduct(ad::kernels::dropout_mask(h.rows(), h.cols(), l.dropout, rng));
    }
    if (!h.allFinite()) throw NumericError("non-finite activation in forward pass");
  }
  return h;
}

// d(sum of outputs)/d(input), recorded on the tape so that it can be
// differentiated again with respect to the bound parameters. Rows are
// independent samples, so row b of the result is dD(x_b)/dx_b.
inline ad::Var input_gradient(const ParamSet& p, std::span<const ad::Var> bound, ad::Var x,
                              ad::Phase phase, CounterRng& rng) {
  if (p.spec.output_width() != 1) throw DimensionError("input_gradient needs a scalar-output network");
  ad::Var out = forward(p, bound, x, phase, rng);
  const ad::Var targets[] = {x};
  return x.tape->gradient_graph(ad::sum(out), targets)[0];
}

inline Tensor input_gradient(const ParamSet& p, const Tensor& x) {
  ad::Tape tape;
  CounterRng rng;
  const auto bound = bind(tape, p, false);
  ad::Var xv = tape.variable(x);
  return input_gradient(p, bound, xv, ad::Phase::Infer, rng).value();
}

inline void apply_adam(ParamSet& p, std::span<const Tensor> grads) {
  const std::vector<Tensor*> params = p.tensors();
  adam_step(params, grads, p.adam);
}

}  // namespace acgan
