#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "acgan/autodiff.hpp"
#include "acgan/errors.hpp"
#include "acgan/network.hpp"
#include "acgan/random.hpp"
#include "acgan/windows.hpp"

namespace acgan {

enum class GanMode : std::uint8_t { Cgan = 0, Acgan = 1 };

inline const char* to_string(GanMode m) { return m == GanMode::Acgan ? "acgan" : "cgan"; }

inline GanMode parse_mode(const std::string& s) {
  if (s == "acgan" || s == "ACGAN") return GanMode::Acgan;
  if (s == "cgan" || s == "CGAN") return GanMode::Cgan;
  throw ConfigError("unknown mode '" + s + "' (expected cgan or acgan)");
}

// Hidden widths of the four networks. The defaults are the reference MLPs;
// the discriminator's 512 -> 256 step is an explicit layer so that every
// listed width chains.
struct Architecture {
  Index encoder_hidden = 512;
  Index code = 16;
  std::vector<Index> simulator_hidden{128, 256, 512, 1024};
  std::vector<Index> discriminator_hidden{512, 512, 256, 512};
  double slope = 0.2;
  double dropout = 0.4;

  // Same topology with every hidden width capped, for finite-difference work.
  static Architecture shrunk(Index cap) {
    Architecture a;
    a.encoder_hidden = std::min<Index>(a.encoder_hidden, cap);
    a.code = std::min<Index>(a.code, cap);
    a.simulator_hidden = {std::min<Index>(16, cap), cap, cap, cap};
    a.discriminator_hidden = {cap, cap, std::max<Index>(1, cap / 2), cap};
    return a;
  }
};

struct GanDims {
  Index assets = 0;
  Index history = 0;
  Index future = 0;
  Index latent = 0;

  Index history_width() const { return assets * history; }
  Index future_width() const { return assets * future; }
  Index window_width() const { return assets * (history + future); }
};

struct TrainConfig {
  double lambda1 = 10.0;
  double lambda2 = 3.0;
  AdamConfig adam{};
  std::size_t epochs = 1000;
  Index latent = 100;
  std::uint64_t seed = 0;
  std::size_t critic_steps = 1;
  std::size_t batch_size = 64;

  void validate() const {
    if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0)) throw ConfigError("lambda1 and lambda2 must be non-negative");
    if (latent < 1) throw ConfigError("latent dimension must be at least 1");
    if (epochs < 1) throw ConfigError("epoch count must be at least 1");
    if (critic_steps < 1) throw ConfigError("critic_steps must be at least 1");
    if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
    acgan::validate(adam);
  }
};

inline NetworkSpec encoder_spec(const GanDims& d, const Architecture& a) {
  return NetworkSpec{{
      {d.history_width(), a.encoder_hidden, Activation::LeakyRelu, a.slope, 0.0},
      {a.encoder_hidden, a.encoder_hidden, Activation::LeakyRelu, a.slope, a.dropout},
      {a.encoder_hidden, a.code, Activation::None, a.slope, 0.0},
  }};
}

inline NetworkSpec decoder_spec(const GanDims& d, const Architecture& a) {
  return NetworkSpec{{
      {a.code, a.encoder_hidden, Activation::LeakyRelu, a.slope, 0.0},
      {a.encoder_hidden, a.encoder_hidden, Activation::LeakyRelu, a.slope, a.dropout},
      {a.encoder_hidden, d.history_width(), Activation::None, a.slope, 0.0},
  }};
}

inline NetworkSpec simulator_spec(const GanDims& d, const Architecture& a) {
  NetworkSpec s;
  Index in = d.latent + a.code;
  for (Index width : a.simulator_hidden) {
    s.layers.push_back({in, width, Activation::LeakyRelu, a.slope, 0.0});
    in = width;
  }
  s.layers.push_back({in, d.future_width(), Activation::Tanh, a.slope, 0.0});
  return s;
}

inline NetworkSpec discriminator_spec(const GanDims& d, const Architecture& a) {
  NetworkSpec s;
  Index in = d.window_width();
  for (std::size_t k = 0; k < a.discriminator_hidden.size(); ++k) {
    const Index width = a.discriminator_hidden[k];
    s.layers.push_back({in, width, Activation::LeakyRelu, a.slope, k == 1 ? a.dropout : 0.0});
    in = width;
  }
  s.layers.push_back({in, 1, Activation::None, a.slope, 0.0});
  return s;
}

/// Encoder/conditioner E, optional decoder F, simulator G and critic D.
/// Window inputs are flattened asset-major; the critic sees
/// [vec(A_h), vec(A_f)].
struct GanBundle {
  GanMode mode = GanMode::Acgan;
  GanDims dims;
  Architecture arch;
  ParamSet encoder;
  std::optional<ParamSet> decoder;
  ParamSet simulator;
  ParamSet discriminator;
  TrainConfig config;
  std::uint64_t epochs_completed = 0;

  bool trained() const { return epochs_completed > 0; }

  void validate() const {
    if ((mode == GanMode::Acgan) != decoder.has_value()) {
      throw ModeError("decoder must be present exactly when mode is acgan");
    }
    if (encoder.spec.input_width() != dims.history_width()) throw DimensionError("encoder input width mismatch");
    if (simulator.spec.input_width() != dims.latent + encoder.spec.output_width()) {
      throw DimensionError("simulator input width must equal latent + code width");
    }
    if (simulator.spec.output_width() != dims.future_width()) throw DimensionError("simulator output width mismatch");
    if (discriminator.spec.input_width() != dims.window_width() || discriminator.spec.output_width() != 1) {
      throw DimensionError("discriminator must map the window width to a scalar");
    }
    if (decoder && (decoder->spec.input_width() != encoder.spec.output_width() ||
                    decoder->spec.output_width() != dims.history_width())) {
      throw DimensionError("decoder must map the code back to the history width");
    }
  }
};

inline GanBundle build_networks(Index assets, const WindowConfig& window, Index latent, GanMode mode,
                                CounterRng& rng, const Architecture& arch = {}, AdamConfig adam = {}) {
  window.validate();
  if (assets < 1) throw DimensionError("need at least one asset");
  if (latent < 1) throw DimensionError("latent dimension must be at least 1");
  GanBundle b;
  b.mode = mode;
  b.dims = GanDims{assets, window.history, window.future, latent};
  b.arch = arch;
  b.config.latent = latent;
  b.config.adam = adam;
  CounterRng enc_rng = rng.fork(1), dec_rng = rng.fork(2), sim_rng = rng.fork(3), disc_rng = rng.fork(4);
  b.encoder = init_params(encoder_spec(b.dims, arch), enc_rng, adam);
  if (mode == GanMode::Acgan) b.decoder = init_params(decoder_spec(b.dims, arch), dec_rng, adam);
  b.simulator = init_params(simulator_spec(b.dims, arch), sim_rng, adam);
  b.discriminator = init_params(discriminator_spec(b.dims, arch), disc_rng, adam);
  b.validate();
  return b;
}

inline void require_batch(const GanBundle& b, const Tensor& history, const char* what) {
  if (history.cols() != b.dims.history_width()) {
    throw DimensionError(std::string(what) + ": history batch " + shape_string(history) + " needs width " +
                         std::to_string(b.dims.history_width()));
  }
}

/// G(z, E(A_h)) for a batch: z is B x m, history B x (N h); returns B x (N f)
/// in (-1, 1).
inline Tensor generate(const GanBundle& b, const Tensor& z, const Tensor& history, ad::Phase phase,
                       CounterRng& rng) {
  require_batch(b, history, "generate");
  if (z.cols() != b.dims.latent || z.rows() != history.rows()) {
    throw DimensionError("generate: latent batch " + shape_string(z) + " does not match history " +
                         shape_string(history));
  }
  const Tensor code = forward(b.encoder, history, phase, rng);
  return forward(b.simulator, ad::kernels::concat_cols(z, code), phase, rng);
}

/// Single-window form: z of length m, history N x h; returns N x f.
inline Tensor generate_window(const GanBundle& b, const Vector& z, const Tensor& history, ad::Phase phase,
                              CounterRng& rng) {
  require_shape(history, b.dims.assets, b.dims.history, "generate_window history");
  const Tensor out = generate(b, z.transpose(), flatten_row(history), phase, rng);
  return unflatten_row(out, 0, b.dims.assets, b.dims.future);
}

/// F(E(A_h)) for a batch of flattened histories.
inline Tensor reconstruct(const GanBundle& b, const Tensor& history, ad::Phase phase, CounterRng& rng) {
  if (b.mode != GanMode::Acgan || !b.decoder) throw ModeError("reconstruct needs an acgan bundle");
  require_batch(b, history, "reconstruct");
  return forward(*b.decoder, forward(b.encoder, history, phase, rng), phase, rng);
}

struct CriticLoss {
  double total = 0.0;
  double wasserstein = 0.0;  // mean D(real) - mean D(fake)
  double penalty = 0.0;      // mean (||grad D(x_bar)|| - 1)^2, before lambda1
  std::vector<Tensor> grads;  // discriminator parameter order
};

/// -(mean D(real) - mean D(fake)) + lambda1 * mean (||grad D(x_bar)||_2 - 1)^2,
/// x_bar = eps * real + (1 - eps) * fake per sample; gradients for D only.
inline CriticLoss discriminator_loss(const GanBundle& b, const Tensor& history, const Tensor& real_future,
                                     const Tensor& fake_future, const Vector& eps, double lambda1,
                                     ad::Phase phase, CounterRng& rng) {
  require_batch(b, history, "discriminator_loss");
  const Index batch = history.rows();
  require_shape(real_future, batch, b.dims.future_width(), "discriminator_loss real future");
  require_shape(fake_future, batch, b.dims.future_width(), "discriminator_loss fake future");
  if (eps.size() != batch) throw DimensionError("discriminator_loss: one epsilon per sample required");
  if (!(lambda1 >= 0.0)) throw ParameterError("lambda1 must be non-negative");

  const Tensor real = ad::kernels::concat_cols(history, real_future);
  const Tensor fake = ad::kernels::concat_cols(history, fake_future);
  Tensor mixed(batch, real.cols());
  for (Index r = 0; r < batch; ++r) mixed.row(r) = eps(r) * real.row(r) + (1.0 - eps(r)) * fake.row(r);

  ad::Tape tape;
  const std::vector<ad::Var> params = bind(tape, b.discriminator, true);
  const ad::Var d_real = forward(b.discriminator, params, tape.constant(real), phase, rng);
  const ad::Var d_fake = forward(b.discriminator, params, tape.constant(fake), phase, rng);
  const ad::Var w = ad::mean(d_real) - ad::mean(d_fake);

  const ad::Var x_bar = tape.variable(mixed);
  const ad::Var grad = input_gradient(b.discriminator, params, x_bar, phase, rng);
  const ad::Var norms = ad::sqrt(ad::row_sum(ad::square(grad)));
  const ad::Var penalty = ad::mean(ad::square(ad::add_scalar(norms, -1.0)));
  const ad::Var total = ad::scale(w, -1.0) + ad::scale(penalty, lambda1);

  CriticLoss out;
  out.total = total.scalar();
  out.wasserstein = w.scalar();
  out.penalty = penalty.scalar();
  out.grads = tape.gradient(total, params);
  return out;
}

struct GeneratorLoss {
  double total = 0.0;
  double score = 0.0;                      // mean D([A_h, G(z, E(A_h))])
  std::optional<double> autoencoding;      // MSE(F(E(A_h)), target), acgan only
  std::vector<Tensor> encoder_grads;
  std::vector<Tensor> simulator_grads;
  std::vector<Tensor> decoder_grads;
};

/// -mean D([A_h, G(z, E(A_h))]) + lambda2 * MSE(F(E(A_h)), target). The
/// reconstruction term exists in acgan mode only; the target defaults to the
/// history itself. The critic is held fixed.
inline GeneratorLoss generator_loss(const GanBundle& b, const Tensor& history, const Tensor& z, double lambda2,
                                    ad::Phase phase, CounterRng& rng,
                                    const Tensor* reconstruction_target = nullptr) {
  require_batch(b, history, "generator_loss");
  require_shape(z, history.rows(), b.dims.latent, "generator_loss latent batch");
  if (!(lambda2 >= 0.0)) throw ParameterError("lambda2 must be non-negative");
  const bool autoencode = b.mode == GanMode::Acgan;
  if (autoencode && !b.decoder) throw ModeError("acgan bundle without decoder");

  ad::Tape tape;
  const std::vector<ad::Var> enc = bind(tape, b.encoder, true);
  const std::vector<ad::Var> sim = bind(tape, b.simulator, true);
  const std::vector<ad::Var> disc = bind(tape, b.discriminator, false);
  std::vector<ad::Var> dec;
  if (autoencode) dec = bind(tape, *b.decoder, true);

  const ad::Var h = tape.constant(history);
  const ad::Var code = forward(b.encoder, enc, h, phase, rng);
  const ad::Var fake = forward(b.simulator, sim, ad::concat_cols(tape.constant(z), code), phase, rng);
  const ad::Var score = ad::mean(forward(b.discriminator, disc, ad::concat_cols(h, fake), phase, rng));
  ad::Var total = ad::scale(score, -1.0);

  GeneratorLoss out;
  if (autoencode) {
    const ad::Var target =
        reconstruction_target ? tape.constant(*reconstruction_target) : h;
    if (reconstruction_target) {
      require_shape(*reconstruction_target, history.rows(), b.decoder->spec.output_width(),
                    "reconstruction target");
    }
    const ad::Var ap = ad::mse(forward(*b.decoder, dec, code, phase, rng), target);
    total = total + ad::scale(ap, lambda2);
    out.autoencoding = ap.scalar();
  }

  std::vector<ad::Var> targets = enc;
  targets.insert(targets.end(), sim.begin(), sim.end());
  targets.insert(targets.end(), dec.begin(), dec.end());
  std::vector<Tensor> grads = tape.gradient(total, targets);

  out.total = total.scalar();
  out.score = score.scalar();
  auto it = std::make_move_iterator(grads.begin());
  out.encoder_grads.assign(it, it + static_cast<std::ptrdiff_t>(enc.size()));
  it += static_cast<std::ptrdiff_t>(enc.size());
  out.simulator_grads.assign(it, it + static_cast<std::ptrdiff_t>(sim.size()));
  it += static_cast<std::ptrdiff_t>(sim.size());
  out.decoder_grads.assign(it, std::make_move_iterator(grads.end()));
  return out;
}

}  // namespace acgan
