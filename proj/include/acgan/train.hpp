#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "acgan/checkpoint.hpp"
#include "acgan/errors.hpp"
#include "acgan/gan.hpp"
#include "acgan/prices.hpp"
#include "acgan/random.hpp"
#include "acgan/windows.hpp"

namespace acgan {

// Per-epoch means over minibatches.
struct LossRecord {
  std::size_t epoch = 0;
  double critic_wasserstein = 0.0;  // mean D(real) - mean D(fake)
  double gradient_penalty = 0.0;    // unweighted
  double generator_score = 0.0;     // mean D(fake)
  std::optional<double> autoencoding;
  double critic_loss = 0.0;
  double generator_loss = 0.0;
};

struct TrainOptions {
  std::optional<std::filesystem::path> checkpoint_path;
  // Called after every epoch; returning false stops training early.
  std::function<bool(const LossRecord&)> on_epoch;
};

struct TrainResult {
  std::vector<LossRecord> history;
  std::size_t iterations = 0;  // generator steps
};

// Every window of S1, normalized and flattened once up front.
struct WindowBank {
  Tensor history;  // |S1| x (N h)
  Tensor future;   // |S1| x (N f)
  std::vector<std::size_t> index;
};

inline WindowBank build_window_bank(const PriceMatrix& m, const WindowConfig& wcfg) {
  wcfg.validate();
  const auto starts = training_indices(static_cast<std::size_t>(m.days()), static_cast<std::size_t>(wcfg.width()));
  WindowBank bank;
  bank.index = starts;
  const auto count = static_cast<Index>(starts.size());
  bank.history.resize(count, m.assets() * wcfg.history);
  bank.future.resize(count, m.assets() * wcfg.future);
  for (Index k = 0; k < count; ++k) {
    const WindowSample w = extract_window(m, starts[static_cast<std::size_t>(k)], wcfg, true);
    bank.history.row(k) = flatten_row(w.history);
    bank.future.row(k) = flatten_row(*w.future);
  }
  return bank;
}

inline Tensor gather_rows(const Tensor& src, const std::vector<std::size_t>& order, std::size_t first,
                          std::size_t count) {
  Tensor out(static_cast<Index>(count), src.cols());
  for (std::size_t k = 0; k < count; ++k) out.row(static_cast<Index>(k)) = src.row(static_cast<Index>(order[first + k]));
  return out;
}

inline Tensor normal_matrix(Index rows, Index cols, CounterRng& rng) {
  Tensor z(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) z(r, c) = rng.normal();
  }
  return z;
}

/// Adversarial training. Each epoch visits S1 in a fresh random order; per
/// minibatch the generator side (E, G and F) steps first, a fake future is
/// then drawn from the updated generator and the critic takes its step(s).
/// Random streams are keyed by the absolute epoch number, so a run resumed
/// from a checkpoint continues exactly as an uninterrupted one would.
inline TrainResult train(GanBundle& b, const PriceMatrix& m, const TrainConfig& cfg, const WindowConfig& wcfg,
                         const TrainOptions& options = {}) {
  cfg.validate();
  validate(m);
  b.validate();
  if (m.assets() != b.dims.assets || wcfg.history != b.dims.history || wcfg.future != b.dims.future) {
    throw DimensionError("training data " + shape_string(m.values) + " with window (" +
                         std::to_string(wcfg.history) + ", " + std::to_string(wcfg.future) +
                         ") does not match networks built for N=" + std::to_string(b.dims.assets) +
                         ", h=" + std::to_string(b.dims.history) + ", f=" + std::to_string(b.dims.future));
  }
  if (cfg.latent != b.dims.latent) {
    throw DimensionError("config latent dimension " + std::to_string(cfg.latent) + " differs from network's " +
                         std::to_string(b.dims.latent));
  }

  const WindowBank bank = build_window_bank(m, wcfg);
  const std::size_t samples = bank.index.size();
  const bool acgan = b.mode == GanMode::Acgan;
  const double lambda2 = acgan ? cfg.lambda2 : 0.0;

  b.config = cfg;
  b.encoder.adam.config = cfg.adam;
  b.simulator.adam.config = cfg.adam;
  b.discriminator.adam.config = cfg.adam;
  if (b.decoder) b.decoder->adam.config = cfg.adam;

  const CounterRng root(cfg.seed);
  TrainResult result;
  const std::uint64_t first_epoch = b.epochs_completed + 1;
  for (std::uint64_t epoch = first_epoch; epoch < first_epoch + cfg.epochs; ++epoch) {
    const CounterRng epoch_rng = root.fork(epoch);
    CounterRng order_rng = epoch_rng.fork(1);
    CounterRng noise_rng = epoch_rng.fork(2);
    CounterRng dropout_rng = epoch_rng.fork(3);
    CounterRng eps_rng = epoch_rng.fork(4);

    std::vector<std::size_t> order(samples);
    for (std::size_t k = 0; k < samples; ++k) order[k] = k;
    order_rng.shuffle(order);

    LossRecord rec;
    rec.epoch = static_cast<std::size_t>(epoch);
    double ap_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t first = 0; first < samples; first += cfg.batch_size) {
      const std::size_t count = std::min(cfg.batch_size, samples - first);
      const auto rows = static_cast<Index>(count);
      try {
        const Tensor history = gather_rows(bank.history, order, first, count);
        const Tensor real_future = gather_rows(bank.future, order, first, count);

        Tensor z = normal_matrix(rows, b.dims.latent, noise_rng);
        const GeneratorLoss gl = generator_loss(b, history, z, lambda2, ad::Phase::Train, dropout_rng);
        if (!std::isfinite(gl.total)) throw NumericError("generator loss is not finite");
        apply_adam(b.encoder, gl.encoder_grads);
        apply_adam(b.simulator, gl.simulator_grads);
        if (acgan) apply_adam(*b.decoder, gl.decoder_grads);

        double critic_total = 0.0, wasserstein = 0.0, penalty = 0.0;
        for (std::size_t step = 0; step < cfg.critic_steps; ++step) {
          if (step > 0) z = normal_matrix(rows, b.dims.latent, noise_rng);
          const Tensor fake = generate(b, z, history, ad::Phase::Train, dropout_rng);
          Vector eps(rows);
          for (Index r = 0; r < rows; ++r) eps(r) = eps_rng.uniform();
          const CriticLoss dl =
              discriminator_loss(b, history, real_future, fake, eps, cfg.lambda1, ad::Phase::Train, dropout_rng);
          if (!std::isfinite(dl.total)) throw NumericError("critic loss is not finite");
          apply_adam(b.discriminator, dl.grads);
          critic_total += dl.total;
          wasserstein += dl.wasserstein;
          penalty += dl.penalty;
        }
        const auto steps = static_cast<double>(cfg.critic_steps);
        rec.critic_loss += critic_total / steps;
        rec.critic_wasserstein += wasserstein / steps;
        rec.gradient_penalty += penalty / steps;
        rec.generator_score += gl.score;
        rec.generator_loss += gl.total;
        if (gl.autoencoding) ap_sum += *gl.autoencoding;
      } catch (const NumericError& e) {
        throw TrainingAborted("epoch " + std::to_string(epoch) + ", window index " +
                              std::to_string(bank.index[order[first]]) + ": " + e.what());
      }
      ++batches;
      ++result.iterations;
    }
    const auto n = static_cast<double>(batches);
    rec.critic_loss /= n;
    rec.critic_wasserstein /= n;
    rec.gradient_penalty /= n;
    rec.generator_score /= n;
    rec.generator_loss /= n;
    if (acgan) rec.autoencoding = ap_sum / n;

    b.epochs_completed = epoch;
    result.history.push_back(rec);
    if (options.checkpoint_path) save_checkpoint(*options.checkpoint_path, b);
    if (options.on_epoch && !options.on_epoch(rec)) break;
  }
  return result;
}

inline void write_loss_history(std::ostream& out, const std::vector<LossRecord>& history) {
  out << "epoch,critic_wasserstein,gradient_penalty,generator_score,autoencoding_penalty,critic_loss,"
         "generator_loss\n";
  for (const LossRecord& r : history) {
    out << r.epoch << ',' << format_double(r.critic_wasserstein) << ',' << format_double(r.gradient_penalty)
        << ',' << format_double(r.generator_score) << ','
        << (r.autoencoding ? format_double(*r.autoencoding) : std::string("NA")) << ','
        << format_double(r.critic_loss) << ',' << format_double(r.generator_loss) << '\n';
  }
}

}  // namespace acgan
