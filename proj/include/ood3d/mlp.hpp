#pragma once

#include <cstdint>
#include <vector>

#include "ood3d/rng.hpp"

namespace ood3d {

enum class LossKind { Bce, Focal };

struct TrainConfig {
  int epochs = 5;
  double lr0 = 1e-3;
  double poly_power = 3.0;
  LossKind loss = LossKind::Bce;
  double focal_gamma = 2.0;
  double focal_alpha = 0.25;
  int batch_size = 256;
  std::uint64_t rng_seed = 0;
};

// concat(embedding, 7 normalized box parameters, logits) plus the binary
// label. embed_dim marks the embedding segment for the Gaussian forge.
struct HeadInput {
  std::vector<double> x;
  int label = 0;  // 0 known, 1 unknown
  int embed_dim = 0;
};

struct AffineLayer {
  int in = 0;
  int out = 0;
  std::vector<double> weights;  // row-major out x in
  std::vector<double> biases;
};

// 3-layer dimension-halving binary classifier: d -> d/2 -> d/4 -> 1
// (integer division), rectifier hidden activations, sigmoid output.
struct MlpHead {
  std::vector<AffineLayer> layers;

  int input_dim() const { return layers.empty() ? 0 : layers.front().in; }
  std::size_t parameter_count() const;
  std::vector<double> flatten() const;
  void unflatten(const std::vector<double>& params);
};

// Seeded uniform +-sqrt(6/(fan_in+fan_out)) init. Throws WidthMismatch
// for input widths below 4 (the halving rule needs d/4 >= 1).
MlpHead make_head(int input_dim, std::uint64_t rng_seed);

// Widths the halving rule produces for a given input dim.
std::vector<int> head_widths(int input_dim);

double forward(const MlpHead& head, const std::vector<double>& x);

double loss_value(double p, int y, const TrainConfig& cfg);

// Gradient of the per-sample loss with respect to every parameter,
// flattened in the same order as MlpHead::flatten. Returns the loss.
double loss_gradient(const MlpHead& head, const std::vector<double>& x, int y,
                     const TrainConfig& cfg, std::vector<double>& grad);

// Polynomial decay: lr0 * (1 - t/total)^power, stepped per mini-batch.
double poly_lr(const TrainConfig& cfg, std::int64_t step, std::int64_t total_steps);

struct TrainResult {
  MlpHead head;
  std::vector<double> epoch_losses;  // mean per-sample loss per epoch
};

// Seeded mini-batch gradient descent (no momentum). Throws
// DegenerateDataset when the dataset is empty or single-label.
TrainResult train_head(const std::vector<HeadInput>& dataset, const TrainConfig& cfg);

// Max relative error between analytic gradients and central finite
// differences (step 1e-5) over all parameters.
double grad_check(const MlpHead& head, const std::vector<double>& x, int y,
                  const TrainConfig& cfg);

}  // namespace ood3d
