#include "ood3d/mlp.hpp"

#include <algorithm>
#include <cmath>

#include "ood3d/errors.hpp"

namespace ood3d {

namespace {

constexpr double kProbEps = 1e-7;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void affine_forward(const AffineLayer& layer, const std::vector<double>& x,
                    std::vector<double>& z) {
  z.assign(static_cast<std::size_t>(layer.out), 0.0);
  for (int o = 0; o < layer.out; ++o) {
    const double* row = layer.weights.data() + static_cast<std::size_t>(o) *
                                                   static_cast<std::size_t>(layer.in);
    double acc = layer.biases[static_cast<std::size_t>(o)];
    for (int i = 0; i < layer.in; ++i) acc += row[i] * x[static_cast<std::size_t>(i)];
    z[static_cast<std::size_t>(o)] = acc;
  }
}

struct ForwardCache {
  // x0 is the input; z1/a1, z2/a2 the hidden pre/post activations; z3 the
  // output logit and p the sigmoid.
  std::vector<double> x0, z1, a1, z2, a2;
  double z3 = 0.0;
  double p = 0.5;
};

void forward_cached(const MlpHead& head, const std::vector<double>& x, ForwardCache& c) {
  c.x0 = x;
  affine_forward(head.layers[0], c.x0, c.z1);
  c.a1 = c.z1;
  for (double& v : c.a1) v = std::max(v, 0.0);
  affine_forward(head.layers[1], c.a1, c.z2);
  c.a2 = c.z2;
  for (double& v : c.a2) v = std::max(v, 0.0);
  std::vector<double> z3v;
  affine_forward(head.layers[2], c.a2, z3v);
  c.z3 = z3v[0];
  c.p = sigmoid(c.z3);
}

// dL/dp at the clamped probability.
double loss_grad_p(double p, int y, const TrainConfig& cfg) {
  p = std::clamp(p, kProbEps, 1.0 - kProbEps);
  if (cfg.loss == LossKind::Bce) {
    return y == 1 ? -1.0 / p : 1.0 / (1.0 - p);
  }
  const double pt = y == 1 ? p : 1.0 - p;
  const double at = y == 1 ? cfg.focal_alpha : 1.0 - cfg.focal_alpha;
  const double g = cfg.focal_gamma;
  const double d_pt =
      at * g * std::pow(1.0 - pt, g - 1.0) * std::log(pt) - at * std::pow(1.0 - pt, g) / pt;
  return y == 1 ? d_pt : -d_pt;
}

}  // namespace

std::size_t MlpHead::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weights.size() + l.biases.size();
  return n;
}

std::vector<double> MlpHead::flatten() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (const auto& l : layers) {
    out.insert(out.end(), l.weights.begin(), l.weights.end());
    out.insert(out.end(), l.biases.begin(), l.biases.end());
  }
  return out;
}

void MlpHead::unflatten(const std::vector<double>& params) {
  if (params.size() != parameter_count()) {
    throw WidthMismatch("parameter vector does not match head layout");
  }
  std::size_t pos = 0;
  for (auto& l : layers) {
    std::copy(params.begin() + static_cast<std::ptrdiff_t>(pos),
              params.begin() + static_cast<std::ptrdiff_t>(pos + l.weights.size()),
              l.weights.begin());
    pos += l.weights.size();
    std::copy(params.begin() + static_cast<std::ptrdiff_t>(pos),
              params.begin() + static_cast<std::ptrdiff_t>(pos + l.biases.size()),
              l.biases.begin());
    pos += l.biases.size();
  }
}

std::vector<int> head_widths(int input_dim) {
  return {input_dim, input_dim / 2, input_dim / 4, 1};
}

MlpHead make_head(int input_dim, std::uint64_t rng_seed) {
  if (input_dim < 4) {
    throw WidthMismatch("head input width must be >= 4, got " + std::to_string(input_dim));
  }
  const auto widths = head_widths(input_dim);
  Rng rng(rng_seed);
  MlpHead head;
  for (std::size_t k = 0; k + 1 < widths.size(); ++k) {
    AffineLayer layer;
    layer.in = widths[k];
    layer.out = widths[k + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(layer.in + layer.out));
    layer.weights.resize(static_cast<std::size_t>(layer.in) * static_cast<std::size_t>(layer.out));
    for (double& w : layer.weights) w = rng.uniform(-bound, bound);
    layer.biases.assign(static_cast<std::size_t>(layer.out), 0.0);
    head.layers.push_back(std::move(layer));
  }
  return head;
}

double forward(const MlpHead& head, const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != head.input_dim()) {
    throw WidthMismatch("input width " + std::to_string(x.size()) + " != head width " +
                        std::to_string(head.input_dim()));
  }
  ForwardCache c;
  forward_cached(head, x, c);
  return c.p;
}

double loss_value(double p, int y, const TrainConfig& cfg) {
  p = std::clamp(p, kProbEps, 1.0 - kProbEps);
  if (cfg.loss == LossKind::Bce) {
    return -(y == 1 ? std::log(p) : std::log(1.0 - p));
  }
  const double pt = y == 1 ? p : 1.0 - p;
  const double at = y == 1 ? cfg.focal_alpha : 1.0 - cfg.focal_alpha;
  return -at * std::pow(1.0 - pt, cfg.focal_gamma) * std::log(pt);
}

double loss_gradient(const MlpHead& head, const std::vector<double>& x, int y,
                     const TrainConfig& cfg, std::vector<double>& grad) {
  if (static_cast<int>(x.size()) != head.input_dim()) {
    throw WidthMismatch("input width does not match head");
  }
  ForwardCache c;
  forward_cached(head, x, c);
  const double loss = loss_value(c.p, y, cfg);

  // dL/dz3 through the sigmoid; the rectifier uses subgradient 0 at the kink.
  const double dz3 = loss_grad_p(c.p, y, cfg) * c.p * (1.0 - c.p);

  const AffineLayer& l1 = head.layers[0];
  const AffineLayer& l2 = head.layers[1];
  const AffineLayer& l3 = head.layers[2];

  std::vector<double> da2(static_cast<std::size_t>(l3.in), 0.0);
  for (int i = 0; i < l3.in; ++i) da2[static_cast<std::size_t>(i)] = dz3 * l3.weights[static_cast<std::size_t>(i)];
  std::vector<double> dz2 = da2;
  for (int i = 0; i < l2.out; ++i) {
    if (c.z2[static_cast<std::size_t>(i)] <= 0.0) dz2[static_cast<std::size_t>(i)] = 0.0;
  }

  std::vector<double> da1(static_cast<std::size_t>(l2.in), 0.0);
  for (int o = 0; o < l2.out; ++o) {
    const double g = dz2[static_cast<std::size_t>(o)];
    if (g == 0.0) continue;
    const double* row = l2.weights.data() + static_cast<std::size_t>(o) *
                                                static_cast<std::size_t>(l2.in);
    for (int i = 0; i < l2.in; ++i) da1[static_cast<std::size_t>(i)] += g * row[i];
  }
  std::vector<double> dz1 = da1;
  for (int i = 0; i < l1.out; ++i) {
    if (c.z1[static_cast<std::size_t>(i)] <= 0.0) dz1[static_cast<std::size_t>(i)] = 0.0;
  }

  grad.assign(head.parameter_count(), 0.0);
  std::size_t pos = 0;
  // layer 1
  for (int o = 0; o < l1.out; ++o) {
    const double g = dz1[static_cast<std::size_t>(o)];
    for (int i = 0; i < l1.in; ++i) {
      grad[pos + static_cast<std::size_t>(o) * static_cast<std::size_t>(l1.in) +
           static_cast<std::size_t>(i)] = g * c.x0[static_cast<std::size_t>(i)];
    }
  }
  pos += l1.weights.size();
  for (int o = 0; o < l1.out; ++o) grad[pos + static_cast<std::size_t>(o)] = dz1[static_cast<std::size_t>(o)];
  pos += l1.biases.size();
  // layer 2
  for (int o = 0; o < l2.out; ++o) {
    const double g = dz2[static_cast<std::size_t>(o)];
    for (int i = 0; i < l2.in; ++i) {
      grad[pos + static_cast<std::size_t>(o) * static_cast<std::size_t>(l2.in) +
           static_cast<std::size_t>(i)] = g * c.a1[static_cast<std::size_t>(i)];
    }
  }
  pos += l2.weights.size();
  for (int o = 0; o < l2.out; ++o) grad[pos + static_cast<std::size_t>(o)] = dz2[static_cast<std::size_t>(o)];
  pos += l2.biases.size();
  // layer 3
  for (int i = 0; i < l3.in; ++i) {
    grad[pos + static_cast<std::size_t>(i)] = dz3 * c.a2[static_cast<std::size_t>(i)];
  }
  pos += l3.weights.size();
  grad[pos] = dz3;
  return loss;
}

double poly_lr(const TrainConfig& cfg, std::int64_t step, std::int64_t total_steps) {
  const double frac = 1.0 - static_cast<double>(step) / static_cast<double>(total_steps);
  return cfg.lr0 * std::pow(frac, cfg.poly_power);
}

TrainResult train_head(const std::vector<HeadInput>& dataset, const TrainConfig& cfg) {
  if (dataset.empty()) throw DegenerateDataset("empty training set");
  bool has0 = false;
  bool has1 = false;
  for (const auto& s : dataset) {
    (s.label == 1 ? has1 : has0) = true;
  }
  if (!has0 || !has1) throw DegenerateDataset("training set contains a single label");
  if (cfg.epochs < 1 || !(cfg.lr0 > 0.0)) throw ConfigError("epochs >= 1 and lr0 > 0 required");

  const int dim = static_cast<int>(dataset.front().x.size());
  for (const auto& s : dataset) {
    if (static_cast<int>(s.x.size()) != dim) {
      throw WidthMismatch("inconsistent head input widths in training set");
    }
  }

  TrainResult result;
  result.head = make_head(dim, cfg.rng_seed);
  Rng shuffle_rng(mix_seed(cfg.rng_seed, 1));

  const std::int64_t n = static_cast<std::int64_t>(dataset.size());
  const std::int64_t batch = std::max<std::int64_t>(1, cfg.batch_size);
  const std::int64_t batches_per_epoch = (n + batch - 1) / batch;
  const std::int64_t total_steps = static_cast<std::int64_t>(cfg.epochs) * batches_per_epoch;

  std::vector<std::size_t> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<double> grad;
  std::vector<double> batch_grad(result.head.parameter_count());
  std::vector<double> params = result.head.flatten();
  std::int64_t step = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::int64_t b = 0; b < batches_per_epoch; ++b) {
      const std::int64_t lo = b * batch;
      const std::int64_t hi = std::min(n, lo + batch);
      std::fill(batch_grad.begin(), batch_grad.end(), 0.0);
      for (std::int64_t k = lo; k < hi; ++k) {
        const HeadInput& s = dataset[order[static_cast<std::size_t>(k)]];
        epoch_loss += loss_gradient(result.head, s.x, s.label, cfg, grad);
        for (std::size_t p = 0; p < grad.size(); ++p) batch_grad[p] += grad[p];
      }
      const double lr = poly_lr(cfg, step, total_steps);
      const double scale = lr / static_cast<double>(hi - lo);
      for (std::size_t p = 0; p < params.size(); ++p) params[p] -= scale * batch_grad[p];
      result.head.unflatten(params);
      ++step;
    }
    result.epoch_losses.push_back(epoch_loss / static_cast<double>(n));
  }
  return result;
}

double grad_check(const MlpHead& head, const std::vector<double>& x, int y,
                  const TrainConfig& cfg) {
  std::vector<double> analytic;
  loss_gradient(head, x, y, cfg, analytic);

  MlpHead probe_head = head;
  std::vector<double> params = head.flatten();
  constexpr double kStep = 1e-5;
  double max_rel = 0.0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    const double saved = params[p];
    params[p] = saved + kStep;
    probe_head.unflatten(params);
    const double plus = loss_value(forward(probe_head, x), y, cfg);
    params[p] = saved - kStep;
    probe_head.unflatten(params);
    const double minus = loss_value(forward(probe_head, x), y, cfg);
    params[p] = saved;
    const double numeric = (plus - minus) / (2.0 * kStep);
    const double denom = std::max({std::abs(analytic[p]), std::abs(numeric), 1.0});
    max_rel = std::max(max_rel, std::abs(analytic[p] - numeric) / denom);
  }
  return max_rel;
}

}  // namespace ood3d
