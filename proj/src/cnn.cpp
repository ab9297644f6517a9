/// @file cnn.cpp

#include "genreforge/cnn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "genreforge/error.hpp"
#include "genreforge/random.hpp"

namespace genreforge::cnn {
namespace {

constexpr std::size_t kTaps = kKernel * kKernel;

void relu_in_place(std::vector<double>& v) {
  for (double& x : v) x = x > 0.0 ? x : 0.0;
}

/// Block indices inside layout(): conv1.w, conv1.b, conv2.w, conv2.b, then (w, b) per dense layer.
constexpr std::size_t kConv1W = 0;
constexpr std::size_t kConv1B = 1;
constexpr std::size_t kConv2W = 2;
constexpr std::size_t kConv2B = 3;
constexpr std::size_t dense_w(std::size_t layer) { return 4 + 2 * layer; }
constexpr std::size_t dense_b(std::size_t layer) { return 5 + 2 * layer; }

/// out = W x + b for W [out x in].
void dense_forward(std::span<const double> w, std::span<const double> b, std::span<const double> x,
                   std::vector<double>& out) {
  const std::size_t n_out = b.size();
  const std::size_t n_in = x.size();
  out.assign(n_out, 0.0);
  for (std::size_t o = 0; o < n_out; ++o) {
    const double* row = w.data() + o * n_in;
    double acc = b[o];
    for (std::size_t i = 0; i < n_in; ++i) acc += row[i] * x[i];
    out[o] = acc;
  }
}

}  // namespace

Tensor3 conv2d_forward(const Tensor3& input, std::span<const double> kernels, std::span<const double> biases) {
  if (input.height < kKernel || input.width < kKernel) {
    throw Error(ErrorKind::InputTooSmall, "conv input " + std::to_string(input.height) + "x" +
                                              std::to_string(input.width) + " is smaller than 3x3");
  }
  const std::size_t c_out = biases.size();
  const std::size_t c_in = input.channels;
  if (kernels.size() != c_out * c_in * kTaps) {
    throw Error(ErrorKind::ShapeMismatch, "kernel buffer does not match channel counts");
  }
  const std::size_t oh = input.height - 2;
  const std::size_t ow = input.width - 2;
  Tensor3 out(c_out, oh, ow);
  for (std::size_t co = 0; co < c_out; ++co) {
    double* plane = out.data.data() + co * oh * ow;
    std::fill(plane, plane + oh * ow, biases[co]);
    for (std::size_t ci = 0; ci < c_in; ++ci) {
      const double* k = kernels.data() + (co * c_in + ci) * kTaps;
      const double* in_plane = input.data.data() + ci * input.height * input.width;
      for (std::size_t ky = 0; ky < kKernel; ++ky) {
        for (std::size_t kx = 0; kx < kKernel; ++kx) {
          const double w = k[ky * kKernel + kx];
          for (std::size_t y = 0; y < oh; ++y) {
            double* dst = plane + y * ow;
            const double* src = in_plane + (y + ky) * input.width + kx;
            for (std::size_t x = 0; x < ow; ++x) dst[x] += w * src[x];
          }
        }
      }
    }
  }
  return out;
}

void conv2d_backward(const Tensor3& input, std::span<const double> kernels, const Tensor3& output_grad,
                     std::span<double> kernel_grad, std::span<double> bias_grad, Tensor3* input_grad) {
  const std::size_t c_out = output_grad.channels;
  const std::size_t c_in = input.channels;
  const std::size_t oh = output_grad.height;
  const std::size_t ow = output_grad.width;
  if (input_grad) *input_grad = Tensor3(c_in, input.height, input.width);
  for (std::size_t co = 0; co < c_out; ++co) {
    const double* g_plane = output_grad.data.data() + co * oh * ow;
    bias_grad[co] += std::accumulate(g_plane, g_plane + oh * ow, 0.0);
    for (std::size_t ci = 0; ci < c_in; ++ci) {
      const double* k = kernels.data() + (co * c_in + ci) * kTaps;
      double* gk = kernel_grad.data() + (co * c_in + ci) * kTaps;
      const double* in_plane = input.data.data() + ci * input.height * input.width;
      double* gin_plane = input_grad ? input_grad->data.data() + ci * input.height * input.width : nullptr;
      for (std::size_t ky = 0; ky < kKernel; ++ky) {
        for (std::size_t kx = 0; kx < kKernel; ++kx) {
          const double w = k[ky * kKernel + kx];
          double acc = 0.0;
          for (std::size_t y = 0; y < oh; ++y) {
            const double* g = g_plane + y * ow;
            const double* src = in_plane + (y + ky) * input.width + kx;
            for (std::size_t x = 0; x < ow; ++x) acc += g[x] * src[x];
            if (gin_plane) {
              double* dst = gin_plane + (y + ky) * input.width + kx;
              for (std::size_t x = 0; x < ow; ++x) dst[x] += w * g[x];
            }
          }
          gk[ky * kKernel + kx] += acc;
        }
      }
    }
  }
}

PoolResult maxpool_forward(const Tensor3& input) {
  if (input.height < 2 || input.width < 2) {
    throw Error(ErrorKind::InputTooSmall, "maxpool input must be at least 2x2");
  }
  const std::size_t ph = input.height / 2;
  const std::size_t pw = input.width / 2;
  PoolResult r{Tensor3(input.channels, ph, pw), std::vector<std::size_t>(input.channels * ph * pw)};
  for (std::size_t c = 0; c < input.channels; ++c) {
    for (std::size_t y = 0; y < ph; ++y) {
      for (std::size_t x = 0; x < pw; ++x) {
        std::size_t best = (c * input.height + 2 * y) * input.width + 2 * x;
        for (std::size_t dy = 0; dy < 2; ++dy) {
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t idx = (c * input.height + 2 * y + dy) * input.width + 2 * x + dx;
            if (input.data[idx] > input.data[best]) best = idx;
          }
        }
        const std::size_t o = (c * ph + y) * pw + x;
        r.output.data[o] = input.data[best];
        r.argmax[o] = best;
      }
    }
  }
  return r;
}

Tensor3 maxpool_backward(const PoolResult& pool, const Tensor3& input_shape_like, const Tensor3& output_grad) {
  Tensor3 g(input_shape_like.channels, input_shape_like.height, input_shape_like.width);
  for (std::size_t o = 0; o < pool.argmax.size(); ++o) g.data[pool.argmax[o]] += output_grad.data[o];
  return g;
}

Architecture Architecture::baseline(std::size_t rows, std::size_t cols, std::size_t n_classes) {
  Architecture a;
  a.in_rows = rows;
  a.in_cols = cols;
  a.dense = {128};
  a.dropout = 0.0;
  a.n_classes = n_classes;
  return a;
}

void Architecture::validate() const {
  if (in_rows < 6 || in_cols < 6) {
    throw Error(ErrorKind::InputTooSmall, "CNN input must be at least 6x6, got " + std::to_string(in_rows) +
                                              "x" + std::to_string(in_cols));
  }
  if (conv1_filters == 0 || conv2_filters == 0 || dense.empty() || n_classes == 0 ||
      std::find(dense.begin(), dense.end(), std::size_t{0}) != dense.end()) {
    throw Error(ErrorKind::InvalidArgument, "CNN layer sizes must be positive and at least one dense layer given");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw Error(ErrorKind::InvalidArgument, "dropout must be in [0, 1)");
}

std::size_t ParamBlock::size() const {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::vector<ParamBlock> layout(const Architecture& arch) {
  arch.validate();
  std::vector<ParamBlock> blocks;
  std::size_t offset = 0;
  const auto add = [&](std::string name, std::vector<std::size_t> shape) {
    ParamBlock b{std::move(name), offset, std::move(shape)};
    offset += b.size();
    blocks.push_back(std::move(b));
  };
  add("conv1.w", {arch.conv1_filters, 1, kKernel, kKernel});
  add("conv1.b", {arch.conv1_filters});
  add("conv2.w", {arch.conv2_filters, arch.conv1_filters, kKernel, kKernel});
  add("conv2.b", {arch.conv2_filters});
  std::size_t fan_in = arch.flat_dim();
  for (std::size_t i = 0; i < arch.dense.size(); ++i) {
    add("dense" + std::to_string(i) + ".w", {arch.dense[i], fan_in});
    add("dense" + std::to_string(i) + ".b", {arch.dense[i]});
    fan_in = arch.dense[i];
  }
  add("out.w", {arch.n_classes, fan_in});
  add("out.b", {arch.n_classes});
  return blocks;
}

std::size_t parameter_count(const Architecture& arch) {
  const auto blocks = layout(arch);
  return blocks.back().offset + blocks.back().size();
}

std::span<double> CnnModel::block(std::size_t i) {
  const auto blocks = layout(arch);
  return std::span(params).subspan(blocks[i].offset, blocks[i].size());
}

std::span<const double> CnnModel::block(std::size_t i) const {
  const auto blocks = layout(arch);
  return std::span(params).subspan(blocks[i].offset, blocks[i].size());
}

CnnModel zeros(const Architecture& arch) { return {arch, std::vector<double>(parameter_count(arch), 0.0)}; }

CnnModel init(const Architecture& arch, std::uint64_t seed) {
  CnnModel m = zeros(arch);
  const auto blocks = layout(arch);
  Rng rng(seed);
  for (std::size_t i = 0; i < blocks.size(); i += 2) {
    const auto& w = blocks[i];
    const std::size_t fan_in = w.size() / w.shape[0];
    const bool is_output = i + 2 == blocks.size();
    const double scale = std::sqrt((is_output ? 1.0 : 2.0) / static_cast<double>(fan_in));
    for (std::size_t j = 0; j < w.size(); ++j) m.params[w.offset + j] = scale * rng.normal();
  }
  return m;
}

ForwardCache forward_cached(const CnnModel& model, const Matrix& grid, Mode mode, std::uint64_t dropout_seed) {
  const Architecture& a = model.arch;
  if (grid.rows != a.in_cols || grid.cols != a.in_rows) {
    throw Error(ErrorKind::ShapeMismatch, "CNN expects a " + std::to_string(a.in_cols) + "x" +
                                              std::to_string(a.in_rows) + " grid, got " + std::to_string(grid.rows) +
                                              "x" + std::to_string(grid.cols));
  }
  const auto blocks = layout(a);
  const auto slice = [&](std::size_t i) { return std::span(model.params).subspan(blocks[i].offset, blocks[i].size()); };

  ForwardCache c;
  c.input = Tensor3(1, a.in_rows, a.in_cols);
  for (std::size_t t = 0; t < grid.rows; ++t) {
    for (std::size_t k = 0; k < grid.cols; ++k) c.input.at(0, k, t) = grid(t, k);
  }
  c.act1 = conv2d_forward(c.input, slice(kConv1W), slice(kConv1B));
  relu_in_place(c.act1.data);
  c.act2 = conv2d_forward(c.act1, slice(kConv2W), slice(kConv2B));
  relu_in_place(c.act2.data);
  c.pool = maxpool_forward(c.act2);

  std::span<const double> x = c.pool.output.data;
  c.dense_act.resize(a.dense.size());
  for (std::size_t l = 0; l < a.dense.size(); ++l) {
    dense_forward(slice(dense_w(l)), slice(dense_b(l)), x, c.dense_act[l]);
    relu_in_place(c.dense_act[l]);
    if (l == 0 && mode == Mode::Train && a.dropout > 0.0) {
      Rng rng(dropout_seed);
      const double keep_scale = 1.0 / (1.0 - a.dropout);
      c.dropout_mask.resize(c.dense_act[0].size());
      for (std::size_t i = 0; i < c.dropout_mask.size(); ++i) {
        c.dropout_mask[i] = rng.uniform() < a.dropout ? 0.0 : keep_scale;
        c.dense_act[0][i] *= c.dropout_mask[i];
      }
    }
    x = c.dense_act[l];
  }
  std::vector<double> logits;
  dense_forward(slice(dense_w(a.dense.size())), slice(dense_b(a.dense.size())), x, logits);
  c.probs = softmax(logits);
  return c;
}

std::vector<double> forward(const CnnModel& model, const Matrix& grid, Mode mode, std::uint64_t dropout_seed) {
  return forward_cached(model, grid, mode, dropout_seed).probs;
}

int predict(const CnnModel& model, const Matrix& grid) { return argmax(forward(model, grid)); }

void backward(const CnnModel& model, const ForwardCache& c, int label, std::span<double> grads) {
  const Architecture& a = model.arch;
  if (grads.size() != model.params.size()) throw Error(ErrorKind::ShapeMismatch, "gradient buffer size");
  if (label < 0 || static_cast<std::size_t>(label) >= a.n_classes) {
    throw Error(ErrorKind::LabelOutOfRange, "label " + std::to_string(label));
  }
  const auto blocks = layout(a);
  const auto param = [&](std::size_t i) { return std::span(model.params).subspan(blocks[i].offset, blocks[i].size()); };
  const auto grad = [&](std::size_t i) { return grads.subspan(blocks[i].offset, blocks[i].size()); };

  // Softmax + cross-entropy.
  std::vector<double> delta = c.probs;
  delta[static_cast<std::size_t>(label)] -= 1.0;

  // Dense stack, from the output layer back to dense0.
  for (std::size_t l = a.dense.size() + 1; l-- > 0;) {
    std::span<const double> layer_in = l == 0 ? std::span<const double>(c.pool.output.data)
                                              : std::span<const double>(c.dense_act[l - 1]);
    const auto w = param(dense_w(l));
    auto gw = grad(dense_w(l));
    auto gb = grad(dense_b(l));
    const std::size_t n_in = layer_in.size();
    std::vector<double> prev(n_in, 0.0);
    for (std::size_t o = 0; o < delta.size(); ++o) {
      const double d = delta[o];
      gb[o] += d;
      if (d == 0.0) continue;
      double* gw_row = gw.data() + o * n_in;
      const double* w_row = w.data() + o * n_in;
      for (std::size_t i = 0; i < n_in; ++i) {
        gw_row[i] += d * layer_in[i];
        prev[i] += d * w_row[i];
      }
    }
    if (l > 0) {
      // Through ReLU (and the dropout mask when leaving dense0).
      const auto& act = c.dense_act[l - 1];
      for (std::size_t i = 0; i < n_in; ++i) {
        if (act[i] <= 0.0) {
          prev[i] = 0.0;
        } else if (l - 1 == 0 && !c.dropout_mask.empty()) {
          prev[i] *= c.dropout_mask[i];
        }
      }
    }
    delta = std::move(prev);
  }

  Tensor3 pooled_grad(c.pool.output.channels, c.pool.output.height, c.pool.output.width);
  pooled_grad.data = std::move(delta);
  Tensor3 g2 = maxpool_backward(c.pool, c.act2, pooled_grad);
  for (std::size_t i = 0; i < g2.data.size(); ++i) {
    if (c.act2.data[i] <= 0.0) g2.data[i] = 0.0;
  }
  Tensor3 g1;
  conv2d_backward(c.act1, param(kConv2W), g2, grad(kConv2W), grad(kConv2B), &g1);
  for (std::size_t i = 0; i < g1.data.size(); ++i) {
    if (c.act1.data[i] <= 0.0) g1.data[i] = 0.0;
  }
  conv2d_backward(c.input, param(kConv1W), g1, grad(kConv1W), grad(kConv1B), nullptr);
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& s) {
  if (grads.size() != params.size() || s.m.size() != params.size() || s.v.size() != params.size()) {
    throw Error(ErrorKind::ShapeMismatch, "Adam state, parameters and gradients differ in size");
  }
  ++s.t;
  const double bc1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.t));
  const double bc2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    s.m[i] = s.beta1 * s.m[i] + (1.0 - s.beta1) * g;
    s.v[i] = s.beta2 * s.v[i] + (1.0 - s.beta2) * g * g;
    const double m_hat = s.m[i] / bc1;
    const double v_hat = s.v[i] / bc2;
    params[i] -= s.learning_rate * m_hat / (std::sqrt(v_hat) + s.epsilon);
  }
}

TrainResult train(CnnModel model, const TensorDataset& train_set, const CnnTrainConfig& cfg,
                  const TensorDataset* validation) {
  if (train_set.empty()) throw Error(ErrorKind::EmptyDataset, "CNN training set is empty");
  if (cfg.batch_size == 0) throw Error(ErrorKind::InvalidArgument, "batch_size must be >= 1");

  Rng rng(cfg.seed);
  AdamState adam(model.params.size(), cfg.learning_rate);
  std::vector<double> grads(model.params.size());
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  TrainHistory history;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(std::span(order));
    const std::uint64_t epoch_seed = derive_seed(cfg.seed, epoch);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::fill(grads.begin(), grads.end(), 0.0);
      for (std::size_t i = start; i < end; ++i) {
        const auto& item = train_set.items[order[i]];
        const ForwardCache cache = forward_cached(model, item.grid, Mode::Train, derive_seed(epoch_seed, order[i]));
        loss_sum += cross_entropy(cache.probs, item.label_index);
        if (argmax(cache.probs) == item.label_index) ++correct;
        backward(model, cache, item.label_index, grads);
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      for (double& g : grads) g *= inv;
      adam_step(model.params, grads, adam);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    rec.train_accuracy = static_cast<double>(correct) / static_cast<double>(order.size());
    if (validation && !validation->empty()) {
      double vloss = 0.0;
      std::size_t vcorrect = 0;
      for (const auto& item : validation->items) {
        const auto probs = forward(model, item.grid);
        vloss += cross_entropy(probs, item.label_index);
        if (argmax(probs) == item.label_index) ++vcorrect;
      }
      rec.val_loss = vloss / static_cast<double>(validation->size());
      rec.val_accuracy = static_cast<double>(vcorrect) / static_cast<double>(validation->size());
    }
    history.push_back(rec);
  }
  return {std::move(model), std::move(history)};
}

}  // namespace genreforge::cnn
