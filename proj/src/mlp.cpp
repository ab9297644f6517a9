/// @file mlp.cpp

#include "genreforge/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "genreforge/error.hpp"
#include "genreforge/random.hpp"

namespace genreforge::mlp {
namespace {

void check_input(const MlpModel& model, std::span<const double> x) {
  if (x.size() != model.in_dim()) {
    throw Error(ErrorKind::DimensionMismatch, "MLP expects " + std::to_string(model.in_dim()) +
                                                  " inputs, got " + std::to_string(x.size()));
  }
}

template <typename Fn>
void for_each_param(MlpModel& a, const MlpModel& b, Fn&& fn) {
  for (std::size_t i = 0; i < a.w1.data.size(); ++i) fn(a.w1.data[i], b.w1.data[i]);
  for (std::size_t i = 0; i < a.b1.size(); ++i) fn(a.b1[i], b.b1[i]);
  for (std::size_t i = 0; i < a.w2.data.size(); ++i) fn(a.w2.data[i], b.w2.data[i]);
  for (std::size_t i = 0; i < a.b2.size(); ++i) fn(a.b2[i], b.b2[i]);
}

}  // namespace

MlpModel init(std::size_t in_dim, std::size_t n_classes, std::size_t hidden, std::uint64_t seed) {
  if (in_dim == 0 || n_classes == 0 || hidden == 0) {
    throw Error(ErrorKind::InvalidArgument, "MLP dimensions must be >= 1");
  }
  Rng rng(seed);
  MlpModel m{Matrix(hidden, in_dim), std::vector<double>(hidden, 0.0), Matrix(n_classes, hidden),
             std::vector<double>(n_classes, 0.0)};
  const double s1 = std::sqrt(2.0 / static_cast<double>(in_dim));
  const double s2 = std::sqrt(2.0 / static_cast<double>(hidden));
  for (double& w : m.w1.data) w = s1 * rng.normal();
  for (double& w : m.w2.data) w = s2 * rng.normal();
  return m;
}

MlpGradients zeros_like(const MlpModel& model) {
  return {Matrix(model.w1.rows, model.w1.cols), std::vector<double>(model.b1.size(), 0.0),
          Matrix(model.w2.rows, model.w2.cols), std::vector<double>(model.b2.size(), 0.0)};
}

ForwardCache forward_cached(const MlpModel& model, std::span<const double> x) {
  check_input(model, x);
  ForwardCache c;
  const std::size_t h = model.hidden();
  c.hidden_pre.resize(h);
  c.hidden.resize(h);
  for (std::size_t j = 0; j < h; ++j) {
    const auto w = model.w1.row(j);
    double z = model.b1[j];
    for (std::size_t i = 0; i < x.size(); ++i) z += w[i] * x[i];
    c.hidden_pre[j] = z;
    c.hidden[j] = z > 0.0 ? z : 0.0;
  }
  c.logits.resize(model.n_classes());
  for (std::size_t k = 0; k < model.n_classes(); ++k) {
    const auto w = model.w2.row(k);
    double z = model.b2[k];
    for (std::size_t j = 0; j < h; ++j) z += w[j] * c.hidden[j];
    c.logits[k] = z;
  }
  c.probs = softmax(c.logits);
  return c;
}

std::vector<double> forward(const MlpModel& model, std::span<const double> x) {
  return forward_cached(model, x).probs;
}

double loss(std::span<const double> probs, int label) { return cross_entropy(probs, label); }

double accumulate_gradients(const MlpModel& model, std::span<const double> x, int label, MlpGradients& g) {
  const ForwardCache c = forward_cached(model, x);
  if (label < 0 || static_cast<std::size_t>(label) >= model.n_classes()) {
    throw Error(ErrorKind::LabelOutOfRange, "label " + std::to_string(label));
  }
  const std::size_t h = model.hidden();
  std::vector<double> dlogits = c.probs;
  dlogits[static_cast<std::size_t>(label)] -= 1.0;

  std::vector<double> dhidden(h, 0.0);
  for (std::size_t k = 0; k < model.n_classes(); ++k) {
    const double d = dlogits[k];
    g.b2[k] += d;
    auto gw = g.w2.row(k);
    const auto w = model.w2.row(k);
    for (std::size_t j = 0; j < h; ++j) {
      gw[j] += d * c.hidden[j];
      dhidden[j] += d * w[j];
    }
  }
  for (std::size_t j = 0; j < h; ++j) {
    if (c.hidden_pre[j] <= 0.0) continue;
    const double d = dhidden[j];
    g.b1[j] += d;
    auto gw = g.w1.row(j);
    for (std::size_t i = 0; i < x.size(); ++i) gw[i] += d * x[i];
  }
  return loss(c.probs, label);
}

MlpGradients backward(const MlpModel& model, std::span<const double> x, int label) {
  MlpGradients g = zeros_like(model);
  accumulate_gradients(model, x, label, g);
  return g;
}

int predict(const MlpModel& model, std::span<const double> x) { return argmax(forward(model, x)); }

TrainResult train(MlpModel model, const VectorDataset& train_set, const TrainConfig& cfg,
                  const VectorDataset* validation) {
  if (train_set.empty()) throw Error(ErrorKind::EmptyDataset, "MLP training set is empty");
  if (cfg.batch_size == 0) throw Error(ErrorKind::InvalidArgument, "batch_size must be >= 1");

  Rng rng(cfg.seed);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  TrainHistory history;
  MlpGradients grads = zeros_like(model);

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(std::span(order));
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      grads = zeros_like(model);
      for (std::size_t i = start; i < end; ++i) {
        const auto& item = train_set.items[order[i]];
        if (predict(model, item.values) == item.label_index) ++correct;
        loss_sum += accumulate_gradients(model, item.values, item.label_index, grads);
      }
      const double step = cfg.learning_rate / static_cast<double>(end - start);
      for_each_param(model, grads, [step](double& p, double g) { p -= step * g; });
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    rec.train_accuracy = static_cast<double>(correct) / static_cast<double>(order.size());
    if (validation && !validation->empty()) {
      double vloss = 0.0;
      std::size_t vcorrect = 0;
      for (const auto& item : validation->items) {
        const auto probs = forward(model, item.values);
        vloss += loss(probs, item.label_index);
        if (argmax(probs) == item.label_index) ++vcorrect;
      }
      rec.val_loss = vloss / static_cast<double>(validation->size());
      rec.val_accuracy = static_cast<double>(vcorrect) / static_cast<double>(validation->size());
    }
    history.push_back(rec);
  }
  return {std::move(model), std::move(history)};
}

}  // namespace genreforge::mlp
