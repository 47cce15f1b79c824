// Copyright 2026 The selenc Authors
// SPDX-License-Identifier: Apache-2.0

#include "selenc/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"
#include "selenc/error.hpp"
#include "selenc/random.hpp"

namespace selenc {

std::string_view to_string(LossKind kind) noexcept {
  return kind == LossKind::squared_error ? "squared_error" : "soft_cross_entropy";
}

LossKind parse_loss_kind(std::string_view name) {
  if (name == "squared_error") return LossKind::squared_error;
  if (name == "soft_cross_entropy") return LossKind::soft_cross_entropy;
  fail(Errc::config, "unknown loss kind '" + std::string(name) + "'");
}

ModelShape::ModelShape(std::vector<LayerSpec> layers) : layers_(std::move(layers)) {
  require(!layers_.empty(), Errc::shape, "model needs at least one layer");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const LayerSpec& l = layers_[i];
    require(l.in > 0 && l.out > 0, Errc::shape, "layer dimensions must be positive");
    if (i > 0) {
      require(l.in == layers_[i - 1].out, Errc::shape,
              "layer " + std::to_string(i) + " input does not match previous output");
    }
    offsets_.push_back(total_params_);
    total_params_ += l.param_count();
  }
}

ModelShape ModelShape::linear(std::size_t in, std::size_t out, bool bias) {
  return ModelShape({LayerSpec{in, out, Activation::none, bias}});
}

ModelShape ModelShape::mlp(std::size_t in, std::size_t hidden, std::size_t out) {
  return ModelShape({LayerSpec{in, hidden, Activation::tanh, true},
                     LayerSpec{hidden, out, Activation::none, true}});
}

ModelShape ModelShape::from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::format, std::string("model shape: ") + e.what());
  }
  require(j.is_object() && j.contains("layers") && j["layers"].is_array(), Errc::format,
          "model shape needs a 'layers' array");
  std::vector<LayerSpec> layers;
  for (const auto& lj : j["layers"]) {
    LayerSpec l;
    try {
      l.in = lj.at("in").get<std::size_t>();
      l.out = lj.at("out").get<std::size_t>();
      const std::string act = lj.value("activation", "none");
      if (act == "tanh") {
        l.activation = Activation::tanh;
      } else if (act == "none") {
        l.activation = Activation::none;
      } else {
        fail(Errc::format, "unknown activation '" + act + "'");
      }
      l.bias = lj.value("bias", true);
    } catch (const nlohmann::json::exception& e) {
      fail(Errc::format, std::string("model layer: ") + e.what());
    }
    layers.push_back(l);
  }
  return ModelShape(std::move(layers));
}

std::string ModelShape::to_json() const {
  nlohmann::json layers = nlohmann::json::array();
  for (const LayerSpec& l : layers_) {
    layers.push_back({{"in", l.in},
                      {"out", l.out},
                      {"activation", l.activation == Activation::tanh ? "tanh" : "none"},
                      {"bias", l.bias}});
  }
  return nlohmann::json{{"layers", layers}}.dump();
}

std::pair<std::size_t, std::size_t> ModelShape::layer_range(std::size_t layer) const {
  require(layer < layers_.size(), Errc::shape, "layer index out of range");
  return {offsets_[layer], layers_[layer].param_count()};
}

std::vector<TensorShape> ModelShape::tensor_shapes() const {
  std::vector<TensorShape> shapes;
  for (const LayerSpec& l : layers_) {
    shapes.push_back({l.out, l.in});
    if (l.bias) shapes.push_back({l.out, 1});
  }
  return shapes;
}

bool ModelShape::operator==(const ModelShape& other) const {
  if (layers_.size() != other.layers_.size()) return false;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const LayerSpec& a = layers_[i];
    const LayerSpec& b = other.layers_[i];
    if (a.in != b.in || a.out != b.out || a.activation != b.activation || a.bias != b.bias) {
      return false;
    }
  }
  return true;
}

void require_finite(std::span<const double> values, std::string_view what) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      fail(Errc::numeric, std::string(what) + ": non-finite value at index " + std::to_string(i));
    }
  }
}

void Dataset::validate(const ModelShape& shape) const {
  require(!inputs.empty(), Errc::shape, "dataset is empty");
  require(inputs.size() == targets.size(), Errc::shape, "dataset inputs/targets count differ");
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    require(inputs[k].size() == shape.input_dim(), Errc::shape,
            "dataset row " + std::to_string(k) + " has wrong input dimension");
    require(targets[k].size() == shape.output_dim(), Errc::shape,
            "dataset row " + std::to_string(k) + " has wrong target dimension");
    require_finite(inputs[k], "dataset input");
    require_finite(targets[k], "dataset target");
  }
}

ParamVector flatten(std::span<const Tensor> tensors) {
  ParamVector out;
  for (const Tensor& t : tensors) {
    require(t.values.size() == t.shape.size(), Errc::shape, "tensor value count != rows*cols");
    out.insert(out.end(), t.values.begin(), t.values.end());
  }
  return out;
}

std::vector<Tensor> reshape(std::span<const double> params, const ModelShape& shape) {
  require(params.size() == shape.total_params(), Errc::shape,
          "reshape: expected " + std::to_string(shape.total_params()) + " parameters, got " +
              std::to_string(params.size()));
  std::vector<Tensor> out;
  std::size_t offset = 0;
  for (const TensorShape& ts : shape.tensor_shapes()) {
    Tensor t{ts, std::vector<double>(params.begin() + static_cast<std::ptrdiff_t>(offset),
                                     params.begin() + static_cast<std::ptrdiff_t>(offset + ts.size()))};
    offset += ts.size();
    out.push_back(std::move(t));
  }
  return out;
}

ParamVector init_params(const ModelShape& shape, std::uint64_t seed) {
  Rng rng(derive_seed(seed, {stream::init}));
  ParamVector p(shape.total_params());
  for (double& v : p) v = rng.uniform(-0.5, 0.5);
  return p;
}

namespace {

void check_params(std::span<const double> params, const ModelShape& shape) {
  require(params.size() == shape.total_params(), Errc::shape,
          "parameter vector length " + std::to_string(params.size()) + " != model size " +
              std::to_string(shape.total_params()));
}

// Pre-activations and activations of every layer for one input.
struct Trace {
  std::vector<std::vector<double>> activations;  // a_0 = x, a_1, ..., a_L
  std::vector<std::vector<double>> pre;          // z_1, ..., z_L
};

Trace run_forward(std::span<const double> params, const ModelShape& shape,
                  std::span<const double> x) {
  require(x.size() == shape.input_dim(), Errc::shape,
          "input dimension " + std::to_string(x.size()) + " != model input " +
              std::to_string(shape.input_dim()));
  Trace tr;
  tr.activations.emplace_back(x.begin(), x.end());
  for (std::size_t li = 0; li < shape.layers().size(); ++li) {
    const LayerSpec& l = shape.layers()[li];
    const double* w = params.data() + shape.layer_range(li).first;
    const double* b = w + l.weight_count();
    const std::vector<double>& a = tr.activations.back();
    std::vector<double> z(l.out);
    for (std::size_t r = 0; r < l.out; ++r) {
      double acc = l.bias ? b[r] : 0.0;
      for (std::size_t c = 0; c < l.in; ++c) acc += w[r * l.in + c] * a[c];
      z[r] = acc;
    }
    std::vector<double> out = z;
    if (l.activation == Activation::tanh) {
      for (double& v : out) v = std::tanh(v);
    }
    tr.pre.push_back(std::move(z));
    tr.activations.push_back(std::move(out));
  }
  return tr;
}

// Loss for one sample and dLoss/dOutput.
double output_loss(std::span<const double> out, std::span<const double> y, LossKind kind,
                   std::vector<double>& d_out) {
  d_out.assign(out.size(), 0.0);
  if (kind == LossKind::squared_error) {
    double loss = 0.0;
    for (std::size_t j = 0; j < out.size(); ++j) {
      const double r = out[j] - y[j];
      loss += r * r;
      d_out[j] = 2.0 * r;
    }
    return loss;
  }
  // -sum_j y_j log softmax(out)_j with a stable log-sum-exp.
  const double mx = *std::max_element(out.begin(), out.end());
  double sum_exp = 0.0;
  for (double o : out) sum_exp += std::exp(o - mx);
  const double lse = mx + std::log(sum_exp);
  const double y_sum = std::accumulate(y.begin(), y.end(), 0.0);
  double loss = 0.0;
  for (std::size_t j = 0; j < out.size(); ++j) {
    const double log_p = out[j] - lse;
    loss -= y[j] * log_p;
    d_out[j] = std::exp(log_p) * y_sum - y[j];
  }
  return loss;
}

}  // namespace

std::vector<double> forward(std::span<const double> params, const ModelShape& shape,
                            std::span<const double> x) {
  check_params(params, shape);
  return std::move(run_forward(params, shape, x).activations.back());
}

LossGrad sample_loss_and_grad(std::span<const double> params, const ModelShape& shape,
                              std::span<const double> x, std::span<const double> y,
                              LossKind kind) {
  check_params(params, shape);
  require(y.size() == shape.output_dim(), Errc::shape, "target dimension mismatch");
  const Trace tr = run_forward(params, shape, x);

  LossGrad result;
  result.grad.assign(params.size(), 0.0);
  std::vector<double> delta;
  result.loss = output_loss(tr.activations.back(), y, kind, delta);

  for (std::size_t li = shape.layers().size(); li-- > 0;) {
    const LayerSpec& l = shape.layers()[li];
    if (l.activation == Activation::tanh) {
      for (std::size_t r = 0; r < l.out; ++r) {
        const double t = tr.activations[li + 1][r];
        delta[r] *= 1.0 - t * t;
      }
    }
    const std::size_t off = shape.layer_range(li).first;
    const std::vector<double>& a_prev = tr.activations[li];
    for (std::size_t r = 0; r < l.out; ++r) {
      for (std::size_t c = 0; c < l.in; ++c) result.grad[off + r * l.in + c] = delta[r] * a_prev[c];
      if (l.bias) result.grad[off + l.weight_count() + r] = delta[r];
    }
    if (li > 0) {
      const double* w = params.data() + off;
      std::vector<double> prev(l.in, 0.0);
      for (std::size_t r = 0; r < l.out; ++r) {
        for (std::size_t c = 0; c < l.in; ++c) prev[c] += w[r * l.in + c] * delta[r];
      }
      delta = std::move(prev);
    }
  }
  return result;
}

LossGrad loss_and_grad(std::span<const double> params, const ModelShape& shape,
                       const Dataset& data, LossKind kind) {
  check_params(params, shape);
  require_finite(params, "model parameters");
  data.validate(shape);
  LossGrad total;
  total.grad.assign(params.size(), 0.0);
  for (std::size_t k = 0; k < data.size(); ++k) {
    const LossGrad s = sample_loss_and_grad(params, shape, data.inputs[k], data.targets[k], kind);
    total.loss += s.loss;
    for (std::size_t m = 0; m < params.size(); ++m) total.grad[m] += s.grad[m];
  }
  const double inv = 1.0 / static_cast<double>(data.size());
  total.loss *= inv;
  for (double& g : total.grad) g *= inv;
  return total;
}

std::vector<double> train_gd(ParamVector& params, const ModelShape& shape, const Dataset& data,
                             LossKind kind, std::size_t steps, double lr) {
  std::vector<double> losses;
  losses.reserve(steps);
  for (std::size_t s = 0; s < steps; ++s) {
    const LossGrad lg = loss_and_grad(params, shape, data, kind);
    require(std::isfinite(lg.loss), Errc::numeric, "training loss is not finite");
    losses.push_back(lg.loss);
    for (std::size_t m = 0; m < params.size(); ++m) params[m] -= lr * lg.grad[m];
  }
  require_finite(params, "trained parameters");
  return losses;
}

}  // namespace selenc
