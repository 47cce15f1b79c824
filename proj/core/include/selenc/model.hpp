// Copyright 2026 The selenc Authors
// SPDX-License-Identifier: Apache-2.0

// Tiny dense models with closed-form backprop.
//
// A model is a stack of dense layers z = W a + b followed by an optional tanh.
// Parameters live in one flat vector ordered layer by layer: weights
// row-major (out x in), then the bias. A one-layer stack without activation is
// the linear model; two layers with a tanh hidden layer is the MLP.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace selenc {

enum class Activation { none, tanh };

enum class LossKind { squared_error, soft_cross_entropy };

std::string_view to_string(LossKind kind) noexcept;
LossKind parse_loss_kind(std::string_view name);

struct LayerSpec {
  std::size_t in = 0;
  std::size_t out = 0;
  Activation activation = Activation::none;
  bool bias = true;

  std::size_t weight_count() const { return in * out; }
  std::size_t param_count() const { return in * out + (bias ? out : 0); }
};

struct TensorShape {
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const { return rows * cols; }
  bool operator==(const TensorShape&) const = default;
};

struct Tensor {
  TensorShape shape;
  std::vector<double> values;

  bool operator==(const Tensor&) const = default;
};

class ModelShape {
 public:
  explicit ModelShape(std::vector<LayerSpec> layers);

  static ModelShape linear(std::size_t in, std::size_t out = 1, bool bias = true);
  static ModelShape mlp(std::size_t in, std::size_t hidden, std::size_t out = 1);

  // {"layers": [{"in": d, "out": h, "activation": "tanh"|"none", "bias": true}]}
  static ModelShape from_json(std::string_view text);
  std::string to_json() const;

  const std::vector<LayerSpec>& layers() const { return layers_; }
  std::size_t input_dim() const { return layers_.front().in; }
  std::size_t output_dim() const { return layers_.back().out; }
  std::size_t total_params() const { return total_params_; }

  // [offset, offset + count) of layer i's weights and bias in the flat vector.
  std::pair<std::size_t, std::size_t> layer_range(std::size_t layer) const;

  // Weight and bias tensors in flattening order.
  std::vector<TensorShape> tensor_shapes() const;

  bool operator==(const ModelShape& other) const;

 private:
  std::vector<LayerSpec> layers_;
  std::vector<std::size_t> offsets_;
  std::size_t total_params_ = 0;
};

using ParamVector = std::vector<double>;

struct Dataset {
  std::vector<std::vector<double>> inputs;
  std::vector<std::vector<double>> targets;

  std::size_t size() const { return inputs.size(); }
  // Throws Errc::shape when rows are ragged, empty, or do not match `shape`.
  void validate(const ModelShape& shape) const;
};

ParamVector flatten(std::span<const Tensor> tensors);
std::vector<Tensor> reshape(std::span<const double> params, const ModelShape& shape);

// Uniform(-0.5, 0.5) initialisation from a seeded stream.
ParamVector init_params(const ModelShape& shape, std::uint64_t seed);

std::vector<double> forward(std::span<const double> params, const ModelShape& shape,
                            std::span<const double> x);

struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

// Loss and parameter gradient for one (x, y) pair.
LossGrad sample_loss_and_grad(std::span<const double> params, const ModelShape& shape,
                              std::span<const double> x, std::span<const double> y,
                              LossKind kind);

// Mean loss over the dataset and its gradient.
LossGrad loss_and_grad(std::span<const double> params, const ModelShape& shape,
                       const Dataset& data, LossKind kind);

// Full-batch gradient descent; returns the loss before each step.
std::vector<double> train_gd(ParamVector& params, const ModelShape& shape, const Dataset& data,
                             LossKind kind, std::size_t steps, double lr);

void require_finite(std::span<const double> values, std::string_view what);

}  // namespace selenc
