#pragma once

// Dense multilayer perceptrons with exact reverse-mode gradients.
//
// Each layer computes
//     z = x * W + b
//     n = norm ? layer_norm(z) * gain + offset : z
//     h = activation(n)
// Hidden layers use layer norm and ELU; the output layer is un-normalized with
// tanh (actors) or identity (critics).

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cerl/matrix.hpp"
#include "cerl/rng.hpp"

namespace cerl::nn {

inline constexpr double kLayerNormEpsilon = 1e-5;
inline constexpr double kEluAlpha = 1.0;

enum class Activation : std::uint8_t { identity = 0, elu = 1, tanh = 2 };

struct Layer {
  WeightMatrix weight;
  std::vector<double> bias;
  std::vector<double> gain;    // empty unless norm
  std::vector<double> offset;  // empty unless norm
  bool norm = false;
  Activation activation = Activation::identity;

  std::size_t in_dim() const noexcept { return weight.rows(); }
  std::size_t out_dim() const noexcept { return weight.cols(); }
  bool operator==(const Layer&) const = default;
};

/// Parameters of one network. Also used as the container for its gradients
/// and for Adam moments, which share the exact same shape.
class Mlp {
 public:
  std::vector<Layer> layers;

  std::size_t in_dim() const;
  std::size_t out_dim() const;
  std::size_t parameter_count() const;

  /// Parameter blocks in genome order: per layer, the weight matrix
  /// (row-major), then bias, then gain and offset when normalized.
  std::vector<std::span<double>> blocks();
  std::vector<std::span<const double>> blocks() const;

  /// Shape and configuration of every layer match.
  bool same_shape(const Mlp& other) const;
  bool all_finite() const;

  /// Invalidates tapes recorded against this object.
  void touch() noexcept { ++revision_; }
  std::uint64_t revision() const noexcept { return revision_; }

  bool operator==(const Mlp& other) const { return layers == other.layers; }

 private:
  std::uint64_t revision_ = 0;
};

struct MlpSpec {
  std::size_t in_dim = 0;
  std::vector<std::size_t> hidden;
  std::size_t out_dim = 0;
  Activation hidden_activation = Activation::elu;
  Activation output_activation = Activation::identity;
  bool layer_norm = true;
};

/// Weights and biases ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)); gain 1, offset 0.
Mlp make_mlp(const MlpSpec& spec, Rng& rng);

Mlp zeros_like(const Mlp& net);

/// Intermediates of one forward pass, enough to run backward exactly.
struct GradientTape {
  struct Record {
    Matrix input;       // x, first layer only; later layers read the previous output
    Matrix normalized;  // x-hat (empty unless norm)
    std::vector<double> inv_std;
    Matrix pre_activation;  // n
    Matrix output;          // h
  };
  const Mlp* source = nullptr;
  std::uint64_t revision = 0;
  std::vector<Record> records;
};

struct ForwardResult {
  Matrix output;
  GradientTape tape;
};

/// Batched forward pass, rows are samples.
ForwardResult forward(const Mlp& net, const Matrix& batch);

/// Forward pass without recording a tape.
Matrix predict(const Mlp& net, const Matrix& batch);
std::vector<double> predict_one(const Mlp& net, std::span<const double> input);

/// Parameter gradients of sum(output .* output_grad). When `input_grad` is
/// non-null it receives the gradient with respect to the batch.
Mlp backward(const Mlp& net, const GradientTape& tape, const Matrix& output_grad,
             Matrix* input_grad = nullptr);

/// Gradient with respect to the network input only; skips weight gradients.
Matrix input_gradient(const Mlp& net, const GradientTape& tape, const Matrix& output_grad);

std::vector<double> layer_norm(std::span<const double> x, std::span<const double> gain,
                               std::span<const double> offset);

struct AdamState {
  Mlp first_moment;
  Mlp second_moment;
  std::uint64_t step = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

AdamState make_adam(const Mlp& net, double learning_rate);

/// One bias-corrected Adam step, in place.
void adam_step(Mlp& net, const Mlp& grads, AdamState& state);

/// target <- tau * source + (1 - tau) * target, elementwise.
void blend_into(Mlp& target, const Mlp& source, double tau);

}  // namespace cerl::nn
