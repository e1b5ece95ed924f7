#include "cerl/nn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cerl/error.hpp"
#include "cerl/kernels.hpp"
#include "activation.hpp"

namespace cerl::nn {

namespace kn = cerl::kernels::parallel;

std::size_t Mlp::in_dim() const { return layers.empty() ? 0 : layers.front().in_dim(); }
std::size_t Mlp::out_dim() const { return layers.empty() ? 0 : layers.back().out_dim(); }

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& b : blocks()) n += b.size();
  return n;
}

std::vector<std::span<double>> Mlp::blocks() {
  std::vector<std::span<double>> out;
  out.reserve(layers.size() * 4);
  for (auto& l : layers) {
    out.emplace_back(l.weight.values());
    out.emplace_back(l.bias);
    if (l.norm) {
      out.emplace_back(l.gain);
      out.emplace_back(l.offset);
    }
  }
  return out;
}

std::vector<std::span<const double>> Mlp::blocks() const {
  std::vector<std::span<const double>> out;
  out.reserve(layers.size() * 4);
  for (const auto& l : layers) {
    out.emplace_back(l.weight.values());
    out.emplace_back(l.bias);
    if (l.norm) {
      out.emplace_back(l.gain);
      out.emplace_back(l.offset);
    }
  }
  return out;
}

bool Mlp::same_shape(const Mlp& other) const {
  if (layers.size() != other.layers.size()) return false;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& a = layers[i];
    const auto& b = other.layers[i];
    if (a.weight.rows() != b.weight.rows() || a.weight.cols() != b.weight.cols() ||
        a.bias.size() != b.bias.size() || a.gain.size() != b.gain.size() ||
        a.offset.size() != b.offset.size() || a.norm != b.norm ||
        a.activation != b.activation) {
      return false;
    }
  }
  return true;
}

bool Mlp::all_finite() const {
  for (const auto& b : blocks()) {
    if (!std::all_of(b.begin(), b.end(), [](double v) { return std::isfinite(v); })) return false;
  }
  return true;
}

Mlp make_mlp(const MlpSpec& spec, Rng& rng) {
  if (spec.in_dim == 0 || spec.out_dim == 0) throw ConfigError("network dimensions must be > 0");
  std::vector<std::size_t> dims{spec.in_dim};
  dims.insert(dims.end(), spec.hidden.begin(), spec.hidden.end());
  dims.push_back(spec.out_dim);

  Mlp net;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const std::size_t in = dims[l];
    const std::size_t out = dims[l + 1];
    if (out == 0) throw ConfigError("hidden layer of width 0");
    const bool hidden = l + 2 < dims.size();
    Layer layer;
    layer.weight = WeightMatrix(in, out);
    layer.bias.assign(out, 0.0);
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> init(-bound, bound);
    for (double& w : layer.weight.values()) w = init(rng);
    for (double& b : layer.bias) b = init(rng);
    layer.norm = hidden && spec.layer_norm;
    if (layer.norm) {
      if (out < 2) throw ConfigError("layer norm needs a hidden width of at least 2");
      layer.gain.assign(out, 1.0);
      layer.offset.assign(out, 0.0);
    }
    layer.activation = hidden ? spec.hidden_activation : spec.output_activation;
    net.layers.push_back(std::move(layer));
  }
  return net;
}

Mlp zeros_like(const Mlp& net) {
  Mlp z = net;
  for (auto& b : z.blocks()) std::fill(b.begin(), b.end(), 0.0);
  return z;
}

namespace {

// Derivative expressed through the pre-activation n and output h.
double activation_slope(Activation a, double n, double h) {
  switch (a) {
    case Activation::elu:
      return n > 0.0 ? 1.0 : h + kEluAlpha;
    case Activation::tanh:
      return 1.0 - h * h;
    case Activation::identity:
      break;
  }
  return 1.0;
}

void apply_activation(Activation a, std::span<double> v) {
  if (a == Activation::elu) {
    detail::elu_inplace(v);
  } else if (a == Activation::tanh) {
    for (double& x : v) x = std::tanh(x);
  }
}

void check_input(const Mlp& net, const Matrix& batch) {
  if (net.layers.empty()) throw ShapeError("network has no layers");
  if (batch.cols() != net.in_dim()) {
    throw ShapeError("input has " + std::to_string(batch.cols()) + " columns, network expects " +
                     std::to_string(net.in_dim()));
  }
  if (!batch.all_finite()) throw NumericError("non-finite network input");
}

// Row-wise layer norm of z into n; optionally keeps x-hat and 1/std.
void normalize_rows(const Layer& layer, const Matrix& z, Matrix& n, Matrix* xhat,
                    std::vector<double>* inv_std) {
  const std::size_t width = z.cols();
  if (width < 2) throw ConfigError("layer norm needs a width of at least 2");
  const double inv_width = 1.0 / static_cast<double>(width);
  for (std::size_t t = 0; t < z.rows(); ++t) {
    const auto zr = z.row(t);
    double mean = 0.0;
    for (double v : zr) mean += v;
    mean *= inv_width;
    double var = 0.0;
    for (double v : zr) var += (v - mean) * (v - mean);
    var *= inv_width;
    const double inv = 1.0 / std::sqrt(var + kLayerNormEpsilon);
    auto nr = n.row(t);
    for (std::size_t j = 0; j < width; ++j) {
      const double xh = (zr[j] - mean) * inv;
      if (xhat) (*xhat)(t, j) = xh;
      nr[j] = xh * layer.gain[j] + layer.offset[j];
    }
    if (inv_std) (*inv_std)[t] = inv;
  }
}

Matrix run_forward(const Mlp& net, const Matrix& batch, GradientTape* tape) {
  check_input(net, batch);
  const std::size_t rows = batch.rows();
  if (tape) {
    tape->source = &net;
    tape->revision = net.revision();
    tape->records.clear();
    tape->records.resize(net.layers.size());
    tape->records.front().input = batch;
  }
  const Matrix* x = &batch;
  Matrix h;
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    const Layer& layer = net.layers[li];
    Matrix z(rows, layer.out_dim());
    kn::affine(*x, layer.weight, layer.bias, z);
    GradientTape::Record* rec = tape ? &tape->records[li] : nullptr;
    if (layer.norm) {
      Matrix n(rows, layer.out_dim());
      if (rec) {
        rec->normalized = Matrix(rows, layer.out_dim());
        rec->inv_std.resize(rows);
        normalize_rows(layer, z, n, &rec->normalized, &rec->inv_std);
      } else {
        normalize_rows(layer, z, n, nullptr, nullptr);
      }
      z = std::move(n);
    }
    if (rec) {
      rec->output = z;
      apply_activation(layer.activation, rec->output.values());
      rec->pre_activation = std::move(z);
      x = &rec->output;
    } else {
      apply_activation(layer.activation, z.values());
      h = std::move(z);
      x = &h;
    }
  }
  return tape ? tape->records.back().output : h;
}

void check_tape(const Mlp& net, const GradientTape& tape, const Matrix& output_grad) {
  if (tape.source != &net || tape.revision != net.revision() ||
      tape.records.size() != net.layers.size()) {
    throw UsageError("gradient tape does not belong to this network state");
  }
  const auto& last = tape.records.back().output;
  if (output_grad.rows() != last.rows() || output_grad.cols() != last.cols()) {
    throw ShapeError("output gradient shape does not match forward output");
  }
}

// Reverse sweep; `grads` may be null to skip parameter gradients.
Matrix run_backward(const Mlp& net, const GradientTape& tape, const Matrix& output_grad,
                    Mlp* grads, bool want_input_grad) {
  check_tape(net, tape, output_grad);
  const std::size_t rows = output_grad.rows();
  Matrix dh = output_grad;
  for (std::size_t li = net.layers.size(); li-- > 0;) {
    const Layer& layer = net.layers[li];
    const auto& rec = tape.records[li];
    const std::size_t width = layer.out_dim();

    Matrix dn = std::move(dh);
    if (layer.activation != Activation::identity) {
      auto dv = dn.values();
      const auto nv = rec.pre_activation.values();
      const auto hv = rec.output.values();
      for (std::size_t k = 0; k < dv.size(); ++k) {
        dv[k] *= activation_slope(layer.activation, nv[k], hv[k]);
      }
    }

    Matrix dz;
    if (layer.norm) {
      dz = Matrix(rows, width);
      const double inv_width = 1.0 / static_cast<double>(width);
      for (std::size_t t = 0; t < rows; ++t) {
        const auto dnr = dn.row(t);
        const auto xh = rec.normalized.row(t);
        double mean_dxh = 0.0;
        double mean_dxh_xh = 0.0;
        for (std::size_t j = 0; j < width; ++j) {
          const double dxh = dnr[j] * layer.gain[j];
          mean_dxh += dxh;
          mean_dxh_xh += dxh * xh[j];
          if (grads) {
            grads->layers[li].gain[j] += dnr[j] * xh[j];
            grads->layers[li].offset[j] += dnr[j];
          }
        }
        mean_dxh *= inv_width;
        mean_dxh_xh *= inv_width;
        auto dzr = dz.row(t);
        for (std::size_t j = 0; j < width; ++j) {
          const double dxh = dnr[j] * layer.gain[j];
          dzr[j] = rec.inv_std[t] * (dxh - mean_dxh - xh[j] * mean_dxh_xh);
        }
      }
    } else {
      dz = std::move(dn);
    }

    if (grads) {
      kn::accumulate_weight_grad(li == 0 ? rec.input : tape.records[li - 1].output, dz, grads->layers[li].weight, grads->layers[li].bias);
    }
    if (li > 0 || want_input_grad) {
      Matrix dx(rows, layer.in_dim());
      kn::backprop_input(dz, layer.weight, dx);
      dh = std::move(dx);
    }
  }
  return dh;
}

}  // namespace

ForwardResult forward(const Mlp& net, const Matrix& batch) {
  ForwardResult result;
  result.output = run_forward(net, batch, &result.tape);
  return result;
}

Matrix predict(const Mlp& net, const Matrix& batch) { return run_forward(net, batch, nullptr); }

std::vector<double> predict_one(const Mlp& net, std::span<const double> input) {
  Matrix x(1, input.size(), std::vector<double>(input.begin(), input.end()));
  Matrix y = run_forward(net, x, nullptr);
  return {y.values().begin(), y.values().end()};
}

Mlp backward(const Mlp& net, const GradientTape& tape, const Matrix& output_grad,
             Matrix* input_grad) {
  Mlp grads = zeros_like(net);
  Matrix dx = run_backward(net, tape, output_grad, &grads, input_grad != nullptr);
  if (input_grad) *input_grad = std::move(dx);
  return grads;
}

Matrix input_gradient(const Mlp& net, const GradientTape& tape, const Matrix& output_grad) {
  return run_backward(net, tape, output_grad, nullptr, true);
}

std::vector<double> layer_norm(std::span<const double> x, std::span<const double> gain,
                               std::span<const double> offset) {
  if (x.size() < 2) throw ConfigError("layer_norm needs at least 2 elements");
  if (gain.size() != x.size() || offset.size() != x.size()) {
    throw ShapeError("layer_norm: gain/offset length differs from input");
  }
  Layer layer;
  layer.gain.assign(gain.begin(), gain.end());
  layer.offset.assign(offset.begin(), offset.end());
  Matrix z(1, x.size(), std::vector<double>(x.begin(), x.end()));
  Matrix n(1, x.size());
  normalize_rows(layer, z, n, nullptr, nullptr);
  return {n.values().begin(), n.values().end()};
}

AdamState make_adam(const Mlp& net, double learning_rate) {
  AdamState s;
  s.first_moment = zeros_like(net);
  s.second_moment = zeros_like(net);
  s.learning_rate = learning_rate;
  return s;
}

void adam_step(Mlp& net, const Mlp& grads, AdamState& state) {
  if (!net.same_shape(grads) || !net.same_shape(state.first_moment) ||
      !net.same_shape(state.second_moment)) {
    throw ShapeError("adam_step: parameter, gradient and moment shapes differ");
  }
  ++state.step;
  const double step = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(state.beta1, step);
  const double correction2 = 1.0 - std::pow(state.beta2, step);
  const double b1 = state.beta1;
  const double b2 = state.beta2;
  const double lr = state.learning_rate;
  const double eps = state.epsilon;

  auto p = net.blocks();
  const auto g = grads.blocks();
  auto m = state.first_moment.blocks();
  auto v = state.second_moment.blocks();
  for (std::size_t k = 0; k < p.size(); ++k) {
    double* pk = p[k].data();
    const double* gk = g[k].data();
    double* mk = m[k].data();
    double* vk = v[k].data();
    const std::size_t n = p[k].size();
    for (std::size_t i = 0; i < n; ++i) {
      mk[i] = b1 * mk[i] + (1.0 - b1) * gk[i];
      vk[i] = b2 * vk[i] + (1.0 - b2) * gk[i] * gk[i];
      const double mhat = mk[i] / correction1;
      const double vhat = vk[i] / correction2;
      pk[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
  net.touch();
}

void blend_into(Mlp& target, const Mlp& source, double tau) {
  if (!target.same_shape(source)) throw ShapeError("blend_into: network shapes differ");
  auto t = target.blocks();
  const auto s = source.blocks();
  for (std::size_t k = 0; k < t.size(); ++k) {
    double* tk = t[k].data();
    const double* sk = s[k].data();
    for (std::size_t i = 0; i < t[k].size(); ++i) tk[i] = tau * sk[i] + (1.0 - tau) * tk[i];
  }
  target.touch();
}

}  // namespace cerl::nn
