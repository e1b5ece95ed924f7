#pragma once

// Independent reference computations shared by the unit tests and the
// acceptance binary. None of this calls into the code under test except to
// read parameters.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "cerl/nn.hpp"
#include "cerl/rng.hpp"

namespace oracle {

/// Random network with every parameter perturbed (gains and offsets too, so
/// their gradients are exercised away from 1 and 0).
inline cerl::nn::Mlp random_net(std::size_t in, std::vector<std::size_t> hidden, std::size_t out,
                                cerl::nn::Activation out_act, cerl::Rng& rng, bool norm = true) {
  cerl::nn::MlpSpec spec{in, std::move(hidden), out, cerl::nn::Activation::elu, out_act, norm};
  cerl::nn::Mlp net = cerl::nn::make_mlp(spec, rng);
  for (auto& layer : net.layers) {
    for (double& g : layer.gain) g = 1.0 + 0.3 * cerl::gaussian(rng);
    for (double& o : layer.offset) o = 0.2 * cerl::gaussian(rng);
  }
  return net;
}

/// Straight-line forward pass of one sample, written from the layer equations.
inline std::vector<double> forward_one(const cerl::nn::Mlp& net, std::vector<double> x) {
  for (const auto& layer : net.layers) {
    const std::size_t in = layer.weight.rows();
    const std::size_t out = layer.weight.cols();
    std::vector<double> z(out);
    for (std::size_t o = 0; o < out; ++o) {
      double s = layer.bias[o];
      for (std::size_t i = 0; i < in; ++i) s += x[i] * layer.weight(i, o);
      z[o] = s;
    }
    if (layer.norm) {
      double mean = 0.0;
      for (double v : z) mean += v;
      mean /= static_cast<double>(out);
      double var = 0.0;
      for (double v : z) var += (v - mean) * (v - mean);
      var /= static_cast<double>(out);
      for (std::size_t o = 0; o < out; ++o) {
        z[o] = (z[o] - mean) / std::sqrt(var + 1e-5) * layer.gain[o] + layer.offset[o];
      }
    }
    for (double& v : z) {
      switch (layer.activation) {
        case cerl::nn::Activation::elu: v = v > 0.0 ? v : std::exp(v) - 1.0; break;
        case cerl::nn::Activation::tanh: v = std::tanh(v); break;
        case cerl::nn::Activation::identity: break;
      }
    }
    x = std::move(z);
  }
  return x;
}

/// sum over rows of output(row) . weights(row), via the reference forward.
inline double contracted(const cerl::nn::Mlp& net, const cerl::Matrix& batch,
                         const cerl::Matrix& weights) {
  double s = 0.0;
  for (std::size_t t = 0; t < batch.rows(); ++t) {
    const auto row = batch.row(t);
    const auto y = forward_one(net, {row.begin(), row.end()});
    for (std::size_t j = 0; j < y.size(); ++j) s += y[j] * weights(t, j);
  }
  return s;
}

inline double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / scale;
}

/// Largest relative error between `analytic` (shaped like net) and central
/// differences of contracted(net, batch, weights) with step h.
inline double max_parameter_gradient_error(cerl::nn::Mlp net, const cerl::Matrix& batch,
                                           const cerl::Matrix& weights,
                                           const cerl::nn::Mlp& analytic, double h = 1e-5) {
  double worst = 0.0;
  auto params = net.blocks();
  const auto grads = analytic.blocks();
  for (std::size_t b = 0; b < params.size(); ++b) {
    for (std::size_t i = 0; i < params[b].size(); ++i) {
      const double keep = params[b][i];
      params[b][i] = keep + h;
      const double up = contracted(net, batch, weights);
      params[b][i] = keep - h;
      const double down = contracted(net, batch, weights);
      params[b][i] = keep;
      worst = std::max(worst, relative_error(grads[b][i], (up - down) / (2.0 * h)));
    }
  }
  return worst;
}

inline double max_input_gradient_error(const cerl::nn::Mlp& net, cerl::Matrix batch,
                                       const cerl::Matrix& weights, const cerl::Matrix& analytic,
                                       double h = 1e-5) {
  double worst = 0.0;
  for (std::size_t k = 0; k < batch.size(); ++k) {
    const double keep = batch.values()[k];
    batch.values()[k] = keep + h;
    const double up = contracted(net, batch, weights);
    batch.values()[k] = keep - h;
    const double down = contracted(net, batch, weights);
    batch.values()[k] = keep;
    worst = std::max(worst, relative_error(analytic.values()[k], (up - down) / (2.0 * h)));
  }
  return worst;
}

/// UCB written directly from its definition over raw values.
inline std::vector<double> ucb(const std::vector<double>& v, const std::vector<std::int64_t>& y,
                               double c) {
  const double lo = *std::min_element(v.begin(), v.end());
  const double hi = *std::max_element(v.begin(), v.end());
  double total = 0.0;
  for (auto n : y) total += static_cast<double>(n);
  const double log_total = total >= 2.0 ? std::log(total) : 0.0;
  std::vector<double> u(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double vn = hi > lo ? (v[i] - lo) / (hi - lo) : 0.5;
    u[i] = y[i] == 0 ? std::numeric_limits<double>::infinity()
                     : vn + c * std::sqrt(log_total / static_cast<double>(y[i]));
  }
  return u;
}

/// P(slot i wins a size-m tournament with replacement among k slots), where
/// `rank[i]` is 0 for the best slot. Exact: P(best of m draws has rank r).
inline std::vector<double> tournament_probabilities(const std::vector<std::size_t>& rank,
                                                    std::size_t m) {
  const double k = static_cast<double>(rank.size());
  std::vector<double> p(rank.size());
  for (std::size_t i = 0; i < rank.size(); ++i) {
    const double r = static_cast<double>(rank[i]);
    // all draws have rank >= r, minus all draws have rank >= r + 1
    p[i] = std::pow((k - r) / k, static_cast<double>(m)) -
           std::pow((k - r - 1.0) / k, static_cast<double>(m));
  }
  return p;
}

/// Finite-horizon value iteration for DelayedChain on an exact lattice: the
/// position is kept in units of scale / K and actions are j / K for integer j
/// in [-K, K], so every transition stays on the lattice. Start x0 = m * scale / K.
inline double chain_value(std::int64_t m, std::int64_t K, double bonus, double cost, double scale,
                          std::size_t horizon) {
  const auto goal = static_cast<std::int64_t>(std::llround(static_cast<double>(K) / scale));
  // value[u] with t steps left; u >= goal is absorbing (already finished)
  std::vector<double> next(static_cast<std::size_t>(goal), 0.0);
  for (std::size_t t = 0; t < horizon; ++t) {
    std::vector<double> cur(static_cast<std::size_t>(goal), -std::numeric_limits<double>::infinity());
    for (std::int64_t u = 0; u < goal; ++u) {
      for (std::int64_t j = -K; j <= K; ++j) {
        const std::int64_t v = std::max<std::int64_t>(u + j, 0);
        const double q = v >= goal
                             ? bonus
                             : -cost * static_cast<double>(std::abs(j)) / static_cast<double>(K) +
                                   next[static_cast<std::size_t>(v)];
        cur[static_cast<std::size_t>(u)] = std::max(cur[static_cast<std::size_t>(u)], q);
      }
    }
    next = std::move(cur);
  }
  return next[static_cast<std::size_t>(m)];
}

/// Simulates the bang-bang policy on PointNav2D dynamics (step 0.05, 200 steps,
/// exact landing on the goal) and returns its undiscounted return.
inline double point_nav_greedy_return(double px, double py, double gx, double gy) {
  double ret = 0.0;
  for (int t = 0; t < 200; ++t) {
    const double ax = std::clamp((gx - px) / 0.05, -1.0, 1.0);
    const double ay = std::clamp((gy - py) / 0.05, -1.0, 1.0);
    px += 0.05 * ax;
    py += 0.05 * ay;
    ret -= std::hypot(px - gx, py - gy);
  }
  return ret;
}

}  // namespace oracle
