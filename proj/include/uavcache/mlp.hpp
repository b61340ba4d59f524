// Copyright 2026 The uavcache Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "uavcache/errors.hpp"
#include "uavcache/world.hpp"

namespace uavcache::agents {

// Fully connected network with ReLU hidden layers and a linear output layer.
// Activations are column-major: one column per sample.
class Mlp {
 public:
  Mlp() = default;

  // Layer sizes from input to output, e.g. {4, 128, 128, 40}. Weights use
  // He-uniform initialization, biases start at zero.
  Mlp(std::vector<int> sizes, Rng& rng) : sizes_(std::move(sizes)) {
    if (sizes_.size() < 2) throw DomainError("Mlp: need at least input and output sizes");
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      const int in = sizes_[l], out = sizes_[l + 1];
      const double bound = std::sqrt(6.0 / in);
      std::uniform_real_distribution<double> u(-bound, bound);
      Eigen::MatrixXd w(out, in);
      for (int c = 0; c < in; ++c)
        for (int r = 0; r < out; ++r) w(r, c) = u(rng);
      weights_.push_back(std::move(w));
      biases_.push_back(Eigen::VectorXd::Zero(out));
    }
  }

  const std::vector<int>& sizes() const { return sizes_; }
  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  std::size_t layer_count() const { return weights_.size(); }
  std::vector<Eigen::MatrixXd>& weights() { return weights_; }
  std::vector<Eigen::VectorXd>& biases() { return biases_; }
  const std::vector<Eigen::MatrixXd>& weights() const { return weights_; }
  const std::vector<Eigen::VectorXd>& biases() const { return biases_; }

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const {
    Eigen::MatrixXd a = x;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      Eigen::MatrixXd z = (weights_[l] * a).colwise() + biases_[l];
      a = l + 1 < weights_.size() ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z;
    }
    return a;
  }

  Eigen::VectorXd forward(std::span<const double> x) const {
    Eigen::Map<const Eigen::VectorXd> v(x.data(), static_cast<Eigen::Index>(x.size()));
    return forward(Eigen::MatrixXd(v));
  }

  // Same architecture, parameters laid out like weights()/biases().
  struct Gradient {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;

    double squared_norm() const {
      double s = 0.0;
      for (const auto& w : weights) s += w.squaredNorm();
      for (const auto& b : biases) s += b.squaredNorm();
      return s;
    }
    void scale(double f) {
      for (auto& w : weights) w *= f;
      for (auto& b : biases) b *= f;
    }
  };

  // Mean squared TD error over a batch, (1/B) sum_j (y_j - Q(s_j, a_j))^2,
  // and its gradient. `states` has one column per sample.
  double loss_and_gradient(const Eigen::MatrixXd& states, std::span<const int> actions,
                           std::span<const double> targets, Gradient* grad) const {
    const auto batch = states.cols();
    const std::size_t layers = weights_.size();
    std::vector<Eigen::MatrixXd> acts{states};
    std::vector<Eigen::MatrixXd> pre;
    for (std::size_t l = 0; l < layers; ++l) {
      Eigen::MatrixXd z = (weights_[l] * acts.back()).colwise() + biases_[l];
      pre.push_back(z);
      acts.push_back(l + 1 < layers ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z);
    }
    const Eigen::MatrixXd& q = acts.back();
    Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(q.rows(), batch);
    double loss = 0.0;
    for (Eigen::Index j = 0; j < batch; ++j) {
      const double err = q(actions[j], j) - targets[j];
      loss += err * err;
      delta(actions[j], j) = 2.0 * err / static_cast<double>(batch);
    }
    loss /= static_cast<double>(batch);
    if (!grad) return loss;
    grad->weights.assign(layers, Eigen::MatrixXd());
    grad->biases.assign(layers, Eigen::VectorXd());
    for (std::size_t l = layers; l-- > 0;) {
      grad->weights[l] = delta * acts[l].transpose();
      grad->biases[l] = delta.rowwise().sum();
      if (l > 0) {
        delta = weights_[l].transpose() * delta;
        delta = delta.cwiseProduct((pre[l - 1].array() > 0.0).cast<double>().matrix());
      }
    }
    return loss;
  }

  void apply(const Gradient& g, double step) {
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      weights_[l] -= step * g.weights[l];
      biases_[l] -= step * g.biases[l];
    }
  }

  bool finite() const {
    for (const auto& w : weights_)
      if (!w.allFinite()) return false;
    for (const auto& b : biases_)
      if (!b.allFinite()) return false;
    return true;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) n += weights_[l].size() + biases_[l].size();
    return n;
  }

 private:
  std::vector<int> sizes_;
  std::vector<Eigen::MatrixXd> weights_;
  std::vector<Eigen::VectorXd> biases_;
};

}  // namespace uavcache::agents
