#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace mfg {

/// Fixed-shape perceptron: input -> hidden -> hidden -> scalar, leaky-ReLU
/// activations on the hidden layers. Parameters live in one flat vector
/// (layout: W1, b1, W2, b2, w3, b3) so optimisers and serialisation treat
/// the network as an opaque parameter blob.
class Mlp {
 public:
  static constexpr double kLeakySlope = 0.01;

  Mlp() = default;
  Mlp(int input_dim, int hidden_dim);

  int input_dim() const { return input_dim_; }
  int hidden_dim() const { return hidden_dim_; }
  int param_count() const { return param_count_; }

  /// Glorot-uniform weights, zero biases; reproducible from the seed.
  std::vector<double> init_params(std::uint64_t seed) const;

  /// Scratch buffers reused across calls; safe to share within one thread.
  struct Workspace {
    std::vector<double> h1, h2, pre1, pre2, d1, d2;
  };

  double forward(std::span<const double> theta, std::span<const double> x,
                 Workspace& ws) const;

  /// Forward pass plus gradients of the scalar output. `param_grad` (length
  /// param_count) and `input_grad` (length input_dim) may be empty spans if
  /// not wanted.
  double forward_backward(std::span<const double> theta,
                          std::span<const double> x,
                          std::span<double> param_grad,
                          std::span<double> input_grad, Workspace& ws) const;

 private:
  int input_dim_ = 0;
  int hidden_dim_ = 0;
  int param_count_ = 0;
};

}  // namespace mfg
