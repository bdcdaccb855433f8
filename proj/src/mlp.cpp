#include "mfg/mlp.hpp"

#include <cassert>
#include <cmath>

#include "mfg/errors.hpp"
#include "mfg/rng.hpp"

namespace mfg {

namespace {
inline double leaky(double v) { return v >= 0.0 ? v : Mlp::kLeakySlope * v; }
inline double leaky_grad(double v) { return v >= 0.0 ? 1.0 : Mlp::kLeakySlope; }
}  // namespace

Mlp::Mlp(int input_dim, int hidden_dim)
    : input_dim_(input_dim), hidden_dim_(hidden_dim) {
  if (input_dim <= 0 || hidden_dim <= 0) {
    throw ArgumentError("Mlp: dimensions must be positive");
  }
  param_count_ = hidden_dim * input_dim + hidden_dim +  // W1, b1
                 hidden_dim * hidden_dim + hidden_dim +  // W2, b2
                 hidden_dim + 1;                         // w3, b3
}

std::vector<double> Mlp::init_params(std::uint64_t seed) const {
  std::vector<double> theta(static_cast<size_t>(param_count_), 0.0);
  std::mt19937_64 rng = make_stream(seed, 0x6d6c70 /* "mlp" */);
  size_t off = 0;
  auto glorot_matrix = [&](int rows, int cols) {
    const double bound = std::sqrt(6.0 / (rows + cols));
    for (int i = 0; i < rows * cols; ++i) {
      theta[off++] = (2.0 * uniform01(rng) - 1.0) * bound;
    }
    off += static_cast<size_t>(rows);  // biases stay zero
  };
  glorot_matrix(hidden_dim_, input_dim_);
  glorot_matrix(hidden_dim_, hidden_dim_);
  glorot_matrix(1, hidden_dim_);
  assert(off == theta.size());
  return theta;
}

double Mlp::forward(std::span<const double> theta, std::span<const double> x,
                    Workspace& ws) const {
  return forward_backward(theta, x, {}, {}, ws);
}

double Mlp::forward_backward(std::span<const double> theta,
                             std::span<const double> x,
                             std::span<double> param_grad,
                             std::span<double> input_grad,
                             Workspace& ws) const {
  if (theta.size() != static_cast<size_t>(param_count_) ||
      x.size() != static_cast<size_t>(input_dim_)) {
    throw ContractError("Mlp: parameter or input size mismatch");
  }
  const int n = input_dim_;
  const int h = hidden_dim_;
  const double* W1 = theta.data();
  const double* b1 = W1 + static_cast<size_t>(h) * n;
  const double* W2 = b1 + h;
  const double* b2 = W2 + static_cast<size_t>(h) * h;
  const double* w3 = b2 + h;
  const double* b3 = w3 + h;

  ws.pre1.resize(static_cast<size_t>(h));
  ws.h1.resize(static_cast<size_t>(h));
  ws.pre2.resize(static_cast<size_t>(h));
  ws.h2.resize(static_cast<size_t>(h));

  for (int i = 0; i < h; ++i) {
    double acc = b1[i];
    const double* w = W1 + static_cast<size_t>(i) * n;
    for (int j = 0; j < n; ++j) acc += w[j] * x[static_cast<size_t>(j)];
    ws.pre1[static_cast<size_t>(i)] = acc;
    ws.h1[static_cast<size_t>(i)] = leaky(acc);
  }
  for (int i = 0; i < h; ++i) {
    double acc = b2[i];
    const double* w = W2 + static_cast<size_t>(i) * h;
    for (int j = 0; j < h; ++j) acc += w[j] * ws.h1[static_cast<size_t>(j)];
    ws.pre2[static_cast<size_t>(i)] = acc;
    ws.h2[static_cast<size_t>(i)] = leaky(acc);
  }
  double out = *b3;
  for (int i = 0; i < h; ++i) out += w3[i] * ws.h2[static_cast<size_t>(i)];

  if (param_grad.empty() && input_grad.empty()) return out;

  // d out / d pre2
  ws.d2.resize(static_cast<size_t>(h));
  for (int i = 0; i < h; ++i) {
    ws.d2[static_cast<size_t>(i)] =
        w3[i] * leaky_grad(ws.pre2[static_cast<size_t>(i)]);
  }
  // d out / d pre1
  ws.d1.resize(static_cast<size_t>(h));
  for (int j = 0; j < h; ++j) {
    double acc = 0.0;
    for (int i = 0; i < h; ++i) {
      acc += ws.d2[static_cast<size_t>(i)] * W2[static_cast<size_t>(i) * h + j];
    }
    ws.d1[static_cast<size_t>(j)] =
        acc * leaky_grad(ws.pre1[static_cast<size_t>(j)]);
  }

  if (!param_grad.empty()) {
    if (param_grad.size() != static_cast<size_t>(param_count_)) {
      throw ContractError("Mlp: param_grad size mismatch");
    }
    double* gW1 = param_grad.data();
    double* gb1 = gW1 + static_cast<size_t>(h) * n;
    double* gW2 = gb1 + h;
    double* gb2 = gW2 + static_cast<size_t>(h) * h;
    double* gw3 = gb2 + h;
    double* gb3 = gw3 + h;
    for (int i = 0; i < h; ++i) {
      const double di = ws.d1[static_cast<size_t>(i)];
      double* row = gW1 + static_cast<size_t>(i) * n;
      for (int j = 0; j < n; ++j) row[j] = di * x[static_cast<size_t>(j)];
      gb1[i] = di;
    }
    for (int i = 0; i < h; ++i) {
      const double di = ws.d2[static_cast<size_t>(i)];
      double* row = gW2 + static_cast<size_t>(i) * h;
      for (int j = 0; j < h; ++j) row[j] = di * ws.h1[static_cast<size_t>(j)];
      gb2[i] = di;
    }
    for (int i = 0; i < h; ++i) gw3[i] = ws.h2[static_cast<size_t>(i)];
    *gb3 = 1.0;
  }

  if (!input_grad.empty()) {
    if (input_grad.size() != static_cast<size_t>(input_dim_)) {
      throw ContractError("Mlp: input_grad size mismatch");
    }
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int i = 0; i < h; ++i) {
        acc += ws.d1[static_cast<size_t>(i)] * W1[static_cast<size_t>(i) * n + j];
      }
      input_grad[static_cast<size_t>(j)] = acc;
    }
  }
  return out;
}

}  // namespace mfg
