#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "semenet/tensor/graph.hpp"
#include "semenet/tensor/tensor.hpp"

/// Differentiable operations recorded on a Graph. Image tensors are NCHW.
namespace semenet::ops {

enum class ConvAlgorithm { direct, patch_matrix };

struct Conv2dOptions {
  std::size_t stride_h = 1;
  std::size_t stride_w = 1;
  std::size_t pad_h = 0;
  std::size_t pad_w = 0;
  ConvAlgorithm algorithm = ConvAlgorithm::patch_matrix;
};

/// Cross-correlation of x[N,C,H,W] with kernel[F,C,kh,kw].
template <typename T>
Var<T> conv2d(Var<T> x, Var<T> kernel, const Conv2dOptions& opt = {});
/// As above plus a per-output-channel bias[F].
template <typename T>
Var<T> conv2d(Var<T> x, Var<T> kernel, Var<T> bias, const Conv2dOptions& opt = {});

/// x[N,D] (higher-rank inputs are flattened after the batch axis) times
/// weight[D,K].
template <typename T>
Var<T> dense(Var<T> x, Var<T> weight);
template <typename T>
Var<T> dense(Var<T> x, Var<T> weight, Var<T> bias);

enum class BatchNormMode { train, eval };

struct BatchNormOptions {
  BatchNormMode mode = BatchNormMode::train;
  double eps = 1e-5;
  double momentum = 0.1;
};

/// Per-channel normalisation. Train mode normalises with batch statistics
/// and updates the running estimates; eval mode uses the running estimates.
template <typename T>
Var<T> batchnorm2d(Var<T> x, Var<T> gamma, Var<T> beta, Tensor<T>& running_mean,
                   Tensor<T>& running_var, const BatchNormOptions& opt = {});

template <typename T>
Var<T> relu(Var<T> x);
template <typename T>
Var<T> sigmoid(Var<T> x);

/// Mean softmax cross-entropy over the batch; each target row is a
/// distribution over K >= 2 classes.
template <typename T>
Var<T> softmax_cross_entropy(Var<T> logits, const Tensor<T>& targets);
template <typename T>
Var<T> softmax_cross_entropy(Var<T> logits, std::span<const int> labels);

/// Mean binary cross-entropy of sigmoid(logits) against targets in [0,1].
template <typename T>
Var<T> sigmoid_bce(Var<T> logits, const Tensor<T>& targets);

/// Global average pooling [N,C,H,W] -> [N,C].
template <typename T>
Var<T> gap(Var<T> x);

template <typename T>
Var<T> add(Var<T> a, Var<T> b);
template <typename T>
Var<T> mul(Var<T> a, Var<T> b);
template <typename T>
Var<T> scale(Var<T> x, T factor);
/// Sum of all elements, shape [1].
template <typename T>
Var<T> sum(Var<T> x);

template <typename T>
Var<T> concat_channels(Var<T> a, Var<T> b);
/// x[N,C,H,W] * s[N,C] broadcast over space.
template <typename T>
Var<T> scale_channels(Var<T> x, Var<T> s);

template <typename T>
Var<T> max_pool2d(Var<T> x, std::size_t kernel, std::size_t stride);
template <typename T>
Var<T> avg_pool2d(Var<T> x, std::size_t kernel, std::size_t stride);
template <typename T>
Var<T> upsample_nearest2d(Var<T> x, std::size_t factor);

/// Axis sets for intra-instance moments.
enum class MomentNorm {
  positional,  ///< across channels at each (n, h, w)
  instance,    ///< across space for each (n, c)
};

/// Normalise every sample by its own moments and re-inject the moments of
/// sample partner[i]: out_i = (h_i - mu_i) / sigma_i * sigma_p + mu_p,
/// sigma = sqrt(var + eps) with the biased variance.
template <typename T>
Var<T> moex_exchange(Var<T> h, std::span<const std::size_t> partner, MomentNorm norm, T eps);

// Non-recording helpers.

template <typename T>
Tensor<T> softmax(const Tensor<T>& logits);

/// Per-group moments. Returns (mu, sigma) each shaped [N, groups]; groups
/// is H*W for positional and C for instance normalisation.
template <typename T>
std::pair<Tensor<T>, Tensor<T>> moments(const Tensor<T>& h, MomentNorm norm, T eps);

}  // namespace semenet::ops
