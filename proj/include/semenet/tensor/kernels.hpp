#pragma once

#include <cstddef>
#include <span>

namespace semenet::kernels {

struct ConvGeometry {
  std::size_t batch = 1;
  std::size_t in_channels = 1;
  std::size_t in_h = 1;
  std::size_t in_w = 1;
  std::size_t out_channels = 1;
  std::size_t kernel_h = 1;
  std::size_t kernel_w = 1;
  std::size_t stride_h = 1;
  std::size_t stride_w = 1;
  std::size_t pad_h = 0;
  std::size_t pad_w = 0;

  std::size_t out_h() const { return (in_h + 2 * pad_h - kernel_h) / stride_h + 1; }
  std::size_t out_w() const { return (in_w + 2 * pad_w - kernel_w) / stride_w + 1; }
  std::size_t patch_size() const { return in_channels * kernel_h * kernel_w; }
  std::size_t input_size() const { return in_channels * in_h * in_w; }
  std::size_t output_size() const { return out_channels * out_h() * out_w(); }
};

/// Throws ConfigurationError when the kernel does not fit the padded input.
void validate(const ConvGeometry& g);

// OpenMP kernels. Every output element is reduced in a fixed order, so
// results do not depend on the thread count. All kernels accumulate into
// their output (callers zero it).

/// C[m,n] += sum_k A[m,k] B[k,n]
template <typename T>
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, std::span<const T> a,
             std::span<const T> b, std::span<T> c);
/// C[m,n] += sum_k A[m,k] B[n,k]
template <typename T>
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, std::span<const T> a,
             std::span<const T> b, std::span<T> c);
/// C[m,n] += sum_k A[k,m] B[k,n]
template <typename T>
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, std::span<const T> a,
             std::span<const T> b, std::span<T> c);

/// Unfold one sample [C,H,W] into a patch matrix [C*kh*kw, OH*OW].
template <typename T>
void im2col(const ConvGeometry& g, std::span<const T> image, std::span<T> cols);
/// Fold a patch matrix back, adding into image.
template <typename T>
void col2im(const ConvGeometry& g, std::span<const T> cols, std::span<T> image);

template <typename T>
void conv2d_forward(const ConvGeometry& g, std::span<const T> x, std::span<const T> w, std::span<T> y);
template <typename T>
void conv2d_backward_input(const ConvGeometry& g, std::span<const T> w, std::span<const T> dy,
                           std::span<T> dx);
template <typename T>
void conv2d_backward_weight(const ConvGeometry& g, std::span<const T> x, std::span<const T> dy,
                            std::span<T> dw);

/// Serial direct-loop implementations. These are the correctness anchor for
/// the kernels above and the baseline in the benchmark.
namespace reference {

template <typename T>
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, std::span<const T> a,
             std::span<const T> b, std::span<T> c);

template <typename T>
void conv2d_forward(const ConvGeometry& g, std::span<const T> x, std::span<const T> w, std::span<T> y);
template <typename T>
void conv2d_backward_input(const ConvGeometry& g, std::span<const T> w, std::span<const T> dy,
                           std::span<T> dx);
template <typename T>
void conv2d_backward_weight(const ConvGeometry& g, std::span<const T> x, std::span<const T> dy,
                            std::span<T> dw);

}  // namespace reference

}  // namespace semenet::kernels
