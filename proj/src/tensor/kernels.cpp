#include "semenet/tensor/kernels.hpp"

#include <algorithm>
#include <string>
#include <vector>

#include "semenet/error.hpp"

namespace semenet::kernels {

namespace {

// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::size_t kParallelWork = 1u << 16;

template <typename T>
T dot(const T* __restrict a, const T* __restrict b, std::size_t n) {
  constexpr std::size_t kLanes = 8;
  T acc[kLanes] = {};
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    for (std::size_t l = 0; l < kLanes; ++l) acc[l] += a[i + l] * b[i + l];
  }
  T tail = 0;
  for (; i < n; ++i) tail += a[i] * b[i];
  T s = 0;
  for (std::size_t l = 0; l < kLanes; ++l) s += acc[l];
  return s + tail;
}

template <typename T>
void axpy(T alpha, const T* __restrict x, T* __restrict y, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) y[j] += alpha * x[j];
}

}  // namespace

void validate(const ConvGeometry& g) {
  if (g.stride_h < 1 || g.stride_w < 1) throw ConfigurationError("conv2d stride must be >= 1");
  if (g.kernel_h < 1 || g.kernel_w < 1) throw ConfigurationError("conv2d kernel must be >= 1");
  if (g.kernel_h > g.in_h + 2 * g.pad_h || g.kernel_w > g.in_w + 2 * g.pad_w) {
    throw ConfigurationError("conv2d kernel " + std::to_string(g.kernel_h) + "x" +
                             std::to_string(g.kernel_w) + " larger than padded input " +
                             std::to_string(g.in_h + 2 * g.pad_h) + "x" +
                             std::to_string(g.in_w + 2 * g.pad_w));
  }
}

template <typename T>
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, std::span<const T> a,
             std::span<const T> b, std::span<T> c) {
  const T* A = a.data();
  const T* B = b.data();
  T* C = c.data();
  // Four output rows share each streamed row of B.
  const std::ptrdiff_t blocks = static_cast<std::ptrdiff_t>((m + 3) / 4);
#pragma omp parallel for schedule(static) if (m * n * k > kParallelWork)
  for (std::ptrdiff_t blk = 0; blk < blocks; ++blk) {
    const std::size_t i0 = static_cast<std::size_t>(blk) * 4;
    const std::size_t rows = std::min<std::size_t>(4, m - i0);
    if (rows == 4) {
      T* __restrict c0 = C + (i0 + 0) * n;
      T* __restrict c1 = C + (i0 + 1) * n;
      T* __restrict c2 = C + (i0 + 2) * n;
      T* __restrict c3 = C + (i0 + 3) * n;
      for (std::size_t p = 0; p < k; ++p) {
        const T a0 = A[(i0 + 0) * k + p];
        const T a1 = A[(i0 + 1) * k + p];
        const T a2 = A[(i0 + 2) * k + p];
        const T a3 = A[(i0 + 3) * k + p];
        const T* __restrict bp = B + p * n;
        for (std::size_t j = 0; j < n; ++j) {
          const T bv = bp[j];
          c0[j] += a0 * bv;
          c1[j] += a1 * bv;
          c2[j] += a2 * bv;
          c3[j] += a3 * bv;
        }
      }
    } else {
      for (std::size_t i = i0; i < i0 + rows; ++i) {
        for (std::size_t p = 0; p < k; ++p) axpy(A[i * k + p], B + p * n, C + i * n, n);
      }
    }
  }
}

template <typename T>
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, std::span<const T> a,
             std::span<const T> b, std::span<T> c) {
  const T* A = a.data();
  const T* B = b.data();
  T* C = c.data();
#pragma omp parallel for schedule(static) if (m * n * k > kParallelWork)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(m); ++ii) {
    const std::size_t i = static_cast<std::size_t>(ii);
    for (std::size_t j = 0; j < n; ++j) C[i * n + j] += dot(A + i * k, B + j * k, k);
  }
}

template <typename T>
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, std::span<const T> a,
             std::span<const T> b, std::span<T> c) {
  const T* A = a.data();
  const T* B = b.data();
  T* C = c.data();
#pragma omp parallel for schedule(static) if (m * n * k > kParallelWork)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(m); ++ii) {
    const std::size_t i = static_cast<std::size_t>(ii);
    for (std::size_t p = 0; p < k; ++p) axpy(A[p * m + i], B + p * n, C + i * n, n);
  }
}

template <typename T>
void im2col(const ConvGeometry& g, std::span<const T> image, std::span<T> cols) {
  const std::size_t oh = g.out_h(), ow = g.out_w();
  const auto ih = static_cast<std::ptrdiff_t>(g.in_h), iw = static_cast<std::ptrdiff_t>(g.in_w);
  std::size_t row = 0;
  for (std::size_t c = 0; c < g.in_channels; ++c) {
    const T* plane = image.data() + c * g.in_h * g.in_w;
    for (std::size_t ki = 0; ki < g.kernel_h; ++ki) {
      for (std::size_t kj = 0; kj < g.kernel_w; ++kj, ++row) {
        T* out = cols.data() + row * oh * ow;
        for (std::size_t y = 0; y < oh; ++y) {
          const auto sy = static_cast<std::ptrdiff_t>(y * g.stride_h + ki) - static_cast<std::ptrdiff_t>(g.pad_h);
          T* dst = out + y * ow;
          if (sy < 0 || sy >= ih) {
            std::fill(dst, dst + ow, T{0});
            continue;
          }
          const T* src = plane + sy * iw;
          for (std::size_t x = 0; x < ow; ++x) {
            const auto sx = static_cast<std::ptrdiff_t>(x * g.stride_w + kj) - static_cast<std::ptrdiff_t>(g.pad_w);
            dst[x] = (sx < 0 || sx >= iw) ? T{0} : src[sx];
          }
        }
      }
    }
  }
}

template <typename T>
void col2im(const ConvGeometry& g, std::span<const T> cols, std::span<T> image) {
  const std::size_t oh = g.out_h(), ow = g.out_w();
  const auto ih = static_cast<std::ptrdiff_t>(g.in_h), iw = static_cast<std::ptrdiff_t>(g.in_w);
  std::size_t row = 0;
  for (std::size_t c = 0; c < g.in_channels; ++c) {
    T* plane = image.data() + c * g.in_h * g.in_w;
    for (std::size_t ki = 0; ki < g.kernel_h; ++ki) {
      for (std::size_t kj = 0; kj < g.kernel_w; ++kj, ++row) {
        const T* in = cols.data() + row * oh * ow;
        for (std::size_t y = 0; y < oh; ++y) {
          const auto sy = static_cast<std::ptrdiff_t>(y * g.stride_h + ki) - static_cast<std::ptrdiff_t>(g.pad_h);
          if (sy < 0 || sy >= ih) continue;
          T* dst = plane + sy * iw;
          const T* src = in + y * ow;
          for (std::size_t x = 0; x < ow; ++x) {
            const auto sx = static_cast<std::ptrdiff_t>(x * g.stride_w + kj) - static_cast<std::ptrdiff_t>(g.pad_w);
            if (sx >= 0 && sx < iw) dst[sx] += src[x];
          }
        }
      }
    }
  }
}

template <typename T>
void conv2d_forward(const ConvGeometry& g, std::span<const T> x, std::span<const T> w, std::span<T> y) {
  validate(g);
  const std::size_t spatial = g.out_h() * g.out_w();
  const std::size_t patch = g.patch_size();
  const bool pointwise = g.kernel_h == 1 && g.kernel_w == 1 && g.stride_h == 1 && g.stride_w == 1 &&
                         g.pad_h == 0 && g.pad_w == 0;
#pragma omp parallel
  {
    std::vector<T> cols(pointwise ? 0 : patch * spatial);
#pragma omp for schedule(static)
    for (std::ptrdiff_t nn = 0; nn < static_cast<std::ptrdiff_t>(g.batch); ++nn) {
      const auto n = static_cast<std::size_t>(nn);
      auto xs = x.subspan(n * g.input_size(), g.input_size());
      std::span<const T> b = xs;
      if (!pointwise) {
        im2col<T>(g, xs, cols);
        b = cols;
      }
      gemm_nn<T>(g.out_channels, spatial, patch, w, b, y.subspan(n * g.output_size(), g.output_size()));
    }
  }
}

template <typename T>
void conv2d_backward_input(const ConvGeometry& g, std::span<const T> w, std::span<const T> dy,
                           std::span<T> dx) {
  validate(g);
  const std::size_t spatial = g.out_h() * g.out_w();
  const std::size_t patch = g.patch_size();
#pragma omp parallel
  {
    std::vector<T> cols(patch * spatial);
#pragma omp for schedule(static)
    for (std::ptrdiff_t nn = 0; nn < static_cast<std::ptrdiff_t>(g.batch); ++nn) {
      const auto n = static_cast<std::size_t>(nn);
      std::fill(cols.begin(), cols.end(), T{0});
      gemm_tn<T>(patch, spatial, g.out_channels, w, dy.subspan(n * g.output_size(), g.output_size()), cols);
      col2im<T>(g, cols, dx.subspan(n * g.input_size(), g.input_size()));
    }
  }
}

template <typename T>
void conv2d_backward_weight(const ConvGeometry& g, std::span<const T> x, std::span<const T> dy,
                            std::span<T> dw) {
  validate(g);
  const std::size_t spatial = g.out_h() * g.out_w();
  const std::size_t patch = g.patch_size();
  const std::size_t wsize = g.out_channels * patch;
  // Per-sample partials reduced in sample order keep the sum independent of
  // how samples are spread over threads.
  std::vector<T> partial(g.batch * wsize, T{0});
#pragma omp parallel
  {
    std::vector<T> cols(patch * spatial);
#pragma omp for schedule(static)
    for (std::ptrdiff_t nn = 0; nn < static_cast<std::ptrdiff_t>(g.batch); ++nn) {
      const auto n = static_cast<std::size_t>(nn);
      im2col<T>(g, x.subspan(n * g.input_size(), g.input_size()), cols);
      gemm_nt<T>(g.out_channels, patch, spatial, dy.subspan(n * g.output_size(), g.output_size()), cols,
                 std::span<T>(partial).subspan(n * wsize, wsize));
    }
  }
  for (std::size_t n = 0; n < g.batch; ++n) {
    const T* p = partial.data() + n * wsize;
    for (std::size_t i = 0; i < wsize; ++i) dw[i] += p[i];
  }
}

#define SEMENET_INSTANTIATE(T)                                                                          \
  template void gemm_nn<T>(std::size_t, std::size_t, std::size_t, std::span<const T>, std::span<const T>, \
                           std::span<T>);                                                              \
  template void gemm_nt<T>(std::size_t, std::size_t, std::size_t, std::span<const T>, std::span<const T>, \
                           std::span<T>);                                                              \
  template void gemm_tn<T>(std::size_t, std::size_t, std::size_t, std::span<const T>, std::span<const T>, \
                           std::span<T>);                                                              \
  template void im2col<T>(const ConvGeometry&, std::span<const T>, std::span<T>);                       \
  template void col2im<T>(const ConvGeometry&, std::span<const T>, std::span<T>);                       \
  template void conv2d_forward<T>(const ConvGeometry&, std::span<const T>, std::span<const T>,           \
                                  std::span<T>);                                                       \
  template void conv2d_backward_input<T>(const ConvGeometry&, std::span<const T>, std::span<const T>,    \
                                         std::span<T>);                                                \
  template void conv2d_backward_weight<T>(const ConvGeometry&, std::span<const T>, std::span<const T>,   \
                                          std::span<T>);

SEMENET_INSTANTIATE(float)
SEMENET_INSTANTIATE(double)
#undef SEMENET_INSTANTIATE

}  // namespace semenet::kernels
