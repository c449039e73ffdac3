#include "semenet/tensor/kernels.hpp"

namespace semenet::kernels::reference {

template <typename T>
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, std::span<const T> a,
             std::span<const T> b, std::span<T> c) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      T s = 0;
      for (std::size_t p = 0; p < k; ++p) s += a[i * k + p] * b[p * n + j];
      c[i * n + j] += s;
    }
}

template <typename T>
void conv2d_forward(const ConvGeometry& g, std::span<const T> x, std::span<const T> w, std::span<T> y) {
  validate(g);
  const std::size_t oh = g.out_h(), ow = g.out_w();
  for (std::size_t n = 0; n < g.batch; ++n)
    for (std::size_t f = 0; f < g.out_channels; ++f)
      for (std::size_t oy = 0; oy < oh; ++oy)
        for (std::size_t ox = 0; ox < ow; ++ox) {
          T s = 0;
          for (std::size_t c = 0; c < g.in_channels; ++c)
            for (std::size_t ki = 0; ki < g.kernel_h; ++ki)
              for (std::size_t kj = 0; kj < g.kernel_w; ++kj) {
                const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride_h + ki) - static_cast<std::ptrdiff_t>(g.pad_h);
                const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride_w + kj) - static_cast<std::ptrdiff_t>(g.pad_w);
                if (iy < 0 || ix < 0 || iy >= static_cast<std::ptrdiff_t>(g.in_h) ||
                    ix >= static_cast<std::ptrdiff_t>(g.in_w))
                  continue;
                s += x[((n * g.in_channels + c) * g.in_h + iy) * g.in_w + ix] *
                     w[((f * g.in_channels + c) * g.kernel_h + ki) * g.kernel_w + kj];
              }
          y[((n * g.out_channels + f) * oh + oy) * ow + ox] += s;
        }
}

template <typename T>
void conv2d_backward_input(const ConvGeometry& g, std::span<const T> w, std::span<const T> dy,
                           std::span<T> dx) {
  validate(g);
  const std::size_t oh = g.out_h(), ow = g.out_w();
  for (std::size_t n = 0; n < g.batch; ++n)
    for (std::size_t f = 0; f < g.out_channels; ++f)
      for (std::size_t oy = 0; oy < oh; ++oy)
        for (std::size_t ox = 0; ox < ow; ++ox) {
          const T d = dy[((n * g.out_channels + f) * oh + oy) * ow + ox];
          for (std::size_t c = 0; c < g.in_channels; ++c)
            for (std::size_t ki = 0; ki < g.kernel_h; ++ki)
              for (std::size_t kj = 0; kj < g.kernel_w; ++kj) {
                const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride_h + ki) - static_cast<std::ptrdiff_t>(g.pad_h);
                const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride_w + kj) - static_cast<std::ptrdiff_t>(g.pad_w);
                if (iy < 0 || ix < 0 || iy >= static_cast<std::ptrdiff_t>(g.in_h) ||
                    ix >= static_cast<std::ptrdiff_t>(g.in_w))
                  continue;
                dx[((n * g.in_channels + c) * g.in_h + iy) * g.in_w + ix] +=
                    d * w[((f * g.in_channels + c) * g.kernel_h + ki) * g.kernel_w + kj];
              }
        }
}

template <typename T>
void conv2d_backward_weight(const ConvGeometry& g, std::span<const T> x, std::span<const T> dy,
                            std::span<T> dw) {
  validate(g);
  const std::size_t oh = g.out_h(), ow = g.out_w();
  for (std::size_t f = 0; f < g.out_channels; ++f)
    for (std::size_t c = 0; c < g.in_channels; ++c)
      for (std::size_t ki = 0; ki < g.kernel_h; ++ki)
        for (std::size_t kj = 0; kj < g.kernel_w; ++kj) {
          T s = 0;
          for (std::size_t n = 0; n < g.batch; ++n)
            for (std::size_t oy = 0; oy < oh; ++oy)
              for (std::size_t ox = 0; ox < ow; ++ox) {
                const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride_h + ki) - static_cast<std::ptrdiff_t>(g.pad_h);
                const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride_w + kj) - static_cast<std::ptrdiff_t>(g.pad_w);
                if (iy < 0 || ix < 0 || iy >= static_cast<std::ptrdiff_t>(g.in_h) ||
                    ix >= static_cast<std::ptrdiff_t>(g.in_w))
                  continue;
                s += x[((n * g.in_channels + c) * g.in_h + iy) * g.in_w + ix] *
                     dy[((n * g.out_channels + f) * oh + oy) * ow + ox];
              }
          dw[((f * g.in_channels + c) * g.kernel_h + ki) * g.kernel_w + kj] += s;
        }
}

#define SEMENET_INSTANTIATE(T)                                                                          \
  template void gemm_nn<T>(std::size_t, std::size_t, std::size_t, std::span<const T>, std::span<const T>, \
                           std::span<T>);                                                              \
  template void conv2d_forward<T>(const ConvGeometry&, std::span<const T>, std::span<const T>,           \
                                  std::span<T>);                                                       \
  template void conv2d_backward_input<T>(const ConvGeometry&, std::span<const T>, std::span<const T>,    \
                                         std::span<T>);                                                \
  template void conv2d_backward_weight<T>(const ConvGeometry&, std::span<const T>, std::span<const T>,   \
                                          std::span<T>);

SEMENET_INSTANTIATE(float)
SEMENET_INSTANTIATE(double)
#undef SEMENET_INSTANTIATE

}  // namespace semenet::kernels::reference
