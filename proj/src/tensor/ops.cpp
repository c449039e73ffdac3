#include "semenet/tensor/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "semenet/error.hpp"
#include "semenet/tensor/kernels.hpp"

namespace semenet::ops {

namespace {

template <typename T>
using Slots = std::span<Tensor<T>* const>;

void require_rank(const Shape& s, std::size_t rank, const char* op) {
  if (s.size() != rank) {
    throw ConfigurationError(std::string(op) + " expects a rank-" + std::to_string(rank) +
                             " tensor, got " + shape_str(s));
  }
}

template <typename T>
void add_into(Tensor<T>* dst, std::span<const T> src) {
  if (!dst) return;
  auto d = dst->data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += src[i];
}

kernels::ConvGeometry conv_geometry(const Shape& xs, const Shape& ks, const Conv2dOptions& opt) {
  require_rank(xs, 4, "conv2d input");
  require_rank(ks, 4, "conv2d kernel");
  if (xs[1] != ks[1]) {
    throw ConfigurationError("conv2d channel mismatch: input has " + std::to_string(xs[1]) +
                             " channels, kernel expects " + std::to_string(ks[1]));
  }
  kernels::ConvGeometry g;
  g.batch = xs[0];
  g.in_channels = xs[1];
  g.in_h = xs[2];
  g.in_w = xs[3];
  g.out_channels = ks[0];
  g.kernel_h = ks[2];
  g.kernel_w = ks[3];
  g.stride_h = opt.stride_h;
  g.stride_w = opt.stride_w;
  g.pad_h = opt.pad_h;
  g.pad_w = opt.pad_w;
  kernels::validate(g);
  return g;
}

template <typename T>
Var<T> conv2d_impl(Var<T> x, Var<T> kernel, const Var<T>* bias, const Conv2dOptions& opt) {
  Graph<T>* g = x.graph;
  const auto geo = conv_geometry(x.shape(), kernel.shape(), opt);
  const std::size_t spatial = geo.out_h() * geo.out_w();
  if (bias && bias->value().size() != geo.out_channels) {
    throw ConfigurationError("conv2d bias length " + std::to_string(bias->value().size()) +
                             " does not match " + std::to_string(geo.out_channels) + " filters");
  }
  Tensor<T> y({geo.batch, geo.out_channels, geo.out_h(), geo.out_w()});
  if (opt.algorithm == ConvAlgorithm::direct) {
    kernels::reference::conv2d_forward<T>(geo, x.value().data(), kernel.value().data(), y.data());
  } else {
    kernels::conv2d_forward<T>(geo, x.value().data(), kernel.value().data(), y.data());
  }
  if (bias) {
    const auto b = bias->value().data();
    auto yd = y.data();
    for (std::size_t n = 0; n < geo.batch; ++n)
      for (std::size_t f = 0; f < geo.out_channels; ++f) {
        T* row = yd.data() + (n * geo.out_channels + f) * spatial;
        for (std::size_t i = 0; i < spatial; ++i) row[i] += b[f];
      }
  }
  std::vector<Var<T>> inputs{x, kernel};
  if (bias) inputs.push_back(*bias);
  const bool direct = opt.algorithm == ConvAlgorithm::direct;
  return g->record(OpId::conv2d, std::move(y), inputs,
                   [g, x, kernel, geo, spatial, direct](const Tensor<T>& dy, Slots<T> in) {
                     if (in[0]) {
                       if (direct)
                         kernels::reference::conv2d_backward_input<T>(geo, g->value(kernel).data(), dy.data(),
                                                                      in[0]->data());
                       else
                         kernels::conv2d_backward_input<T>(geo, g->value(kernel).data(), dy.data(), in[0]->data());
                     }
                     if (in[1]) {
                       if (direct)
                         kernels::reference::conv2d_backward_weight<T>(geo, g->value(x).data(), dy.data(),
                                                                       in[1]->data());
                       else
                         kernels::conv2d_backward_weight<T>(geo, g->value(x).data(), dy.data(), in[1]->data());
                     }
                     if (in.size() > 2 && in[2]) {
                       auto db = in[2]->data();
                       const auto d = dy.data();
                       for (std::size_t n = 0; n < geo.batch; ++n)
                         for (std::size_t f = 0; f < geo.out_channels; ++f) {
                           const T* row = d.data() + (n * geo.out_channels + f) * spatial;
                           T s = 0;
                           for (std::size_t i = 0; i < spatial; ++i) s += row[i];
                           db[f] += s;
                         }
                     }
                   });
}

template <typename T>
Var<T> dense_impl(Var<T> x, Var<T> w, const Var<T>* b) {
  Graph<T>* g = x.graph;
  const Shape& xs = x.shape();
  const Shape& ws = w.shape();
  if (xs.size() < 2) throw ConfigurationError("dense input must have a batch axis, got " + shape_str(xs));
  require_rank(ws, 2, "dense weight");
  const std::size_t n = xs[0];
  const std::size_t d = x.value().size() / std::max<std::size_t>(n, 1);
  const std::size_t k = ws[1];
  if (ws[0] != d) {
    throw ConfigurationError("dense extent mismatch: input features " + std::to_string(d) +
                             ", weight rows " + std::to_string(ws[0]));
  }
  if (b && b->value().size() != k) {
    throw ConfigurationError("dense bias length " + std::to_string(b->value().size()) + " != " +
                             std::to_string(k));
  }
  Tensor<T> y({n, k});
  kernels::gemm_nn<T>(n, k, d, x.value().data(), w.value().data(), y.data());
  if (b) {
    const auto bd = b->value().data();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < k; ++j) y[i * k + j] += bd[j];
  }
  std::vector<Var<T>> inputs{x, w};
  if (b) inputs.push_back(*b);
  return g->record(OpId::dense, std::move(y), inputs, [g, x, w, n, d, k](const Tensor<T>& dy, Slots<T> in) {
    if (in[0]) kernels::gemm_nt<T>(n, d, k, dy.data(), g->value(w).data(), in[0]->data());
    if (in[1]) kernels::gemm_tn<T>(d, k, n, g->value(x).data(), dy.data(), in[1]->data());
    if (in.size() > 2 && in[2]) {
      auto db = in[2]->data();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < k; ++j) db[j] += dy[i * k + j];
    }
  });
}

template <typename T>
Var<T> pool_impl(Var<T> x, std::size_t kernel, std::size_t stride, bool is_max) {
  Graph<T>* g = x.graph;
  const Shape& s = x.shape();
  require_rank(s, 4, is_max ? "max_pool2d" : "avg_pool2d");
  if (kernel < 1 || stride < 1 || kernel > s[2] || kernel > s[3]) {
    throw ConfigurationError("pool kernel " + std::to_string(kernel) + " does not fit input " + shape_str(s));
  }
  const std::size_t oh = (s[2] - kernel) / stride + 1, ow = (s[3] - kernel) / stride + 1;
  const std::size_t planes = s[0] * s[1];
  Tensor<T> y({s[0], s[1], oh, ow});
  std::vector<std::size_t> argmax(is_max ? y.size() : 0);
  const auto xd = x.value().data();
  for (std::size_t p = 0; p < planes; ++p) {
    const T* plane = xd.data() + p * s[2] * s[3];
    for (std::size_t oy = 0; oy < oh; ++oy)
      for (std::size_t ox = 0; ox < ow; ++ox) {
        const std::size_t o = (p * oh + oy) * ow + ox;
        if (is_max) {
          std::size_t best = (oy * stride) * s[3] + ox * stride;
          for (std::size_t ki = 0; ki < kernel; ++ki)
            for (std::size_t kj = 0; kj < kernel; ++kj) {
              const std::size_t idx = (oy * stride + ki) * s[3] + ox * stride + kj;
              if (plane[idx] > plane[best]) best = idx;
            }
          y[o] = plane[best];
          argmax[o] = p * s[2] * s[3] + best;
        } else {
          T acc = 0;
          for (std::size_t ki = 0; ki < kernel; ++ki)
            for (std::size_t kj = 0; kj < kernel; ++kj) acc += plane[(oy * stride + ki) * s[3] + ox * stride + kj];
          y[o] = acc / static_cast<T>(kernel * kernel);
        }
      }
  }
  if (is_max) {
    return g->record(OpId::max_pool2d, std::move(y), {x},
                     [argmax = std::move(argmax)](const Tensor<T>& dy, Slots<T> in) {
                       if (!in[0]) return;
                       auto dx = in[0]->data();
                       for (std::size_t o = 0; o < argmax.size(); ++o) dx[argmax[o]] += dy[o];
                     });
  }
  const Shape xs = s;
  return g->record(OpId::avg_pool2d, std::move(y), {x},
                   [xs, oh, ow, planes, kernel, stride](const Tensor<T>& dy, Slots<T> in) {
                     if (!in[0]) return;
                     auto dx = in[0]->data();
                     const T inv = T{1} / static_cast<T>(kernel * kernel);
                     for (std::size_t p = 0; p < planes; ++p)
                       for (std::size_t oy = 0; oy < oh; ++oy)
                         for (std::size_t ox = 0; ox < ow; ++ox) {
                           const T d = dy[(p * oh + oy) * ow + ox] * inv;
                           for (std::size_t ki = 0; ki < kernel; ++ki)
                             for (std::size_t kj = 0; kj < kernel; ++kj)
                               dx[p * xs[2] * xs[3] + (oy * stride + ki) * xs[3] + ox * stride + kj] += d;
                         }
                   });
}

struct GroupLayout {
  std::size_t samples, sample_stride, groups, group_step, count, elem_step;
  std::size_t base(std::size_t n, std::size_t grp) const { return n * sample_stride + grp * group_step; }
};

GroupLayout group_layout(const Shape& s, MomentNorm norm) {
  require_rank(s, 4, "moment normalisation");
  const std::size_t hw = s[2] * s[3];
  if (norm == MomentNorm::positional) return {s[0], s[1] * hw, hw, 1, s[1], hw};
  return {s[0], s[1] * hw, s[1], hw, hw, 1};
}

}  // namespace

template <typename T>
Var<T> conv2d(Var<T> x, Var<T> kernel, const Conv2dOptions& opt) {
  return conv2d_impl<T>(x, kernel, nullptr, opt);
}

template <typename T>
Var<T> conv2d(Var<T> x, Var<T> kernel, Var<T> bias, const Conv2dOptions& opt) {
  return conv2d_impl<T>(x, kernel, &bias, opt);
}

template <typename T>
Var<T> dense(Var<T> x, Var<T> weight) {
  return dense_impl<T>(x, weight, nullptr);
}

template <typename T>
Var<T> dense(Var<T> x, Var<T> weight, Var<T> bias) {
  return dense_impl<T>(x, weight, &bias);
}

template <typename T>
Var<T> batchnorm2d(Var<T> x, Var<T> gamma, Var<T> beta, Tensor<T>& running_mean, Tensor<T>& running_var,
                   const BatchNormOptions& opt) {
  Graph<T>* g = x.graph;
  const Shape& s = x.shape();
  require_rank(s, 4, "batchnorm2d");
  if (!(opt.eps > 0)) throw ConfigurationError("batchnorm2d eps must be positive");
  const std::size_t n = s[0], c = s[1], hw = s[2] * s[3];
  if (gamma.value().size() != c || beta.value().size() != c || running_mean.size() != c ||
      running_var.size() != c) {
    throw ConfigurationError("batchnorm2d parameters do not match " + std::to_string(c) + " channels");
  }
  const std::size_t m = n * hw;
  const bool train = opt.mode == BatchNormMode::train;
  if (train && m == 0) throw InvalidInputError("batchnorm2d: empty batch in train mode");

  const auto xd = x.value().data();
  const auto gd = gamma.value().data();
  const auto bd = beta.value().data();
  Tensor<T> y(s);
  Tensor<T> xhat(s);
  std::vector<T> inv_std(c);
  for (std::size_t ch = 0; ch < c; ++ch) {
    double mean, var;
    if (train) {
      double acc = 0;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < hw; ++j) acc += xd[(i * c + ch) * hw + j];
      mean = acc / static_cast<double>(m);
      double sq = 0;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < hw; ++j) {
          const double dlt = xd[(i * c + ch) * hw + j] - mean;
          sq += dlt * dlt;
        }
      var = sq / static_cast<double>(m);
      const double unbiased = m > 1 ? sq / static_cast<double>(m - 1) : var;
      running_mean[ch] = static_cast<T>((1 - opt.momentum) * running_mean[ch] + opt.momentum * mean);
      running_var[ch] = static_cast<T>((1 - opt.momentum) * running_var[ch] + opt.momentum * unbiased);
    } else {
      mean = running_mean[ch];
      var = running_var[ch];
    }
    const T is = static_cast<T>(1.0 / std::sqrt(var + opt.eps));
    inv_std[ch] = is;
    const T mu = static_cast<T>(mean);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < hw; ++j) {
        const std::size_t idx = (i * c + ch) * hw + j;
        xhat[idx] = (xd[idx] - mu) * is;
        y[idx] = gd[ch] * xhat[idx] + bd[ch];
      }
  }
  return g->record(OpId::batchnorm2d, std::move(y), {x, gamma, beta},
                   [g, gamma, n, c, hw, m, train, xhat = std::move(xhat), inv_std = std::move(inv_std)](
                       const Tensor<T>& dy, Slots<T> in) {
                     const auto gd = g->value(gamma).data();
                     for (std::size_t ch = 0; ch < c; ++ch) {
                       T sum_dy = 0, sum_dy_xhat = 0;
                       for (std::size_t i = 0; i < n; ++i)
                         for (std::size_t j = 0; j < hw; ++j) {
                           const std::size_t idx = (i * c + ch) * hw + j;
                           sum_dy += dy[idx];
                           sum_dy_xhat += dy[idx] * xhat[idx];
                         }
                       if (in[1]) (*in[1])[ch] += sum_dy_xhat;
                       if (in[2]) (*in[2])[ch] += sum_dy;
                       if (!in[0]) continue;
                       auto dx = in[0]->data();
                       const T k = gd[ch] * inv_std[ch];
                       if (train) {
                         const T inv_m = T{1} / static_cast<T>(m);
                         for (std::size_t i = 0; i < n; ++i)
                           for (std::size_t j = 0; j < hw; ++j) {
                             const std::size_t idx = (i * c + ch) * hw + j;
                             dx[idx] += k * (dy[idx] - inv_m * sum_dy - xhat[idx] * inv_m * sum_dy_xhat);
                           }
                       } else {
                         for (std::size_t i = 0; i < n; ++i)
                           for (std::size_t j = 0; j < hw; ++j) {
                             const std::size_t idx = (i * c + ch) * hw + j;
                             dx[idx] += k * dy[idx];
                           }
                       }
                     }
                   });
}

template <typename T>
Var<T> relu(Var<T> x) {
  Graph<T>* g = x.graph;
  Tensor<T> y = x.value();
  for (T& v : y.data()) v = v > 0 ? v : T{0};
  return g->record(OpId::relu, std::move(y), {x}, [g, x](const Tensor<T>& dy, Slots<T> in) {
    if (!in[0]) return;
    const auto xd = g->value(x).data();
    auto dx = in[0]->data();
    for (std::size_t i = 0; i < dx.size(); ++i)
      if (xd[i] > 0) dx[i] += dy[i];
  });
}

template <typename T>
Var<T> sigmoid(Var<T> x) {
  Graph<T>* g = x.graph;
  Tensor<T> y = x.value();
  for (T& v : y.data()) v = T{1} / (T{1} + std::exp(-v));
  return g->record(OpId::sigmoid, y, {x}, [y](const Tensor<T>& dy, Slots<T> in) {
    if (!in[0]) return;
    auto dx = in[0]->data();
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dy[i] * y[i] * (T{1} - y[i]);
  });
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& logits) {
  require_rank(logits.shape(), 2, "softmax");
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  Tensor<T> p(logits.shape());
  for (std::size_t i = 0; i < n; ++i) {
    T mx = logits[i * k];
    for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, logits[i * k + j]);
    T z = 0;
    for (std::size_t j = 0; j < k; ++j) z += (p[i * k + j] = std::exp(logits[i * k + j] - mx));
    for (std::size_t j = 0; j < k; ++j) p[i * k + j] /= z;
  }
  return p;
}

template <typename T>
Var<T> softmax_cross_entropy(Var<T> logits, const Tensor<T>& targets) {
  Graph<T>* g = logits.graph;
  const Shape& s = logits.shape();
  require_rank(s, 2, "softmax_cross_entropy");
  if (s[1] < 2) throw InvalidInputError("softmax_cross_entropy needs at least 2 classes");
  if (targets.shape() != s) {
    throw InvalidInputError("target shape " + shape_str(targets.shape()) + " != logits " + shape_str(s));
  }
  const std::size_t n = s[0], k = s[1];
  if (n == 0) throw InvalidInputError("softmax_cross_entropy on an empty batch");
  for (std::size_t i = 0; i < n; ++i) {
    double total = 0;
    for (std::size_t j = 0; j < k; ++j) {
      if (targets[i * k + j] < 0) throw InvalidInputError("negative target probability");
      total += targets[i * k + j];
    }
    if (std::abs(total - 1.0) > 1e-6) {
      throw InvalidInputError("target row " + std::to_string(i) + " sums to " + std::to_string(total));
    }
  }
  const auto& z = logits.value();
  double loss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double mx = z[i * k];
    for (std::size_t j = 1; j < k; ++j) mx = std::max<double>(mx, z[i * k + j]);
    double lse = 0;
    for (std::size_t j = 0; j < k; ++j) lse += std::exp(static_cast<double>(z[i * k + j]) - mx);
    lse = std::log(lse) + mx;
    for (std::size_t j = 0; j < k; ++j) loss -= targets[i * k + j] * (z[i * k + j] - lse);
  }
  loss /= static_cast<double>(n);
  Tensor<T> probs = softmax(z);
  return g->record(OpId::softmax_cross_entropy, Tensor<T>({1}, {static_cast<T>(loss)}), {logits},
                   [probs = std::move(probs), targets, n](const Tensor<T>& dy, Slots<T> in) {
                     if (!in[0]) return;
                     const T scale = dy[0] / static_cast<T>(n);
                     auto dx = in[0]->data();
                     for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += scale * (probs[i] - targets[i]);
                   });
}

template <typename T>
Var<T> softmax_cross_entropy(Var<T> logits, std::span<const int> labels) {
  const Shape& s = logits.shape();
  require_rank(s, 2, "softmax_cross_entropy");
  if (labels.size() != s[0]) {
    throw InvalidInputError(std::to_string(labels.size()) + " labels for a batch of " + std::to_string(s[0]));
  }
  Tensor<T> t(s);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= s[1]) {
      throw InvalidInputError("label " + std::to_string(labels[i]) + " outside [0," + std::to_string(s[1]) + ")");
    }
    t[i * s[1] + static_cast<std::size_t>(labels[i])] = 1;
  }
  return softmax_cross_entropy(logits, t);
}

template <typename T>
Var<T> sigmoid_bce(Var<T> logits, const Tensor<T>& targets) {
  Graph<T>* g = logits.graph;
  if (targets.shape() != logits.shape()) {
    throw InvalidInputError("target shape " + shape_str(targets.shape()) + " != logits " +
                            shape_str(logits.shape()));
  }
  const auto& z = logits.value();
  const std::size_t count = z.size();
  if (count == 0) throw InvalidInputError("sigmoid_bce on an empty tensor");
  double loss = 0;
  Tensor<T> p(z.shape());
  for (std::size_t i = 0; i < count; ++i) {
    const double zi = z[i];
    loss += std::max(zi, 0.0) - zi * targets[i] + std::log1p(std::exp(-std::abs(zi)));
    p[i] = static_cast<T>(1.0 / (1.0 + std::exp(-zi)));
  }
  loss /= static_cast<double>(count);
  return g->record(OpId::sigmoid_bce, Tensor<T>({1}, {static_cast<T>(loss)}), {logits},
                   [p = std::move(p), targets, count](const Tensor<T>& dy, Slots<T> in) {
                     if (!in[0]) return;
                     const T scale = dy[0] / static_cast<T>(count);
                     auto dx = in[0]->data();
                     for (std::size_t i = 0; i < count; ++i) dx[i] += scale * (p[i] - targets[i]);
                   });
}

template <typename T>
Var<T> gap(Var<T> x) {
  Graph<T>* g = x.graph;
  const Shape s = x.shape();
  require_rank(s, 4, "gap");
  const std::size_t planes = s[0] * s[1], hw = s[2] * s[3];
  if (hw == 0) throw InvalidInputError("gap over an empty spatial extent");
  Tensor<T> y({s[0], s[1]});
  const auto xd = x.value().data();
  for (std::size_t p = 0; p < planes; ++p) {
    T acc = 0;
    for (std::size_t j = 0; j < hw; ++j) acc += xd[p * hw + j];
    y[p] = acc / static_cast<T>(hw);
  }
  return g->record(OpId::gap, std::move(y), {x}, [planes, hw](const Tensor<T>& dy, Slots<T> in) {
    if (!in[0]) return;
    auto dx = in[0]->data();
    const T inv = T{1} / static_cast<T>(hw);
    for (std::size_t p = 0; p < planes; ++p)
      for (std::size_t j = 0; j < hw; ++j) dx[p * hw + j] += dy[p] * inv;
  });
}

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  Graph<T>* g = a.graph;
  if (a.shape() != b.shape()) {
    throw InvalidInputError("add: shape " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  Tensor<T> y = a.value();
  const auto bd = b.value().data();
  auto yd = y.data();
  for (std::size_t i = 0; i < yd.size(); ++i) yd[i] += bd[i];
  return g->record(OpId::add, std::move(y), {a, b}, [](const Tensor<T>& dy, Slots<T> in) {
    add_into<T>(in[0], dy.data());
    add_into<T>(in[1], dy.data());
  });
}

template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
  Graph<T>* g = a.graph;
  if (a.shape() != b.shape()) {
    throw InvalidInputError("mul: shape " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  Tensor<T> y = a.value();
  const auto bd = b.value().data();
  auto yd = y.data();
  for (std::size_t i = 0; i < yd.size(); ++i) yd[i] *= bd[i];
  return g->record(OpId::mul, std::move(y), {a, b}, [g, a, b](const Tensor<T>& dy, Slots<T> in) {
    const auto ad = g->value(a).data();
    const auto bd = g->value(b).data();
    if (in[0]) {
      auto d = in[0]->data();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += dy[i] * bd[i];
    }
    if (in[1]) {
      auto d = in[1]->data();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += dy[i] * ad[i];
    }
  });
}

template <typename T>
Var<T> scale(Var<T> x, T factor) {
  Graph<T>* g = x.graph;
  Tensor<T> y = x.value();
  for (T& v : y.data()) v *= factor;
  return g->record(OpId::scale, std::move(y), {x}, [factor](const Tensor<T>& dy, Slots<T> in) {
    if (!in[0]) return;
    auto d = in[0]->data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += factor * dy[i];
  });
}

template <typename T>
Var<T> sum(Var<T> x) {
  Graph<T>* g = x.graph;
  T acc = 0;
  for (T v : x.value().data()) acc += v;
  return g->record(OpId::sum, Tensor<T>({1}, {acc}), {x}, [](const Tensor<T>& dy, Slots<T> in) {
    if (!in[0]) return;
    for (T& d : in[0]->data()) d += dy[0];
  });
}

template <typename T>
Var<T> concat_channels(Var<T> a, Var<T> b) {
  Graph<T>* g = a.graph;
  const Shape sa = a.shape(), sb = b.shape();
  require_rank(sa, 4, "concat_channels");
  require_rank(sb, 4, "concat_channels");
  if (sa[0] != sb[0] || sa[2] != sb[2] || sa[3] != sb[3]) {
    throw ConfigurationError("concat_channels: " + shape_str(sa) + " vs " + shape_str(sb));
  }
  const std::size_t hw = sa[2] * sa[3], ca = sa[1] * hw, cb = sb[1] * hw;
  Tensor<T> y({sa[0], sa[1] + sb[1], sa[2], sa[3]});
  const auto ad = a.value().data();
  const auto bd = b.value().data();
  for (std::size_t n = 0; n < sa[0]; ++n) {
    std::copy_n(ad.data() + n * ca, ca, y.data().data() + n * (ca + cb));
    std::copy_n(bd.data() + n * cb, cb, y.data().data() + n * (ca + cb) + ca);
  }
  const std::size_t batch = sa[0];
  return g->record(OpId::concat_channels, std::move(y), {a, b},
                   [batch, ca, cb](const Tensor<T>& dy, Slots<T> in) {
                     for (std::size_t n = 0; n < batch; ++n) {
                       const T* src = dy.data().data() + n * (ca + cb);
                       if (in[0]) {
                         T* d = in[0]->data().data() + n * ca;
                         for (std::size_t i = 0; i < ca; ++i) d[i] += src[i];
                       }
                       if (in[1]) {
                         T* d = in[1]->data().data() + n * cb;
                         for (std::size_t i = 0; i < cb; ++i) d[i] += src[ca + i];
                       }
                     }
                   });
}

template <typename T>
Var<T> scale_channels(Var<T> x, Var<T> s) {
  Graph<T>* g = x.graph;
  const Shape xs = x.shape();
  require_rank(xs, 4, "scale_channels");
  if (s.shape() != Shape{xs[0], xs[1]}) {
    throw ConfigurationError("scale_channels: factors " + shape_str(s.shape()) + " for input " + shape_str(xs));
  }
  const std::size_t planes = xs[0] * xs[1], hw = xs[2] * xs[3];
  Tensor<T> y = x.value();
  const auto sd = s.value().data();
  for (std::size_t p = 0; p < planes; ++p)
    for (std::size_t j = 0; j < hw; ++j) y[p * hw + j] *= sd[p];
  return g->record(OpId::scale_channels, std::move(y), {x, s}, [g, x, s, planes, hw](const Tensor<T>& dy, Slots<T> in) {
    const auto xd = g->value(x).data();
    const auto sd = g->value(s).data();
    for (std::size_t p = 0; p < planes; ++p) {
      if (in[0]) {
        T* d = in[0]->data().data() + p * hw;
        for (std::size_t j = 0; j < hw; ++j) d[j] += dy[p * hw + j] * sd[p];
      }
      if (in[1]) {
        T acc = 0;
        for (std::size_t j = 0; j < hw; ++j) acc += dy[p * hw + j] * xd[p * hw + j];
        (*in[1])[p] += acc;
      }
    }
  });
}

template <typename T>
Var<T> max_pool2d(Var<T> x, std::size_t kernel, std::size_t stride) {
  return pool_impl(x, kernel, stride, true);
}

template <typename T>
Var<T> avg_pool2d(Var<T> x, std::size_t kernel, std::size_t stride) {
  return pool_impl(x, kernel, stride, false);
}

template <typename T>
Var<T> upsample_nearest2d(Var<T> x, std::size_t factor) {
  Graph<T>* g = x.graph;
  const Shape s = x.shape();
  require_rank(s, 4, "upsample_nearest2d");
  if (factor < 1) throw ConfigurationError("upsample factor must be >= 1");
  const std::size_t planes = s[0] * s[1], h = s[2], w = s[3], oh = h * factor, ow = w * factor;
  Tensor<T> y({s[0], s[1], oh, ow});
  const auto xd = x.value().data();
  for (std::size_t p = 0; p < planes; ++p)
    for (std::size_t oy = 0; oy < oh; ++oy)
      for (std::size_t ox = 0; ox < ow; ++ox) y[(p * oh + oy) * ow + ox] = xd[(p * h + oy / factor) * w + ox / factor];
  return g->record(OpId::upsample_nearest2d, std::move(y), {x},
                   [planes, h, w, oh, ow, factor](const Tensor<T>& dy, Slots<T> in) {
                     if (!in[0]) return;
                     auto dx = in[0]->data();
                     for (std::size_t p = 0; p < planes; ++p)
                       for (std::size_t oy = 0; oy < oh; ++oy)
                         for (std::size_t ox = 0; ox < ow; ++ox)
                           dx[(p * h + oy / factor) * w + ox / factor] += dy[(p * oh + oy) * ow + ox];
                   });
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> moments(const Tensor<T>& h, MomentNorm norm, T eps) {
  const GroupLayout L = group_layout(h.shape(), norm);
  Tensor<T> mu({L.samples, L.groups}), sigma({L.samples, L.groups});
  for (std::size_t n = 0; n < L.samples; ++n)
    for (std::size_t grp = 0; grp < L.groups; ++grp) {
      const std::size_t base = L.base(n, grp);
      double m = 0;
      for (std::size_t e = 0; e < L.count; ++e) m += h[base + e * L.elem_step];
      m /= static_cast<double>(L.count);
      double v = 0;
      for (std::size_t e = 0; e < L.count; ++e) {
        const double d = h[base + e * L.elem_step] - m;
        v += d * d;
      }
      v /= static_cast<double>(L.count);
      mu[n * L.groups + grp] = static_cast<T>(m);
      sigma[n * L.groups + grp] = static_cast<T>(std::sqrt(v + static_cast<double>(eps)));
    }
  return {std::move(mu), std::move(sigma)};
}

template <typename T>
Var<T> moex_exchange(Var<T> h, std::span<const std::size_t> partner, MomentNorm norm, T eps) {
  Graph<T>* g = h.graph;
  if (!(eps > 0)) throw ConfigurationError("moment normalisation eps must be positive");
  const GroupLayout L = group_layout(h.shape(), norm);
  if (partner.size() != L.samples) {
    throw InvalidInputError("moex partner list has " + std::to_string(partner.size()) + " entries for " +
                            std::to_string(L.samples) + " samples");
  }
  for (std::size_t p : partner)
    if (p >= L.samples) throw InvalidInputError("moex partner index out of range");
  const auto& hv = h.value();
  auto [mu, sigma] = moments(hv, norm, eps);
  Tensor<T> hhat(hv.shape());
  Tensor<T> y(hv.shape());
  for (std::size_t n = 0; n < L.samples; ++n) {
    const std::size_t p = partner[n];
    for (std::size_t grp = 0; grp < L.groups; ++grp) {
      const std::size_t base = L.base(n, grp);
      const T m = mu[n * L.groups + grp], s = sigma[n * L.groups + grp];
      const T mp = mu[p * L.groups + grp], sp = sigma[p * L.groups + grp];
      for (std::size_t e = 0; e < L.count; ++e) {
        const std::size_t idx = base + e * L.elem_step;
        hhat[idx] = (hv[idx] - m) / s;
        y[idx] = hhat[idx] * sp + mp;
      }
    }
  }
  std::vector<std::size_t> partners(partner.begin(), partner.end());
  return g->record(
      OpId::moex_exchange, std::move(y), {h},
      [L, partners = std::move(partners), hhat = std::move(hhat), sigma = std::move(sigma)](const Tensor<T>& dy,
                                                                                             Slots<T> in) {
        if (!in[0]) return;
        auto dx = in[0]->data();
        const T inv_count = T{1} / static_cast<T>(L.count);
        // Gradients reaching each sample through its moments being injected
        // into its partner.
        std::vector<T> g_mu(L.samples * L.groups, T{0}), g_sigma(L.samples * L.groups, T{0});
        for (std::size_t n = 0; n < L.samples; ++n) {
          const std::size_t p = partners[n];
          for (std::size_t grp = 0; grp < L.groups; ++grp) {
            const std::size_t base = L.base(n, grp);
            const T s = sigma[n * L.groups + grp], sp = sigma[p * L.groups + grp];
            T sum_d = 0, sum_dh = 0, sum_g = 0, sum_gh = 0;
            for (std::size_t e = 0; e < L.count; ++e) {
              const std::size_t idx = base + e * L.elem_step;
              const T d = dy[idx] * sp;
              sum_d += d;
              sum_dh += d * hhat[idx];
              sum_g += dy[idx];
              sum_gh += dy[idx] * hhat[idx];
            }
            g_mu[p * L.groups + grp] += sum_g;
            g_sigma[p * L.groups + grp] += sum_gh;
            for (std::size_t e = 0; e < L.count; ++e) {
              const std::size_t idx = base + e * L.elem_step;
              dx[idx] += (dy[idx] * sp - inv_count * sum_d - hhat[idx] * inv_count * sum_dh) / s;
            }
          }
        }
        for (std::size_t n = 0; n < L.samples; ++n)
          for (std::size_t grp = 0; grp < L.groups; ++grp) {
            const std::size_t base = L.base(n, grp);
            const T gm = g_mu[n * L.groups + grp] * inv_count;
            const T gs = g_sigma[n * L.groups + grp] * inv_count;
            for (std::size_t e = 0; e < L.count; ++e) {
              const std::size_t idx = base + e * L.elem_step;
              dx[idx] += gm + gs * hhat[idx];
            }
          }
      });
}

#define SEMENET_INSTANTIATE(T)                                                                     \
  template Var<T> conv2d<T>(Var<T>, Var<T>, const Conv2dOptions&);                                 \
  template Var<T> conv2d<T>(Var<T>, Var<T>, Var<T>, const Conv2dOptions&);                         \
  template Var<T> dense<T>(Var<T>, Var<T>);                                                        \
  template Var<T> dense<T>(Var<T>, Var<T>, Var<T>);                                                \
  template Var<T> batchnorm2d<T>(Var<T>, Var<T>, Var<T>, Tensor<T>&, Tensor<T>&, const BatchNormOptions&); \
  template Var<T> relu<T>(Var<T>);                                                                 \
  template Var<T> sigmoid<T>(Var<T>);                                                              \
  template Var<T> softmax_cross_entropy<T>(Var<T>, const Tensor<T>&);                              \
  template Var<T> softmax_cross_entropy<T>(Var<T>, std::span<const int>);                          \
  template Var<T> sigmoid_bce<T>(Var<T>, const Tensor<T>&);                                        \
  template Var<T> gap<T>(Var<T>);                                                                  \
  template Var<T> add<T>(Var<T>, Var<T>);                                                          \
  template Var<T> mul<T>(Var<T>, Var<T>);                                                          \
  template Var<T> scale<T>(Var<T>, T);                                                             \
  template Var<T> sum<T>(Var<T>);                                                                  \
  template Var<T> concat_channels<T>(Var<T>, Var<T>);                                              \
  template Var<T> scale_channels<T>(Var<T>, Var<T>);                                               \
  template Var<T> max_pool2d<T>(Var<T>, std::size_t, std::size_t);                                \
  template Var<T> avg_pool2d<T>(Var<T>, std::size_t, std::size_t);                                \
  template Var<T> upsample_nearest2d<T>(Var<T>, std::size_t);                                      \
  template Var<T> moex_exchange<T>(Var<T>, std::span<const std::size_t>, MomentNorm, T);           \
  template Tensor<T> softmax<T>(const Tensor<T>&);                                                 \
  template std::pair<Tensor<T>, Tensor<T>> moments<T>(const Tensor<T>&, MomentNorm, T);

SEMENET_INSTANTIATE(float)
SEMENET_INSTANTIATE(double)
#undef SEMENET_INSTANTIATE

}  // namespace semenet::ops
