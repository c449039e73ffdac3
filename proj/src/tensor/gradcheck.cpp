#include "semenet/tensor/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "semenet/error.hpp"
#include "semenet/rng.hpp"
#include "semenet/tensor/ops.hpp"

namespace semenet {

double GradCheckReport::max_error() const {
  double m = 0;
  for (const auto& p : params) m = std::max(m, p.max_rel_error);
  return m;
}

namespace {

double projected(const Tensor<double>& out, const Tensor<double>& proj) {
  double s = 0;
  for (std::size_t i = 0; i < out.size(); ++i) s += out[i] * proj[i];
  return s;
}

}  // namespace

GradCheckReport check_gradients(const std::string& name, std::vector<Parameter<double>*> params,
                                const GradCheckBuilder& build, const GradCheckOptions& opt) {
  GradCheckReport report;
  report.op = name;
  report.trials = 1;
  Rng rng = make_rng(opt.seed, {0x67c});

  Tensor<double> proj;
  std::vector<Tensor<double>> analytic;
  {
    Graph<double> g;
    for (auto* p : params) p->zero_grad();
    Var<double> out = build(g);
    proj = Tensor<double>(out.shape());
    for (double& r : proj.data()) r = uniform(rng, -1.0, 1.0);
    Var<double> loss = ops::sum(ops::mul(out, g.constant(proj)));
    g.backward(loss);
    for (auto* p : params) analytic.push_back(p->grad);
  }

  auto evaluate = [&] {
    Graph<double> g;
    return projected(build(g).value(), proj);
  };

  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Parameter<double>& p = *params[pi];
    if (!p.requires_grad) {
      report.skipped.push_back(p.name);
      continue;
    }
    std::vector<std::size_t> idx(p.value.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (opt.max_elements && idx.size() > opt.max_elements) {
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(opt.max_elements);
    }
    ParamCheck pc{p.name, idx.size(), 0.0};
    for (std::size_t e : idx) {
      const double orig = p.value[e];
      const double h = opt.step * std::max(1.0, std::abs(orig));
      p.value[e] = orig + h;
      const double up = evaluate();
      p.value[e] = orig - h;
      const double down = evaluate();
      p.value[e] = orig;
      const double numeric = (up - down) / (2 * h);
      const double a = analytic[pi][e];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), opt.floor});
      pc.max_rel_error = std::max(pc.max_rel_error, rel);
    }
    report.params.push_back(pc);
  }
  return report;
}

std::vector<OpId> registered_ops() {
  return {OpId::conv2d,      OpId::dense,          OpId::batchnorm2d,     OpId::relu,
          OpId::sigmoid,     OpId::softmax_cross_entropy, OpId::sigmoid_bce, OpId::gap,
          OpId::add,         OpId::mul,            OpId::scale,           OpId::sum,
          OpId::concat_channels, OpId::scale_channels, OpId::max_pool2d,  OpId::avg_pool2d,
          OpId::upsample_nearest2d, OpId::moex_exchange};
}

namespace {

std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) { return lo + uniform_index(rng, hi - lo + 1); }

Tensor<double> random_tensor(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
  Tensor<double> t(std::move(shape));
  for (double& v : t.data()) v = uniform(rng, lo, hi);
  return t;
}

/// Values bounded away from zero so that ReLU kinks sit far from every probe.
Tensor<double> off_zero_tensor(Rng& rng, Shape shape) {
  Tensor<double> t(std::move(shape));
  for (double& v : t.data()) v = (uniform01(rng) < 0.5 ? -1.0 : 1.0) * uniform(rng, 0.1, 1.0);
  return t;
}

/// Distinct, well separated values (max-pool has no near-ties).
Tensor<double> distinct_tensor(Rng& rng, Shape shape) {
  Tensor<double> t(std::move(shape));
  std::vector<double> vals(t.size());
  for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = -1.0 + 0.05 * static_cast<double>(i);
  std::shuffle(vals.begin(), vals.end(), rng);
  std::copy(vals.begin(), vals.end(), t.data().begin());
  return t;
}

struct Case {
  std::vector<Parameter<double>> params;
  // Non-differentiable state captured by the builder.
  Tensor<double> aux_a, aux_b, target;
  std::vector<std::size_t> partner;
  std::function<Var<double>(Graph<double>&, std::vector<Parameter<double>>&, Case&)> build;
};

Case make_case(OpId op, Rng& rng, std::size_t trial) {
  Case c;
  auto param = [&](const char* name, Tensor<double> v) { c.params.emplace_back(name, std::move(v)); };
  switch (op) {
    case OpId::conv2d: {
      const std::size_t n = pick(rng, 1, 2), ch = pick(rng, 1, 2), h = pick(rng, 3, 4), w = pick(rng, 3, 4);
      const std::size_t f = pick(rng, 1, 3), k = pick(rng, 1, 3), s = pick(rng, 1, 2), pad = pick(rng, 0, 1);
      param("input", random_tensor(rng, {n, ch, h, w}));
      param("kernel", random_tensor(rng, {f, ch, k, k}));
      param("bias", random_tensor(rng, {f}));
      ops::Conv2dOptions opt{s, s, pad, pad,
                             trial % 2 ? ops::ConvAlgorithm::direct : ops::ConvAlgorithm::patch_matrix};
      c.build = [opt](Graph<double>& g, auto& p, Case&) {
        return ops::conv2d(g.parameter(p[0]), g.parameter(p[1]), g.parameter(p[2]), opt);
      };
      break;
    }
    case OpId::dense: {
      const std::size_t n = pick(rng, 1, 3), d = pick(rng, 1, 8), k = pick(rng, 1, 5);
      param("input", random_tensor(rng, {n, d}));
      param("weight", random_tensor(rng, {d, k}));
      param("bias", random_tensor(rng, {k}));
      c.build = [](Graph<double>& g, auto& p, Case&) {
        return ops::dense(g.parameter(p[0]), g.parameter(p[1]), g.parameter(p[2]));
      };
      break;
    }
    case OpId::batchnorm2d: {
      const std::size_t n = pick(rng, 2, 3), ch = pick(rng, 1, 3), h = pick(rng, 2, 3), w = pick(rng, 2, 3);
      param("input", random_tensor(rng, {n, ch, h, w}));
      param("gamma", random_tensor(rng, {ch}, 0.5, 1.5));
      param("beta", random_tensor(rng, {ch}));
      c.aux_a = random_tensor(rng, {ch}, -0.5, 0.5);
      c.aux_b = random_tensor(rng, {ch}, 0.5, 2.0);
      const auto mode = trial % 2 ? ops::BatchNormMode::eval : ops::BatchNormMode::train;
      c.build = [mode](Graph<double>& g, auto& p, Case& cs) {
        // Copies keep every evaluation on identical running statistics.
        Tensor<double> rm = cs.aux_a, rv = cs.aux_b;
        return ops::batchnorm2d(g.parameter(p[0]), g.parameter(p[1]), g.parameter(p[2]), rm, rv,
                                {mode, 1e-5, 0.1});
      };
      break;
    }
    case OpId::relu:
    case OpId::sigmoid: {
      param("input", off_zero_tensor(rng, {pick(rng, 1, 4), pick(rng, 1, 16)}));
      c.build = [op](Graph<double>& g, auto& p, Case&) {
        return op == OpId::relu ? ops::relu(g.parameter(p[0])) : ops::sigmoid(g.parameter(p[0]));
      };
      break;
    }
    case OpId::softmax_cross_entropy: {
      const std::size_t n = pick(rng, 1, 4), k = pick(rng, 2, 5);
      param("logits", random_tensor(rng, {n, k}, -2, 2));
      c.target = random_tensor(rng, {n, k}, 0.0, 1.0);
      for (std::size_t i = 0; i < n; ++i) {
        double s = 0;
        for (std::size_t j = 0; j < k; ++j) s += c.target[i * k + j];
        for (std::size_t j = 0; j < k; ++j) c.target[i * k + j] /= s;
      }
      c.build = [](Graph<double>& g, auto& p, Case& cs) {
        return ops::softmax_cross_entropy(g.parameter(p[0]), cs.target);
      };
      break;
    }
    case OpId::sigmoid_bce: {
      const Shape s{pick(rng, 1, 2), 1, pick(rng, 2, 4), pick(rng, 2, 4)};
      param("logits", random_tensor(rng, s, -3, 3));
      c.target = random_tensor(rng, s, 0.0, 1.0);
      c.build = [](Graph<double>& g, auto& p, Case& cs) { return ops::sigmoid_bce(g.parameter(p[0]), cs.target); };
      break;
    }
    case OpId::gap:
    case OpId::avg_pool2d:
    case OpId::upsample_nearest2d: {
      param("input", random_tensor(rng, {pick(rng, 1, 2), pick(rng, 1, 2), pick(rng, 2, 4), pick(rng, 2, 4)}));
      c.build = [op](Graph<double>& g, auto& p, Case&) {
        if (op == OpId::gap) return ops::gap(g.parameter(p[0]));
        if (op == OpId::avg_pool2d) return ops::avg_pool2d(g.parameter(p[0]), 2, 2);
        return ops::upsample_nearest2d(g.parameter(p[0]), 2);
      };
      break;
    }
    case OpId::max_pool2d: {
      param("input", distinct_tensor(rng, {pick(rng, 1, 2), pick(rng, 1, 2), pick(rng, 2, 4), pick(rng, 2, 4)}));
      c.build = [](Graph<double>& g, auto& p, Case&) { return ops::max_pool2d(g.parameter(p[0]), 2, 2); };
      break;
    }
    case OpId::add:
    case OpId::mul: {
      const Shape s{pick(rng, 1, 3), pick(rng, 1, 8)};
      param("a", random_tensor(rng, s));
      param("b", random_tensor(rng, s));
      c.build = [op](Graph<double>& g, auto& p, Case&) {
        return op == OpId::add ? ops::add(g.parameter(p[0]), g.parameter(p[1]))
                               : ops::mul(g.parameter(p[0]), g.parameter(p[1]));
      };
      break;
    }
    case OpId::scale:
    case OpId::sum: {
      param("input", random_tensor(rng, {pick(rng, 1, 4), pick(rng, 1, 8)}));
      const double f = uniform(rng, -2, 2);
      c.build = [op, f](Graph<double>& g, auto& p, Case&) {
        return op == OpId::scale ? ops::scale(g.parameter(p[0]), f) : ops::sum(g.parameter(p[0]));
      };
      break;
    }
    case OpId::concat_channels: {
      const std::size_t n = pick(rng, 1, 2), h = pick(rng, 1, 3), w = pick(rng, 1, 3);
      param("a", random_tensor(rng, {n, pick(rng, 1, 3), h, w}));
      param("b", random_tensor(rng, {n, pick(rng, 1, 3), h, w}));
      c.build = [](Graph<double>& g, auto& p, Case&) {
        return ops::concat_channels(g.parameter(p[0]), g.parameter(p[1]));
      };
      break;
    }
    case OpId::scale_channels: {
      const std::size_t n = pick(rng, 1, 2), ch = pick(rng, 1, 3);
      param("input", random_tensor(rng, {n, ch, pick(rng, 1, 3), pick(rng, 1, 3)}));
      param("factors", random_tensor(rng, {n, ch}, 0.0, 1.0));
      c.build = [](Graph<double>& g, auto& p, Case&) {
        return ops::scale_channels(g.parameter(p[0]), g.parameter(p[1]));
      };
      break;
    }
    case OpId::moex_exchange: {
      const std::size_t n = pick(rng, 2, 3), ch = pick(rng, 2, 3);
      param("features", random_tensor(rng, {n, ch, pick(rng, 2, 3), pick(rng, 2, 3)}));
      c.partner.resize(n);
      std::iota(c.partner.begin(), c.partner.end(), std::size_t{0});
      std::shuffle(c.partner.begin(), c.partner.end(), rng);
      const auto norm = trial % 2 ? ops::MomentNorm::instance : ops::MomentNorm::positional;
      c.build = [norm](Graph<double>& g, auto& p, Case& cs) {
        return ops::moex_exchange<double>(g.parameter(p[0]), cs.partner, norm, 1e-5);
      };
      break;
    }
    default:
      throw UsageError("no gradient check case registered for " + std::string(op_name(op)));
  }
  return c;
}

}  // namespace

GradCheckReport gradient_check(OpId op, std::size_t trials, std::uint64_t seed) {
  GradCheckReport report;
  report.op = std::string(op_name(op));
  report.trials = trials;
  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng = make_rng(seed, {static_cast<std::uint64_t>(op), t});
    Case c = make_case(op, rng, t);
    std::vector<Parameter<double>*> ptrs;
    for (auto& p : c.params) ptrs.push_back(&p);
    GradCheckOptions opt;
    opt.seed = stream_seed(seed, {t});
    auto r = check_gradients(report.op, ptrs, [&](Graph<double>& g) { return c.build(g, c.params, c); }, opt);
    for (const auto& pc : r.params) {
      auto it = std::find_if(report.params.begin(), report.params.end(),
                             [&](const ParamCheck& q) { return q.name == pc.name; });
      if (it == report.params.end()) {
        report.params.push_back(pc);
      } else {
        it->probed += pc.probed;
        it->max_rel_error = std::max(it->max_rel_error, pc.max_rel_error);
      }
    }
    for (const auto& s : r.skipped)
      if (std::find(report.skipped.begin(), report.skipped.end(), s) == report.skipped.end())
        report.skipped.push_back(s);
  }
  return report;
}

}  // namespace semenet
