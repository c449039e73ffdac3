#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "semenet/tensor/graph.hpp"

namespace semenet {

struct GradCheckOptions {
  double step = 1e-6;
  /// Denominator floor of the relative error, so that elements whose true
  /// gradient is ~0 are compared absolutely.
  double floor = 1e-5;
  /// Elements probed per parameter; 0 probes every element.
  std::size_t max_elements = 0;
  std::uint64_t seed = 0;
};

struct ParamCheck {
  std::string name;
  std::size_t probed = 0;
  double max_rel_error = 0;
};

struct GradCheckReport {
  std::string op;
  std::size_t trials = 0;
  std::vector<ParamCheck> params;
  std::vector<std::string> skipped;

  double max_error() const;
  bool passed(double tolerance = 1e-3) const { return max_error() < tolerance; }
};

/// Builds the output to check from the bound parameters. It is called
/// once for the analytic pass and twice per probed element.
using GradCheckBuilder = std::function<Var<double>(Graph<double>&)>;

/// Compares analytic gradients of L = sum(out * R), R a fixed random
/// projection, with central differences for every parameter whose
/// requires_grad is set. Frozen parameters are listed as skipped.
GradCheckReport check_gradients(const std::string& name, std::vector<Parameter<double>*> params,
                                const GradCheckBuilder& build, const GradCheckOptions& opt = {});

/// Ops with a built-in randomised check case.
std::vector<OpId> registered_ops();

/// Runs `trials` random cases (<= 64 elements per tensor) of a registered
/// op in 64-bit mode; the report keeps the worst error per parameter.
GradCheckReport gradient_check(OpId op, std::size_t trials, std::uint64_t seed);

}  // namespace semenet
