#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "offroad/minisegnet.hpp"

namespace offroad::testing {

// ReLU signs and pool argmaxes of a forward pass, rebuilt from the public
// layer operations. Equal patterns mean the loss is smooth between two points.
inline std::vector<std::uint32_t> activation_pattern(const nn::MiniNet& net, const nn::Tensor& x) {
  std::vector<std::uint32_t> out;
  auto relu = [&](nn::Tensor t) {
    for (auto& v : t.data) {
      out.push_back(v > 0.0);
      v = v > 0.0 ? v : 0.0;
    }
    return t;
  };
  const auto a1 = relu(net.enc1.forward(x));
  const auto [p1, i1] = nn::maxpool_with_indices(a1);
  const auto a2 = relu(net.enc2.forward(p1));
  const auto [p2, i2] = nn::maxpool_with_indices(a2);
  const auto a3 = relu(net.dec2.forward(nn::unpool_with_indices(p2, i2)));
  relu(net.dec1.forward(nn::unpool_with_indices(a3, i1)));
  out.insert(out.end(), i1.index.begin(), i1.index.end());
  out.insert(out.end(), i2.index.begin(), i2.index.end());
  return out;
}

struct FiniteDifference {
  enum class Kind { central, forward, backward, none };
  Kind kind = Kind::none;
  double value = 0.0;
};

// Central difference with step h, or, when a ReLU or pool argmax changes
// state within one step, the second-order one-sided difference taken on the
// side where the pattern stays fixed.
inline FiniteDifference finite_difference_at(const nn::MiniNet& net, double& param, const nn::Tensor& x,
                                          const LabelMap& labels, double h) {
  const double saved = param;
  const auto p0 = activation_pattern(net, x);
  auto probe = [&](double offset, bool* same) {
    param = saved + offset;
    if (same) *same = activation_pattern(net, x) == p0;
    const double l = nn::loss_and_gradient(net, x, labels, nullptr);
    param = saved;
    return l;
  };
  bool plus = false, minus = false, plus2 = false, minus2 = false;
  const double l0 = probe(0.0, nullptr);
  const double lp = probe(h, &plus);
  const double lm = probe(-h, &minus);
  using K = FiniteDifference::Kind;
  if (plus && minus) return {K::central, (lp - lm) / (2 * h)};
  if (minus) {
    const double lm2 = probe(-2 * h, &minus2);
    if (minus2) return {K::backward, (3 * l0 - 4 * lm + lm2) / (2 * h)};
  }
  if (plus) {
    const double lp2 = probe(2 * h, &plus2);
    if (plus2) return {K::forward, (-3 * l0 + 4 * lp - lp2) / (2 * h)};
  }
  return {K::none, 0.0};
}

// Kinks on both sides: retry with a step ten times smaller, down to 1e-8.
inline FiniteDifference finite_difference(const nn::MiniNet& net, double& param, const nn::Tensor& x,
                                          const LabelMap& labels, double h) {
  for (double step = h;; step /= 10) {
    const auto fd = finite_difference_at(net, param, x, labels, step);
    if (fd.kind != FiniteDifference::Kind::none || step < 1e-8) return fd;
  }
}

inline double relative_error(double a, double n, double floor = 1e-6) {
  const double m = std::max({std::abs(a), std::abs(n), floor});
  return std::abs(a - n) / m;
}

}  // namespace offroad::testing
