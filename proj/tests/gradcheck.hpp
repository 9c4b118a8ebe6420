#pragma once

// Central-difference comparison for reverse-mode gradients.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "neurint/tensor.hpp"

namespace neurint::testing {

struct GradCheck {
  double worst = 0.0;  // largest relative error seen
  std::size_t entries = 0;
};

inline double relative_error(double a, double b, double floor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// `loss` must build its value from the current contents of `params`.
inline GradCheck check_gradients(const std::vector<Tensor*>& params, const std::function<Tensor()>& loss,
                                 double h = 1e-5, double floor = 1e-6) {
  Tape tape;
  Gradients g;
  {
    Recording rec(tape);
    for (Tensor* p : params) tape.watch(*p);
    g = tape.backward(loss());
  }
  GradCheck out;
  for (Tensor* p : params) {
    const Tensor grad = g.of(*p);
    auto data = p->data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double saved = data[i];
      data[i] = saved + h;
      const double up = loss().item();
      data[i] = saved - h;
      const double down = loss().item();
      data[i] = saved;
      const double fd = (up - down) / (2.0 * h);
      out.worst = std::max(out.worst, relative_error(grad.data()[i], fd, floor));
      ++out.entries;
    }
  }
  return out;
}

inline Tensor uniform(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = u(rng);
  return Tensor(std::move(shape), std::move(v));
}

}  // namespace neurint::testing
