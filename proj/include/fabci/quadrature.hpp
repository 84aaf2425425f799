#pragma once

// Adaptive 15-point Gauss-Kronrod integration of vector-valued integrands.
//
// All components share one subdivision; the error of a panel is the L1 norm
// of the Kronrod/Gauss difference across components, so a single call
// integrates, for example, the whole marginal pmf vector over y.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <queue>
#include <span>
#include <vector>

#include "fabci/errors.hpp"

namespace fabci::quad {

struct Panel {
  double a = 0.0;
  double b = 0.0;
  std::vector<double> value;  // Kronrod estimate per component
  double error = 0.0;         // L1 |K - G|
};

struct Result {
  std::vector<double> value;
  double error = 0.0;
  int evaluations = 0;
  std::vector<Panel> panels;  // sorted by left endpoint
};

struct Options {
  double rel_tol = 1e-8;
  double abs_tol = 0.0;
  int max_panels = 4000;
};

namespace detail {

inline constexpr std::array<double, 8> kNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};

inline constexpr std::array<double, 8> kKronrod = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};

// Gauss weights for kNodes[1], kNodes[3], kNodes[5], kNodes[7].
inline constexpr std::array<double, 4> kGauss = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

inline double l1(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return s;
}

}  // namespace detail

/// One 15-point Kronrod rule on [a, b]. `f(x, out)` fills `out` (size dim).
template <class F>
Panel kronrod_panel(F& f, std::size_t dim, double a, double b) {
  using namespace detail;
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  Panel p{a, b, std::vector<double>(dim, 0.0), 0.0};
  std::vector<double> gauss(dim, 0.0);
  std::vector<double> buf(dim);
  for (std::size_t k = 0; k < kNodes.size(); ++k) {
    const bool center = (k == kNodes.size() - 1);
    const int reps = center ? 1 : 2;
    for (int side = 0; side < reps; ++side) {
      const double x = mid + (side == 0 ? -1.0 : 1.0) * half * kNodes[k];
      f(x, std::span<double>(buf));
      for (std::size_t i = 0; i < dim; ++i) {
        p.value[i] += kKronrod[k] * buf[i];
        if (k % 2 == 1) gauss[i] += kGauss[k / 2] * buf[i];
      }
    }
  }
  for (std::size_t i = 0; i < dim; ++i) {
    p.value[i] *= half;
    gauss[i] *= half;
    p.error += std::abs(p.value[i] - gauss[i]);
  }
  return p;
}

/// Integrates `f` over the partition given by `breaks` (strictly increasing,
/// at least two points), bisecting the worst panel until the summed error is
/// below max(abs_tol, rel_tol * |integral|_1).
template <class F>
Result integrate(F&& f, std::size_t dim, std::span<const double> breaks,
                 const Options& opt = {}) {
  if (breaks.size() < 2) throw std::domain_error("quadrature needs an interval");
  auto worse = [](const Panel& x, const Panel& y) {
    if (x.error != y.error) return x.error < y.error;
    return x.a > y.a;
  };
  std::priority_queue<Panel, std::vector<Panel>, decltype(worse)> heap(worse);
  Result r;
  r.value.assign(dim, 0.0);
  std::vector<double> value(dim, 0.0);
  double err = 0.0;
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    if (!(breaks[k] < breaks[k + 1])) continue;
    Panel p = kronrod_panel(f, dim, breaks[k], breaks[k + 1]);
    r.evaluations += 15;
    for (std::size_t i = 0; i < dim; ++i) value[i] += p.value[i];
    err += p.error;
    heap.push(std::move(p));
  }
  while (err > std::max(opt.abs_tol, opt.rel_tol * detail::l1(value))) {
    if (static_cast<int>(heap.size()) >= opt.max_panels) {
      throw NumericError("adaptive quadrature did not converge",
                         err / std::max(detail::l1(value), 1e-300));
    }
    Panel worst = heap.top();
    heap.pop();
    const double m = 0.5 * (worst.a + worst.b);
    if (!(worst.a < m && m < worst.b)) {
      throw NumericError("adaptive quadrature exhausted floating-point resolution",
                         err / std::max(detail::l1(value), 1e-300));
    }
    Panel left = kronrod_panel(f, dim, worst.a, m);
    Panel right = kronrod_panel(f, dim, m, worst.b);
    r.evaluations += 30;
    for (std::size_t i = 0; i < dim; ++i) {
      value[i] += left.value[i] + right.value[i] - worst.value[i];
    }
    err += left.error + right.error - worst.error;
    heap.push(std::move(left));
    heap.push(std::move(right));
    if (err < 0.0) err = 0.0;
  }
  r.panels.reserve(heap.size());
  while (!heap.empty()) {
    r.panels.push_back(heap.top());
    heap.pop();
  }
  std::sort(r.panels.begin(), r.panels.end(),
            [](const Panel& x, const Panel& y) { return x.a < y.a; });
  // Final sums in left-to-right order for reproducible rounding.
  std::fill(r.value.begin(), r.value.end(), 0.0);
  r.error = 0.0;
  for (const Panel& p : r.panels) {
    for (std::size_t i = 0; i < dim; ++i) r.value[i] += p.value[i];
    r.error += p.error;
  }
  return r;
}

/// Scalar convenience wrapper.
template <class F>
double integrate_scalar(F&& f, double a, double b, const Options& opt = {}) {
  auto vf = [&](double x, std::span<double> out) { out[0] = f(x); };
  const std::array<double, 2> br{a, b};
  return integrate(vf, 1, std::span<const double>(br), opt).value[0];
}

}  // namespace fabci::quad
