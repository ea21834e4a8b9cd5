#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

namespace lmoamp {

/// Gauss-Kronrod 7/15 pair on [-1, 1], positive half (last entry is the centre).
struct GaussKronrod15 {
  static constexpr std::array<double, 8> nodes = {
      0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
      0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
      0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
      0.207784955007898467600689403773245, 0.0};
  static constexpr std::array<double, 8> kronrod = {
      0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
      0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
      0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
      0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
  // Gauss weights for nodes[1], nodes[3], nodes[5], nodes[7].
  static constexpr std::array<double, 4> gauss = {
      0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
      0.381830050505118944950369775488975, 0.417959183673469387755102040816327};
};

/// Adaptive expectations against a normal density.
///
/// E[h(mean + stddev Z)] is integrated over z in [-cutoff, cutoff] by global
/// adaptive bisection: the panel with the largest 7/15-point Gauss-Kronrod
/// error estimate is split until the summed estimate drops below abs_tol or
/// the panel budget is spent. Posterior-mean integrands of sparse priors
/// switch regime inside windows far narrower than any fixed Gauss-Hermite
/// spacing.
struct NormalExpectation {
  double abs_tol = 1e-12;
  double cutoff = 10.0;
  int initial_panels = 15;
  int max_panels = 400;

  template <typename Fn>
  double operator()(double mean, double stddev, Fn&& fn) const {
    auto g = [&](double z) { return std::exp(-0.5 * z * z) * fn(mean + stddev * z); };
    const double scale = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    const double tol = abs_tol / scale;

    std::vector<Panel> heap;
    heap.reserve(static_cast<std::size_t>(max_panels) + 1);
    const double width = 2.0 * cutoff / initial_panels;
    double value = 0.0, error = 0.0;
    auto push = [&](double lo, double hi) {
      Panel p = evaluate(g, lo, hi);
      value += p.value;
      error += p.error;
      heap.push_back(p);
      std::push_heap(heap.begin(), heap.end());
    };
    for (int i = 0; i < initial_panels; ++i) push(-cutoff + i * width, -cutoff + (i + 1) * width);

    while (error > tol && static_cast<int>(heap.size()) < max_panels) {
      std::pop_heap(heap.begin(), heap.end());
      const Panel worst = heap.back();
      heap.pop_back();
      if (worst.error <= 1e-14 * worst.magnitude) break;
      value -= worst.value;
      error -= worst.error;
      const double mid = 0.5 * (worst.lo + worst.hi);
      push(worst.lo, mid);
      push(mid, worst.hi);
    }
    return scale * value;
  }

 private:
  struct Panel {
    double lo, hi, value, error, magnitude;
    bool operator<(const Panel& o) const { return error < o.error; }
  };

  template <typename G>
  static Panel evaluate(G& g, double lo, double hi) {
    using R = GaussKronrod15;
    const double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
    const double fc = g(c);
    double kronrod = R::kronrod[7] * fc;
    double gauss = R::gauss[3] * fc;
    double magnitude = R::kronrod[7] * std::abs(fc);
    for (int i = 0; i < 7; ++i) {
      const double fl = g(c - h * R::nodes[i]), fr = g(c + h * R::nodes[i]);
      kronrod += R::kronrod[i] * (fl + fr);
      magnitude += R::kronrod[i] * (std::abs(fl) + std::abs(fr));
      if (i % 2 == 1) gauss += R::gauss[i / 2] * (fl + fr);
    }
    return {lo, hi, h * kronrod, h * std::abs(kronrod - gauss), h * magnitude};
  }
};

}  // namespace lmoamp
