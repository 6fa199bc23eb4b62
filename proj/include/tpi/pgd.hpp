#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "tpi/errors.hpp"
#include "tpi/image.hpp"
#include "tpi/rng.hpp"

namespace tpi {

// Continuous-valued raster in [0,1], the space the PGD iteration works in.
// Quantization to 8 bits is a boundary concern handled at conversion.
struct FloatImage {
  int width = 0;
  int height = 0;
  std::vector<double> values;  // row-major, 3 channels interleaved

  FloatImage() = default;
  FloatImage(int w, int h, double fill = 0.0)
      : width(w), height(h), values(static_cast<std::size_t>(w) * h * 3, fill) {}

  std::size_t size() const { return values.size(); }
  bool same_dims(const FloatImage& o) const { return width == o.width && height == o.height; }
};

inline FloatImage to_float(const Image& img) {
  FloatImage out(img.width, img.height);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) out.values[i] = img.pixels[i] / 255.0;
  return out;
}

inline Image to_image(const FloatImage& img) {
  Image out(img.width, img.height);
  for (std::size_t i = 0; i < img.values.size(); ++i) {
    int q = static_cast<int>(std::floor(img.values[i] * 255.0 + 0.5));
    out.pixels[i] = static_cast<std::uint8_t>(std::clamp(q, 0, 255));
  }
  return out;
}

// The feasible set {x : ||x - center||_inf <= radius} intersected with the
// [0,1] box; never empty when the center is a valid image.
struct FeasibleRegion {
  FloatImage center;
  double radius = 0.0;
};

// Contract for the scalar objective driving the iteration. The gradient
// callback is optional; when absent, run_pgd falls back to central finite
// differences. Everything model-specific lives behind this interface.
struct LossOracle {
  std::string name;
  std::function<double(const FloatImage&)> loss;
  std::function<FloatImage(const FloatImage&)> gradient;  // optional
  bool concurrent_safe = false;
};

// Exact l_inf projection: separable per-component clamp to
// [center - radius, center + radius], then to [0,1].
inline FloatImage project(const FloatImage& x, const FeasibleRegion& region) {
  require(x.same_dims(region.center), Errc::DimensionMismatch,
          "projection input does not match region center");
  FloatImage out = x;
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    double c = region.center.values[i];
    double v = std::clamp(out.values[i], c - region.radius, c + region.radius);
    out.values[i] = std::clamp(v, 0.0, 1.0);
  }
  return out;
}

inline double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// One ascent step: x + alpha * sgn(grad), projected back onto the region.
inline FloatImage pgd_step(const FloatImage& x, const FloatImage& grad, double alpha,
                           const FeasibleRegion& region) {
  require(x.same_dims(grad), Errc::DimensionMismatch, "gradient dimensions mismatch");
  require(alpha > 0.0, Errc::InvalidArgument, "step size must be positive");
  FloatImage moved = x;
  for (std::size_t i = 0; i < moved.values.size(); ++i)
    moved.values[i] += alpha * sgn(grad.values[i]);
  return project(moved, region);
}

// Central differences per component: (L(x + h e_i) - L(x - h e_i)) / 2h.
inline FloatImage finite_diff_grad(const LossOracle& oracle, const FloatImage& x,
                                   double h = 1e-3) {
  require(h > 0.0, Errc::InvalidArgument, "finite-difference step must be positive");
  require(static_cast<bool>(oracle.loss), Errc::OracleFailure, "oracle has no loss callback");
  FloatImage grad(x.width, x.height);
  FloatImage probe = x;
  for (std::size_t i = 0; i < x.values.size(); ++i) {
    double orig = probe.values[i];
    probe.values[i] = orig + h;
    double up = oracle.loss(probe);
    probe.values[i] = orig - h;
    double down = oracle.loss(probe);
    probe.values[i] = orig;
    grad.values[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

struct PgdResult {
  FloatImage final_point;
  std::vector<double> trace;  // loss at x0, then after each step
};

// Iterated signed-gradient ascent (or descent) with projection after every
// step. Uses the oracle's analytic gradient when provided, finite
// differences otherwise.
inline PgdResult run_pgd(const LossOracle& oracle, const FloatImage& x0, double epsilon,
                         double alpha, int steps, bool maximize, double fd_step = 1e-3) {
  require(steps >= 1, Errc::InvalidArgument, "steps must be >= 1");
  require(epsilon >= 0.0, Errc::InvalidArgument, "epsilon must be >= 0");
  require(static_cast<bool>(oracle.loss), Errc::OracleFailure, "oracle has no loss callback");

  FeasibleRegion region{x0, epsilon};
  PgdResult result;
  result.final_point = project(x0, region);
  result.trace.reserve(static_cast<std::size_t>(steps) + 1);

  auto eval = [&](const FloatImage& x, int step) -> double {
    try {
      return oracle.loss(x);
    } catch (const std::exception& e) {
      fail(Errc::OracleFailure,
           "oracle '" + oracle.name + "' failed at step " + std::to_string(step) + ": " + e.what());
    }
  };
  result.trace.push_back(eval(result.final_point, 0));

  for (int step = 1; step <= steps; ++step) {
    FloatImage grad;
    try {
      grad = oracle.gradient ? oracle.gradient(result.final_point)
                             : finite_diff_grad(oracle, result.final_point, fd_step);
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      fail(Errc::OracleFailure, "oracle '" + oracle.name + "' gradient failed at step " +
                                    std::to_string(step) + ": " + e.what());
    }
    if (!maximize)
      for (auto& g : grad.values) g = -g;
    result.final_point = pgd_step(result.final_point, grad, alpha, region);
    result.trace.push_back(eval(result.final_point, step));
  }
  return result;
}

// ---- Bundled toy oracles (demo stand-ins for model-backed objectives) ----

// L(x) = sum_i w_i x_i
inline LossOracle make_linear_oracle(std::vector<double> weights) {
  LossOracle oracle;
  oracle.name = "linear";
  oracle.concurrent_safe = true;
  auto w = std::make_shared<std::vector<double>>(std::move(weights));
  oracle.loss = [w](const FloatImage& x) {
    require(x.size() == w->size(), Errc::DimensionMismatch, "linear oracle dimension mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < w->size(); ++i) acc += (*w)[i] * x.values[i];
    return acc;
  };
  oracle.gradient = [w](const FloatImage& x) {
    require(x.size() == w->size(), Errc::DimensionMismatch, "linear oracle dimension mismatch");
    FloatImage g(x.width, x.height);
    g.values.assign(w->begin(), w->end());
    return g;
  };
  return oracle;
}

// L(x) = ||x - t||^2
inline LossOracle make_quadratic_oracle(FloatImage target) {
  LossOracle oracle;
  oracle.name = "quadratic";
  oracle.concurrent_safe = true;
  auto t = std::make_shared<FloatImage>(std::move(target));
  oracle.loss = [t](const FloatImage& x) {
    require(x.same_dims(*t), Errc::DimensionMismatch, "quadratic oracle dimension mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < x.values.size(); ++i) {
      double d = x.values[i] - t->values[i];
      acc += d * d;
    }
    return acc;
  };
  oracle.gradient = [t](const FloatImage& x) {
    require(x.same_dims(*t), Errc::DimensionMismatch, "quadratic oracle dimension mismatch");
    FloatImage g(x.width, x.height);
    for (std::size_t i = 0; i < x.values.size(); ++i)
      g.values[i] = 2.0 * (x.values[i] - t->values[i]);
    return g;
  };
  return oracle;
}

// A fixed tiny linear "classifier" over 4x4 mean-pooled pixels: the score of
// a synthetic class whose weights are seeded constants. Purely a demo target.
inline LossOracle make_classifier_oracle(std::uint64_t seed = 7) {
  LossOracle oracle;
  oracle.name = "classifier";
  oracle.concurrent_safe = true;
  auto weights = std::make_shared<std::vector<double>>();
  SplitMix64 rng(seed);
  for (int i = 0; i < 4 * 4 * 3; ++i) weights->push_back(rng.next_unit() * 2.0 - 1.0);
  oracle.loss = [weights](const FloatImage& x) {
    require(x.width >= 4 && x.height >= 4, Errc::DimensionMismatch,
            "classifier oracle needs at least 4x4 input");
    double acc = 0.0;
    for (int by = 0; by < 4; ++by) {
      int y0 = by * x.height / 4, y1 = (by + 1) * x.height / 4;
      for (int bx = 0; bx < 4; ++bx) {
        int x0 = bx * x.width / 4, x1 = (bx + 1) * x.width / 4;
        double mean[3] = {0, 0, 0};
        for (int y = y0; y < y1; ++y)
          for (int xx = x0; xx < x1; ++xx)
            for (int c = 0; c < 3; ++c)
              mean[c] += x.values[(static_cast<std::size_t>(y) * x.width + xx) * 3 + c];
        double count = static_cast<double>(y1 - y0) * (x1 - x0);
        for (int c = 0; c < 3; ++c)
          acc += (*weights)[(static_cast<std::size_t>(by) * 4 + bx) * 3 + c] * mean[c] / count;
      }
    }
    return acc;
  };
  return oracle;
}

}  // namespace tpi
