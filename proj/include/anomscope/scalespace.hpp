#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "anomscope/error.hpp"
#include "anomscope/frame.hpp"

namespace anomscope {

// Square (2r+1)x(2r+1) filter, row-major taps indexed by (dx+r, dy+r).
class Kernel {
 public:
  Kernel(std::size_t radius, std::vector<double> taps, double scale_t,
         std::optional<std::vector<double>> separable_factor = std::nullopt)
      : radius_(radius), taps_(std::move(taps)), scale_t_(scale_t),
        factor_(std::move(separable_factor)) {
    detail::require(taps_.size() == side() * side(), "kernel taps must number (2r+1)^2");
    if (factor_) detail::require(factor_->size() == side(), "separable factor must have 2r+1 taps");
  }

  static Kernel identity() { return Kernel(0, {1.0}, 0.0, std::vector<double>{1.0}); }

  std::size_t radius() const { return radius_; }
  std::size_t side() const { return 2 * radius_ + 1; }
  double scale_t() const { return scale_t_; }
  std::span<const double> taps() const { return taps_; }

  double tap(long dx, long dy) const {
    const long r = static_cast<long>(radius_);
    return taps_[static_cast<std::size_t>((dy + r) * static_cast<long>(side()) + (dx + r))];
  }

  double sum() const {
    double s = 0.0;
    for (double v : taps_) s += v;
    return s;
  }

  // When set, taps == outer(factor, factor) up to rounding and convolution
  // runs as two 1-D passes.
  const std::optional<std::vector<double>>& separable_factor() const { return factor_; }

 private:
  std::size_t radius_;
  std::vector<double> taps_;
  double scale_t_;
  std::optional<std::vector<double>> factor_;
};

struct ResponseMap {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> values;
  double scale_t = 0.0;

  double at(std::size_t x, std::size_t y) const { return values[y * width + x]; }
};

enum class Polarity { maximum, minimum };

struct Keypoint {
  std::size_t x = 0;
  std::size_t y = 0;
  double scale_t = 0.0;
  double response = 0.0;
  Polarity polarity = Polarity::maximum;
};

inline constexpr double kMinScaleT = 0.25;

inline std::size_t default_radius(double t) {
  return static_cast<std::size_t>(std::ceil(3.0 * std::sqrt(t)));
}

// Samples G(x,y,t) = exp(-(x^2+y^2)/2t) / (2 pi t) at integer offsets. The
// taps are not renormalized, so their sum falls slightly short of 1.
inline Kernel gaussian_kernel(double t, std::optional<std::size_t> radius = std::nullopt) {
  detail::require(std::isfinite(t) && t >= kMinScaleT,
                  "gaussian variance t must be >= 0.25, got " + std::to_string(t));
  const std::size_t r = radius.value_or(default_radius(t));
  detail::require(r >= 1, "gaussian kernel radius must be >= 1");
  const long rl = static_cast<long>(r);
  const std::size_t side = 2 * r + 1;

  std::vector<double> factor(side);
  const double norm1d = 1.0 / std::sqrt(2.0 * std::numbers::pi * t);
  for (long i = -rl; i <= rl; ++i)
    factor[static_cast<std::size_t>(i + rl)] = norm1d * std::exp(-(i * i) / (2.0 * t));

  std::vector<double> taps(side * side);
  const double norm2d = 1.0 / (2.0 * std::numbers::pi * t);
  for (long dy = -rl; dy <= rl; ++dy) {
    for (long dx = -rl; dx <= rl; ++dx) {
      taps[static_cast<std::size_t>((dy + rl) * static_cast<long>(side) + (dx + rl))] =
          norm2d * std::exp(-static_cast<double>(dx * dx + dy * dy) / (2.0 * t));
    }
  }
  return Kernel(r, std::move(taps), t, std::move(factor));
}

namespace detail {

inline std::size_t clamp_index(long i, std::size_t n) {
  if (i < 0) return 0;
  if (i >= static_cast<long>(n)) return n - 1;
  return static_cast<std::size_t>(i);
}

inline std::vector<double> correlate_rows(std::span<const double> src, std::size_t w,
                                          std::size_t h, std::span<const double> f) {
  const long r = static_cast<long>(f.size() / 2);
  std::vector<double> out(w * h);
  for (std::size_t y = 0; y < h; ++y) {
    const double* row = src.data() + y * w;
    for (std::size_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (long d = -r; d <= r; ++d)
        acc += f[static_cast<std::size_t>(d + r)] * row[clamp_index(static_cast<long>(x) + d, w)];
      out[y * w + x] = acc;
    }
  }
  return out;
}

inline std::vector<double> correlate_cols(std::span<const double> src, std::size_t w,
                                          std::size_t h, std::span<const double> f) {
  const long r = static_cast<long>(f.size() / 2);
  std::vector<double> out(w * h);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (long d = -r; d <= r; ++d)
        acc += f[static_cast<std::size_t>(d + r)] *
               src[clamp_index(static_cast<long>(y) + d, h) * w + x];
      out[y * w + x] = acc;
    }
  }
  return out;
}

// 5-point Laplacian with edge replication.
inline std::vector<double> laplacian5(std::span<const double> src, std::size_t w,
                                      std::size_t h) {
  std::vector<double> out(w * h);
  for (std::size_t y = 0; y < h; ++y) {
    const std::size_t yu = y == 0 ? 0 : y - 1;
    const std::size_t yd = y + 1 == h ? y : y + 1;
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t xl = x == 0 ? 0 : x - 1;
      const std::size_t xr = x + 1 == w ? x : x + 1;
      out[y * w + x] = src[y * w + xl] + src[y * w + xr] + src[yu * w + x] + src[yd * w + x] -
                       4.0 * src[y * w + x];
    }
  }
  return out;
}

}  // namespace detail

// Correlates the frame with a symmetric kernel (equal to convolution for
// symmetric taps). Out-of-frame samples replicate the nearest edge pixel.
inline ResponseMap convolve(const Frame& frame, const Kernel& kernel) {
  const std::size_t w = frame.width();
  const std::size_t h = frame.height();
  detail::require(kernel.side() <= w && kernel.side() <= h,
                  "kernel " + std::to_string(kernel.side()) + "x" +
                      std::to_string(kernel.side()) + " larger than frame " +
                      std::to_string(w) + "x" + std::to_string(h));
  ResponseMap out{w, h, {}, kernel.scale_t()};
  const auto src = frame.data();

  if (const auto& f = kernel.separable_factor()) {
    // clamping is per axis, so the separable passes reproduce the 2-D sum
    const auto tmp = detail::correlate_rows(src, w, h, *f);
    out.values = detail::correlate_cols(tmp, w, h, *f);
    return out;
  }

  const long r = static_cast<long>(kernel.radius());
  out.values.assign(w * h, 0.0);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (long dy = -r; dy <= r; ++dy) {
        const std::size_t yy = detail::clamp_index(static_cast<long>(y) + dy, h);
        for (long dx = -r; dx <= r; ++dx) {
          const std::size_t xx = detail::clamp_index(static_cast<long>(x) + dx, w);
          acc += kernel.tap(dx, dy) * src[yy * w + xx];
        }
      }
      out.values[y * w + x] = acc;
    }
  }
  return out;
}

// Gaussian smoothing at variance t followed by the 5-point Laplacian.
inline ResponseMap log_response(const Frame& frame, double t) {
  const ResponseMap smoothed = convolve(frame, gaussian_kernel(t));
  return ResponseMap{frame.width(), frame.height(),
                     detail::laplacian5(smoothed.values, frame.width(), frame.height()), t};
}

inline ResponseMap scale_normalized_log(const Frame& frame, double t) {
  ResponseMap r = log_response(frame, t);
  for (double& v : r.values) v *= t;
  return r;
}

namespace detail {

inline void check_scales(std::span<const double> scales) {
  require(scales.size() >= 3, "scale-space extrema need at least 3 scales");
  for (std::size_t i = 1; i < scales.size(); ++i)
    require(scales[i] > scales[i - 1], "scales must be strictly increasing");
}

inline std::vector<ResponseMap> normalized_stack(const Frame& frame,
                                                 std::span<const double> scales) {
  std::vector<ResponseMap> stack;
  stack.reserve(scales.size());
  for (double t : scales) stack.push_back(scale_normalized_log(frame, t));
  return stack;
}

inline std::vector<Keypoint> find_extrema(const std::vector<ResponseMap>& stack,
                                          double threshold) {
  std::vector<Keypoint> keypoints;
  if (stack.size() < 3) return keypoints;
  const std::size_t w = stack.front().width;
  const std::size_t h = stack.front().height;
  for (std::size_t s = 1; s + 1 < stack.size(); ++s) {
    const auto& mid = stack[s].values;
    for (std::size_t y = 1; y + 1 < h; ++y) {
      for (std::size_t x = 1; x + 1 < w; ++x) {
        const double v = mid[y * w + x];
        if (std::abs(v) < threshold) continue;
        bool is_max = true;
        bool is_min = true;
        for (std::size_t ds = 0; ds < 3 && (is_max || is_min); ++ds) {
          const auto& layer = stack[s + ds - 1].values;
          for (std::size_t yy = y - 1; yy <= y + 1; ++yy) {
            for (std::size_t xx = x - 1; xx <= x + 1; ++xx) {
              if (ds == 1 && yy == y && xx == x) continue;
              const double n = layer[yy * w + xx];
              if (!(v > n)) is_max = false;
              if (!(v < n)) is_min = false;
            }
          }
        }
        if (is_max || is_min) {
          keypoints.push_back(
              {x, y, stack[s].scale_t, v, is_max ? Polarity::maximum : Polarity::minimum});
        }
      }
    }
  }
  return keypoints;
}

}  // namespace detail

// Points whose scale-normalized LoG strictly dominates (or is strictly
// dominated by) all 26 space-scale neighbours, with |value| >= threshold.
// The first and last scales only serve as neighbours.
inline std::vector<Keypoint> detect_scale_space_extrema(const Frame& frame,
                                                        std::span<const double> scales,
                                                        double threshold) {
  detail::check_scales(scales);
  detail::require(threshold >= 0.0, "extremum threshold must be >= 0");
  return detail::find_extrema(detail::normalized_stack(frame, scales), threshold);
}

inline std::size_t log_descriptor_length(std::size_t num_scales, const Grid& grid) {
  return num_scales * grid.cells() * 4 + num_scales;
}

// Per scale, per grid cell (row-major): mean, population standard
// deviation, max and min of the scale-normalized response. Followed by one
// entry per scale: extrema detected at that scale divided by the pixel count.
inline std::vector<double> log_descriptor(const Frame& frame, std::span<const double> scales,
                                          const Grid& grid, double threshold = 0.01) {
  detail::check_scales(scales);
  detail::require(threshold >= 0.0, "extremum threshold must be >= 0");
  const std::size_t w = frame.width();
  const std::size_t h = frame.height();
  const auto cells = partition(Rect{0, 0, w, h}, grid);
  const auto stack = detail::normalized_stack(frame, scales);

  std::vector<double> out;
  out.reserve(log_descriptor_length(scales.size(), grid));
  for (const auto& map : stack) {
    for (const Rect& cell : cells) {
      double sum = 0.0;
      double hi = -std::numeric_limits<double>::infinity();
      double lo = std::numeric_limits<double>::infinity();
      for (std::size_t y = cell.y0; y < cell.y1; ++y) {
        for (std::size_t x = cell.x0; x < cell.x1; ++x) {
          const double v = map.at(x, y);
          sum += v;
          hi = std::max(hi, v);
          lo = std::min(lo, v);
        }
      }
      const double n = static_cast<double>(cell.area());
      const double mean = sum / n;
      double ss = 0.0;
      for (std::size_t y = cell.y0; y < cell.y1; ++y)
        for (std::size_t x = cell.x0; x < cell.x1; ++x) ss += (map.at(x, y) - mean) * (map.at(x, y) - mean);
      out.push_back(mean);
      out.push_back(std::sqrt(ss / n));
      out.push_back(hi);
      out.push_back(lo);
    }
  }

  std::vector<double> counts(scales.size(), 0.0);
  for (const Keypoint& kp : detail::find_extrema(stack, threshold)) {
    const auto it = std::find(scales.begin(), scales.end(), kp.scale_t);
    detail::ensure(it != scales.end(), "keypoint scale not in scale set");
    counts[static_cast<std::size_t>(it - scales.begin())] += 1.0;
  }
  const double pixels = static_cast<double>(w * h);
  for (double c : counts) out.push_back(c / pixels);
  return out;
}

}  // namespace anomscope
