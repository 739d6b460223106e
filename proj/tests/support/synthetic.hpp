#pragma once

// Test-only image and dataset generators.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "anomscope/frame.hpp"
#include "anomscope/frame_io.hpp"

namespace anomscope::testing {

inline Frame random_frame(std::size_t w, std::size_t h, std::mt19937_64& rng, bool quantize = false) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> data(w * h);
  for (double& v : data) {
    v = u(rng);
    if (quantize) v = std::round(v * 255.0) / 255.0;
  }
  return Frame(w, h, std::move(data));
}

struct Blob {
  double cx, cy, sigma, amplitude;
};

// background + sum of isotropic Gaussian bumps, clamped to [0,1].
inline std::vector<double> render_blobs(std::size_t w, std::size_t h, double background,
                                        const std::vector<Blob>& blobs) {
  std::vector<double> data(w * h, background);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double v = background;
      for (const auto& b : blobs) {
        const double dx = static_cast<double>(x) - b.cx;
        const double dy = static_cast<double>(y) - b.cy;
        v += b.amplitude * std::exp(-(dx * dx + dy * dy) / (2.0 * b.sigma * b.sigma));
      }
      data[y * w + x] = std::clamp(v, 0.0, 1.0);
    }
  }
  return data;
}

inline Frame blob_frame(std::size_t w, std::size_t h, const std::vector<Blob>& blobs,
                        double background = 0.0) {
  return Frame(w, h, render_blobs(w, h, background, blobs));
}

inline Frame upsample_nearest(const Frame& f, std::size_t factor) {
  const std::size_t w = f.width() * factor, h = f.height() * factor;
  std::vector<double> data(w * h);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) data[y * w + x] = f.at(x / factor, y / factor);
  return Frame(w, h, std::move(data));
}

// Crowd-like scene generator used by the end-to-end checks.
//   normal:    a few small, low-contrast blobs over fine per-pixel texture
//   anomalous: several large, high-contrast blobs over coarse block texture
inline Frame synthetic_scene(bool anomalous, std::size_t w, std::size_t h, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ux(4.0, static_cast<double>(w) - 4.0);
  std::uniform_real_distribution<double> uy(4.0, static_cast<double>(h) - 4.0);
  std::vector<Blob> blobs;
  if (anomalous) {
    std::uniform_int_distribution<int> count(3, 5);
    std::uniform_real_distribution<double> sigma(5.0, 8.0);
    std::uniform_real_distribution<double> amp(0.3, 0.45);
    std::bernoulli_distribution sign(0.5);
    for (int i = count(rng); i > 0; --i)
      blobs.push_back({ux(rng), uy(rng), sigma(rng), sign(rng) ? amp(rng) : -amp(rng)});
  } else {
    std::uniform_int_distribution<int> count(2, 4);
    std::uniform_real_distribution<double> sigma(1.0, 2.0);
    std::uniform_real_distribution<double> amp(0.05, 0.12);
    for (int i = count(rng); i > 0; --i) blobs.push_back({ux(rng), uy(rng), sigma(rng), amp(rng)});
  }
  std::vector<double> data = render_blobs(w, h, 0.5, blobs);

  const std::size_t block = anomalous ? 6 : 1;
  const double amplitude = anomalous ? 0.08 : 0.04;
  std::uniform_real_distribution<double> noise(-amplitude, amplitude);
  const std::size_t bw = (w + block - 1) / block, bh = (h + block - 1) / block;
  std::vector<double> texture(bw * bh);
  for (double& v : texture) v = noise(rng);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double v = data[y * w + x] + texture[(y / block) * bw + (x / block)];
      data[y * w + x] = std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0;
    }
  }
  return Frame(w, h, std::move(data));
}

inline void write_labels(const std::filesystem::path& path, const std::vector<int>& labels) {
  std::ofstream out(path, std::ios::binary);
  out << "frame_index,label\n";
  for (std::size_t i = 0; i < labels.size(); ++i) out << i << ',' << labels[i] << '\n';
}

// Writes `labels.size()` frames as frame_0000.pgm ... plus a labels CSV.
inline void write_synthetic_sequence(const std::filesystem::path& dir,
                                     const std::filesystem::path& labels_path,
                                     const std::vector<int>& labels, std::size_t w, std::size_t h,
                                     std::mt19937_64& rng) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%04zu.pgm", i);
    write_pgm(dir / name, synthetic_scene(labels[i] == 1, w, h, rng));
  }
  write_labels(labels_path, labels);
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("anomscope_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace anomscope::testing
