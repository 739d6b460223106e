#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "anomscope/error.hpp"

namespace anomscope {

// Single-channel intensity image, row-major, every value in [0,1].
class Frame {
 public:
  static constexpr std::size_t kMinSide = 3;

  Frame() = default;
  Frame(std::size_t width, std::size_t height, std::vector<double> data)
      : width_(width), height_(height), data_(std::move(data)) {
    detail::require(width_ >= kMinSide && height_ >= kMinSide,
                    "frame must be at least 3x3, got " + std::to_string(width_) + "x" +
                        std::to_string(height_));
    detail::require(data_.size() == width_ * height_, "frame data length != width*height");
    for (double v : data_)
      detail::require(v >= 0.0 && v <= 1.0, "frame intensity outside [0,1]");
  }

  // Constant-valued frame.
  Frame(std::size_t width, std::size_t height, double value)
      : Frame(width, height, std::vector<double>(width * height, value)) {}

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  std::span<const double> data() const { return data_; }

  double at(std::size_t x, std::size_t y) const { return data_[y * width_ + x]; }

  bool operator==(const Frame&) const = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<double> data_;
};

struct LabeledSequence {
  std::vector<Frame> frames;
  std::vector<int> labels;  // 0 = normal, 1 = anomaly
  std::vector<std::string> source_ids;
};

struct Grid {
  std::size_t rows = 4;
  std::size_t cols = 4;

  std::size_t cells() const { return rows * cols; }
  bool operator==(const Grid&) const = default;
};

// Half-open pixel rectangle [x0, x1) x [y0, y1).
struct Rect {
  std::size_t x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  std::size_t width() const { return x1 - x0; }
  std::size_t height() const { return y1 - y0; }
  std::size_t area() const { return width() * height(); }
};

// Splits `region` into grid.rows x grid.cols near-equal rectangles in row-major
// order. Each cell gets floor(extent / n) pixels along an axis and the last
// row/column absorbs the remainder.
inline std::vector<Rect> partition(const Rect& region, const Grid& grid) {
  detail::require(grid.rows >= 1 && grid.cols >= 1, "grid rows and cols must be >= 1");
  const std::size_t cw = region.width() / grid.cols;
  const std::size_t ch = region.height() / grid.rows;
  detail::require(cw >= 1 && ch >= 1, "grid " + std::to_string(grid.rows) + "x" +
                                          std::to_string(grid.cols) +
                                          " leaves cells smaller than one pixel");
  std::vector<Rect> cells;
  cells.reserve(grid.cells());
  for (std::size_t r = 0; r < grid.rows; ++r) {
    for (std::size_t c = 0; c < grid.cols; ++c) {
      Rect cell;
      cell.x0 = region.x0 + c * cw;
      cell.y0 = region.y0 + r * ch;
      cell.x1 = (c + 1 == grid.cols) ? region.x1 : cell.x0 + cw;
      cell.y1 = (r + 1 == grid.rows) ? region.y1 : cell.y0 + ch;
      cells.push_back(cell);
    }
  }
  return cells;
}

}  // namespace anomscope
