#pragma once

#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "anomscope/error.hpp"
#include "anomscope/frame.hpp"

namespace anomscope {

using LbpCode = std::uint8_t;

inline constexpr std::size_t kLbpBins = 59;
inline constexpr std::size_t kNonUniformBin = 58;

struct LbpHistogram {
  std::array<double, kLbpBins> bins{};
};

// Neighbour offsets, clockwise from the top-left. The first entry lands in
// the most significant bit.
inline constexpr std::array<std::array<int, 2>, 8> kLbpNeighbours{{
    {-1, -1}, {0, -1}, {1, -1}, {1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0},
}};

namespace detail {

inline LbpCode lbp_code_unchecked(const Frame& frame, std::size_t x, std::size_t y) {
  const double center = frame.at(x, y);
  unsigned code = 0;
  for (const auto& [dx, dy] : kLbpNeighbours) {
    const double n = frame.at(x + dx, y + dy);
    code = (code << 1) | (center > n ? 0u : 1u);
  }
  return static_cast<LbpCode>(code);
}

}  // namespace detail

// Bit is 0 where the centre is strictly brighter than the neighbour, 1
// otherwise (ties give 1).
inline LbpCode lbp_code(const Frame& frame, std::size_t x, std::size_t y) {
  detail::require(x >= 1 && y >= 1 && x + 1 < frame.width() && y + 1 < frame.height(),
                  "lbp_code: pixel (" + std::to_string(x) + "," + std::to_string(y) +
                      ") is on the border");
  return detail::lbp_code_unchecked(frame, x, y);
}

// Bit changes around the circular 8-bit pattern (bit 7 neighbours bit 0).
constexpr int circular_transitions(LbpCode code) {
  const auto rotated = static_cast<std::uint8_t>((code >> 1) | (code << 7));
  return std::popcount(static_cast<std::uint8_t>(code ^ rotated));
}

constexpr bool is_uniform(LbpCode code) { return circular_transitions(code) <= 2; }

namespace detail {

constexpr std::array<std::uint8_t, 256> make_uniform_table() {
  std::array<std::uint8_t, 256> table{};
  std::uint8_t next = 0;
  for (unsigned c = 0; c < 256; ++c) {
    table[c] = is_uniform(static_cast<LbpCode>(c)) ? next++
                                                  : static_cast<std::uint8_t>(kNonUniformBin);
  }
  return table;
}

inline constexpr auto kUniformTable = make_uniform_table();

}  // namespace detail

// Uniform codes occupy bins 0..57 in ascending code order; bin 58 collects
// everything else.
constexpr std::size_t uniform_bin_index(LbpCode code) { return detail::kUniformTable[code]; }

// The 58 uniform codes in ascending order.
inline std::vector<LbpCode> uniform_codes() {
  std::vector<LbpCode> out;
  for (unsigned c = 0; c < 256; ++c)
    if (is_uniform(static_cast<LbpCode>(c))) out.push_back(static_cast<LbpCode>(c));
  return out;
}

// The region where codes exist: all pixels with a full 8-neighbourhood.
inline Rect codeable_region(const Frame& frame) {
  return Rect{1, 1, frame.width() - 1, frame.height() - 1};
}

// Raw bin counts over `cell`. The cell must lie inside the codeable region.
inline std::array<std::size_t, kLbpBins> cell_counts(const Frame& frame, const Rect& cell) {
  const Rect region = codeable_region(frame);
  detail::require(cell.x0 >= region.x0 && cell.y0 >= region.y0 && cell.x1 <= region.x1 &&
                      cell.y1 <= region.y1,
                  "cell extends outside the codeable interior");
  detail::require(cell.x1 > cell.x0 && cell.y1 > cell.y0, "cell has no codeable pixel");
  std::array<std::size_t, kLbpBins> counts{};
  for (std::size_t y = cell.y0; y < cell.y1; ++y)
    for (std::size_t x = cell.x0; x < cell.x1; ++x)
      ++counts[uniform_bin_index(detail::lbp_code_unchecked(frame, x, y))];
  return counts;
}

// L1-normalized uniform-pattern histogram of one cell.
inline LbpHistogram cell_histogram(const Frame& frame, const Rect& cell) {
  const auto counts = cell_counts(frame, cell);
  const double n = static_cast<double>(cell.area());
  LbpHistogram hist;
  for (std::size_t b = 0; b < kLbpBins; ++b) hist.bins[b] = static_cast<double>(counts[b]) / n;
  return hist;
}

inline std::size_t lbp_descriptor_length(const Grid& grid) { return grid.cells() * kLbpBins; }

// Cell histograms over a rows x cols partition of the codeable region,
// concatenated in row-major cell order.
inline std::vector<double> lbp_descriptor(const Frame& frame, const Grid& grid) {
  std::vector<double> out;
  out.reserve(lbp_descriptor_length(grid));
  for (const Rect& cell : partition(codeable_region(frame), grid)) {
    const auto hist = cell_histogram(frame, cell);
    out.insert(out.end(), hist.bins.begin(), hist.bins.end());
  }
  return out;
}

}  // namespace anomscope
