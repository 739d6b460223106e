#pragma once

#include <png.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "anomscope/error.hpp"
#include "anomscope/frame.hpp"
#include "anomscope/text.hpp"

namespace anomscope {

namespace fs = std::filesystem;

namespace detail {

// BT.601 luma.
inline double luminance(double r, double g, double b) {
  return 0.299 * r + 0.587 * g + 0.114 * b;
}

inline std::vector<unsigned char> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), "cannot open image file: " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Builds a frame from interleaved 8-bit-or-less samples with `channels` of 1 or 3.
inline Frame frame_from_samples(const fs::path& path, std::size_t width, std::size_t height,
                                int channels, double maxval,
                                const std::vector<unsigned>& samples) {
  require(width > 0 && height > 0, "zero-dimension image: " + path.string());
  require(width >= Frame::kMinSide && height >= Frame::kMinSide,
          "image smaller than 3x3: " + path.string());
  std::vector<double> data(width * height);
  for (std::size_t i = 0; i < data.size(); ++i) {
    double v;
    if (channels == 1) {
      v = samples[i] / maxval;
    } else {
      v = luminance(samples[3 * i], samples[3 * i + 1], samples[3 * i + 2]) / maxval;
    }
    data[i] = std::clamp(v, 0.0, 1.0);
  }
  return Frame(width, height, std::move(data));
}

class NetpbmReader {
 public:
  NetpbmReader(const fs::path& path, const std::vector<unsigned char>& bytes)
      : path_(path), bytes_(bytes) {}

  Frame read() {
    require(bytes_.size() >= 2 && bytes_[0] == 'P', "not a netpbm file: " + path_.string());
    const char kind = static_cast<char>(bytes_[1]);
    require(kind == '2' || kind == '3' || kind == '5' || kind == '6',
            "unsupported netpbm variant P" + std::string(1, kind) + ": " + path_.string());
    pos_ = 2;
    const bool ascii = kind == '2' || kind == '3';
    const int channels = (kind == '3' || kind == '6') ? 3 : 1;
    const unsigned width = header_int();
    const unsigned height = header_int();
    const unsigned maxval = header_int();
    require(width > 0 && height > 0, "zero-dimension image: " + path_.string());
    require(maxval >= 1 && maxval <= 255,
            "only 8-bit netpbm is supported (maxval " + std::to_string(maxval) +
                "): " + path_.string());

    const std::size_t count = std::size_t{width} * height * channels;
    std::vector<unsigned> samples(count);
    if (ascii) {
      for (auto& s : samples) {
        s = header_int();
        require(s <= maxval, "sample exceeds maxval: " + path_.string());
      }
    } else {
      // exactly one whitespace byte separates maxval from the raster
      ++pos_;
      require(pos_ + count <= bytes_.size(), "truncated raster: " + path_.string());
      for (std::size_t i = 0; i < count; ++i) {
        samples[i] = bytes_[pos_ + i];
        require(samples[i] <= maxval, "sample exceeds maxval: " + path_.string());
      }
    }
    return frame_from_samples(path_, width, height, channels, maxval, samples);
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  unsigned header_int() {
    skip_space_and_comments();
    const std::size_t start = pos_;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) ++pos_;
    require(pos_ > start, "malformed netpbm header: " + path_.string());
    unsigned v = 0;
    const auto* first = reinterpret_cast<const char*>(bytes_.data() + start);
    const auto* last = reinterpret_cast<const char*>(bytes_.data() + pos_);
    auto [p, ec] = std::from_chars(first, last, v);
    require(ec == std::errc() && p == last, "malformed netpbm number: " + path_.string());
    return v;
  }

  const fs::path& path_;
  const std::vector<unsigned char>& bytes_;
  std::size_t pos_ = 0;
};

inline Frame read_png(const fs::path& path, const std::vector<unsigned char>& bytes) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw InputError("cannot decode PNG " + path.string() + ": " + image.message);
  }
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  // Request the native channel layout so gray samples pass through untouched
  // and color goes through our own luma weights instead of libpng's.
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const std::size_t width = image.width;
  const std::size_t height = image.height;
  if (width == 0 || height == 0) {
    png_image_free(&image);
    throw InputError("zero-dimension image: " + path.string());
  }
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw InputError("cannot decode PNG " + path.string() + ": " + msg);
  }
  std::vector<unsigned> samples(buffer.begin(), buffer.end());
  return frame_from_samples(path, width, height, color ? 3 : 1, 255.0, samples);
}

inline bool has_image_extension(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".pgm" || ext == ".ppm" || ext == ".pnm" || ext == ".png";
}

}  // namespace detail

// Loads an 8-bit grayscale or RGB image (PGM/PPM ascii or binary, PNG) as a
// [0,1] luminance frame. The container is detected from the file signature.
inline Frame load_frame(const fs::path& path) {
  const auto bytes = detail::read_bytes(path);
  detail::require(!bytes.empty(), "empty image file: " + path.string());
  static constexpr unsigned char kPngSig[] = {0x89, 'P', 'N', 'G'};
  if (bytes.size() >= 8 && std::equal(std::begin(kPngSig), std::end(kPngSig), bytes.begin()))
    return detail::read_png(path, bytes);
  if (bytes[0] == 'P') return detail::NetpbmReader(path, bytes).read();
  throw InputError("unsupported image format: " + path.string());
}

// Writes a binary 8-bit PGM. Intensities are rounded to the nearest level.
inline void write_pgm(const fs::path& path, const Frame& frame) {
  std::ofstream out(path, std::ios::binary);
  detail::require(static_cast<bool>(out), "cannot write " + path.string());
  out << "P5\n" << frame.width() << ' ' << frame.height() << "\n255\n";
  for (double v : frame.data()) {
    out.put(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
  }
  detail::require(static_cast<bool>(out), "write failed: " + path.string());
}

// Image files of a directory in lexicographic filename order.
inline std::vector<fs::path> list_frame_files(const fs::path& dir) {
  detail::require(fs::is_directory(dir), "not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && detail::has_image_extension(entry.path()))
      files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) {
              return a.filename().string() < b.filename().string();
            });
  detail::require(!files.empty(), "no image files in " + dir.string());
  return files;
}

// Frames of a directory, unlabeled. All frames must share one size.
inline LabeledSequence load_frames(const fs::path& dir) {
  LabeledSequence seq;
  for (const auto& file : list_frame_files(dir)) {
    Frame f = load_frame(file);
    if (!seq.frames.empty()) {
      const Frame& first = seq.frames.front();
      detail::require(f.width() == first.width() && f.height() == first.height(),
                      "dimension mismatch: " + file.string() + " is " +
                          std::to_string(f.width()) + "x" + std::to_string(f.height()) +
                          ", expected " + std::to_string(first.width()) + "x" +
                          std::to_string(first.height()));
    }
    seq.frames.push_back(std::move(f));
    seq.source_ids.push_back(file.filename().string());
  }
  return seq;
}

// Parses a `frame_index,label` CSV into a map keyed by frame index. Values
// are not range-checked against any frame count here.
template <typename Value>
std::map<long, Value> read_indexed_csv(const fs::path& path, std::string_view header,
                                       std::size_t value_column) {
  std::ifstream in(path);
  detail::require(static_cast<bool>(in), "cannot open " + path.string());
  std::string line;
  detail::require(static_cast<bool>(std::getline(in, line)), "empty CSV: " + path.string());
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  detail::require(detail::trim_cr(line) == header,
                  path.string() + ": expected header '" + std::string(header) + "'");
  std::map<long, Value> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const auto trimmed = detail::trim_cr(line);
    if (trimmed.empty()) continue;
    const auto fields = detail::split(trimmed, ',');
    const std::string where = path.string() + ":" + std::to_string(lineno);
    detail::require(fields.size() > value_column, where + ": too few columns");
    const long index = detail::parse_number<long>(fields[0], where);
    detail::require(index >= 0, where + ": negative frame index");
    const Value value = detail::parse_number<Value>(fields[value_column], where);
    detail::require(rows.emplace(index, value).second,
                    where + ": duplicate frame index " + std::to_string(index));
  }
  return rows;
}

// Labels CSV: header `frame_index,label`, rows `<index>,<0|1>`.
inline std::map<long, int> load_labels(const fs::path& path) {
  auto rows = read_indexed_csv<int>(path, "frame_index,label", 1);
  for (const auto& [index, label] : rows) {
    detail::require(label == 0 || label == 1, path.string() + ": label value " +
                                                  std::to_string(label) + " at frame " +
                                                  std::to_string(index) + " is not 0 or 1");
  }
  return rows;
}

inline LabeledSequence load_sequence(const fs::path& frames_dir, const fs::path& labels_path) {
  LabeledSequence seq = load_frames(frames_dir);
  const auto labels = load_labels(labels_path);
  detail::require(labels.size() == seq.frames.size(),
                  "label count mismatch: " + std::to_string(labels.size()) + " labels for " +
                      std::to_string(seq.frames.size()) + " frames");
  seq.labels.reserve(seq.frames.size());
  for (std::size_t i = 0; i < seq.frames.size(); ++i) {
    const auto it = labels.find(static_cast<long>(i));
    detail::require(it != labels.end(), "missing label for frame " + std::to_string(i) + " (" +
                                            seq.source_ids[i] + ")");
    seq.labels.push_back(it->second);
  }
  return seq;
}

}  // namespace anomscope
