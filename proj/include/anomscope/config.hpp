#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "anomscope/error.hpp"
#include "anomscope/frame.hpp"
#include "anomscope/lbp.hpp"
#include "anomscope/mlp.hpp"
#include "anomscope/scalespace.hpp"
#include "anomscope/text.hpp"

namespace anomscope {

struct PipelineConfig {
  std::vector<double> scales{2, 4, 8, 16, 32};
  Grid log_grid{4, 4};
  Grid lbp_grid{4, 4};
  double extremum_threshold = 0.01;
  TrainConfig mlp;
  double decision_threshold = kDefaultDecisionThreshold;

  void validate() const {
    detail::require(scales.size() >= 3, "config: scales needs at least 3 entries");
    for (std::size_t i = 0; i < scales.size(); ++i) {
      detail::require(std::isfinite(scales[i]) && scales[i] >= kMinScaleT,
                      "config: every scale must be >= 0.25");
      if (i) detail::require(scales[i] > scales[i - 1], "config: scales must be strictly increasing");
    }
    detail::require(log_grid.rows >= 1 && log_grid.cols >= 1, "config: log_grid must be at least 1x1");
    detail::require(lbp_grid.rows >= 1 && lbp_grid.cols >= 1, "config: lbp_grid must be at least 1x1");
    detail::require(std::isfinite(extremum_threshold) && extremum_threshold >= 0.0,
                    "config: extremum_threshold must be >= 0");
    detail::require(std::isfinite(decision_threshold), "config: decision_threshold must be finite");
    mlp.validate();
  }

  std::size_t feature_length() const {
    return log_descriptor_length(scales.size(), log_grid) + lbp_descriptor_length(lbp_grid);
  }

  bool operator==(const PipelineConfig&) const = default;
};

namespace detail {

inline std::string_view trim(std::string_view s) { return trim_cr(s); }

inline std::vector<std::string_view> split_list(std::string_view value) {
  std::vector<std::string_view> out;
  for (auto part : split(value, ',')) {
    part = trim(part);
    require(!part.empty(), "config: empty list element in '" + std::string(value) + "'");
    out.push_back(part);
  }
  return out;
}

inline Grid parse_grid(std::string_view value, const std::string& key) {
  const auto x = value.find('x');
  require(x != std::string_view::npos, "config: " + key + " must look like ROWSxCOLS");
  return Grid{parse_number<std::size_t>(value.substr(0, x), key),
              parse_number<std::size_t>(value.substr(x + 1), key)};
}

inline bool parse_bool(std::string_view value, const std::string& key) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw InputError("config: " + key + " must be true or false");
}

template <typename Seq>
std::string join(const Seq& values) {
  std::string out;
  for (const auto& v : values) {
    if (!out.empty()) out += ", ";
    if constexpr (std::is_floating_point_v<std::decay_t<decltype(v)>>)
      out += format_exact(v);
    else
      out += std::to_string(v);
  }
  return out;
}

}  // namespace detail

// Line-oriented `key = value` text. `#` starts a comment; keys not present
// keep their defaults; unknown or repeated keys are rejected.
inline PipelineConfig parse_config(std::string_view text) {
  PipelineConfig cfg;
  std::set<std::string> seen;
  std::size_t lineno = 0;
  for (auto raw : detail::split(text, '\n')) {
    ++lineno;
    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    const auto line = detail::trim(raw);
    if (line.empty()) continue;
    const std::string where = "config line " + std::to_string(lineno);
    const auto eq = line.find('=');
    detail::require(eq != std::string_view::npos, where + ": expected key = value");
    const std::string key(detail::trim(line.substr(0, eq)));
    const auto value = detail::trim(line.substr(eq + 1));
    detail::require(seen.insert(key).second, where + ": duplicate key " + key);

    if (key == "scales") {
      cfg.scales.clear();
      for (auto v : detail::split_list(value)) cfg.scales.push_back(detail::parse_number<double>(v, key));
    } else if (key == "log_grid") {
      cfg.log_grid = detail::parse_grid(value, key);
    } else if (key == "lbp_grid") {
      cfg.lbp_grid = detail::parse_grid(value, key);
    } else if (key == "extremum_threshold") {
      cfg.extremum_threshold = detail::parse_number<double>(value, key);
    } else if (key == "decision_threshold") {
      cfg.decision_threshold = detail::parse_number<double>(value, key);
    } else if (key == "mlp.eta") {
      cfg.mlp.eta = detail::parse_number<double>(value, key);
    } else if (key == "mlp.epochs") {
      cfg.mlp.epochs = detail::parse_number<std::size_t>(value, key);
    } else if (key == "mlp.hidden_sizes") {
      cfg.mlp.hidden_sizes.clear();
      for (auto v : detail::split_list(value))
        cfg.mlp.hidden_sizes.push_back(detail::parse_number<std::size_t>(v, key));
    } else if (key == "mlp.seed") {
      cfg.mlp.seed = detail::parse_number<std::uint64_t>(value, key);
    } else if (key == "mlp.shuffle") {
      cfg.mlp.shuffle = detail::parse_bool(value, key);
    } else {
      throw InputError(where + ": unknown key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

inline std::string serialize_config(const PipelineConfig& cfg) {
  std::ostringstream out;
  out << "scales = " << detail::join(cfg.scales) << '\n'
      << "log_grid = " << cfg.log_grid.rows << 'x' << cfg.log_grid.cols << '\n'
      << "lbp_grid = " << cfg.lbp_grid.rows << 'x' << cfg.lbp_grid.cols << '\n'
      << "extremum_threshold = " << format_exact(cfg.extremum_threshold) << '\n'
      << "decision_threshold = " << format_exact(cfg.decision_threshold) << '\n'
      << "mlp.eta = " << format_exact(cfg.mlp.eta) << '\n'
      << "mlp.epochs = " << cfg.mlp.epochs << '\n'
      << "mlp.hidden_sizes = " << detail::join(cfg.mlp.hidden_sizes) << '\n'
      << "mlp.seed = " << cfg.mlp.seed << '\n'
      << "mlp.shuffle = " << (cfg.mlp.shuffle ? "true" : "false") << '\n';
  return out.str();
}

inline PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  detail::require(static_cast<bool>(in), "cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace anomscope
