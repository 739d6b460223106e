#pragma once

#include <algorithm>
#include <exception>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "anomscope/config.hpp"
#include "anomscope/error.hpp"
#include "anomscope/eval.hpp"
#include "anomscope/frame_io.hpp"
#include "anomscope/lbp.hpp"
#include "anomscope/mlp.hpp"
#include "anomscope/scalespace.hpp"
#include "anomscope/text.hpp"

namespace anomscope {

namespace fs = std::filesystem;

inline FeatureVector frame_features(const Frame& frame, const PipelineConfig& config) {
  return fuse(log_descriptor(frame, config.scales, config.log_grid, config.extremum_threshold),
              lbp_descriptor(frame, config.lbp_grid));
}

// One fused descriptor per frame, in frame order. Frames are processed on
// up to `threads` workers (0 = hardware concurrency).
inline std::vector<FeatureVector> extract_features(const LabeledSequence& seq,
                                                   const PipelineConfig& config,
                                                   unsigned threads = 0) {
  config.validate();
  const std::size_t n = seq.frames.size();
  std::vector<FeatureVector> out(n);
  if (n == 0) return out;
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));

  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = frame_features(seq.frames[i], config);
    return out;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += threads) out[i] = frame_features(seq.frames[i], config);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

// Maps library exceptions onto CLI exit codes: 0 ok, 1 bad input, 2 broken
// invariant or anything unexpected.
inline int run_guarded(const std::function<void()>& body, std::ostream& err) {
  try {
    body();
    return 0;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return 2;
  }
}

inline std::string format_predictions(const std::vector<DetectionResult>& results) {
  std::ostringstream out;
  out << "frame_index,score,label\n";
  for (const auto& r : results)
    out << r.frame_index << ',' << format_fixed(r.score, 6) << ',' << r.label << '\n';
  return out.str();
}

inline std::string format_features(const std::vector<FeatureVector>& features) {
  std::ostringstream out;
  out << "frame_index";
  const std::size_t n = features.empty() ? 0 : features.front().size();
  for (std::size_t j = 0; j < n; ++j) out << ",f" << j;
  out << '\n';
  for (std::size_t i = 0; i < features.size(); ++i) {
    out << i;
    for (double v : features[i].values()) out << ',' << format_exact(v);
    out << '\n';
  }
  return out.str();
}

inline int cmd_train(const fs::path& frames_dir, const fs::path& labels_path,
                     const fs::path& config_path, const fs::path& model_out,
                     std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return run_guarded(
      [&] {
        const PipelineConfig config = load_config(config_path);
        const LabeledSequence seq = load_sequence(frames_dir, labels_path);
        const auto features = extract_features(seq, config);
        const TrainResult result = train(features, seq.labels, config.mlp);
        const std::string model_text = serialize_model(result.model);
        out << "epoch,mean_cost\n";
        for (std::size_t e = 0; e < result.cost_history.size(); ++e)
          out << (e + 1) << ',' << format_exact(result.cost_history[e]) << '\n';
        write_file_atomic(model_out, model_text);
      },
      err);
}

// `config_path` may be empty, in which case the default configuration is used
// to extract features and threshold scores.
inline int cmd_predict(const fs::path& frames_dir, const fs::path& model_path,
                       const fs::path& out_csv, const fs::path& config_path = {},
                       std::ostream& err = std::cerr) {
  return run_guarded(
      [&] {
        const PipelineConfig config = config_path.empty() ? PipelineConfig{} : load_config(config_path);
        std::ifstream in(model_path, std::ios::binary);
        detail::require(static_cast<bool>(in), "cannot open model " + model_path.string());
        const MlpModel model = parse_model(in);
        const LabeledSequence seq = load_frames(frames_dir);
        const std::size_t expected = config.feature_length();
        detail::require(expected == model.input_size(),
                        "feature length mismatch: frames yield " + std::to_string(expected) +
                            " features but the model expects " + std::to_string(model.input_size()));
        const auto features = extract_features(seq, config);
        std::vector<DetectionResult> results;
        results.reserve(features.size());
        for (std::size_t i = 0; i < features.size(); ++i)
          results.push_back(predict(model, features[i].values(), config.decision_threshold, i));
        write_file_atomic(out_csv, format_predictions(results));
      },
      err);
}

inline fs::path report_csv_path(const fs::path& report_out) {
  fs::path p = report_out;
  p += ".csv";
  return p;
}

// Writes the text report to `report_out` and the machine-readable table to
// `report_out` + ".csv". preds[i] is paired with truths[i].
inline int cmd_eval(const std::vector<fs::path>& preds, const std::vector<fs::path>& truths,
                    const fs::path& report_out, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
  return run_guarded(
      [&] {
        const EvalReport report = evaluate(preds, truths);
        const std::string text = format_report_text(report);
        write_file_atomic(report_csv_path(report_out), format_report_csv(report));
        write_file_atomic(report_out, text);
        out << text;
      },
      err);
}

inline int cmd_features(const fs::path& frames_dir, const fs::path& config_path,
                        const fs::path& out_csv, std::ostream& err = std::cerr) {
  return run_guarded(
      [&] {
        const PipelineConfig config = config_path.empty() ? PipelineConfig{} : load_config(config_path);
        const LabeledSequence seq = load_frames(frames_dir);
        write_file_atomic(out_csv, format_features(extract_features(seq, config)));
      },
      err);
}

}  // namespace anomscope
