#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "anomscope/error.hpp"
#include "anomscope/frame_io.hpp"
#include "anomscope/text.hpp"

namespace anomscope {

struct Confusion {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }
};

inline double precision(std::size_t tp, std::size_t fp) {
  return tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
}

inline double recall(std::size_t tp, std::size_t fn) {
  return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
}

// Harmonic mean of precision and recall. Undefined when there is neither a
// positive prediction nor a positive label.
inline double f_score(std::size_t tp, std::size_t fp, std::size_t fn) {
  detail::require(tp + fp + fn >= 1, "undefined F-score: tp, fp and fn are all zero");
  const double p = precision(tp, fp);
  const double r = recall(tp, fn);
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

inline double mean_f_score(const std::vector<double>& scores) {
  detail::require(!scores.empty(), "no sequences to average");
  double s = 0.0;
  for (double f : scores) s += f;
  return s / static_cast<double>(scores.size());
}

struct SequenceScore {
  std::string name;
  std::string pred_path;
  std::string truth_path;
  Confusion counts;
  double precision = 0.0;
  double recall = 0.0;
  double f_score = 0.0;
};

struct EvalReport {
  std::vector<SequenceScore> sequences;
  double average_f_score = 0.0;
};

// Joins predicted and true labels on frame_index. Both files must cover the
// same set of indices.
inline Confusion confusion(const std::map<long, int>& predicted, const std::map<long, int>& truth) {
  detail::require(predicted.size() == truth.size(),
                  "index mismatch: " + std::to_string(predicted.size()) + " predictions vs " +
                      std::to_string(truth.size()) + " labels");
  Confusion c;
  for (const auto& [index, label] : truth) {
    const auto it = predicted.find(index);
    detail::require(it != predicted.end(),
                    "index mismatch: frame " + std::to_string(index) + " has no prediction");
    const bool p = it->second == 1;
    const bool t = label == 1;
    if (p && t) ++c.tp;
    else if (p) ++c.fp;
    else if (t) ++c.fn;
    else ++c.tn;
  }
  return c;
}

// Prediction CSV `frame_index,score,label`; only the label column is used.
inline std::map<long, int> load_prediction_labels(const std::filesystem::path& path) {
  auto rows = read_indexed_csv<int>(path, "frame_index,score,label", 2);
  for (const auto& [index, label] : rows)
    detail::require(label == 0 || label == 1,
                    path.string() + ": label at frame " + std::to_string(index) + " is not 0 or 1");
  return rows;
}

inline SequenceScore score_sequence(std::string name, const std::map<long, int>& predicted,
                                    const std::map<long, int>& truth) {
  SequenceScore s;
  s.name = std::move(name);
  s.counts = confusion(predicted, truth);
  s.precision = precision(s.counts.tp, s.counts.fp);
  s.recall = recall(s.counts.tp, s.counts.fn);
  s.f_score = f_score(s.counts.tp, s.counts.fp, s.counts.fn);
  return s;
}

inline EvalReport evaluate(const std::vector<std::filesystem::path>& preds,
                           const std::vector<std::filesystem::path>& truths) {
  detail::require(!preds.empty(), "eval: need at least one prediction file");
  detail::require(preds.size() == truths.size(),
                  "eval: " + std::to_string(preds.size()) + " prediction files but " +
                      std::to_string(truths.size()) + " truth files");
  EvalReport report;
  std::vector<double> scores;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    auto s = score_sequence("S" + std::to_string(i + 1), load_prediction_labels(preds[i]),
                            load_labels(truths[i]));
    s.pred_path = preds[i].string();
    s.truth_path = truths[i].string();
    scores.push_back(s.f_score);
    report.sequences.push_back(std::move(s));
  }
  report.average_f_score = mean_f_score(scores);
  return report;
}

inline std::string format_report_text(const EvalReport& report) {
  std::ostringstream out;
  out << "Anomaly detection F-scores (frame level: positive = anomalous frame)\n\n";
  out << "Sequence\tTP\tFP\tFN\tTN\tPrecision\tRecall\tF-score\n";
  for (const auto& s : report.sequences) {
    out << s.name << '\t' << s.counts.tp << '\t' << s.counts.fp << '\t' << s.counts.fn << '\t'
        << s.counts.tn << '\t' << format_exact(s.precision) << '\t' << format_exact(s.recall)
        << '\t' << format_exact(s.f_score) << '\n';
  }
  out << "Average\t\t\t\t\t\t\t" << format_exact(report.average_f_score) << "\n\n";
  for (const auto& s : report.sequences)
    out << s.name << ": pred=" << s.pred_path << " truth=" << s.truth_path << '\n';
  return out.str();
}

inline std::string format_report_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "sequence,tp,fp,fn,tn,precision,recall,f_score\n";
  for (const auto& s : report.sequences) {
    out << s.name << ',' << s.counts.tp << ',' << s.counts.fp << ',' << s.counts.fn << ','
        << s.counts.tn << ',' << format_exact(s.precision) << ',' << format_exact(s.recall) << ','
        << format_exact(s.f_score) << '\n';
  }
  out << "average,,,,,,," << format_exact(report.average_f_score) << '\n';
  return out.str();
}

}  // namespace anomscope
