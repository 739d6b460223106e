#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "anomscope/anomscope.hpp"

int main(int argc, char** argv) {
  CLI::App app{"anomscope: frame-level crowd anomaly detection with LoG + LBP features and an MLP"};
  app.require_subcommand(1);

  std::string frames, labels, config, model, out;
  std::vector<std::string> preds, truths;

  auto* train = app.add_subcommand("train", "extract features, train the MLP and write a model");
  train->add_option("--frames", frames, "directory of frame images")->required();
  train->add_option("--labels", labels, "frame_index,label CSV")->required();
  train->add_option("--config", config, "pipeline config (key = value)")->required();
  train->add_option("--out", out, "model file to write")->required();

  auto* predict = app.add_subcommand("predict", "score every frame of a directory");
  predict->add_option("--frames", frames, "directory of frame images")->required();
  predict->add_option("--model", model, "model file from `train`")->required();
  predict->add_option("--out", out, "prediction CSV to write")->required();
  predict->add_option("--config", config, "pipeline config used at training time");

  auto* eval = app.add_subcommand("eval", "F-scores of predictions against ground truth");
  eval->add_option("--pred", preds, "prediction CSV (repeat once per sequence)")->required();
  eval->add_option("--truth", truths, "labels CSV (repeat, paired with --pred in order)")->required();
  eval->add_option("--out", out, "text report; a CSV table is written beside it")->required();

  auto* features = app.add_subcommand("features", "dump fused descriptors as CSV");
  features->add_option("--frames", frames, "directory of frame images")->required();
  features->add_option("--config", config, "pipeline config");
  features->add_option("--out", out, "feature CSV to write")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  namespace fs = std::filesystem;
  if (*train) return anomscope::cmd_train(frames, labels, config, out);
  if (*predict) return anomscope::cmd_predict(frames, model, out, config);
  if (*features) return anomscope::cmd_features(frames, config, out);
  if (*eval) {
    std::vector<fs::path> p(preds.begin(), preds.end());
    std::vector<fs::path> t(truths.begin(), truths.end());
    return anomscope::cmd_eval(p, t, out);
  }
  return 1;
}
