#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "anomscope/error.hpp"
#include "anomscope/text.hpp"

namespace anomscope {

// Fixed-length descriptor fed to the classifier. Entries are always finite.
class FeatureVector {
 public:
  FeatureVector() = default;
  explicit FeatureVector(std::vector<double> values) : values_(std::move(values)) {
    for (double v : values_) detail::require(std::isfinite(v), "feature vector has a non-finite entry");
  }

  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

  bool operator==(const FeatureVector&) const = default;

 private:
  std::vector<double> values_;
};

// LoG part first, then LBP.
inline FeatureVector fuse(std::span<const double> log_vec, std::span<const double> lbp_vec) {
  detail::require(!log_vec.empty() && !lbp_vec.empty(), "fuse: both descriptors must be non-empty");
  std::vector<double> out;
  out.reserve(log_vec.size() + lbp_vec.size());
  out.insert(out.end(), log_vec.begin(), log_vec.end());
  out.insert(out.end(), lbp_vec.begin(), lbp_vec.end());
  return FeatureVector(std::move(out));
}

// Row-major dense matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  bool operator==(const Matrix&) const = default;
};

// Per-dimension affine map x -> (x - mean) / std learned from training data.
struct Standardizer {
  static constexpr double kStdFloor = 1e-8;

  std::vector<double> means;
  std::vector<double> stds;

  static Standardizer identity(std::size_t n) {
    return Standardizer{std::vector<double>(n, 0.0), std::vector<double>(n, 1.0)};
  }

  static Standardizer fit(std::span<const FeatureVector> xs) {
    detail::require(!xs.empty(), "cannot fit standardizer on an empty dataset");
    const std::size_t n = xs.front().size();
    Standardizer s{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
    for (const auto& x : xs)
      for (std::size_t i = 0; i < n; ++i) s.means[i] += x[i];
    for (double& m : s.means) m /= static_cast<double>(xs.size());
    for (const auto& x : xs)
      for (std::size_t i = 0; i < n; ++i) s.stds[i] += (x[i] - s.means[i]) * (x[i] - s.means[i]);
    for (double& v : s.stds) v = std::max(std::sqrt(v / static_cast<double>(xs.size())), kStdFloor);
    return s;
  }

  std::vector<double> apply(std::span<const double> x) const {
    detail::require(x.size() == means.size(), "standardizer expects " + std::to_string(means.size()) +
                                                  " features, got " + std::to_string(x.size()));
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - means[i]) / stds[i];
    return out;
  }

  bool operator==(const Standardizer&) const = default;
};

// Fully connected sigmoid network. weights[l] maps layer l to layer l+1 and
// has shape layer_sizes[l+1] x layer_sizes[l].
struct MlpModel {
  std::vector<std::size_t> layer_sizes;
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;
  std::uint64_t rng_seed = 0;
  Standardizer standardizer;

  // All parameters zero, identity standardization.
  static MlpModel zeros(std::vector<std::size_t> sizes) {
    MlpModel m;
    m.layer_sizes = std::move(sizes);
    detail::require(m.layer_sizes.size() >= 3, "an MLP needs at least one hidden layer");
    for (std::size_t l = 0; l + 1 < m.layer_sizes.size(); ++l) {
      detail::require(m.layer_sizes[l] >= 1 && m.layer_sizes[l + 1] >= 1, "layer sizes must be >= 1");
      m.weights.emplace_back(m.layer_sizes[l + 1], m.layer_sizes[l]);
      m.biases.emplace_back(m.layer_sizes[l + 1], 0.0);
    }
    m.standardizer = Standardizer::identity(m.layer_sizes.front());
    return m;
  }

  std::size_t input_size() const { return layer_sizes.front(); }
  std::size_t output_size() const { return layer_sizes.back(); }
  std::size_t weight_layers() const { return weights.size(); }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].data.size() + biases[l].size();
    return n;
  }

  void validate() const {
    detail::require(layer_sizes.size() >= 3, "an MLP needs at least one hidden layer");
    detail::require(weights.size() + 1 == layer_sizes.size() && biases.size() == weights.size(),
                    "layer count does not match layer sizes");
    for (std::size_t l = 0; l < weights.size(); ++l) {
      detail::require(weights[l].rows == layer_sizes[l + 1] && weights[l].cols == layer_sizes[l] &&
                          weights[l].data.size() == weights[l].rows * weights[l].cols,
                      "weight matrix " + std::to_string(l) + " has the wrong shape");
      detail::require(biases[l].size() == layer_sizes[l + 1],
                      "bias vector " + std::to_string(l) + " has the wrong length");
      for (double v : weights[l].data) detail::require(std::isfinite(v), "non-finite weight");
      for (double v : biases[l]) detail::require(std::isfinite(v), "non-finite bias");
    }
    detail::require(standardizer.means.size() == input_size() &&
                        standardizer.stds.size() == input_size(),
                    "standardizer length does not match the input layer");
  }

  bool operator==(const MlpModel& o) const {
    return layer_sizes == o.layer_sizes && weights == o.weights && biases == o.biases &&
           standardizer == o.standardizer;
  }
};

inline double sigmoid(double u) { return 1.0 / (1.0 + std::exp(-u)); }

// activations[0] is the input, activations[L] the network output.
struct Activations {
  std::vector<std::vector<double>> layers;

  std::span<const double> output() const { return layers.back(); }
};

struct Gradients {
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;
};

inline Activations forward(const MlpModel& model, std::span<const double> x) {
  detail::require(x.size() == model.input_size(), "forward: input has " + std::to_string(x.size()) +
                                                      " features, model expects " +
                                                      std::to_string(model.input_size()));
  Activations act;
  act.layers.reserve(model.layer_sizes.size());
  act.layers.emplace_back(x.begin(), x.end());
  for (std::size_t l = 0; l < model.weight_layers(); ++l) {
    const Matrix& w = model.weights[l];
    const auto& prev = act.layers.back();
    std::vector<double> next(w.rows);
    for (std::size_t i = 0; i < w.rows; ++i) {
      double z = model.biases[l][i];
      const double* row = w.data.data() + i * w.cols;
      for (std::size_t j = 0; j < w.cols; ++j) z += row[j] * prev[j];
      next[i] = sigmoid(z);
    }
    act.layers.push_back(std::move(next));
  }
  return act;
}

// Squared error E = 1/2 sum (d_i - y_i)^2.
inline double cost(std::span<const double> desired, std::span<const double> actual) {
  detail::require(desired.size() == actual.size(), "cost: length mismatch");
  double e = 0.0;
  for (std::size_t i = 0; i < desired.size(); ++i) {
    const double diff = desired[i] - actual[i];
    e += diff * diff;
  }
  return 0.5 * e;
}

// Gradients of the squared error w.r.t. every weight and bias for one sample.
inline Gradients backward(const MlpModel& model, const Activations& act,
                          std::span<const double> desired) {
  const std::size_t L = model.weight_layers();
  detail::require(act.layers.size() == L + 1, "backward: activations do not belong to this model");
  for (std::size_t l = 0; l <= L; ++l)
    detail::require(act.layers[l].size() == model.layer_sizes[l],
                    "backward: stale activations (layer " + std::to_string(l) + ")");
  detail::require(desired.size() == model.output_size(), "backward: desired output length mismatch");

  Gradients g;
  g.weights.resize(L);
  g.biases.resize(L);

  // output delta: (y - d) * sigma'(z), sigma' = a(1-a)
  std::vector<double> delta(model.output_size());
  for (std::size_t i = 0; i < delta.size(); ++i) {
    const double a = act.layers[L][i];
    delta[i] = (a - desired[i]) * a * (1.0 - a);
  }

  for (std::size_t l = L; l-- > 0;) {
    const auto& prev = act.layers[l];
    Matrix gw(delta.size(), prev.size());
    for (std::size_t i = 0; i < delta.size(); ++i)
      for (std::size_t j = 0; j < prev.size(); ++j) gw(i, j) = delta[i] * prev[j];
    g.weights[l] = std::move(gw);
    g.biases[l] = delta;

    if (l == 0) break;
    const Matrix& w = model.weights[l];
    std::vector<double> next(prev.size(), 0.0);
    for (std::size_t i = 0; i < w.rows; ++i)
      for (std::size_t j = 0; j < w.cols; ++j) next[j] += w(i, j) * delta[i];
    for (std::size_t j = 0; j < next.size(); ++j) next[j] *= prev[j] * (1.0 - prev[j]);
    delta = std::move(next);
  }
  return g;
}

// W <- W - eta dE/dW, b <- b - eta dE/db. Throws without touching the model
// if any updated parameter would be non-finite.
inline void apply_updates(MlpModel& model, const Gradients& g, double eta) {
  const std::size_t L = model.weight_layers();
  detail::require(g.weights.size() == L && g.biases.size() == L, "apply_updates: layer count mismatch");
  for (std::size_t l = 0; l < L; ++l) {
    detail::require(g.weights[l].rows == model.weights[l].rows &&
                        g.weights[l].cols == model.weights[l].cols &&
                        g.biases[l].size() == model.biases[l].size(),
                    "apply_updates: gradient shape mismatch at layer " + std::to_string(l));
    for (std::size_t k = 0; k < g.weights[l].data.size(); ++k)
      detail::require(std::isfinite(model.weights[l].data[k] - eta * g.weights[l].data[k]),
                      "apply_updates: non-finite weight update (training diverged)");
    for (std::size_t k = 0; k < g.biases[l].size(); ++k)
      detail::require(std::isfinite(model.biases[l][k] - eta * g.biases[l][k]),
                      "apply_updates: non-finite bias update (training diverged)");
  }
  for (std::size_t l = 0; l < L; ++l) {
    for (std::size_t k = 0; k < g.weights[l].data.size(); ++k)
      model.weights[l].data[k] -= eta * g.weights[l].data[k];
    for (std::size_t k = 0; k < g.biases[l].size(); ++k) model.biases[l][k] -= eta * g.biases[l][k];
  }
}

struct TrainConfig {
  static constexpr std::size_t kMaxEpochs = 1'000'000;

  double eta = 0.1;
  std::size_t epochs = 200;
  std::vector<std::size_t> hidden_sizes{64};
  std::uint64_t seed = 42;
  bool shuffle = true;

  void validate() const {
    detail::require(std::isfinite(eta) && eta > 0.0 && eta <= 10.0, "mlp.eta must lie in (0, 10]");
    detail::require(epochs >= 1 && epochs <= kMaxEpochs, "mlp.epochs must lie in [1, 1000000]");
    detail::require(!hidden_sizes.empty(), "mlp.hidden_sizes needs at least one hidden layer");
    for (auto h : hidden_sizes) detail::require(h >= 1, "hidden layer sizes must be >= 1");
  }

  bool operator==(const TrainConfig&) const = default;
};

struct TrainResult {
  MlpModel model;
  std::vector<double> cost_history;  // mean per-sample cost of each epoch
};

// Weights drawn uniformly from [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero.
inline MlpModel init_model(std::vector<std::size_t> sizes, std::mt19937_64& rng) {
  MlpModel m = MlpModel::zeros(std::move(sizes));
  for (auto& w : m.weights) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(w.cols));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& v : w.data) v = dist(rng);
  }
  return m;
}

// Stochastic per-sample gradient descent on standardized features. The
// standardizer is fitted on `xs` and stored in the returned model.
inline TrainResult train(std::span<const FeatureVector> xs, std::span<const int> labels,
                         const TrainConfig& config) {
  config.validate();
  detail::require(xs.size() == labels.size(), "train: feature/label count mismatch");
  detail::require(xs.size() >= 2, "train: need at least 2 samples");
  const std::size_t n0 = xs.front().size();
  detail::require(n0 >= 1, "train: empty feature vectors");
  bool has_normal = false, has_anomaly = false;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    detail::require(xs[i].size() == n0, "train: feature length varies across samples");
    detail::require(labels[i] == 0 || labels[i] == 1, "train: labels must be 0 or 1");
    (labels[i] == 1 ? has_anomaly : has_normal) = true;
  }
  detail::require(has_normal && has_anomaly, "train: dataset must contain both classes");

  std::vector<std::size_t> sizes{n0};
  sizes.insert(sizes.end(), config.hidden_sizes.begin(), config.hidden_sizes.end());
  sizes.push_back(1);

  std::mt19937_64 rng(config.seed);
  TrainResult result{init_model(std::move(sizes), rng), {}};
  result.model.rng_seed = config.seed;
  result.model.standardizer = Standardizer::fit(xs);

  std::vector<std::vector<double>> inputs;
  inputs.reserve(xs.size());
  for (const auto& x : xs) inputs.push_back(result.model.standardizer.apply(x.values()));

  std::vector<std::size_t> order(xs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  result.cost_history.reserve(config.epochs);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    if (config.shuffle) std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t idx : order) {
      const double desired = static_cast<double>(labels[idx]);
      const Activations act = forward(result.model, inputs[idx]);
      total += cost(std::span<const double>(&desired, 1), act.output());
      apply_updates(result.model, backward(result.model, act, std::span<const double>(&desired, 1)),
                    config.eta);
    }
    const double mean = total / static_cast<double>(xs.size());
    detail::require(std::isfinite(mean), "train: cost became non-finite at epoch " +
                                             std::to_string(epoch + 1) + " (diverged)");
    result.cost_history.push_back(mean);
  }
  return result;
}

struct DetectionResult {
  double score = 0.0;
  int label = 0;
  std::size_t frame_index = 0;
};

inline constexpr double kDefaultDecisionThreshold = 0.5;

// Standardizes, runs the network, and labels the frame anomalous when the
// score meets or exceeds the threshold.
inline DetectionResult predict(const MlpModel& model, std::span<const double> x,
                               double threshold = kDefaultDecisionThreshold,
                               std::size_t frame_index = 0) {
  detail::require(model.output_size() == 1, "predict: model must have a single output unit");
  const auto act = forward(model, model.standardizer.apply(x));
  const double score = act.output()[0];
  return DetectionResult{score, score >= threshold ? 1 : 0, frame_index};
}

// Largest relative gap between backprop gradients and central differences.
inline double gradient_check(const MlpModel& model, std::span<const double> x,
                             std::span<const double> desired, double eps = 1e-5) {
  const Gradients analytic = backward(model, forward(model, x), desired);
  MlpModel probe = model;
  auto numeric = [&](double& param) {
    const double saved = param;
    param = saved + eps;
    const double plus = cost(desired, forward(probe, x).output());
    param = saved - eps;
    const double minus = cost(desired, forward(probe, x).output());
    param = saved;
    return (plus - minus) / (2.0 * eps);
  };
  auto rel = [](double a, double n) {
    return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-8});
  };
  double worst = 0.0;
  for (std::size_t l = 0; l < probe.weight_layers(); ++l) {
    for (std::size_t k = 0; k < probe.weights[l].data.size(); ++k)
      worst = std::max(worst, rel(analytic.weights[l].data[k], numeric(probe.weights[l].data[k])));
    for (std::size_t k = 0; k < probe.biases[l].size(); ++k)
      worst = std::max(worst, rel(analytic.biases[l][k], numeric(probe.biases[l][k])));
  }
  return worst;
}

// ---- model file -----------------------------------------------------------

inline constexpr const char* kModelMagic = "ANOMSCOPE-MLP v1";

namespace detail {

template <typename Seq>
void write_row(std::ostream& out, const Seq& values) {
  bool first = true;
  for (double v : values) {
    if (!first) out << ' ';
    out << format_exact(v);
    first = false;
  }
  out << '\n';
}

inline std::vector<double> read_row(std::istream& in, std::size_t expected, const std::string& what) {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), "model file truncated before " + what);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<double> values;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && line[pos] == ' ') ++pos;
    if (pos >= line.size()) break;
    std::size_t end = line.find(' ', pos);
    if (end == std::string::npos) end = line.size();
    double v = 0.0;
    auto [p, ec] = std::from_chars(line.data() + pos, line.data() + end, v);
    require(ec == std::errc() && p == line.data() + end, "model file: bad number in " + what);
    values.push_back(v);
    pos = end;
  }
  require(values.size() == expected, "model file: " + what + " has " + std::to_string(values.size()) +
                                         " values, expected " + std::to_string(expected));
  return values;
}

}  // namespace detail

inline std::string serialize_model(const MlpModel& model) {
  model.validate();
  std::ostringstream out;
  out << kModelMagic << '\n';
  for (std::size_t i = 0; i < model.layer_sizes.size(); ++i)
    out << (i ? " " : "") << model.layer_sizes[i];
  out << '\n';
  detail::write_row(out, model.standardizer.means);
  detail::write_row(out, model.standardizer.stds);
  for (std::size_t l = 0; l < model.weight_layers(); ++l) {
    const Matrix& w = model.weights[l];
    for (std::size_t r = 0; r < w.rows; ++r)
      detail::write_row(out, std::span<const double>(w.data.data() + r * w.cols, w.cols));
    detail::write_row(out, model.biases[l]);
  }
  return out.str();
}

inline MlpModel parse_model(std::istream& in) {
  std::string line;
  detail::require(static_cast<bool>(std::getline(in, line)), "model file is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  detail::require(line == kModelMagic, "not a model file (bad magic '" + line + "')");

  detail::require(static_cast<bool>(std::getline(in, line)), "model file truncated before layer sizes");
  std::istringstream sizes_in(line);
  std::vector<std::size_t> sizes;
  std::string tok;
  while (sizes_in >> tok) sizes.push_back(detail::parse_number<std::size_t>(tok, "model layer sizes"));
  detail::require(sizes.size() >= 3, "model file: need at least 3 layer sizes");
  for (auto s : sizes) detail::require(s >= 1, "model file: zero layer size");

  MlpModel m = MlpModel::zeros(sizes);
  m.standardizer.means = detail::read_row(in, sizes.front(), "standardization means");
  m.standardizer.stds = detail::read_row(in, sizes.front(), "standardization stds");
  for (double s : m.standardizer.stds) detail::require(s > 0.0, "model file: non-positive std");
  for (std::size_t l = 0; l < m.weight_layers(); ++l) {
    Matrix& w = m.weights[l];
    for (std::size_t r = 0; r < w.rows; ++r) {
      const auto row = detail::read_row(in, w.cols, "weight row " + std::to_string(r) + " of layer " +
                                                        std::to_string(l + 1));
      std::copy(row.begin(), row.end(), w.data.begin() + static_cast<long>(r * w.cols));
    }
    m.biases[l] = detail::read_row(in, w.rows, "bias of layer " + std::to_string(l + 1));
  }
  while (std::getline(in, line))
    detail::require(line.empty() || line == "\r", "model file: trailing data after last layer");
  m.validate();
  return m;
}

inline MlpModel parse_model(const std::string& text) {
  std::istringstream in(text);
  return parse_model(in);
}

}  // namespace anomscope
