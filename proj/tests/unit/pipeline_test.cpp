#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "anomscope/pipeline.hpp"
#include "support/synthetic.hpp"

namespace fs = std::filesystem;
using namespace anomscope;
using anomscope::testing::scratch_dir;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

PipelineConfig small_config() {
  PipelineConfig c;
  c.mlp.epochs = 30;
  c.mlp.hidden_sizes = {8};
  return c;
}

}  // namespace

TEST(Config, DefaultsAndFeatureLength) {
  const PipelineConfig c;
  EXPECT_EQ(c.scales, (std::vector<double>{2, 4, 8, 16, 32}));
  EXPECT_EQ(c.feature_length(), 1269u);
  EXPECT_EQ(c.mlp.eta, 0.1);
  EXPECT_EQ(c.mlp.epochs, 200u);
  EXPECT_EQ(c.mlp.hidden_sizes, std::vector<std::size_t>{64});
  EXPECT_EQ(c.extremum_threshold, 0.01);
  EXPECT_EQ(c.decision_threshold, 0.5);
}

TEST(Config, ParsesDottedKeysAndComments) {
  const auto c = parse_config(
      "# tuned\r\nscales = 1, 2.5, 6\nlog_grid = 2x3\nlbp_grid=1x1\n\n"
      "mlp.eta = 0.25  # step\nmlp.hidden_sizes = 16, 8\nmlp.shuffle = false\nmlp.seed = 7\n");
  EXPECT_EQ(c.scales, (std::vector<double>{1, 2.5, 6}));
  EXPECT_EQ(c.log_grid, (Grid{2, 3}));
  EXPECT_EQ(c.lbp_grid, (Grid{1, 1}));
  EXPECT_EQ(c.mlp.eta, 0.25);
  EXPECT_EQ(c.mlp.hidden_sizes, (std::vector<std::size_t>{16, 8}));
  EXPECT_FALSE(c.mlp.shuffle);
  EXPECT_EQ(c.mlp.seed, 7u);
  EXPECT_EQ(c.mlp.epochs, 200u);
}

TEST(Config, RejectsBadInput) {
  EXPECT_THROW(parse_config("mlp.momentum = 0.9\n"), InputError);
  EXPECT_THROW(parse_config("scales = 2, 4\n"), InputError);
  EXPECT_THROW(parse_config("scales = 4, 2, 8\n"), InputError);
  EXPECT_THROW(parse_config("mlp.eta = 0\n"), InputError);
  EXPECT_THROW(parse_config("mlp.eta = 11\n"), InputError);
  EXPECT_THROW(parse_config("mlp.epochs = 0\n"), InputError);
  EXPECT_THROW(parse_config("log_grid = 4\n"), InputError);
  EXPECT_THROW(parse_config("mlp.eta = fast\n"), InputError);
  EXPECT_THROW(parse_config("mlp.eta = 0.1\nmlp.eta = 0.2\n"), InputError);
  EXPECT_THROW(parse_config("just text\n"), InputError);
  EXPECT_THROW(parse_config("mlp.shuffle = maybe\n"), InputError);
}

TEST(Config, RoundTripsRandomConfigs) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> small(1, 6);
  for (int trial = 0; trial < 200; ++trial) {
    PipelineConfig c;
    c.scales.clear();
    double t = 0.25 + u(rng);
    for (int i = small(rng) + 2; i > 0; --i) {
      c.scales.push_back(t);
      t += u(rng) * 10.0 + 1e-3;
    }
    c.log_grid = Grid{static_cast<std::size_t>(small(rng)), static_cast<std::size_t>(small(rng))};
    c.lbp_grid = Grid{static_cast<std::size_t>(small(rng)), static_cast<std::size_t>(small(rng))};
    c.extremum_threshold = u(rng) / 7.0;
    c.decision_threshold = u(rng);
    c.mlp.eta = 10.0 * u(rng) + 1e-9;
    c.mlp.epochs = static_cast<std::size_t>(small(rng) * 1000);
    c.mlp.hidden_sizes.assign(static_cast<std::size_t>(small(rng)), static_cast<std::size_t>(small(rng) * 3));
    c.mlp.seed = rng();
    c.mlp.shuffle = trial % 2 == 0;
    ASSERT_EQ(parse_config(serialize_config(c)), c) << serialize_config(c);
  }
}

TEST(FScore, Arithmetic) {
  EXPECT_EQ(f_score(10, 0, 0), 1.0);
  EXPECT_EQ(f_score(1, 1, 1), 0.5);
  EXPECT_EQ(f_score(0, 3, 2), 0.0);
  EXPECT_EQ(f_score(0, 0, 4), 0.0);
  EXPECT_NEAR(f_score(3, 1, 2), 2.0 * 0.75 * 0.6 / 1.35, 1e-15);
  EXPECT_THROW(f_score(0, 0, 0), InputError);
  EXPECT_NEAR(mean_f_score({0.56, 0.78, 0.66, 0.71}), 0.6775, 1e-12);
}

TEST(Eval, ConfusionConservesCounts) {
  std::mt19937_64 rng(5);
  std::bernoulli_distribution coin(0.4);
  for (int trial = 0; trial < 50; ++trial) {
    std::map<long, int> p, t;
    const long n = 1 + static_cast<long>(rng() % 40);
    for (long i = 0; i < n; ++i) {
      p[i] = coin(rng);
      t[i] = coin(rng);
    }
    EXPECT_EQ(confusion(p, t).total(), static_cast<std::size_t>(n));
  }
  EXPECT_THROW(confusion({{0, 1}, {1, 0}}, {{0, 1}, {2, 0}}), InputError);
  EXPECT_THROW(confusion({{0, 1}}, {{0, 1}, {1, 0}}), InputError);
}

TEST(Eval, MultipleSequencesAndReports) {
  const auto dir = scratch_dir("eval");
  write_text(dir / "p1.csv", "frame_index,score,label\n0,0.9,1\n1,0.2,0\n2,0.7,1\n3,0.1,0\n");
  write_text(dir / "t1.csv", "frame_index,label\n0,1\n1,0\n2,1\n3,0\n");
  write_text(dir / "p2.csv", "frame_index,score,label\n0,0.9,1\n1,0.8,1\n2,0.3,0\n");
  write_text(dir / "t2.csv", "frame_index,label\n0,1\n1,0\n2,1\n");
  std::ostringstream out, err;
  ASSERT_EQ(cmd_eval({dir / "p1.csv", dir / "p2.csv"}, {dir / "t1.csv", dir / "t2.csv"}, dir / "report.txt",
                     out, err),
            0)
      << err.str();
  const std::string csv = slurp(dir / "report.txt.csv");
  EXPECT_NE(csv.find("S1,2,0,0,2,1,1,1\n"), std::string::npos) << csv;
  EXPECT_NE(csv.find("S2,1,1,1,0,0.5,0.5,0.5\n"), std::string::npos) << csv;
  EXPECT_NE(csv.find("average,,,,,,,0.75\n"), std::string::npos) << csv;
  const std::string text = slurp(dir / "report.txt");
  EXPECT_NE(text.find("frame level"), std::string::npos);
  EXPECT_NE(text.find("Average"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir / "report.txt.tmp"));

  write_text(dir / "t3.csv", "frame_index,label\n0,1\n1,0\n5,1\n");
  EXPECT_EQ(cmd_eval({dir / "p2.csv"}, {dir / "t3.csv"}, dir / "bad.txt", out, err), 1);
  EXPECT_NE(err.str().find("index mismatch"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir / "bad.txt"));
  EXPECT_EQ(cmd_eval({dir / "p1.csv"}, {}, dir / "bad.txt", out, err), 1);
}

TEST(ExtractFeatures, LengthOrderAndDeterminism) {
  std::mt19937_64 rng(41);
  LabeledSequence seq;
  const Frame a = anomscope::testing::synthetic_scene(false, 48, 40, rng);
  const Frame b = anomscope::testing::synthetic_scene(true, 48, 40, rng);
  seq.frames = {a, b, a};
  const PipelineConfig cfg;
  const auto f = extract_features(seq, cfg, 3);
  ASSERT_EQ(f.size(), 3u);
  EXPECT_EQ(f[0].size(), 1269u);
  EXPECT_EQ(f[0], f[2]);
  EXPECT_NE(f[0], f[1]);
  EXPECT_EQ(f, extract_features(seq, cfg, 1));
  EXPECT_EQ(f[1], frame_features(b, cfg));
  EXPECT_TRUE(extract_features(LabeledSequence{}, cfg).empty());
}

TEST(Commands, TrainPredictFeaturesRoundTrip) {
  const auto dir = scratch_dir("cmds");
  std::mt19937_64 rng(77);
  anomscope::testing::write_synthetic_sequence(dir / "train", dir / "train.csv", {0, 1, 0, 1, 1, 0}, 40, 40, rng);
  anomscope::testing::write_synthetic_sequence(dir / "test", dir / "test.csv", {1, 0, 0, 1}, 40, 40, rng);
  write_text(dir / "cfg.txt", serialize_config(small_config()));

  std::ostringstream out, err;
  ASSERT_EQ(cmd_train(dir / "train", dir / "train.csv", dir / "cfg.txt", dir / "model.txt", out, err), 0)
      << err.str();
  EXPECT_EQ(out.str().rfind("epoch,mean_cost\n1,", 0), 0u);
  const MlpModel model = parse_model(slurp(dir / "model.txt"));
  EXPECT_EQ(model.layer_sizes, (std::vector<std::size_t>{1269, 8, 1}));

  ASSERT_EQ(cmd_predict(dir / "test", dir / "model.txt", dir / "pred.csv", dir / "cfg.txt", err), 0) << err.str();
  const std::string pred = slurp(dir / "pred.csv");
  EXPECT_EQ(pred.rfind("frame_index,score,label\n0,0.", 0), 0u) << pred;
  std::istringstream lines(pred);
  std::string line;
  std::getline(lines, line);
  std::size_t rows = 0;
  while (std::getline(lines, line)) {
    const auto comma = line.find(',');
    const auto second = line.find(',', comma + 1);
    EXPECT_EQ(second - comma - 1, 8u) << "score printed with 6 decimals: " << line;
    ++rows;
  }
  EXPECT_EQ(rows, 4u);

  ASSERT_EQ(cmd_features(dir / "test", dir / "cfg.txt", dir / "feat.csv", err), 0) << err.str();
  const std::string feat = slurp(dir / "feat.csv");
  EXPECT_EQ(feat.rfind("frame_index,f0,f1,", 0), 0u);
  EXPECT_NE(feat.find(",f1268\n"), std::string::npos);

  // identical inputs -> byte-identical outputs
  std::ostringstream out2;
  ASSERT_EQ(cmd_train(dir / "train", dir / "train.csv", dir / "cfg.txt", dir / "model2.txt", out2, err), 0);
  EXPECT_EQ(slurp(dir / "model.txt"), slurp(dir / "model2.txt"));
  EXPECT_EQ(out.str(), out2.str());
}

TEST(Commands, PredictRejectsMismatchedFeatureLength) {
  const auto dir = scratch_dir("mismatch");
  std::mt19937_64 rng(78);
  anomscope::testing::write_synthetic_sequence(dir / "train", dir / "train.csv", {0, 1, 0, 1}, 40, 40, rng);
  PipelineConfig cfg = small_config();
  write_text(dir / "cfg.txt", serialize_config(cfg));
  std::ostringstream out, err;
  ASSERT_EQ(cmd_train(dir / "train", dir / "train.csv", dir / "cfg.txt", dir / "model.txt", out, err), 0);
  cfg.lbp_grid = Grid{2, 2};
  write_text(dir / "cfg2.txt", serialize_config(cfg));
  EXPECT_EQ(cmd_predict(dir / "train", dir / "model.txt", dir / "pred.csv", dir / "cfg2.txt", err), 1);
  EXPECT_NE(err.str().find("561"), std::string::npos) << err.str();
  EXPECT_NE(err.str().find("1269"), std::string::npos) << err.str();
  EXPECT_FALSE(fs::exists(dir / "pred.csv"));
}

TEST(Commands, TrainFailuresLeaveNoModel) {
  const auto dir = scratch_dir("train_fail");
  std::mt19937_64 rng(79);
  anomscope::testing::write_synthetic_sequence(dir / "frames", dir / "labels.csv", {1, 1, 1}, 40, 40, rng);
  write_text(dir / "cfg.txt", serialize_config(small_config()));
  std::ostringstream out, err;
  EXPECT_EQ(cmd_train(dir / "frames", dir / "labels.csv", dir / "cfg.txt", dir / "model.txt", out, err), 1);
  EXPECT_NE(err.str().find("both classes"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir / "model.txt"));

  write_text(dir / "bad.txt", "mlp.unknown = 1\n");
  EXPECT_EQ(cmd_train(dir / "frames", dir / "labels.csv", dir / "bad.txt", dir / "model.txt", out, err), 1);
  EXPECT_EQ(cmd_predict(dir / "frames", dir / "nope.txt", dir / "p.csv", {}, err), 1);
  write_text(dir / "junk_model.txt", "hello\n");
  EXPECT_EQ(cmd_predict(dir / "frames", dir / "junk_model.txt", dir / "p.csv", {}, err), 1);
}

TEST(Commands, InternalErrorsMapToExitTwo) {
  std::ostringstream err;
  EXPECT_EQ(run_guarded([] { throw InvariantError("broken"); }, err), 2);
  EXPECT_EQ(run_guarded([] { throw InputError("bad"); }, err), 1);
  EXPECT_EQ(run_guarded([] {}, err), 0);
}
