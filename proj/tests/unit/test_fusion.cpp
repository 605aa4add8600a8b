#include <gtest/gtest.h>

#include <random>

#include "checks.hpp"
#include "touchauth/embed.hpp"

namespace touchauth {
namespace {

using testing::TempDir;

FusionModel random_model(int cap, int imu, int hidden, int out, unsigned seed) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> n;
  auto rnd = [&](int r, int c) {
    Eigen::MatrixXd m(r, c);
    for (int i = 0; i < m.size(); ++i) m.data()[i] = n(g);
    return m;
  };
  return FusionModel(rnd(hidden, cap + imu), rnd(hidden, 1), rnd(out, hidden), rnd(out, 1), rnd(cap + imu, 1),
                     Eigen::VectorXd::Ones(cap + imu), cap);
}

// Two users, separable along every coordinate.
void separable_set(int per_user, Eigen::MatrixXd& X, std::vector<int>& y, unsigned seed = 3) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> n;
  X.resize(2 * per_user, 12);
  y.clear();
  for (int i = 0; i < 2 * per_user; ++i) {
    const int label = i % 2;
    for (int j = 0; j < 12; ++j) X(i, j) = (label ? 2.0 : -2.0) + 0.3 * n(g);
    y.push_back(label);
  }
}

TEST(FusionForward, ZeroWeights) {
  FusionModel m(Eigen::MatrixXd::Zero(8, 5), Eigen::VectorXd::Zero(8), Eigen::MatrixXd::Zero(4, 8),
                Eigen::VectorXd::Zero(4), Eigen::VectorXd::Zero(5), Eigen::VectorXd::Ones(5), 3);
  EXPECT_EQ(m.forward(Eigen::VectorXd::Ones(3), Eigen::VectorXd::Ones(2)), Eigen::VectorXd::Zero(4));
}

TEST(FusionForward, InferenceIsDeterministic) {
  const auto m = random_model(4, 3, 10, 5, 1);
  const Eigen::VectorXd c = Eigen::VectorXd::LinSpaced(4, -1, 1), i = Eigen::VectorXd::LinSpaced(3, 0, 2);
  EXPECT_EQ(m.forward(c, i), m.forward(c, i));
}

TEST(FusionForward, MatchesNaiveOracle) {
  const auto c = testing::oracle_fusion_forward();
  EXPECT_TRUE(c.ok) << c.detail;
}

TEST(FusionForward, TrainingModeDropsUnits) {
  const auto m = random_model(4, 3, 200, 5, 2);
  Rng rng(4);
  const Eigen::VectorXd c = Eigen::VectorXd::Ones(4), i = Eigen::VectorXd::Ones(3);
  EXPECT_NE(m.forward_train(c, i, rng), m.forward(c, i));
}

TEST(FusionForward, ModalityMasksInputs) {
  auto m = random_model(4, 3, 10, 5, 5);
  m.modality = Modality::cap_only;
  const Eigen::VectorXd c = Eigen::VectorXd::Ones(4);
  EXPECT_EQ(m.forward(c, Eigen::VectorXd::Zero(3)), m.forward(c, Eigen::VectorXd::Constant(3, 9.0)));
  m.modality = Modality::imu_only;
  const Eigen::VectorXd i = Eigen::VectorXd::Ones(3);
  EXPECT_EQ(m.forward(Eigen::VectorXd::Zero(4), i), m.forward(Eigen::VectorXd::Constant(4, 9.0), i));
}

TEST(FusionForward, WrongInputSizeThrows) {
  const auto m = random_model(4, 3, 10, 5, 6);
  EXPECT_THROW(m.forward(Eigen::VectorXd::Ones(4), Eigen::VectorXd::Ones(2)), InvariantError);
}

TEST(FusionTrain, GradientsMatchFiniteDifferences) {
  const auto c = testing::gradient_check();
  EXPECT_TRUE(c.ok) << c.detail;
}

TEST(FusionTrain, SeparableUsers) {
  Eigen::MatrixXd X;
  std::vector<int> y;
  separable_set(50, X, y);
  EmbedConfig cfg;
  cfg.hidden = 32;
  cfg.output = 16;
  cfg.epochs = 20;
  const auto r = fusion_train(X, y, 6, cfg);
  EXPECT_GE(r.log.accuracy.back(), 0.99);
  EXPECT_EQ(r.log.loss.size(), 20u);
}

TEST(FusionTrain, SameSeedBitwiseIdentical) {
  Eigen::MatrixXd X;
  std::vector<int> y;
  separable_set(30, X, y);
  EmbedConfig cfg;
  cfg.hidden = 16;
  cfg.output = 8;
  cfg.epochs = 5;
  const auto a = fusion_train(X, y, 6, cfg);
  const auto b = fusion_train(X, y, 6, cfg);
  EXPECT_EQ(a.model.to_json(), b.model.to_json());
  cfg.seed += 1;
  EXPECT_NE(fusion_train(X, y, 6, cfg).model.to_json(), a.model.to_json());
}

TEST(FusionTrain, SingleClassIsDegenerate) {
  Eigen::MatrixXd X = Eigen::MatrixXd::Random(10, 4);
  std::vector<int> y(10, 0);
  EXPECT_THROW(fusion_train(X, y, 2, EmbedConfig{}), DegenerateInputError);
}

TEST(FusionTrain, StandardizedOutputs) {
  Eigen::MatrixXd X;
  std::vector<int> y;
  separable_set(40, X, y);
  EmbedConfig cfg;
  cfg.hidden = 16;
  cfg.output = 8;
  cfg.epochs = 3;
  const auto r = fusion_train(X, y, 6, cfg);
  Eigen::MatrixXd E(X.rows(), 8);
  for (Eigen::Index i = 0; i < X.rows(); ++i) E.row(i) = r.model.forward_joined(X.row(i).transpose()).transpose();
  const Eigen::RowVectorXd mean = E.colwise().mean();
  EXPECT_LT(mean.cwiseAbs().maxCoeff(), 1e-9);
  const Eigen::RowVectorXd var = (E.rowwise() - mean).array().square().colwise().mean();
  EXPECT_LT((var.array() - 1.0).abs().maxCoeff(), 1e-9);
}

TEST(FusionModel, JsonRoundTripPreservesOutputs) {
  TempDir dir;
  auto m = random_model(5, 4, 12, 6, 7);
  m.impostor_pool = Eigen::MatrixXd::Random(3, 6);
  save_model(m, dir.str("model.json"));
  const auto back = load_model(dir.str("model.json"));
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(9, -1, 1);
  EXPECT_EQ(back.forward_joined(x), m.forward_joined(x));
  EXPECT_EQ(back.impostor_pool, m.impostor_pool);
  EXPECT_EQ(back.config_hash(), m.config_hash());
}

TEST(ExternalEmbeddings, ThreeRows) {
  TempDir dir;
  const std::vector<std::string> ids = {"a", "b", "c"};
  write_embeddings_csv(dir.str("e.csv"), ids, Eigen::MatrixXd::Ones(3, 320));
  EXPECT_EQ(load_external_embeddings(dir.str("e.csv")).size(), 3u);
}

TEST(ExternalEmbeddings, ShortRowNamesLine) {
  TempDir dir;
  const std::vector<std::string> ids = {"a", "b"};
  write_embeddings_csv(dir.str("e.csv"), ids, Eigen::MatrixXd::Ones(2, 319));
  try {
    load_external_embeddings(dir.str("e.csv"));
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("319"), std::string::npos);
  }
}

TEST(ExternalEmbeddings, RoundTripWithinPrecision) {
  TempDir dir;
  std::mt19937_64 g(8);
  std::normal_distribution<double> n;
  Eigen::MatrixXd E(5, 320);
  for (int i = 0; i < E.size(); ++i) E.data()[i] = n(g);
  const std::vector<std::string> ids = {"s0", "s1", "s2", "s3", "s4"};
  write_embeddings_csv(dir.str("e.csv"), ids, E);
  const auto map = load_external_embeddings(dir.str("e.csv"));
  for (int r = 0; r < 5; ++r) EXPECT_LE((map.at(ids[r]) - E.row(r).transpose()).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(MatrixCodec, RoundTrip) {
  const Eigen::MatrixXd m = Eigen::MatrixXd::Random(7, 3);
  EXPECT_EQ(decode_matrix(encode_matrix(m), 7, 3), m);
  EXPECT_THROW(decode_matrix(encode_matrix(m), 7, 4), Error);
}

}  // namespace
}  // namespace touchauth
