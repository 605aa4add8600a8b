#include <benchmark/benchmark.h>

#include "touchauth/commands.hpp"
#include "touchauth/pipeline.hpp"

using namespace touchauth;

namespace {

GeneratedSession sample_session() {
  const auto user = gen_user(42);
  Rng rng(7);
  return gen_session(user, rng, SynthConfig{}, "bench");
}

void BM_Preprocess(benchmark::State& state) {
  const auto g = sample_session();
  const PipelineConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(preprocess(g.session, cfg));
}
BENCHMARK(BM_Preprocess)->Unit(benchmark::kMillisecond);

void BM_Describe(benchmark::State& state) {
  const auto g = sample_session();
  const PipelineConfig cfg;
  const auto p = preprocess(g.session, cfg);
  for (auto _ : state) benchmark::DoNotOptimize(describe(p, cfg));
}
BENCHMARK(BM_Describe)->Unit(benchmark::kMicrosecond);

FusionModel random_model(int hidden, int output) {
  const int in = cap_descriptor_size(16) + kImuDescriptorSize;
  Rng rng(1);
  const auto p = FusionParams::init(in, hidden, output, 4, rng);
  return FusionModel(p.W1, p.b1, p.W2, p.b2, Eigen::VectorXd::Zero(in), Eigen::VectorXd::Ones(in),
                     cap_descriptor_size(16));
}

void BM_Forward(benchmark::State& state) {
  const auto model = random_model(512, 320);
  const Eigen::VectorXd x = Eigen::VectorXd::Random(cap_descriptor_size(16) + kImuDescriptorSize);
  for (auto _ : state) benchmark::DoNotOptimize(model.forward_joined(x));
}
BENCHMARK(BM_Forward)->Unit(benchmark::kMicrosecond);

void BM_OcsvmScore(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0)), d = 320;
  const Eigen::MatrixXd X = Eigen::MatrixXd::Random(n, d);
  const auto m = ocsvm_train(X, 0.1, 1.0 / d);
  const Eigen::VectorXd x = Eigen::VectorXd::Random(d);
  for (auto _ : state) benchmark::DoNotOptimize(ocsvm_score(m, x));
}
BENCHMARK(BM_OcsvmScore)->Arg(100)->Arg(400)->Unit(benchmark::kMicrosecond);

void BM_OcsvmTrain(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0)), d = 320;
  const Eigen::MatrixXd X = Eigen::MatrixXd::Random(n, d);
  for (auto _ : state) benchmark::DoNotOptimize(ocsvm_train(X, 0.1, 1.0 / d));
}
BENCHMARK(BM_OcsvmTrain)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
