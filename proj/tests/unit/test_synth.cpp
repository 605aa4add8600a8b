#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "fixtures.hpp"
#include "touchauth/pipeline.hpp"
#include "touchauth/synth.hpp"

namespace touchauth {
namespace {

TEST(GenUser, SameSeedSameProfile) {
  const auto a = gen_user(17), b = gen_user(17);
  EXPECT_EQ(profiles_to_json({a}), profiles_to_json({b}));
  EXPECT_NE(profiles_to_json({a}), profiles_to_json({gen_user(18)}));
}

TEST(GenUser, CovarianceIsSpd) {
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto p = gen_user(s);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(p.physio.blob_cov);
    EXPECT_GT(es.eigenvalues().minCoeff(), 0.0) << s;
    EXPECT_GT(p.physio.amp, 0.0);
    EXPECT_GE(p.behavior.press_ms, 200.0);
    EXPECT_LE(p.behavior.press_ms, 700.0);
  }
}

TEST(GenUser, InterUserDispersionDominates) {
  const SynthConfig cfg;
  const int users = 100, sessions = 20;
  std::vector<Eigen::VectorXd> base;
  std::vector<std::vector<Eigen::VectorXd>> jittered(users);
  for (int u = 0; u < users; ++u) {
    const auto p = gen_user(u, cfg);
    base.push_back(parameter_vector(p, cfg));
    Rng rng(1000 + u);
    for (int k = 0; k < sessions; ++k) jittered[u].push_back(parameter_vector(jitter_profile(p, cfg, rng), cfg));
  }
  const auto dims = base[0].size();

  // Per parameter: spread of user means vs spread of sessions around them.
  for (Eigen::Index i = 0; i < dims; ++i) {
    double mean = 0, inter = 0, intra = 0;
    for (const auto& b : base) mean += b(i) / users;
    for (const auto& b : base) inter += std::pow(b(i) - mean, 2) / users;
    for (int u = 0; u < users; ++u)
      for (const auto& j : jittered[u]) intra += std::pow(j(i) - base[u](i), 2) / (users * sessions);
    EXPECT_GE(std::sqrt(inter), 3.0 * std::sqrt(intra)) << parameter_names()[i];
  }

  double min_inter = 1e300, max_intra = 0;
  for (int a = 0; a < users; ++a)
    for (int b = a + 1; b < users; ++b) min_inter = std::min(min_inter, (base[a] - base[b]).norm());
  for (int u = 0; u < users; ++u)
    for (int a = 0; a < sessions; ++a)
      for (int b = a + 1; b < sessions; ++b) max_intra = std::max(max_intra, (jittered[u][a] - jittered[u][b]).norm());
  EXPECT_GE(min_inter / max_intra, 2.0) << "min inter " << min_inter << ", max intra " << max_intra;
}

TEST(GenSession, CleanPhysics) {
  SynthConfig cfg;
  cfg.wander = 0.0;
  auto p = gen_user(4, cfg);
  p.behavior.tremor.setZero();
  p.behavior.imu_noise.setZero();
  Rng rng(5);
  const auto g = render_session(p, Actuation{}, rng, cfg, "clean", "u", Label::genuine);
  const double press_end = g.truth.release_ms + 2.0 * p.behavior.force.release_ms;
  int inside = 0;
  for (const auto& s : g.session.imu) {
    const double dev = std::abs(std::hypot(s.a[0], s.a[1], s.a[2]) - cfg.gravity);
    if (s.ts_ms < g.truth.touchdown_ms || s.ts_ms > press_end) {
      EXPECT_LT(dev, 1e-5) << "t=" << s.ts_ms;
    } else if (dev > 1e-3) {
      ++inside;
    }
  }
  EXPECT_GT(inside, 5);
}

TEST(GenSession, PassesValidation) {
  for (std::uint64_t k = 0; k < 20; ++k) {
    EXPECT_TRUE(validate_session(testing::synthetic_session(k, 500 + k).session).empty()) << k;
  }
}

TEST(GenSession, Deterministic) {
  EXPECT_EQ(serialize_session(testing::synthetic_session(3, 9).session),
            serialize_session(testing::synthetic_session(3, 9).session));
}

TEST(GenSession, DetectedIntervalOverlapsTruth) {
  int good = 0;
  for (std::uint64_t k = 0; k < 100; ++k) {
    const auto g = testing::synthetic_session(k / 10, 900 + k);
    const auto p = preprocess(g.session, PipelineConfig{});
    const int a0 = p.interval.start, a1 = p.interval.end;
    const int b0 = g.truth.press_start, b1 = g.truth.press_end;
    const int inter = std::max(0, std::min(a1, b1) - std::max(a0, b0) + 1);
    const int uni = (a1 - a0 + 1) + (b1 - b0 + 1) - inter;
    good += static_cast<double>(inter) / uni >= 0.5;
  }
  EXPECT_GE(good, 95);
}

TEST(GenAttack, SelfMimicryAtFullFidelity) {
  const SynthConfig cfg;
  const auto v = gen_user(6, cfg);
  Rng rng(7);
  Actuation act;
  const auto p = attack_profile(v, v, {Label::mimicry, 1.0}, cfg, rng, act);
  EXPECT_EQ(parameter_vector(p, cfg), parameter_vector(v, cfg));
  EXPECT_EQ(act.jerk, 0.0);
}

TEST(GenAttack, RejectsBadSpec) {
  const auto v = gen_user(1);
  Rng rng(1);
  EXPECT_THROW(gen_attack(v, v, {Label::genuine, 1.0}, rng, SynthConfig{}, "x"), InvariantError);
  EXPECT_THROW(gen_attack(v, v, {Label::replica, 1.5}, rng, SynthConfig{}, "x"), InvariantError);
}

// Distances in descriptor space, standardized by the pooled within-user
// deviation of the two genuine sets.
struct Split {
  double cap_to_victim, imu_to_victim, imu_to_attacker;
  double cap_spread, imu_spread;
};

Split measure(Label kind, std::uint64_t seed, double fidelity) {
  const SynthConfig cfg;
  const PipelineConfig pc;
  const auto victim = gen_user(2 * seed, cfg), attacker = gen_user(2 * seed + 1, cfg);
  auto describe_many = [&](auto make, int n) {
    std::vector<Descriptors> out;
    for (int k = 0; k < n; ++k) out.push_back(describe(make(k).session, pc));
    return out;
  };
  const auto vg = describe_many([&](int k) { Rng r(seed * 1000 + k); return gen_session(victim, r, cfg, "v"); }, 20);
  const auto ag = describe_many([&](int k) { Rng r(seed * 1000 + 100 + k); return gen_session(attacker, r, cfg, "a"); }, 20);
  const auto at = describe_many(
      [&](int k) { Rng r(seed * 1000 + 200 + k); return gen_attack(victim, attacker, {kind, fidelity}, r, cfg, "x"); }, 10);

  auto stats = [](const std::vector<Descriptors>& v, bool cap) {
    Eigen::MatrixXd X(v.size(), cap ? v[0].cap.size() : v[0].imu.size());
    for (std::size_t i = 0; i < v.size(); ++i) X.row(i) = (cap ? v[i].cap : v[i].imu).transpose();
    return X;
  };
  Split s{};
  for (bool cap : {true, false}) {
    const auto V = stats(vg, cap), A = stats(ag, cap), T = stats(at, cap);
    const Eigen::RowVectorXd mv = V.colwise().mean(), ma = A.colwise().mean();
    Eigen::RowVectorXd sd = (((V.rowwise() - mv).array().square().colwise().sum() +
                              (A.rowwise() - ma).array().square().colwise().sum()) /
                             (V.rows() + A.rows() - 2.0))
                                .sqrt();
    sd = sd.unaryExpr([](double x) { return x > 1e-9 ? x : 1.0; });
    auto dist = [&](const Eigen::MatrixXd& X, const Eigen::RowVectorXd& c) {
      return ((X.rowwise() - c).array().rowwise() / sd.array()).matrix().rowwise().norm().mean();
    };
    (cap ? s.cap_spread : s.imu_spread) = dist(V, mv);
    if (cap) {
      s.cap_to_victim = dist(T, mv);
    } else {
      s.imu_to_victim = dist(T, mv);
      s.imu_to_attacker = dist(T, ma);
    }
  }
  return s;
}

TEST(GenAttack, ReplicaIsCapacitiveVictimImuAttacker) {
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto s = measure(Label::replica, seed, 0.8);
    ok += s.cap_to_victim <= 2.0 * s.cap_spread && s.imu_to_attacker < s.imu_to_victim;
  }
  EXPECT_GE(ok, 95);
}

TEST(GenAttack, PuppetIsCapacitiveVictimImuFar) {
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto s = measure(Label::puppet, seed, 1.0);
    ok += s.cap_to_victim <= 2.0 * s.cap_spread && s.imu_to_victim >= 2.0 * s.imu_spread;
  }
  EXPECT_GE(ok, 95);
}

TEST(GenAttack, LowFidelityMimicryIsCapacitiveFar) {
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto s = measure(Label::mimicry, seed, 0.5);
    ok += s.cap_to_victim > 2.0 * s.cap_spread;
  }
  EXPECT_GE(ok, 95);
}

TEST(Truth, SidecarJson) {
  const auto g = testing::synthetic_session(1, 1);
  const auto j = truth_to_json(g.truth, g.session.meta);
  EXPECT_NE(j.find("press_interval"), std::string::npos);
  EXPECT_NE(j.find("start_idx"), std::string::npos);
}

}  // namespace
}  // namespace touchauth
