#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "checks.hpp"
#include "fixtures.hpp"
#include "touchauth/motion.hpp"
#include "touchauth/pipeline.hpp"

namespace touchauth {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDeg = kPi / 180.0;

ImuSeries static_series(int n, double gz = 0.0) {
  ImuSeries s;
  for (auto& c : s.ch) c.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    s.ch[ImuSeries::az][i] = 9.81;
    s.ch[ImuSeries::mx][i] = 20.0;
    s.ch[ImuSeries::mz][i] = -40.0;
    s.ch[ImuSeries::gz][i] = gz;
  }
  return s;
}

double angle_from_identity(const Quaternion& q) { return 2.0 * std::acos(std::min(1.0, std::abs(q.w))); }

TEST(ResampleImu, UniformInputIsIdentity) {
  auto s = testing::blob_session(7, 13);
  for (std::size_t i = 0; i < s.imu.size(); ++i) s.imu[i].a[0] = std::sin(0.1 * i);
  const auto r = resample_imu(s);
  ASSERT_EQ(r.size(), s.imu.size());
  for (std::size_t i = 0; i < r.size(); ++i) EXPECT_NEAR(r.ch[ImuSeries::ax][i], s.imu[i].a[0], 1e-9);
}

TEST(ResampleImu, Midpoint) {
  auto s = testing::minimal_session();
  for (int i = 0; i < 8; ++i) {
    s.imu[i].ts_ms = 10 * i;
    s.imu[i].a[0] = i;
  }
  const auto r = resample_imu(s);
  EXPECT_DOUBLE_EQ(r.ch[ImuSeries::ax][1], 0.5);
}

TEST(ResampleImu, JitteredSinusoid) {
  std::mt19937_64 g(12);
  std::uniform_int_distribution<int> jitter(-1, 1);
  auto s = testing::blob_session(7, 13);
  const double f = 5.0;
  for (std::size_t i = 0; i < s.imu.size(); ++i) {
    if (i > 0 && i + 1 < s.imu.size()) s.imu[i].ts_ms += jitter(g);
    s.imu[i].a[0] = std::sin(2 * kPi * f * s.imu[i].ts_ms / 1000.0);
  }
  const auto r = resample_imu(s);
  double worst = 0;
  for (std::size_t k = 0; k < r.size(); ++k) {
    worst = std::max(worst, std::abs(r.ch[ImuSeries::ax][k] - std::sin(2 * kPi * f * k * r.dt_s)));
  }
  EXPECT_LT(worst, 0.01);
}

TEST(WaveletDenoise, ZeroAndConstantChannels) {
  ImuSeries s = static_series(160);
  const auto d = wavelet_denoise(s, 3);
  for (int i = 0; i < 160; ++i) {
    EXPECT_NEAR(d.ch[ImuSeries::az][i], 9.81, 1e-10);
    EXPECT_EQ(d.ch[ImuSeries::gx][i], 0.0);
  }
}

TEST(CoarseWindow, RateRatio) {
  TouchTrack t;
  t.first_touched = 4;
  t.last_touched = 12;
  EXPECT_EQ(coarse_window(t, SessionMeta{}, 160, 0.05), (IndexWindow{30, 130}));
}

TEST(CoarseWindow, ClampsAtStartAndEnd) {
  TouchTrack t;
  t.first_touched = 0;
  t.last_touched = 5;
  EXPECT_EQ(coarse_window(t, SessionMeta{}, 160).start, 0);
  t.last_touched = 15;
  EXPECT_EQ(coarse_window(t, SessionMeta{}, 160), (IndexWindow{0, 159}));
}

TEST(ExtremumPair, UniqueExtrema) {
  const std::vector<double> m = {1, 5, 1, 0};
  const auto p = find_extremum_pair(m, {0, 3});
  EXPECT_EQ(p.peak, 1);
  EXPECT_EQ(p.valley, 3);
}

TEST(ExtremumPair, ConstantTiesEarliest) {
  const std::vector<double> m(10, 2.0);
  const auto p = find_extremum_pair(m, {0, 9});
  EXPECT_EQ(p.peak, 0);
  EXPECT_EQ(p.valley, 0);
}

TEST(ExtremumPair, MatchesExhaustiveSearch) {
  const auto c = testing::oracle_extremum_pair();
  EXPECT_TRUE(c.ok) << c.detail;
}

TEST(RefineInterval, BracketsBothRamps) {
  std::vector<double> m(100);
  for (int i = 0; i < 100; ++i) {
    if (i < 30) m[i] = 1.0;
    else if (i < 40) m[i] = 1.0 + 0.2 * (i - 29);
    else if (i < 60) m[i] = 3.0;
    else if (i < 70) m[i] = 3.0 - 0.3 * (i - 59);
    else m[i] = 0.0;
  }
  const IndexWindow w{0, 99};
  const auto iv = refine_interval(m, find_extremum_pair(m, w), w, 0.2);
  EXPECT_LE(iv.start, 30);
  EXPECT_GE(iv.end, 69);
  EXPECT_GT(iv.start, 20);
  EXPECT_LT(iv.end, 80);
}

TEST(RefineInterval, ConstantReturnsWindow) {
  const std::vector<double> m(50, 9.81);
  const IndexWindow w{5, 40};
  EXPECT_EQ(refine_interval(m, {5, 5}, w), w);
}

TEST(RefineInterval, SpikeHasMinimumWidth) {
  std::vector<double> m(100, 1.0);
  m[50] = 5.0;
  const IndexWindow w{20, 80};
  const auto iv = refine_interval(m, find_extremum_pair(m, w), w);
  EXPECT_LE(iv.start, 50);
  EXPECT_GE(iv.end, 50);
  EXPECT_GE(iv.end - iv.start + 1, 2);
  EXPECT_GE(iv.start, w.start);
  EXPECT_LE(iv.end, w.end);
}

TEST(FuseOrientation, StaticConvergesToIdentity) {
  ImuSeries s = static_series(400);
  // Start about 7 degrees off by corrupting the first sample. The normalized
  // gradient step corrects at most beta rad/s, so 2 s covers ~11 degrees.
  s.ch[ImuSeries::ax][0] = 0.8;
  s.ch[ImuSeries::my][0] = 2.0;
  const auto q = fuse_orientation(s, 0.1);
  EXPECT_LT(angle_from_identity(q.back()), 1.0 * kDeg);
}

TEST(FuseOrientation, YawRotation) {
  const int n = 201;
  const double w = kPi / 2;
  ImuSeries s = static_series(n, w);
  for (int i = 0; i < n; ++i) {
    const double psi = w * i * s.dt_s;
    // World field seen from a body yawed by psi.
    s.ch[ImuSeries::mx][i] = 20.0 * std::cos(psi);
    s.ch[ImuSeries::my][i] = -20.0 * std::sin(psi);
  }
  const auto q = fuse_orientation(s, 0.1);
  EXPECT_NEAR(quat_to_euler(q.back()).yaw, kPi / 2, 2.0 * kDeg);
}

TEST(FuseOrientation, GyroBiasIsCorrected) {
  const int n = 2001;  // 10 s
  ImuSeries s = static_series(n, 0.05);
  double fused = 0, raw = 0;
  const auto qf = fuse_orientation(s, 0.1);
  const auto qr = fuse_orientation(s, 0.0);
  for (int i = 0; i < n; ++i) fused = std::max(fused, angle_from_identity(qf[i]));
  raw = angle_from_identity(qr.back());
  EXPECT_LT(fused, 5.0 * kDeg);
  EXPECT_GT(raw, 25.0 * kDeg);
}

TEST(FuseOrientation, NormDrift) {
  const auto c = testing::quaternion_drift();
  EXPECT_TRUE(c.ok) << c.detail;
}

TEST(QuatToEuler, Identity) {
  const auto e = quat_to_euler({1, 0, 0, 0});
  EXPECT_EQ(e.roll, 0.0);
  EXPECT_EQ(e.pitch, 0.0);
  EXPECT_EQ(e.yaw, 0.0);
}

TEST(QuatToEuler, QuarterTurnYaw) {
  const double h = std::sqrt(0.5);
  const auto e = quat_to_euler({h, 0, 0, h});
  EXPECT_NEAR(e.roll, 0.0, 1e-12);
  EXPECT_NEAR(e.pitch, 0.0, 1e-12);
  EXPECT_NEAR(e.yaw, kPi / 2, 1e-12);
}

TEST(QuatToEuler, RotationMatrixRoundTrip) {
  const auto c = testing::euler_round_trip();
  EXPECT_TRUE(c.ok) << c.detail;
}

TEST(UnwrapPhase, RemovesJumps) {
  const std::vector<double> a = {3.0, 3.1, -3.1, -3.0, 3.1};
  const auto u = unwrap_phase(a);
  for (std::size_t i = 1; i < u.size(); ++i) EXPECT_LT(std::abs(u[i] - u[i - 1]), kPi);
  EXPECT_NEAR(u[2], -3.1 + 2 * kPi, 1e-12);
}

TEST(StftPsd, ZeroSignalAtFloor) {
  const auto s = stft_psd(std::vector<double>(160, 0.0), 200.0);
  EXPECT_EQ(s.db.rows(), 17);
  EXPECT_EQ(s.db.cols(), 17);
  EXPECT_TRUE((s.db.array() == -80.0).all());
}

TEST(StftPsd, ToneLocalization) {
  std::vector<double> x(160);
  for (int i = 0; i < 160; ++i) x[i] = std::sin(2 * kPi * 25.0 * i / 200.0);
  const auto s = stft_psd(x, 200.0);
  EXPECT_DOUBLE_EQ(s.f_bins[4], 25.0);
  for (int t = 0; t < s.power.cols(); ++t) {
    Eigen::Index k;
    s.power.col(t).maxCoeff(&k);
    EXPECT_EQ(k, 4);
  }
}

TEST(StftPsd, Parseval) {
  const auto c = testing::stft_parseval();
  EXPECT_TRUE(c.ok) << c.detail;
}

TEST(MotionSegment, CenteredIntervalIsDirectSlice) {
  ImuSeries s = static_series(160);
  for (int i = 0; i < 160; ++i) s.ch[ImuSeries::ax][i] = 0.01 * i;
  const auto q = fuse_orientation(s, 0.1);
  const auto seg = build_motion_segment(s, q, {0, 159}, 160);
  EXPECT_EQ(seg.offset, 0);
  for (int j = 0; j < 160; ++j) {
    EXPECT_EQ(seg.tensor(0, j), s.ch[ImuSeries::ax][j]);
    EXPECT_EQ(seg.tensor(4, j), quat_to_euler(q[j]).pitch);
  }
}

TEST(MotionSegment, EdgeReplicationNearStart) {
  ImuSeries s = static_series(160);
  for (int i = 0; i < 160; ++i) s.ch[ImuSeries::ax][i] = 0.01 * i;
  const auto q = fuse_orientation(s, 0.1);
  const auto seg = build_motion_segment(s, q, {2, 12}, 160);
  ASSERT_EQ(seg.tensor.cols(), 160);
  EXPECT_LT(seg.offset, 0);
  for (int j = 0; j <= -seg.offset; ++j) EXPECT_EQ(seg.tensor(0, j), s.ch[ImuSeries::ax][0]);
  EXPECT_EQ(seg.tensor(0, 159), s.ch[ImuSeries::ax][159 + seg.offset]);
}

TEST(MotionSegment, ContainsInjectedPress) {
  for (std::uint64_t k = 0; k < 10; ++k) {
    const auto g = testing::synthetic_session(k, 40 + k);
    const auto p = preprocess(g.session, PipelineConfig{});
    const int peak = static_cast<int>(std::lround(g.truth.touchdown_ms * 0.2));
    EXPECT_GE(peak, p.segment.offset) << k;
    EXPECT_LT(peak, p.segment.offset + 160) << k;
  }
}

}  // namespace
}  // namespace touchauth
