#include <gtest/gtest.h>

#include "checks.hpp"

namespace touchauth::testing {
namespace {

#define EXPECT_CHECK(expr)       \
  do {                           \
    const Check c_ = (expr);     \
    EXPECT_TRUE(c_.ok) << c_.detail; \
  } while (0)

TEST(Oracle, MedianMad) { EXPECT_CHECK(oracle_median_mad()); }
TEST(Oracle, Centroid) { EXPECT_CHECK(oracle_centroid()); }
TEST(Oracle, Smoothing) { EXPECT_CHECK(oracle_smoothing()); }
TEST(Oracle, ExtremumPair) { EXPECT_CHECK(oracle_extremum_pair()); }
TEST(Oracle, Lof) { EXPECT_CHECK(oracle_lof()); }
TEST(Oracle, OcsvmDual) { EXPECT_CHECK(oracle_ocsvm_dual()); }
TEST(Oracle, RocCounting) { EXPECT_CHECK(oracle_roc()); }
TEST(Oracle, FusionForward) { EXPECT_CHECK(oracle_fusion_forward()); }

TEST(Numerics, Gradient) { EXPECT_CHECK(gradient_check()); }
TEST(Numerics, QuaternionDrift) { EXPECT_CHECK(quaternion_drift()); }
TEST(Numerics, EulerRoundTrip) { EXPECT_CHECK(euler_round_trip()); }
TEST(Numerics, StftParseval) { EXPECT_CHECK(stft_parseval()); }
TEST(Numerics, KalmanPsd) { EXPECT_CHECK(kalman_psd()); }

TEST(Statistics, NuProperty) { EXPECT_GE(nu_property_passes(100), 95); }
TEST(Statistics, EerCalibration) { EXPECT_LE(eer_calibration_error(), 0.01); }

}  // namespace
}  // namespace touchauth::testing
