#pragma once

#include <Eigen/Core>
#include <array>
#include <span>
#include <utility>
#include <vector>

#include "touchauth/capsense.hpp"
#include "touchauth/session.hpp"

namespace touchauth {

struct MotionConfig {
  int wavelet_levels = 3;
  double beta = 0.1;
  double rho = 0.2;
  int segment_len = 160;
  int stft_win = 32;
  int stft_hop = 8;
  double pad_s = 0.05;
};

/// Nine IMU channels on a uniform grid: a(x,y,z), g(x,y,z), m(x,y,z).
struct ImuSeries {
  enum Channel { ax, ay, az, gx, gy, gz, mx, my, mz };

  double t0_s = 0.0;
  double dt_s = 0.005;
  std::array<std::vector<double>, 9> ch;

  std::size_t size() const { return ch[0].size(); }
  double fs() const { return 1.0 / dt_s; }
  Eigen::Vector3d accel(std::size_t i) const { return {ch[ax][i], ch[ay][i], ch[az][i]}; }
  Eigen::Vector3d gyro(std::size_t i) const { return {ch[gx][i], ch[gy][i], ch[gz][i]}; }
  Eigen::Vector3d mag(std::size_t i) const { return {ch[mx][i], ch[my][i], ch[mz][i]}; }
};

/// Unit quaternion (w, x, y, z) rotating body-frame vectors into the world
/// frame (x north, z up).
struct Quaternion {
  double w = 1.0, x = 0.0, y = 0.0, z = 0.0;

  double norm() const;
  Quaternion normalized() const;
  Quaternion conjugate() const { return {w, -x, -y, -z}; }
  Quaternion operator*(const Quaternion& o) const;
  Eigen::Matrix3d rotation_matrix() const;
  Eigen::Vector3d rotate(const Eigen::Vector3d& v) const { return rotation_matrix() * v; }
};

struct EulerAngles {
  double roll = 0.0;   // (-pi, pi]
  double pitch = 0.0;  // [-pi/2, pi/2]
  double yaw = 0.0;    // (-pi, pi]
};

struct Spectrogram {
  Eigen::MatrixXd power;  // F x T, linear power per Hz
  Eigen::MatrixXd db;     // F x T, floored at -80 dB
  std::vector<double> f_bins;
  std::vector<double> t_bins;
};

struct MotionSegment {
  int start = 0;  // refined interval, series indices (inclusive)
  int end = 0;
  int offset = 0;          // series index of tensor column 0 (may be negative)
  Eigen::MatrixXd tensor;  // 6 x L: a_x, a_y, a_z, roll, pitch, yaw
  std::vector<double> m;   // acceleration magnitude over the same L samples
};

struct IndexWindow {
  int start = 0;
  int end = 0;  // inclusive
  bool operator==(const IndexWindow&) const = default;
};

struct ExtremumPair {
  int peak = 0;
  int valley = 0;
};

ImuSeries resample_imu(const Session& session);
ImuSeries wavelet_denoise(const ImuSeries& series, int levels = 3);

/// |a(t)| per sample.
std::vector<double> accel_magnitude(const ImuSeries& series);

IndexWindow coarse_window(const TouchTrack& track, const SessionMeta& meta, int series_len,
                          double pad_s = 0.05);

ExtremumPair find_extremum_pair(std::span<const double> m, IndexWindow window);

IndexWindow refine_interval(std::span<const double> m, ExtremumPair pair, IndexWindow window,
                            double rho = 0.2);

/// Gyro integration with a normalized-gradient accelerometer/magnetometer
/// correction of gain beta. beta = 0 gives pure gyro integration.
std::vector<Quaternion> fuse_orientation(const ImuSeries& series, double beta = 0.1);

/// Accelerometer tilt + magnetometer heading alignment.
Quaternion initial_orientation(const Eigen::Vector3d& accel, const Eigen::Vector3d& mag);

EulerAngles quat_to_euler(const Quaternion& q);
/// Inverse of quat_to_euler: q = Rz(yaw) * Ry(-pitch) * Rx(roll).
Quaternion euler_to_quat(const EulerAngles& e);

std::vector<double> unwrap_phase(std::span<const double> angles);

Spectrogram stft_psd(std::span<const double> channel, double fs, int win = 32, int hop = 8);

MotionSegment build_motion_segment(const ImuSeries& series, std::span<const Quaternion> quats,
                                   IndexWindow interval, int length = 160);

}  // namespace touchauth
