#pragma once

#include <Eigen/Core>
#include <utility>
#include <vector>

#include "touchauth/session.hpp"

namespace touchauth {

using Frame = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Mask = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct KalmanConfig {
  double q_pos = 0.01;
  double q_vel = 0.04;
  double r = 0.25;
  double p0_pos = 1.0;
  double p0_vel = 10.0;
};

struct CapsenseConfig {
  double k = 3.0;
  int connectivity = 8;  // 4 or 8
  int n_frames = 16;
  int smooth_window = 5;
  KalmanConfig kalman;
};

/// Fixed-length capacitive sequence (frames interpolated in time).
struct CapSequence {
  std::vector<Frame> frames;
  std::vector<double> ts_ms;
  SessionMeta meta;

  int rows() const { return meta.cap_rows; }
  int cols() const { return meta.cap_cols; }
  int n_frames() const { return static_cast<int>(frames.size()); }
};

struct Cell {
  int row = 0;
  int col = 0;
  bool operator==(const Cell&) const = default;
};

struct FrameDetection {
  double tau = 0.0;
  std::vector<Cell> region;
  double x = 0.0;  // column coordinate
  double y = 0.0;  // row coordinate
  double energy = 0.0;
  bool touched = false;
};

struct ThresholdResult {
  double tau = 0.0;
  Mask mask;
};

struct KalmanState {
  Eigen::Vector4d s = Eigen::Vector4d::Zero();  // x, y, vx, vy
  Eigen::Matrix4d P = Eigen::Matrix4d::Identity();
};

/// Constant-velocity filter on touch centroids, one step per frame.
class TouchKalman {
 public:
  explicit TouchKalman(const KalmanConfig& cfg);

  void init(double x, double y);
  void predict();
  void update(double x, double y);
  const KalmanState& state() const { return state_; }

 private:
  KalmanConfig cfg_;
  Eigen::Matrix4d F_;
  Eigen::Matrix4d Q_;
  KalmanState state_;
};

struct TouchTrack {
  std::vector<FrameDetection> detections;
  std::vector<Eigen::Vector2d> smoothed;
  std::vector<KalmanState> states;
  int first_touched = -1;
  int last_touched = -1;
};

/// Per-cell linear interpolation onto n_frames instants spanning the capture.
CapSequence interpolate_frames(const Session& session, int n_frames);

/// tau = median + k * MAD; a cell is kept when strictly above tau.
ThresholdResult adaptive_threshold(const Frame& frame, double k);

/// Largest-energy connected component of the mask and its intensity-weighted
/// centroid. The returned detection carries tau = 0; callers fill it in.
FrameDetection detect_touch_region(const Frame& frame, const Mask& mask, int connectivity = 8);

/// Throws DegenerateInputError when no frame contains a touch.
TouchTrack track_touch(const CapSequence& seq, const CapsenseConfig& cfg = {});

/// Per-cell centered temporal moving average (truncated at the ends), then
/// row-major flattening with frames concatenated in time order.
std::vector<double> flatten_and_smooth(const CapSequence& seq, int window = 5);

}  // namespace touchauth
