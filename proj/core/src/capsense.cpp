#include "touchauth/capsense.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <deque>

#include "touchauth/util.hpp"

namespace touchauth {

CapSequence interpolate_frames(const Session& session, int n_frames) {
  if (session.cap.size() < 2) throw DegenerateInputError("interpolate_frames: fewer than 2 cap frames");
  if (n_frames < 2) throw InvariantError("interpolate_frames: n_frames must be >= 2");

  const auto& meta = session.meta;
  const int rows = meta.cap_rows;
  const int cols = meta.cap_cols;
  const auto& cap = session.cap;
  const double t0 = static_cast<double>(cap.front().ts_ms);
  const double t1 = static_cast<double>(cap.back().ts_ms);

  CapSequence seq;
  seq.meta = meta;
  seq.frames.reserve(n_frames);
  seq.ts_ms.reserve(n_frames);

  std::size_t seg = 0;
  for (int k = 0; k < n_frames; ++k) {
    const double t = (k == n_frames - 1) ? t1 : t0 + (t1 - t0) * k / (n_frames - 1);
    while (seg + 2 < cap.size() && static_cast<double>(cap[seg + 1].ts_ms) <= t) ++seg;
    const auto& a = cap[seg];
    const auto& b = cap[seg + 1];
    const double ta = static_cast<double>(a.ts_ms);
    const double tb = static_cast<double>(b.ts_ms);
    const double w = (tb > ta) ? std::clamp((t - ta) / (tb - ta), 0.0, 1.0) : 1.0;

    Frame f(rows, cols);
    for (int i = 0; i < rows * cols; ++i) {
      const double va = static_cast<double>(a.values[i]);
      const double vb = static_cast<double>(b.values[i]);
      f.data()[i] = va + w * (vb - va);
    }
    seq.frames.push_back(std::move(f));
    seq.ts_ms.push_back(t);
  }
  return seq;
}

namespace {

double median_inplace(std::vector<double>& v) {
  const auto n = v.size();
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(v.begin(), mid, v.end());
  const double upper = *mid;
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), mid);
  return 0.5 * (lower + upper);
}

}  // namespace

ThresholdResult adaptive_threshold(const Frame& frame, double k) {
  std::vector<double> v(frame.data(), frame.data() + frame.size());
  const double med = median_inplace(v);
  for (auto& x : v) x = std::abs(x - med);
  const double mad = median_inplace(v);

  ThresholdResult r;
  r.tau = med + k * mad;
  r.mask = (frame.array() > r.tau);
  return r;
}

FrameDetection detect_touch_region(const Frame& frame, const Mask& mask, int connectivity) {
  if (mask.rows() != frame.rows() || mask.cols() != frame.cols()) {
    throw InvariantError("detect_touch_region: mask dimensions do not match frame");
  }
  const int rows = static_cast<int>(frame.rows());
  const int cols = static_cast<int>(frame.cols());
  std::vector<int> label(static_cast<std::size_t>(rows * cols), -1);

  FrameDetection best;
  double best_energy = -1.0;
  std::vector<Cell> component;
  std::deque<Cell> queue;
  int next_label = 0;

  for (int r0 = 0; r0 < rows; ++r0) {
    for (int c0 = 0; c0 < cols; ++c0) {
      if (!mask(r0, c0) || label[r0 * cols + c0] >= 0) continue;
      component.clear();
      double energy = 0.0;
      label[r0 * cols + c0] = next_label;
      queue.push_back({r0, c0});
      while (!queue.empty()) {
        const Cell cell = queue.front();
        queue.pop_front();
        component.push_back(cell);
        energy += frame(cell.row, cell.col);
        for (int dr = -1; dr <= 1; ++dr) {
          for (int dc = -1; dc <= 1; ++dc) {
            if (dr == 0 && dc == 0) continue;
            if (connectivity == 4 && dr != 0 && dc != 0) continue;
            const int r = cell.row + dr;
            const int c = cell.col + dc;
            if (r < 0 || r >= rows || c < 0 || c >= cols) continue;
            if (!mask(r, c) || label[r * cols + c] >= 0) continue;
            label[r * cols + c] = next_label;
            queue.push_back({r, c});
          }
        }
      }
      ++next_label;
      if (energy > best_energy) {
        best_energy = energy;
        best.region = component;
      }
    }
  }

  if (best.region.empty()) return best;

  std::sort(best.region.begin(), best.region.end(), [](const Cell& a, const Cell& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  double sx = 0.0, sy = 0.0, sw = 0.0;
  for (const auto& cell : best.region) {
    const double w = frame(cell.row, cell.col);
    sx += cell.col * w;
    sy += cell.row * w;
    sw += w;
  }
  best.energy = sw;
  best.touched = true;
  if (sw != 0.0) {
    best.x = sx / sw;
    best.y = sy / sw;
  } else {
    // Zero-weight region (only reachable with negative thresholds); fall
    // back to the unweighted mean so the centroid stays inside the region.
    for (const auto& cell : best.region) {
      best.x += cell.col;
      best.y += cell.row;
    }
    best.x /= static_cast<double>(best.region.size());
    best.y /= static_cast<double>(best.region.size());
  }
  return best;
}

TouchKalman::TouchKalman(const KalmanConfig& cfg) : cfg_(cfg) {
  F_.setIdentity();
  F_(0, 2) = 1.0;
  F_(1, 3) = 1.0;
  Q_ = Eigen::Vector4d(cfg.q_pos, cfg.q_pos, cfg.q_vel, cfg.q_vel).asDiagonal();
}

void TouchKalman::init(double x, double y) {
  state_.s << x, y, 0.0, 0.0;
  state_.P = Eigen::Vector4d(cfg_.p0_pos, cfg_.p0_pos, cfg_.p0_vel, cfg_.p0_vel).asDiagonal();
}

void TouchKalman::predict() {
  state_.s = F_ * state_.s;
  state_.P = F_ * state_.P * F_.transpose() + Q_;
  state_.P = 0.5 * (state_.P + state_.P.transpose()).eval();
}

void TouchKalman::update(double x, double y) {
  // H selects the position components, so the algebra reduces to the
  // upper-left 2x2 block.
  const Eigen::Vector2d innovation = Eigen::Vector2d(x, y) - state_.s.head<2>();
  const Eigen::Matrix2d S = state_.P.topLeftCorner<2, 2>() + cfg_.r * Eigen::Matrix2d::Identity();
  const Eigen::Matrix<double, 4, 2> K = state_.P.leftCols<2>() * S.inverse();
  state_.s += K * innovation;

  // Joseph form keeps P symmetric positive semi-definite.
  Eigen::Matrix<double, 2, 4> H = Eigen::Matrix<double, 2, 4>::Zero();
  H(0, 0) = 1.0;
  H(1, 1) = 1.0;
  const Eigen::Matrix4d I_KH = Eigen::Matrix4d::Identity() - K * H;
  state_.P = I_KH * state_.P * I_KH.transpose() + cfg_.r * K * K.transpose();
  state_.P = 0.5 * (state_.P + state_.P.transpose()).eval();
}

TouchTrack track_touch(const CapSequence& seq, const CapsenseConfig& cfg) {
  TouchTrack track;
  const int n = seq.n_frames();
  track.detections.reserve(n);
  for (int t = 0; t < n; ++t) {
    auto th = adaptive_threshold(seq.frames[t], cfg.k);
    auto det = detect_touch_region(seq.frames[t], th.mask, cfg.connectivity);
    det.tau = th.tau;
    if (det.touched) {
      if (track.first_touched < 0) track.first_touched = t;
      track.last_touched = t;
    }
    track.detections.push_back(std::move(det));
  }
  if (track.first_touched < 0) throw DegenerateInputError("no touch event detected");

  TouchKalman kf(cfg.kalman);
  const auto& first = track.detections[track.first_touched];
  kf.init(first.x, first.y);
  track.smoothed.resize(n);
  track.states.resize(n);
  for (int t = 0; t < n; ++t) {
    // Frames up to and including the first detection hold the initial state.
    if (t > track.first_touched) {
      kf.predict();
      const auto& det = track.detections[t];
      if (det.touched) kf.update(det.x, det.y);
    }
    track.states[t] = kf.state();
    track.smoothed[t] = kf.state().s.head<2>();
  }
  return track;
}

std::vector<double> flatten_and_smooth(const CapSequence& seq, int window) {
  const int n = seq.n_frames();
  const int cells = seq.rows() * seq.cols();
  const int half = std::max(0, window) / 2;
  std::vector<double> out(static_cast<std::size_t>(n) * cells, 0.0);
  for (int t = 0; t < n; ++t) {
    const int lo = std::max(0, t - half);
    const int hi = std::min(n - 1, t + half);
    const double inv = 1.0 / (hi - lo + 1);
    double* dst = out.data() + static_cast<std::size_t>(t) * cells;
    for (int u = lo; u <= hi; ++u) {
      const double* src = seq.frames[u].data();
      for (int c = 0; c < cells; ++c) dst[c] += src[c];
    }
    for (int c = 0; c < cells; ++c) dst[c] *= inv;
  }
  return out;
}

}  // namespace touchauth
