#include "touchauth/motion.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "touchauth/util.hpp"
#include "touchauth/wavelet.hpp"

namespace touchauth {

double Quaternion::norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

Quaternion Quaternion::normalized() const {
  const double n = norm();
  return {w / n, x / n, y / n, z / n};
}

Quaternion Quaternion::operator*(const Quaternion& o) const {
  return {w * o.w - x * o.x - y * o.y - z * o.z, w * o.x + x * o.w + y * o.z - z * o.y,
          w * o.y - x * o.z + y * o.w + z * o.x, w * o.z + x * o.y - y * o.x + z * o.w};
}

Eigen::Matrix3d Quaternion::rotation_matrix() const {
  Eigen::Matrix3d R;
  R << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),  //
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),    //
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return R;
}

ImuSeries resample_imu(const Session& session) {
  const auto& imu = session.imu;
  if (imu.size() < 8) throw DegenerateInputError("resample_imu: need at least 8 IMU samples");
  const double dt_ms = 1000.0 / session.meta.imu_hz;
  const double t0 = static_cast<double>(imu.front().ts_ms);
  const double t1 = static_cast<double>(imu.back().ts_ms);
  const auto n = static_cast<std::size_t>(std::floor((t1 - t0) / dt_ms + 1e-9)) + 1;

  ImuSeries out;
  out.t0_s = t0 / 1000.0;
  out.dt_s = dt_ms / 1000.0;
  for (auto& c : out.ch) c.resize(n);

  std::size_t seg = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = t0 + dt_ms * static_cast<double>(k);
    while (seg + 2 < imu.size() && static_cast<double>(imu[seg + 1].ts_ms) <= t) ++seg;
    const auto& a = imu[seg];
    const auto& b = imu[seg + 1];
    const double ta = static_cast<double>(a.ts_ms);
    const double tb = static_cast<double>(b.ts_ms);
    const double w = tb > ta ? std::clamp((t - ta) / (tb - ta), 0.0, 1.0) : 1.0;
    for (int j = 0; j < 3; ++j) {
      out.ch[ImuSeries::ax + j][k] = a.a[j] + w * (b.a[j] - a.a[j]);
      out.ch[ImuSeries::gx + j][k] = a.g[j] + w * (b.g[j] - a.g[j]);
      out.ch[ImuSeries::mx + j][k] = a.m[j] + w * (b.m[j] - a.m[j]);
    }
  }
  return out;
}

ImuSeries wavelet_denoise(const ImuSeries& series, int levels) {
  ImuSeries out = series;
  for (auto& c : out.ch) c = wavelet::denoise(c, levels);
  return out;
}

std::vector<double> accel_magnitude(const ImuSeries& series) {
  std::vector<double> m(series.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = series.accel(i).norm();
  return m;
}

IndexWindow coarse_window(const TouchTrack& track, const SessionMeta& meta, int series_len,
                          double pad_s) {
  if (track.first_touched < 0) throw DegenerateInputError("coarse_window: track has no active window");
  const double ratio = static_cast<double>(meta.imu_hz) / meta.cap_hz;
  const int pad = static_cast<int>(std::lround(pad_s * meta.imu_hz));
  int s = static_cast<int>(std::lround(track.first_touched * ratio)) - pad;
  int e = static_cast<int>(std::lround(track.last_touched * ratio)) + pad;
  s = std::clamp(s, 0, series_len - 1);
  e = std::clamp(e, 0, series_len - 1);
  return {s, e};
}

ExtremumPair find_extremum_pair(std::span<const double> m, IndexWindow w) {
  ExtremumPair p{w.start, w.start};
  for (int i = w.start; i <= w.end; ++i) {
    if (m[i] > m[p.peak]) p.peak = i;
    if (m[i] < m[p.valley]) p.valley = i;
  }
  return p;
}

IndexWindow refine_interval(std::span<const double> m, ExtremumPair pair, IndexWindow w,
                            double rho) {
  // d(t) = m(t+1) - m(t), defined for t in [start, end-1].
  double max_d = 0.0;
  for (int t = w.start; t < w.end; ++t) max_d = std::max(max_d, std::abs(m[t + 1] - m[t]));
  if (max_d == 0.0 || w.end - w.start < 1) return w;
  const double eta = rho * max_d;
  auto active = [&](int t) { return std::abs(m[t + 1] - m[t]) > eta; };

  const int lo = std::min(pair.peak, pair.valley);
  const int hi = std::max(pair.peak, pair.valley);

  // Backtrack from the earlier extremum to the first supra-threshold
  // derivative, then on to the onset of that active stretch.
  int start = w.start;
  int t = lo - 1;
  while (t >= w.start && !active(t)) --t;
  if (t >= w.start) {
    while (t >= w.start && active(t)) --t;
    start = t + 1;
  }

  // Track forward from the later extremum until the derivative settles.
  int end = w.end;
  for (int u = hi; u < w.end; ++u) {
    if (!active(u)) {
      end = u;
      break;
    }
  }

  start = std::clamp(start, w.start, w.end);
  end = std::clamp(end, w.start, w.end);
  if (start >= end) {
    if (end < w.end) {
      end = start + 1;
    } else {
      start = end - 1;
    }
  }
  return {start, end};
}

Quaternion initial_orientation(const Eigen::Vector3d& accel, const Eigen::Vector3d& mag) {
  const double an = accel.norm();
  if (an == 0.0) return {};
  const Eigen::Vector3d up = accel / an;
  Eigen::Vector3d north = mag - mag.dot(up) * up;
  if (north.norm() < 1e-12) return {};
  north.normalize();
  const Eigen::Vector3d west = up.cross(north);

  // Rows are the world axes expressed in the body frame.
  Eigen::Matrix3d R;
  R.row(0) = north;
  R.row(1) = west;
  R.row(2) = up;

  Quaternion q;
  const double tr = R.trace();
  if (tr > 0) {
    const double s = std::sqrt(tr + 1.0) * 2;
    q = {0.25 * s, (R(2, 1) - R(1, 2)) / s, (R(0, 2) - R(2, 0)) / s, (R(1, 0) - R(0, 1)) / s};
  } else if (R(0, 0) > R(1, 1) && R(0, 0) > R(2, 2)) {
    const double s = std::sqrt(1.0 + R(0, 0) - R(1, 1) - R(2, 2)) * 2;
    q = {(R(2, 1) - R(1, 2)) / s, 0.25 * s, (R(0, 1) + R(1, 0)) / s, (R(0, 2) + R(2, 0)) / s};
  } else if (R(1, 1) > R(2, 2)) {
    const double s = std::sqrt(1.0 + R(1, 1) - R(0, 0) - R(2, 2)) * 2;
    q = {(R(0, 2) - R(2, 0)) / s, (R(0, 1) + R(1, 0)) / s, 0.25 * s, (R(1, 2) + R(2, 1)) / s};
  } else {
    const double s = std::sqrt(1.0 + R(2, 2) - R(0, 0) - R(1, 1)) * 2;
    q = {(R(1, 0) - R(0, 1)) / s, (R(0, 2) + R(2, 0)) / s, (R(1, 2) + R(2, 1)) / s, 0.25 * s};
  }
  if (q.w < 0) q = {-q.w, -q.x, -q.y, -q.z};
  return q.normalized();
}

namespace {

// Gradient of the misalignment between the predicted and measured gravity
// and magnetic-field directions, both in the body frame.
Eigen::Vector4d correction_gradient(const Quaternion& q, const Eigen::Vector3d& a,
                                    const Eigen::Vector3d& m) {
  const double w = q.w, x = q.x, y = q.y, z = q.z;

  // Earth field reference: measured field rotated into the world frame,
  // with its horizontal part collapsed onto north.
  const Eigen::Vector3d h = q.rotate(m);
  const double bx = std::hypot(h.x(), h.y());
  const double bz = h.z();

  // Body-frame images of world x and z axes (rows 0 and 2 of R).
  const Eigen::Vector3d row0(1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y));
  const Eigen::Vector3d row2(2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y));

  Eigen::Matrix<double, 3, 4> J0, J2;
  J0 << 0, 0, -4 * y, -4 * z,  //
      -2 * z, 2 * y, 2 * x, -2 * w,  //
      2 * y, 2 * z, 2 * w, 2 * x;
  J2 << -2 * y, 2 * z, -2 * w, 2 * x,  //
      2 * x, 2 * w, 2 * z, 2 * y,  //
      0, -4 * x, -4 * y, 0;

  const Eigen::Vector3d fg = row2 - a;
  const Eigen::Vector3d fb = bx * row0 + bz * row2 - m;
  const Eigen::Matrix<double, 3, 4> Jb = bx * J0 + bz * J2;
  return J2.transpose() * fg + Jb.transpose() * fb;
}

}  // namespace

std::vector<Quaternion> fuse_orientation(const ImuSeries& series, double beta) {
  const std::size_t n = series.size();
  std::vector<Quaternion> out;
  out.reserve(n);
  if (n == 0) return out;

  Quaternion q = initial_orientation(series.accel(0), series.mag(0));
  out.push_back(q);
  const double dt = series.dt_s;
  for (std::size_t k = 1; k < n; ++k) {
    const Eigen::Vector3d g = series.gyro(k);
    const Quaternion omega{0.0, g.x(), g.y(), g.z()};
    const Quaternion qdot = q * omega;
    Eigen::Vector4d rate(0.5 * qdot.w, 0.5 * qdot.x, 0.5 * qdot.y, 0.5 * qdot.z);

    const Eigen::Vector3d a = series.accel(k);
    const Eigen::Vector3d m = series.mag(k);
    const double an = a.norm();
    const double mn = m.norm();
    if (beta > 0.0 && an > 0.0 && mn > 0.0 && std::isfinite(an) && std::isfinite(mn)) {
      const Eigen::Vector4d grad = correction_gradient(q, a / an, m / mn);
      const double gn = grad.norm();
      if (gn > 1e-12) rate -= beta * grad / gn;
    }
    q = Quaternion{q.w + rate(0) * dt, q.x + rate(1) * dt, q.y + rate(2) * dt, q.z + rate(3) * dt}
            .normalized();
    out.push_back(q);
  }
  return out;
}

EulerAngles quat_to_euler(const Quaternion& q) {
  const double q0 = q.w, q1 = q.x, q2 = q.y, q3 = q.z;
  EulerAngles e;
  e.roll = std::atan2(2 * (q2 * q3 + q0 * q1), 1 - 2 * (q1 * q1 + q2 * q2));
  e.pitch = std::asin(std::clamp(2 * (q1 * q3 - q0 * q2), -1.0, 1.0));
  e.yaw = std::atan2(2 * (q1 * q2 + q0 * q3), 1 - 2 * (q2 * q2 + q3 * q3));
  constexpr double pi = std::numbers::pi;
  if (e.roll <= -pi) e.roll = pi;
  if (e.yaw <= -pi) e.yaw = pi;
  return e;
}

Quaternion euler_to_quat(const EulerAngles& e) {
  const Quaternion qx{std::cos(e.roll / 2), std::sin(e.roll / 2), 0, 0};
  const Quaternion qy{std::cos(-e.pitch / 2), 0, std::sin(-e.pitch / 2), 0};
  const Quaternion qz{std::cos(e.yaw / 2), 0, 0, std::sin(e.yaw / 2)};
  return (qz * qy * qx).normalized();
}

std::vector<double> unwrap_phase(std::span<const double> angles) {
  std::vector<double> out(angles.begin(), angles.end());
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double offset = 0.0;
  for (std::size_t i = 1; i < out.size(); ++i) {
    const double d = angles[i] - angles[i - 1];
    if (d > std::numbers::pi) offset -= two_pi;
    if (d < -std::numbers::pi) offset += two_pi;
    out[i] = angles[i] + offset;
  }
  return out;
}

Spectrogram stft_psd(std::span<const double> x, double fs, int win, int hop) {
  const int len = static_cast<int>(x.size());
  if (win < 2 || hop < 1) throw InvariantError("stft_psd: invalid window/hop");
  if (len < win) throw DegenerateInputError("stft_psd: channel shorter than window");

  const int n_frames = (len - win) / hop + 1;
  const int n_bins = win / 2 + 1;

  // Periodic Hann window.
  std::vector<double> w(win);
  double w2 = 0.0;
  for (int i = 0; i < win; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / win);
    w2 += w[i] * w[i];
  }
  std::vector<double> cos_t(win), sin_t(win);
  for (int i = 0; i < win; ++i) {
    cos_t[i] = std::cos(2.0 * std::numbers::pi * i / win);
    sin_t[i] = std::sin(2.0 * std::numbers::pi * i / win);
  }

  Spectrogram s;
  s.power.resize(n_bins, n_frames);
  s.db.resize(n_bins, n_frames);
  for (int k = 0; k < n_bins; ++k) s.f_bins.push_back(k * fs / win);
  std::vector<double> seg(win);
  const double scale = 1.0 / (fs * w2);
  for (int t = 0; t < n_frames; ++t) {
    const int off = t * hop;
    s.t_bins.push_back((off + win / 2.0) / fs);
    for (int i = 0; i < win; ++i) seg[i] = x[off + i] * w[i];
    for (int k = 0; k < n_bins; ++k) {
      double re = 0.0, im = 0.0;
      for (int i = 0; i < win; ++i) {
        const int idx = (k * i) % win;
        re += seg[i] * cos_t[idx];
        im -= seg[i] * sin_t[idx];
      }
      double p = (re * re + im * im) * scale;
      // One-sided density: interior bins carry their negative-frequency twin.
      const bool edge = (k == 0) || (win % 2 == 0 && k == win / 2);
      if (!edge) p *= 2.0;
      s.power(k, t) = p;
      s.db(k, t) = p > 0.0 ? std::max(10.0 * std::log10(p), -80.0) : -80.0;
    }
  }
  return s;
}

MotionSegment build_motion_segment(const ImuSeries& series, std::span<const Quaternion> quats,
                                   IndexWindow interval, int length) {
  const int n = static_cast<int>(series.size());
  if (static_cast<int>(quats.size()) != n) throw InvariantError("build_motion_segment: quaternion count mismatch");
  if (interval.start >= interval.end) throw InvariantError("build_motion_segment: empty interval");

  std::vector<double> roll(n), pitch(n), yaw(n);
  for (int i = 0; i < n; ++i) {
    const auto e = quat_to_euler(quats[i]);
    roll[i] = e.roll;
    pitch[i] = e.pitch;
    yaw[i] = e.yaw;
  }
  yaw = unwrap_phase(yaw);
  const auto mag = accel_magnitude(series);

  const int center = interval.start + (interval.end - interval.start + 1) / 2;
  MotionSegment seg;
  seg.start = interval.start;
  seg.end = interval.end;
  seg.offset = center - length / 2;
  seg.tensor.resize(6, length);
  seg.m.resize(length);
  for (int j = 0; j < length; ++j) {
    const int i = std::clamp(seg.offset + j, 0, n - 1);
    seg.tensor(0, j) = series.ch[ImuSeries::ax][i];
    seg.tensor(1, j) = series.ch[ImuSeries::ay][i];
    seg.tensor(2, j) = series.ch[ImuSeries::az][i];
    seg.tensor(3, j) = roll[i];
    seg.tensor(4, j) = pitch[i];
    seg.tensor(5, j) = yaw[i];
    seg.m[j] = mag[i];
  }
  return seg;
}

}  // namespace touchauth
