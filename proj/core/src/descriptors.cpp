#include "touchauth/embed.hpp"

#include <algorithm>
#include <cmath>

namespace touchauth {

Eigen::VectorXd cap_descriptor(const CapSequence& seq, const TouchTrack& track, int smooth_window) {
  const int nf = seq.n_frames();
  if (static_cast<int>(track.detections.size()) != nf) {
    throw InvariantError("cap_descriptor: track does not match sequence");
  }
  Eigen::VectorXd v = Eigen::VectorXd::Zero(cap_descriptor_size(nf));

  for (int t = 0; t < nf; ++t) {
    const auto& det = track.detections[t];
    if (!det.touched) continue;
    const Frame& f = seq.frames[t];
    double energy = 0.0, sx = 0.0, sy = 0.0, peak = 0.0;
    for (const auto& c : det.region) {
      const double w = f(c.row, c.col);
      energy += w;
      sx += w * c.col;
      sy += w * c.row;
      peak = std::max(peak, w);
    }
    double vxx = 0.0, vyy = 0.0, vxy = 0.0;
    if (energy > 0.0) {
      const double mx = sx / energy, my = sy / energy;
      for (const auto& c : det.region) {
        const double w = f(c.row, c.col);
        vxx += w * (c.col - mx) * (c.col - mx);
        vyy += w * (c.row - my) * (c.row - my);
        vxy += w * (c.col - mx) * (c.row - my);
      }
      vxx /= energy;
      vyy /= energy;
      vxy /= energy;
    }
    auto slot = v.segment(static_cast<Eigen::Index>(t) * kFrameFeatures, kFrameFeatures);
    slot << energy, static_cast<double>(det.region.size()), track.smoothed[t].x(),
        track.smoothed[t].y(), vxx, vyy, vxy, peak;
  }

  const auto flat = flatten_and_smooth(seq, smooth_window);
  const auto last = static_cast<double>(flat.size() - 1);
  for (int k = 0; k < kCapDownsample; ++k) {
    const auto idx = static_cast<std::size_t>(std::lround(k * last / (kCapDownsample - 1)));
    v(kFrameFeatures * nf + k) = flat[idx];
  }
  return v;
}

namespace {

struct Moments {
  double mean = 0.0, std = 0.0, rms = 0.0, skew = 0.0, kurt = 0.0;
};

Moments moments(const Eigen::VectorXd& x) {
  Moments m;
  const double n = static_cast<double>(x.size());
  m.mean = x.mean();
  m.rms = std::sqrt(x.squaredNorm() / n);
  const Eigen::ArrayXd d = x.array() - m.mean;
  const double m2 = d.square().mean();
  m.std = std::sqrt(m2);
  // Constant channels have no shape; report zeros rather than 0/0.
  if (m2 > 1e-24 * std::max(1.0, m.mean * m.mean)) {
    m.skew = d.cube().mean() / std::pow(m2, 1.5);
    m.kurt = d.square().square().mean() / (m2 * m2) - 3.0;
  }
  return m;
}

// [0, 4, 8, 12, 17] for 17 bins into 4 groups.
int pool_edge(int i, int n) { return i * (n / kPoolGrid) + (i == kPoolGrid ? n % kPoolGrid : 0); }

}  // namespace

Eigen::VectorXd imu_descriptor(const MotionSegment& segment, double fs, int stft_win,
                               int stft_hop) {
  if (segment.tensor.rows() != kImuChannels) {
    throw InvariantError("imu_descriptor: motion tensor must have 6 channels");
  }
  Eigen::VectorXd v(kImuDescriptorSize);
  for (int c = 0; c < kImuChannels; ++c) {
    const Eigen::VectorXd x = segment.tensor.row(c).transpose();
    const Eigen::VectorXd centered = x.array() - x.mean();
    const auto spec = stft_psd(std::span<const double>(centered.data(), centered.size()), fs,
                               stft_win, stft_hop);
    const int nf = static_cast<int>(spec.db.rows());
    const int nt = static_cast<int>(spec.db.cols());
    if (nf < kPoolGrid || nt < kPoolGrid) throw InvariantError("imu_descriptor: segment too short");

    auto out = v.segment(static_cast<Eigen::Index>(c) * kImuChannelFeatures, kImuChannelFeatures);
    for (int i = 0; i < kPoolGrid; ++i) {
      const int f0 = pool_edge(i, nf), f1 = pool_edge(i + 1, nf);
      for (int j = 0; j < kPoolGrid; ++j) {
        const int t0 = pool_edge(j, nt), t1 = pool_edge(j + 1, nt);
        out(i * kPoolGrid + j) = spec.db.block(f0, t0, f1 - f0, t1 - t0).mean();
      }
    }

    double centroid = 0.0;
    for (int t = 0; t < nt; ++t) {
      double num = 0.0, den = 0.0;
      for (int k = 0; k < nf; ++k) {
        num += spec.f_bins[k] * spec.power(k, t);
        den += spec.power(k, t);
      }
      if (den > 0.0) centroid += num / den;
    }
    centroid /= nt;

    const auto m = moments(x);
    const int base = kPoolGrid * kPoolGrid;
    out(base + 0) = m.mean;
    out(base + 1) = m.std;
    out(base + 2) = m.rms;
    out(base + 3) = m.skew;
    out(base + 4) = m.kurt;
    out(base + 5) = centroid;
  }
  return v;
}

}  // namespace touchauth
