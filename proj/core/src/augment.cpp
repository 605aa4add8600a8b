#include "touchauth/augment.hpp"

#include <algorithm>
#include <cmath>

namespace touchauth {

void AugmentConfig::validate() const {
  if (!(warp_factor >= 0.0 && warp_factor < 1.0)) throw InvariantError("augment.warp_factor must be in [0,1)");
  if (!(min_sigma >= 0.0 && base_sigma >= min_sigma)) throw InvariantError("augment: need base_sigma >= min_sigma >= 0");
  if (!(a_nominal > 0.0)) throw InvariantError("augment.a_nominal must be > 0");
  if (n_aug < 0) throw InvariantError("augment.n_aug must be >= 0");
}

namespace {

// Linear interpolation of the frame sequence at fractional frame position p.
Frame sample_at(const std::vector<Frame>& frames, double p) {
  const int n = static_cast<int>(frames.size());
  p = std::clamp(p, 0.0, static_cast<double>(n - 1));
  const int i = std::min(static_cast<int>(std::floor(p)), n - 2);
  const double w = p - i;
  return frames[i] + w * (frames[i + 1] - frames[i]);
}

std::vector<Frame> resample(const std::vector<Frame>& frames, int count) {
  const int n = static_cast<int>(frames.size());
  std::vector<Frame> out;
  out.reserve(count);
  for (int k = 0; k < count; ++k) {
    const double p = count == 1 ? 0.0 : static_cast<double>(k) * (n - 1) / (count - 1);
    out.push_back(sample_at(frames, p));
  }
  return out;
}

}  // namespace

CapSequence time_warp_at_rate(const CapSequence& seq, double rate) {
  const int n = seq.n_frames();
  if (n < 2 || rate == 1.0) return seq;
  const int warped = std::max(2, static_cast<int>(std::lround(n * rate)));
  CapSequence out = seq;
  out.frames = resample(resample(seq.frames, warped), n);
  return out;
}

CapSequence time_warp(const CapSequence& seq, const AugmentConfig& cfg, Rng& rng) {
  const double rate = rng.uniform(1.0 - cfg.warp_factor, 1.0 + cfg.warp_factor);
  return time_warp_at_rate(seq, rate);
}

double reference_amplitude(const Frame& frame) {
  const int r0 = static_cast<int>(frame.rows()) / 2 - 1;
  const int c0 = static_cast<int>(frame.cols()) / 2 - 1;
  std::vector<double> nonzero;
  for (int r = std::max(0, r0); r < std::min<int>(r0 + 3, frame.rows()); ++r) {
    for (int c = std::max(0, c0); c < std::min<int>(c0 + 3, frame.cols()); ++c) {
      if (frame(r, c) != 0.0) nonzero.push_back(frame(r, c));
    }
  }
  return nonzero.empty() ? 0.0 : median(std::move(nonzero));
}

double noise_sigma(double reference, const AugmentConfig& cfg) {
  return std::max(cfg.min_sigma, cfg.base_sigma * reference / cfg.a_nominal);
}

NoisyFrame adaptive_noise(const Frame& frame, const AugmentConfig& cfg, Rng& rng) {
  NoisyFrame out;
  out.sigma = noise_sigma(reference_amplitude(frame), cfg);
  out.frame = frame;
  for (Eigen::Index i = 0; i < out.frame.size(); ++i) {
    out.frame.data()[i] = std::max(0.0, out.frame.data()[i] + out.sigma * rng.normal());
  }
  return out;
}

std::vector<AugmentedSequence> augment_dataset(std::span<const CapSequence> seqs,
                                               const AugmentConfig& cfg) {
  cfg.validate();
  std::vector<AugmentedSequence> out;
  out.reserve(seqs.size() * (1 + cfg.n_aug));
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    out.push_back({i, -1, 1.0, {}, seqs[i]});
  }
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    Rng rng(Rng::derive(cfg.seed, i));
    for (int j = 0; j < cfg.n_aug; ++j) {
      AugmentedSequence a;
      a.source = i;
      a.copy = j;
      a.warp_rate = rng.uniform(1.0 - cfg.warp_factor, 1.0 + cfg.warp_factor);
      a.seq = time_warp_at_rate(seqs[i], a.warp_rate);
      for (auto& f : a.seq.frames) {
        auto noisy = adaptive_noise(f, cfg, rng);
        a.sigmas.push_back(noisy.sigma);
        f = std::move(noisy.frame);
      }
      out.push_back(std::move(a));
    }
  }
  return out;
}

}  // namespace touchauth
