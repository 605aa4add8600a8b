#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "touchauth/capsense.hpp"
#include "touchauth/util.hpp"

namespace touchauth {

struct AugmentConfig {
  double warp_factor = 0.1;
  double base_sigma = 0.5;
  double min_sigma = 0.1;
  double a_nominal = 50.0;  // counts at which sigma == base_sigma
  int n_aug = 1;
  std::uint64_t seed = 7;

  /// Throws InvariantError when the ranges are inconsistent.
  void validate() const;
};

/// Global-rate warp: resample at rate r ~ U(1-w, 1+w), then back onto the
/// original frame count.
CapSequence time_warp(const CapSequence& seq, const AugmentConfig& cfg, Rng& rng);
CapSequence time_warp_at_rate(const CapSequence& seq, double rate);

/// Median of the non-zero values in the centered 3x3 block (0 when all zero).
double reference_amplitude(const Frame& frame);
double noise_sigma(double reference, const AugmentConfig& cfg);

struct NoisyFrame {
  Frame frame;
  double sigma = 0.0;
};

/// Amplitude-adaptive Gaussian noise, clamped at zero.
NoisyFrame adaptive_noise(const Frame& frame, const AugmentConfig& cfg, Rng& rng);

struct AugmentedSequence {
  std::size_t source = 0;
  int copy = -1;  // -1 for the original
  double warp_rate = 1.0;
  std::vector<double> sigmas;  // per frame; empty for originals
  CapSequence seq;
};

/// Originals followed by n_aug warped+noised copies of each input. Copy j of
/// input i draws from Rng(derive(seed, i)), so results do not depend on
/// processing order.
std::vector<AugmentedSequence> augment_dataset(std::span<const CapSequence> seqs,
                                               const AugmentConfig& cfg);

}  // namespace touchauth
