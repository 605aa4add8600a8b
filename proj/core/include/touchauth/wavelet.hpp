#pragma once

#include <span>
#include <vector>

namespace touchauth::wavelet {

/// Daubechies filter with 4 vanishing moments (8 taps).
struct Db4 {
  static const std::vector<double>& dec_lo();
  static const std::vector<double>& dec_hi();
  static const std::vector<double>& rec_lo();
  static const std::vector<double>& rec_hi();
};

struct Decomposition {
  std::vector<double> approx;
  /// details[0] is the coarsest level, details.back() the finest.
  std::vector<std::vector<double>> details;
};

/// Single level DWT with half-sample symmetric extension; each band has
/// floor((n + 7) / 2) coefficients.
void dwt(std::span<const double> x, std::vector<double>& approx, std::vector<double>& detail);

/// Inverse of dwt; returns 2 * n - 6 samples for bands of length n.
std::vector<double> idwt(std::span<const double> approx, std::span<const double> detail);

Decomposition wavedec(std::span<const double> x, int levels);
std::vector<double> waverec(const Decomposition& d);

/// Universal soft-threshold denoising (median(|finest detail|)/0.6745 noise
/// estimate), length preserving.
std::vector<double> denoise(std::span<const double> x, int levels);

}  // namespace touchauth::wavelet
