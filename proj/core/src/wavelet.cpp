#include "touchauth/wavelet.hpp"

#include <algorithm>
#include <cmath>

#include "touchauth/util.hpp"

namespace touchauth::wavelet {

namespace {

constexpr int kTaps = 8;

// Symmetric (half-sample) extension: x[-1] = x[0], x[n] = x[n-1].
double sym_at(std::span<const double> x, long i) {
  const long n = static_cast<long>(x.size());
  const long period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? x[i] : x[period - 1 - i];
}

void soft_threshold(std::vector<double>& v, double thr) {
  for (auto& c : v) {
    const double a = std::abs(c) - thr;
    c = a > 0.0 ? std::copysign(a, c) : 0.0;
  }
}

}  // namespace

const std::vector<double>& Db4::dec_lo() {
  static const std::vector<double> f = {
      -0.010597401785069032, 0.0328830116668852,   0.030841381835560764, -0.18703481171909309,
      -0.027983769416859854, 0.6308807679298589,   0.7148465705529157,   0.2303778133088965};
  return f;
}

const std::vector<double>& Db4::dec_hi() {
  static const std::vector<double> f = [] {
    const auto& lo = dec_lo();
    std::vector<double> hi(kTaps);
    for (int k = 0; k < kTaps; ++k) hi[k] = ((k % 2) ? 1.0 : -1.0) * lo[kTaps - 1 - k];
    return hi;
  }();
  return f;
}

const std::vector<double>& Db4::rec_lo() {
  static const std::vector<double> f(dec_lo().rbegin(), dec_lo().rend());
  return f;
}

const std::vector<double>& Db4::rec_hi() {
  static const std::vector<double> f(dec_hi().rbegin(), dec_hi().rend());
  return f;
}

void dwt(std::span<const double> x, std::vector<double>& approx, std::vector<double>& detail) {
  if (x.empty()) throw InvariantError("dwt: empty input");
  const auto& lo = Db4::dec_lo();
  const auto& hi = Db4::dec_hi();
  const long n = static_cast<long>(x.size());
  const long out_len = (n + kTaps - 1) / 2;
  approx.assign(out_len, 0.0);
  detail.assign(out_len, 0.0);
  for (long i = 0; i < out_len; ++i) {
    const long o = 2 * i + 1;
    double a = 0.0, d = 0.0;
    for (int j = 0; j < kTaps; ++j) {
      const double v = sym_at(x, o - j);
      a += lo[j] * v;
      d += hi[j] * v;
    }
    approx[i] = a;
    detail[i] = d;
  }
}

std::vector<double> idwt(std::span<const double> approx, std::span<const double> detail) {
  if (approx.size() != detail.size()) throw InvariantError("idwt: band length mismatch");
  const auto& lo = Db4::rec_lo();
  const auto& hi = Db4::rec_hi();
  const long n = static_cast<long>(approx.size());
  const long out_len = 2 * n - kTaps + 2;
  if (out_len <= 0) throw InvariantError("idwt: bands too short");
  std::vector<double> out(out_len, 0.0);
  // Valid part of the full convolution of the upsampled bands, which starts
  // at index kTaps - 2.
  for (long k = 0; k < out_len; ++k) {
    const long pos = k + kTaps - 2;
    double s = 0.0;
    for (int j = (pos % 2); j < kTaps; j += 2) {
      const long i = (pos - j) / 2;
      if (i < 0 || i >= n) continue;
      s += lo[j] * approx[i] + hi[j] * detail[i];
    }
    out[k] = s;
  }
  return out;
}

Decomposition wavedec(std::span<const double> x, int levels) {
  Decomposition d;
  std::vector<double> current(x.begin(), x.end());
  std::vector<std::vector<double>> finest_first;
  for (int l = 0; l < levels; ++l) {
    std::vector<double> a, det;
    dwt(current, a, det);
    finest_first.push_back(std::move(det));
    current = std::move(a);
  }
  d.approx = std::move(current);
  d.details.assign(finest_first.rbegin(), finest_first.rend());
  return d;
}

std::vector<double> waverec(const Decomposition& d) {
  std::vector<double> a = d.approx;
  for (const auto& det : d.details) {
    if (a.size() == det.size() + 1) a.pop_back();
    a = idwt(a, det);
  }
  return a;
}

std::vector<double> denoise(std::span<const double> x, int levels) {
  const auto n = x.size();
  if (levels < 1) return {x.begin(), x.end()};
  if (n < (1u << levels)) throw InvariantError("wavelet denoise: series shorter than 2^levels");

  auto d = wavedec(x, levels);
  std::vector<double> abs_finest;
  abs_finest.reserve(d.details.back().size());
  for (double c : d.details.back()) abs_finest.push_back(std::abs(c));
  const double sigma = median(abs_finest) / 0.6745;
  const double thr = sigma * std::sqrt(2.0 * std::log(static_cast<double>(n)));
  for (auto& det : d.details) soft_threshold(det, thr);

  auto y = waverec(d);
  y.resize(n);
  return y;
}

}  // namespace touchauth::wavelet
