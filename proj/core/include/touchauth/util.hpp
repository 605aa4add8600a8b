#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace touchauth {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

class InvariantError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Input that is well-formed but cannot be processed (no touch, single class, ...).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Seeded generator with platform-independent distributions.
///
/// The std:: distributions are implementation defined, so every draw that
/// feeds a stored artifact goes through this class instead.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }

  /// Independent child stream; (seed, index) pairs never collide in practice.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t index);

 private:
  std::uint64_t state_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Quantile with linear interpolation between order statistics (q in [0,1]).
double quantile(std::vector<double> values, double q);
double median(std::vector<double> values);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t v);

std::string read_text_file(const std::string& path);
/// Writes atomically enough for our purposes: truncate + write + check.
void write_text_file(const std::string& path, std::string_view content);

/// "%.6f" formatting; normalizes negative zero.
std::string fixed6(double v);

}  // namespace touchauth
