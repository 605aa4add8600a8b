#pragma once

#include <Eigen/Core>
#include <atomic>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "touchauth/capsense.hpp"
#include "touchauth/config.hpp"
#include "touchauth/embed.hpp"
#include "touchauth/motion.hpp"
#include "touchauth/session.hpp"

namespace touchauth {

/// Intermediate products of one session, kept for inspection and tests.
struct Preprocessed {
  CapSequence seq;
  TouchTrack track;
  ImuSeries imu;  // resampled and denoised
  std::vector<Quaternion> orientation;
  std::vector<double> magnitude;
  IndexWindow coarse;
  ExtremumPair extrema;
  IndexWindow interval;
  MotionSegment segment;
};

Preprocessed preprocess(const Session& session, const PipelineConfig& cfg);

struct Descriptors {
  Eigen::VectorXd cap;
  Eigen::VectorXd imu;

  Eigen::VectorXd joined() const;
};

Descriptors describe(const Preprocessed& p, const PipelineConfig& cfg);
Eigen::VectorXd describe_cap(const CapSequence& seq, const PipelineConfig& cfg);
Descriptors describe(const Session& session, const PipelineConfig& cfg);

Eigen::VectorXd embed_session(const Session& session, const FusionModel& model,
                              const PipelineConfig& cfg);

/// Runs fn(i) for i in [0, n) on `workers` threads. Results must be written to
/// per-index slots so the outcome does not depend on scheduling. The error of
/// the lowest failing index is rethrown.
template <class F>
void parallel_for(std::size_t n, int workers, F&& fn) {
  const auto threads = static_cast<std::size_t>(std::max(1, workers));
  if (threads == 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::size_t err_index = n;
  std::exception_ptr err;
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (i < err_index) {
          err_index = i;
          err = std::current_exception();
        }
      }
    }
  };
  std::vector<std::jthread> pool;
  for (std::size_t t = 0; t < std::min(threads, n); ++t) pool.emplace_back(work);
  pool.clear();
  if (err) std::rethrow_exception(err);
}

/// Rethrows a library error with "<context>: " prepended, keeping its type.
[[noreturn]] void rethrow_with_context(const std::string& context);

}  // namespace touchauth
