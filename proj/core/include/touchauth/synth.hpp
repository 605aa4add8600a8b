#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "touchauth/motion.hpp"
#include "touchauth/session.hpp"
#include "touchauth/util.hpp"

namespace touchauth {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  double width() const { return hi - lo; }
  double at(double u) const { return lo + u * (hi - lo); }
};

/// Every generator constant. Population ranges are uniform.
struct SynthConfig {
  // Capacitive panel.
  int cap_rows = 27;
  int cap_cols = 15;
  int cap_hz = 20;
  int n_frames = 16;
  double background_lo = 14.0;  // counts at the top row
  double background_hi = 42.0;  // counts at the bottom row
  double noise_floor = 1.0;     // counts
  double noise_gain = 0.05;     // extra variance per signal count
  double loc_x = 7.0;
  double loc_y = 13.0;
  double loc_jitter = 0.25;  // cells, per session

  // Timing.
  double touchdown_ms = 150.0;
  double touchdown_jitter_ms = 10.0;

  // IMU.
  int imu_hz = 200;
  int n_imu = 160;
  double gravity = 9.81;
  Eigen::Vector3d earth_field{20.0, 0.0, -40.0};  // uT, world frame
  double impulse_gain = 2.5;   // m/s^2 at peak_scale 1
  double release_ratio = 0.4;  // release impulse relative to touchdown
  double impulse_decay = 1.5;  // e-folding time in impulse periods
  double press_tilt = 0.02;    // rad of pitch per unit force
  double wander = 0.004;       // rad, per-axis amplitude
  Range wander_hz{0.3, 1.5};
  Eigen::Vector3d posture_sd{0.02, 0.02, 0.05};  // rad, per session (not a user trait)

  // Population ranges.
  Range sigma_x{0.9, 1.6};
  Range sigma_y{1.2, 2.2};
  Range corr{-0.4, 0.4};
  Range amp{70.0, 150.0};
  Range skew{-0.4, 0.4};
  Range press_ms{300.0, 550.0};
  Range attack_ms{30.0, 90.0};
  Range release_ms{40.0, 120.0};
  Range peak_scale{0.6, 1.5};
  Range tremor{0.0005, 0.005};  // m^2/s^4/Hz in 8-12 Hz
  Range roll{-0.35, 0.35};
  Range pitch{0.15, 0.75};
  Range yaw{-0.5, 0.5};
  Range acc_noise{0.01, 0.04};
  Range gyro_noise{0.002, 0.006};
  Range mag_noise{0.2, 0.6};

  /// Per-session parameter jitter, as a fraction of each population range.
  double session_jitter = 0.03;
  /// Generic perturbation hook: scales extra capacitive and IMU noise.
  double perturb_scale = 0.0;

  // Attacks.
  double replica_amp_loss = 0.2;
  Range replica_cov_inflation{1.1, 1.3};
  Range puppet_peak{0.5, 0.8};
  double puppet_jerk = 0.6;  // m/s^2
  Range puppet_jerk_hz{2.0, 4.0};
  double puppet_tremor = 2.0;
  double mimicry_fidelity = 0.5;
  double replica_fidelity = 0.8;
  double puppet_fidelity = 1.0;

  void validate() const;
};

struct PhysioProfile {
  Eigen::Matrix2d blob_cov = Eigen::Matrix2d::Identity();
  double amp = 100.0;
  double skew = 0.0;
};

struct ForceEnvelope {
  double attack_ms = 60.0;
  double release_ms = 80.0;
  double peak_scale = 1.0;
};

struct BehaviorProfile {
  double press_ms = 400.0;
  ForceEnvelope force;
  Eigen::Vector3d tremor = Eigen::Vector3d::Constant(0.002);
  EulerAngles grip;
  Eigen::Vector3d imu_noise{0.02, 0.004, 0.4};  // accel, gyro, mag
};

struct UserProfile {
  std::string user_id;
  std::uint64_t seed = 0;
  PhysioProfile physio;
  BehaviorProfile behavior;
};

/// Names of the entries of parameter_vector, in order.
const std::vector<std::string>& parameter_names();
/// Profile parameters scaled by their population ranges (unit-free).
Eigen::VectorXd parameter_vector(const UserProfile& p, const SynthConfig& cfg);

UserProfile gen_user(std::uint64_t seed, const SynthConfig& cfg = {});

struct AttackSpec {
  Label kind = Label::mimicry;
  double fidelity = 0.5;
};

/// Extra actuation applied on top of a profile (puppet attacks).
struct Actuation {
  double jerk = 0.0;
  double jerk_hz = 0.0;
  Eigen::Vector3d jerk_dir = Eigen::Vector3d::UnitZ();
  double jerk_phase = 0.0;
};

struct GroundTruth {
  int press_start = 0;  // IMU sample indices, inclusive
  int press_end = 0;
  double touchdown_ms = 0.0;
  double release_ms = 0.0;
  UserProfile effective;  // parameters after session jitter and attack edits
  Actuation actuation;
};

struct GeneratedSession {
  Session session;
  GroundTruth truth;
};

/// Session-level draw of the profile's parameters (small, bounded jitter).
UserProfile jitter_profile(const UserProfile& p, const SynthConfig& cfg, Rng& rng);

/// Renders a profile exactly as given (no jitter). Deterministic in rng.
GeneratedSession render_session(const UserProfile& effective, const Actuation& act, Rng& rng,
                                const SynthConfig& cfg, const std::string& session_id,
                                const std::string& user_id, Label label);

GeneratedSession gen_session(const UserProfile& profile, Rng& rng, const SynthConfig& cfg,
                             const std::string& session_id);

/// Attack profile before session jitter; also used by the modality tests.
UserProfile attack_profile(const UserProfile& victim, const UserProfile& attacker,
                           const AttackSpec& spec, const SynthConfig& cfg, Rng& rng,
                           Actuation& act);

GeneratedSession gen_attack(const UserProfile& victim, const UserProfile& attacker,
                            const AttackSpec& spec, Rng& rng, const SynthConfig& cfg,
                            const std::string& session_id);

std::string truth_to_json(const GroundTruth& truth, const SessionMeta& meta);
std::string profiles_to_json(const std::vector<UserProfile>& profiles);

}  // namespace touchauth
