#include "touchauth/synth.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numbers>

namespace touchauth {

namespace {

constexpr double kPi = std::numbers::pi;

void check_range(const Range& r, const char* name, bool positive = false) {
  if (!(r.hi >= r.lo) || (positive && !(r.lo > 0.0))) {
    throw InvariantError(std::string("synth.") + name + ": invalid range");
  }
}

struct Shape {
  double sx, sy, corr;
};

Shape shape_of(const Eigen::Matrix2d& cov) {
  const double sx = std::sqrt(cov(0, 0));
  const double sy = std::sqrt(cov(1, 1));
  return {sx, sy, cov(0, 1) / (sx * sy)};
}

Eigen::Matrix2d cov_of(const Shape& s) {
  Eigen::Matrix2d c;
  c << s.sx * s.sx, s.corr * s.sx * s.sy, s.corr * s.sx * s.sy, s.sy * s.sy;
  return c;
}

double lerp(double a, double b, double f) { return a + f * (b - a); }

// Raised-cosine contact envelope in [0, 1].
double contact_envelope(double t, double touchdown, const BehaviorProfile& b) {
  const double rise = std::max(b.force.attack_ms, 1.0);
  const double fall = std::max(b.force.release_ms, 1.0);
  const double release = touchdown + b.press_ms;
  if (t < touchdown) return 0.0;
  if (t < touchdown + rise) return 0.5 - 0.5 * std::cos(kPi * (t - touchdown) / rise);
  if (t < release) return 1.0;
  if (t < release + fall) return 0.5 + 0.5 * std::cos(kPi * (t - release) / fall);
  return 0.0;
}

// One damped cycle started at t0: the handset first yields to the finger,
// then the hand pushes back.
double impulse(double t, double t0, double period_ms, double decay) {
  const double tau = t - t0;
  if (tau < 0.0 || tau > period_ms) return 0.0;
  return -std::sin(2.0 * kPi * tau / period_ms) * std::exp(-tau / (decay * period_ms));
}

struct Sinusoid {
  double amp = 0.0, hz = 0.0, phase = 0.0;
  double at(double t_s) const { return amp * std::sin(2.0 * kPi * hz * t_s + phase); }
};

}  // namespace

void SynthConfig::validate() const {
  if (cap_rows < 3 || cap_cols < 3) throw InvariantError("synth: panel must be at least 3x3");
  if (cap_hz <= 0 || imu_hz <= cap_hz) throw InvariantError("synth: need imu_hz > cap_hz > 0");
  if (n_frames < 2 || n_imu < 8) throw InvariantError("synth: too few frames or IMU samples");
  if (noise_floor < 0.0 || noise_gain < 0.0 || perturb_scale < 0.0) {
    throw InvariantError("synth: noise constants must be >= 0");
  }
  if (!(session_jitter >= 0.0 && session_jitter < 0.5)) throw InvariantError("synth.session_jitter");
  check_range(sigma_x, "sigma_x", true);
  check_range(sigma_y, "sigma_y", true);
  check_range(corr, "corr");
  if (corr.lo <= -1.0 || corr.hi >= 1.0) throw InvariantError("synth.corr must stay inside (-1, 1)");
  check_range(amp, "amp", true);
  check_range(skew, "skew");
  check_range(press_ms, "press_ms", true);
  if (press_ms.lo < 200.0 || press_ms.hi > 700.0) throw InvariantError("synth.press_ms must lie in [200, 700]");
  check_range(attack_ms, "attack_ms", true);
  check_range(release_ms, "release_ms", true);
  check_range(peak_scale, "peak_scale", true);
  check_range(tremor, "tremor");
  check_range(roll, "roll");
  check_range(pitch, "pitch");
  check_range(yaw, "yaw");
  check_range(acc_noise, "acc_noise");
  check_range(gyro_noise, "gyro_noise");
  check_range(mag_noise, "mag_noise");
  check_range(wander_hz, "wander_hz", true);
  check_range(replica_cov_inflation, "replica_cov_inflation", true);
  check_range(puppet_peak, "puppet_peak", true);
  check_range(puppet_jerk_hz, "puppet_jerk_hz", true);
  for (double f : {mimicry_fidelity, replica_fidelity, puppet_fidelity}) {
    if (!(f >= 0.0 && f <= 1.0)) throw InvariantError("synth: fidelity must be in [0, 1]");
  }
}

const std::vector<std::string>& parameter_names() {
  static const std::vector<std::string> names = {
      "sigma_x",    "sigma_y",    "corr",       "amp",        "skew",     "press_ms",
      "attack_ms",  "release_ms", "peak_scale", "tremor_x",   "tremor_y", "tremor_z",
      "roll",       "pitch",      "yaw",        "acc_noise",  "gyro_noise", "mag_noise"};
  return names;
}

Eigen::VectorXd parameter_vector(const UserProfile& p, const SynthConfig& cfg) {
  const auto s = shape_of(p.physio.blob_cov);
  const auto& b = p.behavior;
  const std::vector<std::pair<double, const Range*>> raw = {
      {s.sx, &cfg.sigma_x},
      {s.sy, &cfg.sigma_y},
      {s.corr, &cfg.corr},
      {p.physio.amp, &cfg.amp},
      {p.physio.skew, &cfg.skew},
      {b.press_ms, &cfg.press_ms},
      {b.force.attack_ms, &cfg.attack_ms},
      {b.force.release_ms, &cfg.release_ms},
      {b.force.peak_scale, &cfg.peak_scale},
      {b.tremor.x(), &cfg.tremor},
      {b.tremor.y(), &cfg.tremor},
      {b.tremor.z(), &cfg.tremor},
      {b.grip.roll, &cfg.roll},
      {b.grip.pitch, &cfg.pitch},
      {b.grip.yaw, &cfg.yaw},
      {b.imu_noise.x(), &cfg.acc_noise},
      {b.imu_noise.y(), &cfg.gyro_noise},
      {b.imu_noise.z(), &cfg.mag_noise}};
  Eigen::VectorXd v(static_cast<Eigen::Index>(raw.size()));
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double w = raw[i].second->width();
    v(static_cast<Eigen::Index>(i)) = w > 0.0 ? raw[i].first / w : 0.0;
  }
  return v;
}

UserProfile gen_user(std::uint64_t seed, const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(seed);
  UserProfile p;
  p.seed = seed;
  p.user_id = "u" + hex64(seed).substr(8);
  Shape s{cfg.sigma_x.at(rng.uniform()), cfg.sigma_y.at(rng.uniform()), cfg.corr.at(rng.uniform())};
  p.physio.blob_cov = cov_of(s);
  p.physio.amp = cfg.amp.at(rng.uniform());
  p.physio.skew = cfg.skew.at(rng.uniform());
  auto& b = p.behavior;
  b.press_ms = cfg.press_ms.at(rng.uniform());
  b.force.attack_ms = cfg.attack_ms.at(rng.uniform());
  b.force.release_ms = cfg.release_ms.at(rng.uniform());
  b.force.peak_scale = cfg.peak_scale.at(rng.uniform());
  for (int i = 0; i < 3; ++i) b.tremor(i) = cfg.tremor.at(rng.uniform());
  b.grip.roll = cfg.roll.at(rng.uniform());
  b.grip.pitch = cfg.pitch.at(rng.uniform());
  b.grip.yaw = cfg.yaw.at(rng.uniform());
  b.imu_noise = {cfg.acc_noise.at(rng.uniform()), cfg.gyro_noise.at(rng.uniform()),
                 cfg.mag_noise.at(rng.uniform())};
  return p;
}

UserProfile jitter_profile(const UserProfile& p, const SynthConfig& cfg, Rng& rng) {
  const double j = cfg.session_jitter;
  auto nudge = [&](double v, const Range& r) { return v + rng.uniform(-j, j) * r.width(); };
  UserProfile out = p;
  auto s = shape_of(p.physio.blob_cov);
  s.sx = std::max(0.2, nudge(s.sx, cfg.sigma_x));
  s.sy = std::max(0.2, nudge(s.sy, cfg.sigma_y));
  s.corr = std::clamp(nudge(s.corr, cfg.corr), -0.95, 0.95);
  out.physio.blob_cov = cov_of(s);
  out.physio.amp = std::max(1.0, nudge(p.physio.amp, cfg.amp));
  out.physio.skew = nudge(p.physio.skew, cfg.skew);
  auto& b = out.behavior;
  b.press_ms = std::clamp(nudge(b.press_ms, cfg.press_ms), 200.0, 700.0);
  b.force.attack_ms = std::max(5.0, nudge(b.force.attack_ms, cfg.attack_ms));
  b.force.release_ms = std::max(5.0, nudge(b.force.release_ms, cfg.release_ms));
  b.force.peak_scale = std::max(0.05, nudge(b.force.peak_scale, cfg.peak_scale));
  for (int i = 0; i < 3; ++i) b.tremor(i) = std::max(0.0, nudge(b.tremor(i), cfg.tremor));
  b.grip.roll = nudge(b.grip.roll, cfg.roll);
  b.grip.pitch = nudge(b.grip.pitch, cfg.pitch);
  b.grip.yaw = nudge(b.grip.yaw, cfg.yaw);
  b.imu_noise.x() = std::max(0.0, nudge(b.imu_noise.x(), cfg.acc_noise));
  b.imu_noise.y() = std::max(0.0, nudge(b.imu_noise.y(), cfg.gyro_noise));
  b.imu_noise.z() = std::max(0.0, nudge(b.imu_noise.z(), cfg.mag_noise));
  return out;
}

GeneratedSession render_session(const UserProfile& eff, const Actuation& act, Rng& rng,
                                const SynthConfig& cfg, const std::string& session_id,
                                const std::string& user_id, Label label) {
  cfg.validate();
  GeneratedSession out;
  Session& s = out.session;
  s.meta.session_id = session_id;
  s.meta.user_id = user_id;
  s.meta.label = label;
  s.meta.cap_hz = cfg.cap_hz;
  s.meta.cap_rows = cfg.cap_rows;
  s.meta.cap_cols = cfg.cap_cols;
  s.meta.imu_hz = cfg.imu_hz;
  s.meta.duration_ms = cfg.n_frames * 1000 / cfg.cap_hz;

  const auto& b = eff.behavior;
  const double touchdown = cfg.touchdown_ms + rng.uniform(-cfg.touchdown_jitter_ms, cfg.touchdown_jitter_ms);
  const double release = touchdown + b.press_ms;
  out.truth.touchdown_ms = touchdown;
  out.truth.release_ms = release;
  out.truth.effective = eff;
  out.truth.actuation = act;

  // ---- capacitive frames
  const double cx = cfg.loc_x + cfg.loc_jitter * rng.normal();
  const double cy = cfg.loc_y + cfg.loc_jitter * rng.normal();
  const Eigen::Matrix2d inv = eff.physio.blob_cov.inverse();
  const double sy = std::sqrt(eff.physio.blob_cov(1, 1));
  const double extra = cfg.perturb_scale * cfg.noise_floor;
  for (int f = 0; f < cfg.n_frames; ++f) {
    CapFrame frame;
    frame.ts_ms = static_cast<std::int64_t>(f) * 1000 / cfg.cap_hz;
    const double env = contact_envelope(static_cast<double>(frame.ts_ms), touchdown, b);
    frame.values.reserve(static_cast<std::size_t>(cfg.cap_rows * cfg.cap_cols));
    for (int r = 0; r < cfg.cap_rows; ++r) {
      const double bg = cfg.background_lo + (cfg.background_hi - cfg.background_lo) * r / (cfg.cap_rows - 1);
      for (int c = 0; c < cfg.cap_cols; ++c) {
        double signal = 0.0;
        if (env > 0.0) {
          const Eigen::Vector2d d(c - cx, r - cy);
          const double shape = std::max(0.0, 1.0 + eff.physio.skew * std::tanh(d.y() / sy));
          signal = eff.physio.amp * env * shape * std::exp(-0.5 * d.dot(inv * d));
        }
        const double sd = std::sqrt(cfg.noise_floor * cfg.noise_floor + cfg.noise_gain * signal +
                                    extra * extra);
        const double v = std::round(bg + signal + sd * rng.normal());
        frame.values.push_back(static_cast<std::int64_t>(std::max(0.0, v)));
      }
    }
    s.cap.push_back(std::move(frame));
  }

  // ---- IMU
  EulerAngles base = b.grip;
  base.roll += cfg.posture_sd.x() * rng.normal();
  base.pitch += cfg.posture_sd.y() * rng.normal();
  base.yaw += cfg.posture_sd.z() * rng.normal();

  std::array<std::array<Sinusoid, 2>, 3> wander{}, tremor{};
  for (int axis = 0; axis < 3; ++axis) {
    for (auto& w : wander[axis]) {
      w = {cfg.wander * rng.uniform(0.5, 1.0), cfg.wander_hz.at(rng.uniform()), rng.uniform(0.0, 2 * kPi)};
    }
    // Two tones share the band power P over the 4 Hz band: variance 4P.
    const double tone = std::sqrt(4.0 * b.tremor(axis));
    for (auto& w : tremor[axis]) w = {tone, rng.uniform(8.0, 12.0), rng.uniform(0.0, 2 * kPi)};
  }
  const double attack_period = 2.0 * b.force.attack_ms;
  const double release_period = 2.0 * b.force.release_ms;
  const double gain = cfg.impulse_gain * b.force.peak_scale;

  auto orientation = [&](double t_ms) {
    const double ts = t_ms / 1000.0;
    EulerAngles e = base;
    e.roll += wander[0][0].at(ts) + wander[0][1].at(ts);
    e.pitch += wander[1][0].at(ts) + wander[1][1].at(ts) +
               cfg.press_tilt * b.force.peak_scale * contact_envelope(t_ms, touchdown, b);
    e.yaw += wander[2][0].at(ts) + wander[2][1].at(ts);
    return euler_to_quat(e);
  };
  auto press_accel = [&](double t_ms) {
    return gain * (impulse(t_ms, touchdown, attack_period, cfg.impulse_decay) -
                   cfg.release_ratio * impulse(t_ms, release, release_period, cfg.impulse_decay));
  };

  const double dt_ms = 1000.0 / cfg.imu_hz;
  const double h_ms = 0.05;
  const Eigen::Vector3d g_world(0.0, 0.0, cfg.gravity);
  const double acc_sd = std::hypot(b.imu_noise.x(), cfg.perturb_scale * 0.02);
  for (int k = 0; k < cfg.n_imu; ++k) {
    const double t = k * dt_ms;
    const double ts = t / 1000.0;
    const Quaternion q = orientation(t);
    const Eigen::Matrix3d Rt = q.rotation_matrix().transpose();

    Eigen::Vector3d acc = Rt * g_world;
    acc.z() += press_accel(t);
    for (int axis = 0; axis < 3; ++axis) acc(axis) += tremor[axis][0].at(ts) + tremor[axis][1].at(ts);
    if (act.jerk != 0.0) acc += act.jerk * std::sin(2 * kPi * act.jerk_hz * ts + act.jerk_phase) * act.jerk_dir;

    const Quaternion dq = orientation(t - h_ms).conjugate() * orientation(t + h_ms);
    const double scale = 2.0 / (2.0 * h_ms / 1000.0) * (dq.w < 0.0 ? -1.0 : 1.0);
    Eigen::Vector3d gyro(dq.x * scale, dq.y * scale, dq.z * scale);

    Eigen::Vector3d mag = Rt * cfg.earth_field;

    ImuSample smp;
    smp.ts_ms = static_cast<std::int64_t>(std::lround(t));
    for (int i = 0; i < 3; ++i) {
      smp.a[i] = quantize6(acc(i) + acc_sd * rng.normal());
      smp.g[i] = quantize6(gyro(i) + b.imu_noise.y() * rng.normal());
      smp.m[i] = quantize6(mag(i) + b.imu_noise.z() * rng.normal());
    }
    s.imu.push_back(smp);
  }

  // Ground truth: samples where the touchdown impulse exceeds 20% of its peak.
  double peak = 0.0;
  for (int k = 0; k < cfg.n_imu; ++k) peak = std::max(peak, std::abs(impulse(k * dt_ms, touchdown, attack_period, cfg.impulse_decay)));
  out.truth.press_start = out.truth.press_end = -1;
  for (int k = 0; k < cfg.n_imu; ++k) {
    if (peak > 0.0 && std::abs(impulse(k * dt_ms, touchdown, attack_period, cfg.impulse_decay)) >= 0.2 * peak) {
      if (out.truth.press_start < 0) out.truth.press_start = k;
      out.truth.press_end = k;
    }
  }
  return out;
}

GeneratedSession gen_session(const UserProfile& profile, Rng& rng, const SynthConfig& cfg,
                             const std::string& session_id) {
  const auto eff = jitter_profile(profile, cfg, rng);
  return render_session(eff, Actuation{}, rng, cfg, session_id, profile.user_id, Label::genuine);
}

UserProfile attack_profile(const UserProfile& victim, const UserProfile& attacker,
                           const AttackSpec& spec, const SynthConfig& cfg, Rng& rng,
                           Actuation& act) {
  if (!(spec.fidelity >= 0.0 && spec.fidelity <= 1.0)) throw InvariantError("attack fidelity must be in [0, 1]");
  const double f = spec.fidelity;
  act = Actuation{};
  UserProfile p = victim;
  switch (spec.kind) {
    case Label::mimicry: {
      p = attacker;
      p.physio.blob_cov = attacker.physio.blob_cov + f * (victim.physio.blob_cov - attacker.physio.blob_cov);
      p.physio.amp = lerp(attacker.physio.amp, victim.physio.amp, f);
      p.physio.skew = lerp(attacker.physio.skew, victim.physio.skew, f);
      auto& b = p.behavior;
      const auto& va = attacker.behavior;
      const auto& vv = victim.behavior;
      b.press_ms = lerp(va.press_ms, vv.press_ms, f);
      b.force.attack_ms = lerp(va.force.attack_ms, vv.force.attack_ms, f);
      b.force.release_ms = lerp(va.force.release_ms, vv.force.release_ms, f);
      b.force.peak_scale = lerp(va.force.peak_scale, vv.force.peak_scale, f);
      b.tremor = va.tremor + f * (vv.tremor - va.tremor);
      b.grip.roll = lerp(va.grip.roll, vv.grip.roll, f);
      b.grip.pitch = lerp(va.grip.pitch, vv.grip.pitch, f);
      b.grip.yaw = lerp(va.grip.yaw, vv.grip.yaw, f);
      b.imu_noise = va.imu_noise + f * (vv.imu_noise - va.imu_noise);
      break;
    }
    case Label::replica:
      p.behavior = attacker.behavior;
      p.physio.amp *= 1.0 - cfg.replica_amp_loss * (1.0 - f);
      p.physio.blob_cov *= cfg.replica_cov_inflation.at(rng.uniform());
      break;
    case Label::puppet:
      p.behavior.force.peak_scale *= cfg.puppet_peak.at(rng.uniform());
      p.behavior.tremor *= cfg.puppet_tremor;
      act.jerk = cfg.puppet_jerk;
      act.jerk_hz = cfg.puppet_jerk_hz.at(rng.uniform());
      act.jerk_dir = Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal()).normalized();
      act.jerk_phase = rng.uniform(0.0, 2 * kPi);
      break;
    case Label::genuine:
      throw InvariantError("attack kind must be mimicry, replica or puppet");
  }
  return p;
}

GeneratedSession gen_attack(const UserProfile& victim, const UserProfile& attacker,
                            const AttackSpec& spec, Rng& rng, const SynthConfig& cfg,
                            const std::string& session_id) {
  Actuation act;
  const auto p = attack_profile(victim, attacker, spec, cfg, rng, act);
  const auto eff = jitter_profile(p, cfg, rng);
  return render_session(eff, act, rng, cfg, session_id, victim.user_id, spec.kind);
}

namespace {

nlohmann::ordered_json profile_json(const UserProfile& p) {
  const auto& b = p.behavior;
  const auto& c = p.physio.blob_cov;
  nlohmann::ordered_json j;
  j["user_id"] = p.user_id;
  j["seed"] = p.seed;
  j["physio"] = {{"blob_cov", {{c(0, 0), c(0, 1)}, {c(1, 0), c(1, 1)}}},
                 {"amp", p.physio.amp},
                 {"skew", p.physio.skew}};
  j["behavior"] = {
      {"press_ms", b.press_ms},
      {"force_env", {{"attack_ms", b.force.attack_ms}, {"release_ms", b.force.release_ms}, {"peak_scale", b.force.peak_scale}}},
      {"tremor", {b.tremor.x(), b.tremor.y(), b.tremor.z()}},
      {"grip_euler", {b.grip.roll, b.grip.pitch, b.grip.yaw}},
      {"imu_noise", {{"accel", b.imu_noise.x()}, {"gyro", b.imu_noise.y()}, {"mag", b.imu_noise.z()}}}};
  return j;
}

}  // namespace

std::string truth_to_json(const GroundTruth& t, const SessionMeta& meta) {
  nlohmann::ordered_json j;
  j["session_id"] = meta.session_id;
  j["user_id"] = meta.user_id;
  j["label"] = std::string(to_string(meta.label));
  j["press_interval"] = {{"start_idx", t.press_start}, {"end_idx", t.press_end}};
  j["touchdown_ms"] = t.touchdown_ms;
  j["release_ms"] = t.release_ms;
  j["parameters"] = profile_json(t.effective);
  j["actuation"] = {{"jerk", t.actuation.jerk},
                    {"jerk_hz", t.actuation.jerk_hz},
                    {"jerk_dir", {t.actuation.jerk_dir.x(), t.actuation.jerk_dir.y(), t.actuation.jerk_dir.z()}},
                    {"jerk_phase", t.actuation.jerk_phase}};
  return j.dump(1) + "\n";
}

std::string profiles_to_json(const std::vector<UserProfile>& profiles) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& p : profiles) arr.push_back(profile_json(p));
  return arr.dump(1) + "\n";
}

}  // namespace touchauth
