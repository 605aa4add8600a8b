#include "touchauth/config.hpp"

#include <json.hpp>
#include <set>

namespace touchauth {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

// Every configurable field, keyed by its dotted path. Used for both
// directions so the two can never drift apart.
template <class Cfg, class F>
void for_each_field(Cfg& c, F&& f) {
  f("seed", c.seed);
  f("workers", c.workers);

  f("paths.data_dir", c.paths.data_dir);
  f("paths.model_path", c.paths.model_path);
  f("paths.template_dir", c.paths.template_dir);
  f("paths.out_dir", c.paths.out_dir);

  f("capsense.k", c.capsense.k);
  f("capsense.connectivity", c.capsense.connectivity);
  f("capsense.n_frames", c.capsense.n_frames);
  f("capsense.smooth_window", c.capsense.smooth_window);
  f("capsense.kalman.q_pos", c.capsense.kalman.q_pos);
  f("capsense.kalman.q_vel", c.capsense.kalman.q_vel);
  f("capsense.kalman.r", c.capsense.kalman.r);
  f("capsense.kalman.p0_pos", c.capsense.kalman.p0_pos);
  f("capsense.kalman.p0_vel", c.capsense.kalman.p0_vel);

  f("motion.wavelet_levels", c.motion.wavelet_levels);
  f("motion.beta", c.motion.beta);
  f("motion.rho", c.motion.rho);
  f("motion.segment_len", c.motion.segment_len);
  f("motion.stft_win", c.motion.stft_win);
  f("motion.stft_hop", c.motion.stft_hop);
  f("motion.pad_s", c.motion.pad_s);

  f("augment.warp_factor", c.augment.warp_factor);
  f("augment.base_sigma", c.augment.base_sigma);
  f("augment.min_sigma", c.augment.min_sigma);
  f("augment.a_nominal", c.augment.a_nominal);
  f("augment.n_aug", c.augment.n_aug);
  f("augment.seed", c.augment.seed);

  f("embed.hidden", c.embed.hidden);
  f("embed.output", c.embed.output);
  f("embed.lr", c.embed.lr);
  f("embed.epochs", c.embed.epochs);
  f("embed.batch", c.embed.batch);
  f("embed.momentum", c.embed.momentum);
  f("embed.leaky_slope", c.embed.leaky_slope);
  f("embed.dropout_p", c.embed.dropout_p);
  f("embed.seed", c.embed.seed);
  f("embed.standardize_output", c.embed.standardize_output);
  f("embed.modality", c.embed.modality);

  f("pretrain.pool_per_user", c.pretrain.pool_per_user);

  f("oneclass.kind", c.oneclass.kind);
  f("oneclass.grid.nu", c.oneclass.grid.nu);
  f("oneclass.grid.gamma_scale", c.oneclass.grid.gamma_scale);
  f("oneclass.grid.k", c.oneclass.grid.k);
  f("oneclass.grid.psi", c.oneclass.grid.psi);
  f("oneclass.grid.n_trees", c.oneclass.grid.n_trees);
  f("oneclass.threshold_percentile", c.oneclass.threshold_percentile);
  f("oneclass.threshold_folds", c.oneclass.threshold_folds);
  f("oneclass.val_fraction", c.oneclass.val_fraction);
  f("oneclass.min_samples", c.oneclass.min_samples);
  f("oneclass.kkt_tol", c.oneclass.kkt_tol);
  f("oneclass.max_iter", c.oneclass.max_iter);
  f("oneclass.enroll_fraction", c.oneclass.enroll_fraction);

  auto& s = c.synth;
  f("synth.cap_rows", s.cap_rows);
  f("synth.cap_cols", s.cap_cols);
  f("synth.cap_hz", s.cap_hz);
  f("synth.n_frames", s.n_frames);
  f("synth.background_lo", s.background_lo);
  f("synth.background_hi", s.background_hi);
  f("synth.noise_floor", s.noise_floor);
  f("synth.noise_gain", s.noise_gain);
  f("synth.loc_x", s.loc_x);
  f("synth.loc_y", s.loc_y);
  f("synth.loc_jitter", s.loc_jitter);
  f("synth.touchdown_ms", s.touchdown_ms);
  f("synth.touchdown_jitter_ms", s.touchdown_jitter_ms);
  f("synth.imu_hz", s.imu_hz);
  f("synth.n_imu", s.n_imu);
  f("synth.gravity", s.gravity);
  f("synth.earth_field", s.earth_field);
  f("synth.impulse_gain", s.impulse_gain);
  f("synth.release_ratio", s.release_ratio);
  f("synth.impulse_decay", s.impulse_decay);
  f("synth.press_tilt", s.press_tilt);
  f("synth.wander", s.wander);
  f("synth.wander_hz", s.wander_hz);
  f("synth.posture_sd", s.posture_sd);
  f("synth.sigma_x", s.sigma_x);
  f("synth.sigma_y", s.sigma_y);
  f("synth.corr", s.corr);
  f("synth.amp", s.amp);
  f("synth.skew", s.skew);
  f("synth.press_ms", s.press_ms);
  f("synth.attack_ms", s.attack_ms);
  f("synth.release_ms", s.release_ms);
  f("synth.peak_scale", s.peak_scale);
  f("synth.tremor", s.tremor);
  f("synth.roll", s.roll);
  f("synth.pitch", s.pitch);
  f("synth.yaw", s.yaw);
  f("synth.acc_noise", s.acc_noise);
  f("synth.gyro_noise", s.gyro_noise);
  f("synth.mag_noise", s.mag_noise);
  f("synth.session_jitter", s.session_jitter);
  f("synth.perturb_scale", s.perturb_scale);
  f("synth.replica_amp_loss", s.replica_amp_loss);
  f("synth.replica_cov_inflation", s.replica_cov_inflation);
  f("synth.puppet_peak", s.puppet_peak);
  f("synth.puppet_jerk", s.puppet_jerk);
  f("synth.puppet_jerk_hz", s.puppet_jerk_hz);
  f("synth.puppet_tremor", s.puppet_tremor);
  f("synth.mimicry_fidelity", s.mimicry_fidelity);
  f("synth.replica_fidelity", s.replica_fidelity);
  f("synth.puppet_fidelity", s.puppet_fidelity);
}

json::json_pointer pointer(const std::string& dotted) {
  std::string p = "/";
  for (char ch : dotted) p += ch == '.' ? '/' : ch;
  return json::json_pointer(p);
}

// ---- value conversion

template <class T>
void put(ojson& j, const T& v) {
  j = v;
}
void put(ojson& j, const Range& r) { j = {r.lo, r.hi}; }
void put(ojson& j, const Eigen::Vector3d& v) { j = {v.x(), v.y(), v.z()}; }
void put(ojson& j, Modality m) { j = to_string(m); }
void put(ojson& j, ClassifierKind k) { j = to_string(k); }

template <class T>
void get(const json& j, T& v) {
  if constexpr (std::is_same_v<T, bool>) {
    if (!j.is_boolean()) throw SchemaError("expected a boolean");
  } else if constexpr (std::is_integral_v<T>) {
    if (!j.is_number_integer()) throw SchemaError("expected an integer");
    if constexpr (std::is_unsigned_v<T>) {
      if (j.is_number_integer() && !j.is_number_unsigned() && j.get<long long>() < 0) {
        throw SchemaError("expected a non-negative integer");
      }
    }
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!j.is_number()) throw SchemaError("expected a number");
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!j.is_string()) throw SchemaError("expected a string");
  }
  v = j.get<T>();
}
void get(const json& j, Range& r) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw SchemaError("expected [lo, hi]");
  }
  r = {j[0].get<double>(), j[1].get<double>()};
}
void get(const json& j, Eigen::Vector3d& v) {
  if (!j.is_array() || j.size() != 3) throw SchemaError("expected a 3-element array");
  for (int i = 0; i < 3; ++i) {
    if (!j[i].is_number()) throw SchemaError("expected a 3-element array of numbers");
    v(i) = j[i].get<double>();
  }
}
template <class T>
void get(const json& j, std::vector<T>& v) {
  if (!j.is_array()) throw SchemaError("expected an array");
  v.clear();
  for (const auto& e : j) {
    T x{};
    get(e, x);
    v.push_back(x);
  }
}
void get(const json& j, Modality& m) {
  if (!j.is_string()) throw SchemaError("expected a string");
  m = modality_from_string(j.get<std::string>());
}
void get(const json& j, ClassifierKind& k) {
  if (!j.is_string()) throw SchemaError("expected a string");
  k = classifier_from_string(j.get<std::string>());
}

std::set<std::string> known_keys() {
  std::set<std::string> keys;
  PipelineConfig c;
  for_each_field(c, [&](const char* key, auto&) { keys.insert(key); });
  return keys;
}

void check_keys(const json& j, const std::string& prefix, const std::set<std::string>& keys) {
  if (!j.is_object()) throw SchemaError("config: '" + prefix + "' must be an object");
  for (const auto& [k, v] : j.items()) {
    const std::string path = prefix.empty() ? k : prefix + "." + k;
    if (keys.count(path)) continue;
    const bool is_section = std::any_of(keys.begin(), keys.end(), [&](const std::string& known) {
      return known.rfind(path + ".", 0) == 0;
    });
    if (!is_section) throw SchemaError("config: unknown key '" + path + "'");
    check_keys(v, path, keys);
  }
}

PipelineConfig merge_json(const PipelineConfig& base, const json& j) {
  check_keys(j, "", known_keys());
  PipelineConfig out = base;
  for_each_field(out, [&](const char* key, auto& field) {
    const auto ptr = pointer(key);
    if (!j.contains(ptr)) return;
    try {
      get(j.at(ptr), field);
    } catch (const Error& e) {
      throw SchemaError(std::string("config: '") + key + "': " + e.what());
    } catch (const json::exception& e) {
      throw SchemaError(std::string("config: '") + key + "': " + e.what());
    }
  });
  out.validate();
  return out;
}

}  // namespace

void PipelineConfig::validate() const {
  auto need = [](bool ok, const char* what) {
    if (!ok) throw InvariantError(std::string("config: ") + what);
  };
  need(workers >= 1, "workers must be >= 1");
  need(capsense.k >= 0.0, "capsense.k must be >= 0");
  need(capsense.connectivity == 4 || capsense.connectivity == 8, "capsense.connectivity must be 4 or 8");
  need(capsense.n_frames >= 2, "capsense.n_frames must be >= 2");
  need(capsense.smooth_window >= 1, "capsense.smooth_window must be >= 1");
  need(motion.wavelet_levels >= 0, "motion.wavelet_levels must be >= 0");
  need(motion.beta >= 0.0, "motion.beta must be >= 0");
  need(motion.rho > 0.0 && motion.rho < 1.0, "motion.rho must be in (0, 1)");
  need(motion.stft_win >= 4 && motion.stft_hop >= 1, "motion.stft_win/stft_hop");
  need(motion.segment_len >= motion.stft_win, "motion.segment_len must be >= stft_win");
  need(motion.pad_s >= 0.0, "motion.pad_s must be >= 0");
  augment.validate();
  need(embed.hidden >= 1 && embed.output >= 1, "embed.hidden/output must be >= 1");
  need(embed.lr > 0.0 && embed.epochs >= 0 && embed.batch >= 1, "embed.lr/epochs/batch");
  need(embed.momentum >= 0.0 && embed.momentum < 1.0, "embed.momentum must be in [0, 1)");
  need(embed.dropout_p >= 0.0 && embed.dropout_p < 1.0, "embed.dropout_p must be in [0, 1)");
  need(pretrain.pool_per_user >= 1, "pretrain.pool_per_user must be >= 1");
  need(oneclass.threshold_percentile >= 0.0 && oneclass.threshold_percentile <= 100.0,
       "oneclass.threshold_percentile must be in [0, 100]");
  need(oneclass.val_fraction > 0.0 && oneclass.val_fraction < 1.0, "oneclass.val_fraction must be in (0, 1)");
  need(oneclass.enroll_fraction > 0.0 && oneclass.enroll_fraction <= 1.0,
       "oneclass.enroll_fraction must be in (0, 1]");
  need(oneclass.kkt_tol > 0.0 && oneclass.max_iter > 0, "oneclass.kkt_tol/max_iter");
  need(oneclass.threshold_folds >= 0, "oneclass.threshold_folds must be >= 0");
  need(oneclass.min_samples >= 3, "oneclass.min_samples must be >= 3");
  for (double nu : oneclass.grid.nu) need(nu > 0.0 && nu <= 1.0, "oneclass.grid.nu entries must be in (0, 1]");
  for (double g : oneclass.grid.gamma_scale) need(g > 0.0, "oneclass.grid.gamma_scale entries must be > 0");
  for (int k : oneclass.grid.k) need(k >= 1, "oneclass.grid.k entries must be >= 1");
  for (int p : oneclass.grid.psi) need(p >= 2, "oneclass.grid.psi entries must be >= 2");
  need(oneclass.grid.n_trees >= 1, "oneclass.grid.n_trees must be >= 1");
  synth.validate();
}

EnrollConfig PipelineConfig::enroll_config(std::uint64_t enroll_seed) const {
  EnrollConfig e;
  e.kind = oneclass.kind;
  e.grid = oneclass.grid;
  e.threshold_percentile = oneclass.threshold_percentile;
  e.threshold_folds = oneclass.threshold_folds;
  e.val_fraction = oneclass.val_fraction;
  e.min_samples = oneclass.min_samples;
  e.seed = enroll_seed;
  e.solver = {oneclass.kkt_tol, oneclass.max_iter};
  return e;
}

std::string config_to_json(const PipelineConfig& cfg) {
  ojson j = ojson::object();
  PipelineConfig copy = cfg;
  for_each_field(copy, [&](const char* key, const auto& field) {
    ojson* node = &j;
    std::string k(key);
    std::size_t pos;
    while ((pos = k.find('.')) != std::string::npos) {
      node = &(*node)[k.substr(0, pos)];
      k = k.substr(pos + 1);
    }
    put((*node)[k], field);
  });
  return j.dump(2) + "\n";
}

PipelineConfig apply_config_json(const PipelineConfig& base, const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  return merge_json(base, j);
}

PipelineConfig apply_override(const PipelineConfig& base, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw SchemaError("override '" + assignment + "' must look like key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  json j = json::object();
  j[pointer(key)] = value;
  return merge_json(base, j);
}

PipelineConfig load_config(const std::string& path, const PipelineConfig& base) {
  return apply_config_json(base, read_text_file(path));
}

}  // namespace touchauth
