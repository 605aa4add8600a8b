#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "touchauth/augment.hpp"
#include "touchauth/capsense.hpp"
#include "touchauth/embed.hpp"
#include "touchauth/motion.hpp"
#include "touchauth/oneclass.hpp"
#include "touchauth/synth.hpp"

namespace touchauth {

struct PathsConfig {
  std::string data_dir = "data";
  std::string model_path = "model.json";
  std::string template_dir = "templates";
  std::string out_dir = "out";
};

struct OneClassConfig {
  ClassifierKind kind = ClassifierKind::ocsvm;
  GridConfig grid;
  double threshold_percentile = 2.0;
  int threshold_folds = 5;
  double val_fraction = 0.2;
  int min_samples = 20;
  double kkt_tol = 1e-6;
  long max_iter = 10'000'000;
  /// Fraction of a user's genuine sessions used for enrollment; the rest are
  /// held out for evaluation.
  double enroll_fraction = 0.5;
};

struct PretrainConfig {
  /// Pretraining embeddings kept per user as the enrollment impostor pool.
  int pool_per_user = 20;
};

struct PipelineConfig {
  std::uint64_t seed = 0;
  int workers = 1;
  PathsConfig paths;
  CapsenseConfig capsense;
  MotionConfig motion;
  AugmentConfig augment;
  EmbedConfig embed;
  PretrainConfig pretrain;
  OneClassConfig oneclass;
  SynthConfig synth;

  /// Throws InvariantError naming the first offending key.
  void validate() const;

  EnrollConfig enroll_config(std::uint64_t seed) const;
};

std::string config_to_json(const PipelineConfig& cfg);

/// Overlays `text` (a JSON object) onto `base`. Unknown keys and type
/// mismatches raise SchemaError naming the dotted key.
PipelineConfig apply_config_json(const PipelineConfig& base, const std::string& text);

/// Applies one "dotted.key=value" override. The value is parsed as JSON when
/// possible, else taken as a string.
PipelineConfig apply_override(const PipelineConfig& base, const std::string& assignment);

PipelineConfig load_config(const std::string& path, const PipelineConfig& base = {});

}  // namespace touchauth
