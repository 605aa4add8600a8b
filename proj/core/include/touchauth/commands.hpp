#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "touchauth/config.hpp"
#include "touchauth/embed.hpp"
#include "touchauth/metrics.hpp"
#include "touchauth/oneclass.hpp"

namespace touchauth {

// ---- synth

struct SynthOptions {
  int n_users = 10;
  int sessions_per_user = 200;
  int n_pretrain_users = 0;
  int pretrain_sessions = 40;
  std::map<Label, int> attacks;  // sessions per victim and kind
  std::string out_dir;
};

struct SynthReport {
  std::string manifest_path;
  std::string pretrain_manifest_path;  // empty without pretraining users
  std::size_t n_sessions = 0;
};

/// Writes sessions, truth sidecars, profiles.json, manifest.json and (with
/// pretraining users) pretrain_manifest.json under out_dir.
SynthReport cmd_synth(const SynthOptions& opt, const PipelineConfig& cfg);

/// Parses "replica=20,puppet=5".
std::map<Label, int> parse_attack_counts(const std::string& text);

// ---- pretrain

struct PretrainReport {
  FusionModel model;
  TrainingLog log;
  std::size_t n_sessions = 0;
  std::size_t n_augmented = 0;
  std::size_t n_users = 0;
};

/// Trains the fusion model on the genuine sessions of `manifest`. Writes
/// model.json and training_log.csv into out_dir when it is non-empty.
PretrainReport cmd_pretrain(const std::string& manifest, const PipelineConfig& cfg,
                            const std::string& out_dir);

// ---- enroll

struct EnrollReport {
  std::vector<UserTemplate> templates;
  std::vector<std::string> paths;
};

/// Enrolls `user_id` ("all" for every user in the manifest) and writes
/// <out_dir>/<user>.template.json.
EnrollReport cmd_enroll(const std::string& manifest, const std::string& user_id,
                        const std::string& model_path, const PipelineConfig& cfg,
                        const std::string& out_dir);

// ---- verify

struct VerifyReport {
  double score = 0.0;
  bool accept = false;
  double latency_ms = 0.0;
  std::string json() const;
};

VerifyReport cmd_verify(const std::string& session_path, const std::string& template_path,
                        const std::string& model_path, const PipelineConfig& cfg);

// ---- evaluate

struct UserEvaluation {
  std::string user_id;
  Summary summary;
};

struct AttackRow {
  std::string victim;
  Label kind = Label::mimicry;
  std::int64_t attempts = 0;
  std::int64_t accepted = 0;
  double far() const { return attempts ? static_cast<double>(accepted) / attempts : 0.0; }
};

struct EvaluationReport {
  Summary pooled;  // scores centered on each template's threshold
  std::vector<UserEvaluation> users;
  std::vector<AttackRow> attacks;
  /// Attack FAR per kind over all victims.
  std::map<Label, double> attack_far;
};

EvaluationReport cmd_evaluate(const std::string& manifest, const std::string& templates_dir,
                              const std::string& model_path, const PipelineConfig& cfg,
                              const std::string& out_dir);

/// Writes the resolved configuration next to a command's outputs.
void write_resolved_config(const PipelineConfig& cfg, const std::string& out_dir);

}  // namespace touchauth
