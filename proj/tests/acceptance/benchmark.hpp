#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "touchauth/commands.hpp"

namespace touchauth::acceptance {

struct Scale {
  int users = 10;
  int sessions = 200;
  int pretrain_users = 15;
  int pretrain_sessions = 40;
  int attacks = 100;  // per kind and victim
};

struct StageTimes {
  double synth = 0, pretrain = 0, enroll = 0, evaluate = 0;
  double total() const { return synth + pretrain + enroll + evaluate; }
};

struct SeedRun {
  std::uint64_t seed = 0;
  Summary pooled;
  std::map<Label, double> attack_far;
  StageTimes times;
  std::filesystem::path root;
};

/// synth -> pretrain -> enroll -> evaluate under `root`, all through the
/// library commands with files on disk.
SeedRun run_seed(std::uint64_t seed, const std::filesystem::path& root, const Scale& scale,
                 const PipelineConfig& base);

/// Re-runs pretrain/enroll/evaluate on an existing dataset with a different
/// embedding modality. Returns the attack FAR per kind.
std::map<Label, double> run_ablation(const SeedRun& run, Modality modality, const PipelineConfig& base);

}  // namespace touchauth::acceptance
