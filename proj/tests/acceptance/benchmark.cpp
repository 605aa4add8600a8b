#include "benchmark.hpp"

#include "checks.hpp"

namespace touchauth::acceptance {

namespace fs = std::filesystem;

SeedRun run_seed(std::uint64_t seed, const fs::path& root, const Scale& scale, const PipelineConfig& base) {
  PipelineConfig cfg = base;
  cfg.seed = seed;
  SeedRun run;
  run.seed = seed;
  run.root = root;

  testing::Stopwatch sw;
  SynthOptions opt{.n_users = scale.users,
                   .sessions_per_user = scale.sessions,
                   .n_pretrain_users = scale.pretrain_users,
                   .pretrain_sessions = scale.pretrain_sessions,
                   .out_dir = (root / "data").string()};
  if (scale.attacks > 0) {
    for (Label k : {Label::mimicry, Label::replica, Label::puppet}) opt.attacks[k] = scale.attacks;
  }
  const auto data = cmd_synth(opt, cfg);
  write_resolved_config(cfg, opt.out_dir);
  run.times.synth = sw.seconds();

  testing::Stopwatch sp;
  cmd_pretrain(data.pretrain_manifest_path, cfg, (root / "model").string());
  run.times.pretrain = sp.seconds();

  testing::Stopwatch se;
  const auto model = (root / "model" / "model.json").string();
  cmd_enroll(data.manifest_path, "all", model, cfg, (root / "templates").string());
  run.times.enroll = se.seconds();

  testing::Stopwatch sv;
  const auto rep = cmd_evaluate(data.manifest_path, (root / "templates").string(), model, cfg, (root / "eval").string());
  run.times.evaluate = sv.seconds();

  run.pooled = rep.pooled;
  run.attack_far = rep.attack_far;
  return run;
}

std::map<Label, double> run_ablation(const SeedRun& run, Modality modality, const PipelineConfig& base) {
  PipelineConfig cfg = base;
  cfg.seed = run.seed;
  cfg.embed.modality = modality;
  const auto dir = run.root / ("ablation_" + to_string(modality));
  const auto manifest = (run.root / "data" / "manifest.json").string();
  cmd_pretrain((run.root / "data" / "pretrain_manifest.json").string(), cfg, (dir / "model").string());
  const auto model = (dir / "model" / "model.json").string();
  cmd_enroll(manifest, "all", model, cfg, (dir / "templates").string());
  return cmd_evaluate(manifest, (dir / "templates").string(), model, cfg, (dir / "eval").string()).attack_far;
}

}  // namespace touchauth::acceptance
