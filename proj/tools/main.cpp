#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>
#include <optional>

#include "touchauth/commands.hpp"

using namespace touchauth;

namespace {

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string out;
  std::vector<std::string> sets;
};

// defaults < config file < --set < dedicated flags
PipelineConfig resolve(const Globals& g) {
  PipelineConfig cfg;
  std::string path = g.config_path;
  if (path.empty()) {
    if (const char* env = std::getenv("TOUCHAUTH_CONFIG")) path = env;
  }
  if (!path.empty()) cfg = load_config(path, cfg);
  for (const auto& s : g.sets) cfg = apply_override(cfg, s);
  if (g.seed) cfg.seed = *g.seed;
  if (g.workers) cfg.workers = *g.workers;
  if (!g.out.empty()) cfg.paths.out_dir = g.out;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multimodal touch authentication: synthesis, training, enrollment, verification"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--config", g.config_path, "JSON config file (falls back to $TOUCHAUTH_CONFIG)");
  app.add_option("--seed", g.seed, "Global seed");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--set", g.sets, "Override a config key, e.g. --set embed.epochs=20")->take_all()->allow_extra_args(false);
  app.add_option("--workers", g.workers, "Worker threads")->check(CLI::PositiveNumber);

  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  SynthOptions sopt;
  std::string attacks;
  synth->add_option("--users", sopt.n_users, "Target users")->check(CLI::PositiveNumber);
  synth->add_option("--sessions", sopt.sessions_per_user, "Genuine sessions per user")->check(CLI::PositiveNumber);
  synth->add_option("--pretrain-users", sopt.n_pretrain_users, "Extra users for pretraining")->check(CLI::NonNegativeNumber);
  synth->add_option("--pretrain-sessions", sopt.pretrain_sessions, "Sessions per pretraining user")->check(CLI::PositiveNumber);
  synth->add_option("--attacks", attacks, "Attacks per victim, e.g. replica=20,puppet=20,mimicry=20");

  auto* pretrain = app.add_subcommand("pretrain", "Train the fusion embedding model");
  std::string manifest;
  pretrain->add_option("--manifest", manifest, "Session manifest")->required();

  auto* enroll = app.add_subcommand("enroll", "Enroll user templates");
  std::string user = "all", model, kind;
  enroll->add_option("--manifest", manifest, "Session manifest")->required();
  enroll->add_option("--user", user, "User id or 'all'");
  enroll->add_option("--model", model, "Fusion model (default paths.model_path)");
  enroll->add_option("--kind", kind, "ocsvm, lof or iforest")->check(CLI::IsMember({"ocsvm", "lof", "iforest"}));

  auto* verify = app.add_subcommand("verify", "Score one session against a template");
  std::string session, tmpl;
  verify->add_option("--session", session, "Session file")->required();
  verify->add_option("--template", tmpl, "Template file")->required();
  verify->add_option("--model", model, "Fusion model (default paths.model_path)");

  auto* evaluate = app.add_subcommand("evaluate", "Score a manifest against enrolled templates");
  std::string templates;
  evaluate->add_option("--manifest", manifest, "Session manifest")->required();
  evaluate->add_option("--templates", templates, "Template directory (default paths.template_dir)");
  evaluate->add_option("--model", model, "Fusion model (default paths.model_path)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    auto cfg = resolve(g);
    if (!kind.empty()) cfg.oneclass.kind = classifier_from_string(kind);
    const std::string& out = cfg.paths.out_dir;
    const std::string model_path = model.empty() ? cfg.paths.model_path : model;

    if (*synth) {
      sopt.out_dir = out;
      if (!attacks.empty()) sopt.attacks = parse_attack_counts(attacks);
      const auto rep = cmd_synth(sopt, cfg);
      write_resolved_config(cfg, out);
      std::cout << rep.n_sessions << " sessions, manifest " << rep.manifest_path << "\n";
      if (!rep.pretrain_manifest_path.empty()) std::cout << "pretrain manifest " << rep.pretrain_manifest_path << "\n";
    } else if (*pretrain) {
      const auto rep = cmd_pretrain(manifest, cfg, out);
      std::cout << "trained on " << rep.n_sessions << " sessions (+" << rep.n_augmented << " augmented) from "
                << rep.n_users << " users; final loss " << fixed6(rep.log.loss.back()) << ", accuracy "
                << fixed6(rep.log.accuracy.back()) << "\n";
    } else if (*enroll) {
      const auto rep = cmd_enroll(manifest, user, model_path, cfg, out);
      for (std::size_t i = 0; i < rep.templates.size(); ++i) {
        std::cout << rep.templates[i].user_id << " threshold " << fixed6(rep.templates[i].threshold) << " -> "
                  << rep.paths[i] << "\n";
      }
    } else if (*verify) {
      const auto rep = cmd_verify(session, tmpl, model_path, cfg);
      std::cout << rep.json() << "\n";
      return rep.accept ? 0 : 1;
    } else if (*evaluate) {
      const auto rep = cmd_evaluate(manifest, templates.empty() ? cfg.paths.template_dir : templates, model_path,
                                    cfg, out);
      std::cout << "pooled EER " << fixed6(rep.pooled.eer) << "\n";
      for (const auto& [k, far] : rep.attack_far) std::cout << to_string(k) << " FAR " << fixed6(far) << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
