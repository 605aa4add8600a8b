#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sys/wait.h>

#include "checks.hpp"
#include "fixtures.hpp"
#include "touchauth/commands.hpp"

namespace touchauth {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;

std::size_t count_files(const fs::path& root, const std::string& ext) {
  std::size_t n = 0;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file() && e.path().string().ends_with(ext) && !e.path().string().ends_with(".truth.json")) ++n;
  return n;
}

TEST(Synth, Counts) {
  TempDir dir;
  const auto rep = cmd_synth({.n_users = 2, .sessions_per_user = 5, .out_dir = dir.str()}, PipelineConfig{});
  EXPECT_EQ(rep.n_sessions, 10u);
  EXPECT_EQ(count_files(dir.path(), ".ndjson"), 10u);
  EXPECT_EQ(read_manifest(rep.manifest_path).size(), 10u);
  EXPECT_TRUE(rep.pretrain_manifest_path.empty());
  EXPECT_TRUE(fs::exists(dir.path() / "profiles.json"));
}

TEST(Synth, ByteIdentical) {
  TempDir a, b;
  SynthOptions opt{.n_users = 2, .sessions_per_user = 3, .n_pretrain_users = 1, .pretrain_sessions = 2};
  opt.attacks = {{Label::puppet, 2}};
  opt.out_dir = a.str();
  cmd_synth(opt, PipelineConfig{});
  opt.out_dir = b.str();
  cmd_synth(opt, PipelineConfig{});
  EXPECT_EQ(testing::diff_trees(a.path(), b.path()), "");
}

TEST(Synth, AttackCounts) {
  TempDir dir;
  SynthOptions opt{.n_users = 3, .sessions_per_user = 1, .attacks = {{Label::replica, 20}}, .out_dir = dir.str()};
  const auto entries = read_manifest(cmd_synth(opt, PipelineConfig{}).manifest_path);
  std::map<std::string, int> replicas;
  for (const auto& e : entries)
    if (e.label == Label::replica) ++replicas[e.user_id];
  ASSERT_EQ(replicas.size(), 3u);
  for (const auto& [u, n] : replicas) EXPECT_EQ(n, 20) << u;
}

TEST(Synth, ParseAttackCounts) {
  const auto m = parse_attack_counts("replica=20,puppet=5");
  EXPECT_EQ(m.at(Label::replica), 20);
  EXPECT_EQ(m.at(Label::puppet), 5);
  EXPECT_THROW(parse_attack_counts("replica"), SchemaError);
  EXPECT_THROW(parse_attack_counts("genuine=3"), SchemaError);
  EXPECT_THROW(parse_attack_counts("replica=x"), SchemaError);
}

TEST(Pretrain, SingleUserIsDegenerate) {
  TempDir dir;
  const auto rep = cmd_synth({.n_users = 1, .sessions_per_user = 4, .out_dir = dir.str()}, PipelineConfig{});
  EXPECT_THROW(cmd_pretrain(rep.manifest_path, testing::quick_config(), ""), DegenerateInputError);
}

// One small dataset, model and template set shared by the workflow tests.
class Workflow : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir("touchauth-workflow");
    cfg_ = testing::quick_config(3);
    SynthOptions opt{.n_users = 4, .sessions_per_user = 50, .n_pretrain_users = 4, .pretrain_sessions = 30};
    opt.attacks = {{Label::replica, 5}, {Label::puppet, 5}};
    opt.out_dir = path("data");
    const auto rep = cmd_synth(opt, cfg_);
    manifest_ = rep.manifest_path;
    pretrain_manifest_ = rep.pretrain_manifest_path;
    pretrain_ = new PretrainReport(cmd_pretrain(pretrain_manifest_, cfg_, path("model")));
    cmd_enroll(manifest_, "all", path("model/model.json"), cfg_, path("tpl"));
  }
  static void TearDownTestSuite() {
    delete pretrain_;
    delete dir_;
  }
  static std::string path(const std::string& child) { return dir_->str(child); }

  static TempDir* dir_;
  static PipelineConfig cfg_;
  static std::string manifest_, pretrain_manifest_;
  static PretrainReport* pretrain_;
};

TempDir* Workflow::dir_ = nullptr;
PipelineConfig Workflow::cfg_;
std::string Workflow::manifest_, Workflow::pretrain_manifest_;
PretrainReport* Workflow::pretrain_ = nullptr;

TEST_F(Workflow, PretrainSeparatesUsers) {
  EXPECT_EQ(pretrain_->n_users, 4u);
  EXPECT_GE(pretrain_->log.accuracy.back(), 0.99);
  EXPECT_TRUE(fs::exists(path("model/training_log.csv")));
}

TEST_F(Workflow, PretrainDeterministic) {
  TempDir other;
  cmd_pretrain(pretrain_manifest_, cfg_, other.str());
  EXPECT_EQ(read_text_file(other.str("model.json")), read_text_file(path("model/model.json")));
  EXPECT_EQ(read_text_file(other.str("training_log.csv")), read_text_file(path("model/training_log.csv")));
}

TEST_F(Workflow, EnrollWritesTemplates) {
  for (int u = 0; u < 4; ++u) {
    const auto t = load_template(path("tpl/s3-u0" + std::to_string(u) + ".template.json"));
    EXPECT_EQ(t.enrolled_sessions.size(), 25u);
    EXPECT_EQ(t.kind, ClassifierKind::ocsvm);
  }
  EXPECT_THROW(cmd_enroll(manifest_, "nobody", path("model/model.json"), cfg_, ""), DegenerateInputError);
  EXPECT_THROW(cmd_enroll(manifest_, "all", path("missing.json"), cfg_, ""), IoError);
  auto strict = cfg_;
  strict.oneclass.min_samples = 40;
  EXPECT_THROW(cmd_enroll(manifest_, "all", path("model/model.json"), strict, ""), DegenerateInputError);
}

TEST_F(Workflow, EvaluateShapeAndReproducibility) {
  const auto a = cmd_evaluate(manifest_, path("tpl"), path("model/model.json"), cfg_, path("eval_a"));
  cmd_evaluate(manifest_, path("tpl"), path("model/model.json"), cfg_, path("eval_b"));
  EXPECT_EQ(testing::diff_trees(path("eval_a"), path("eval_b")), "");
  EXPECT_EQ(a.users.size(), 4u);
  EXPECT_EQ(a.attacks.size(), 4u * 2u);
  for (const auto& r : a.attacks) EXPECT_EQ(r.attempts, 5);
  // header + victims x kinds
  const auto csv = read_text_file(path("eval_a/attack_far.csv"));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 8);
  EXPECT_TRUE(fs::exists(path("eval_a/summary.json")));
  EXPECT_TRUE(fs::exists(path("eval_a/roc.csv")));
  EXPECT_TRUE(fs::exists(path("eval_a/hist.csv")));
  EXPECT_THROW(cmd_evaluate(manifest_, path("nowhere"), path("model/model.json"), cfg_, ""), IoError);
}

TEST_F(Workflow, WorkerInvariance) {
  auto many = cfg_;
  many.workers = 4;
  const std::set<std::string> ignore{"resolved_config.json"};

  SynthOptions opt{.n_users = 2, .sessions_per_user = 3, .attacks = {{Label::mimicry, 2}}};
  opt.out_dir = path("w1/data");
  cmd_synth(opt, cfg_);
  opt.out_dir = path("w4/data");
  cmd_synth(opt, many);
  EXPECT_EQ(testing::diff_trees(path("w1/data"), path("w4/data"), ignore), "");

  cmd_pretrain(pretrain_manifest_, many, path("w4/model"));
  EXPECT_EQ(testing::diff_trees(path("model"), path("w4/model"), ignore), "");
  cmd_enroll(manifest_, "all", path("model/model.json"), many, path("w4/tpl"));
  EXPECT_EQ(testing::diff_trees(path("tpl"), path("w4/tpl"), ignore), "");
  cmd_evaluate(manifest_, path("tpl"), path("model/model.json"), cfg_, path("w1/eval"));
  cmd_evaluate(manifest_, path("tpl"), path("model/model.json"), many, path("w4/eval"));
  EXPECT_EQ(testing::diff_trees(path("w1/eval"), path("w4/eval"), ignore), "");
}

TEST_F(Workflow, VerifyInProcess) {
  const auto t = load_template(path("tpl/s3-u00.template.json"));
  // Sessions of user 0 that were not enrolled.
  int accepted = 0, total = 0;
  for (const auto& e : read_manifest(manifest_)) {
    if (e.user_id != "s3-u00" || e.label != Label::genuine) continue;
    const auto sid = fs::path(e.path).stem().string();
    if (std::binary_search(t.enrolled_sessions.begin(), t.enrolled_sessions.end(), sid)) continue;
    const auto rep = cmd_verify(resolve_manifest_path(manifest_, e.path), path("tpl/s3-u00.template.json"),
                                path("model/model.json"), cfg_);
    accepted += rep.accept;
    ++total;
    EXPECT_GT(rep.latency_ms, 0.0);
  }
  EXPECT_EQ(total, 25);
  EXPECT_GE(accepted, 22);
}

#ifdef TOUCHAUTH_CLI
int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + TOUCHAUTH_CLI + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST_F(Workflow, CliExitCodes) {
  write_text_file(path("cli.json"), config_to_json(cfg_));
  const std::string base = "--config " + path("cli.json") + " verify --model " + path("model/model.json");
  const auto entries = read_manifest(manifest_);
  const auto own = load_template(path("tpl/s3-u01.template.json"));

  // First non-enrolled genuine session of user 1.
  std::string genuine;
  for (const auto& e : entries) {
    const auto sid = fs::path(e.path).stem().string();
    if (e.user_id == "s3-u01" && e.label == Label::genuine &&
        !std::binary_search(own.enrolled_sessions.begin(), own.enrolled_sessions.end(), sid)) {
      genuine = resolve_manifest_path(manifest_, e.path);
      break;
    }
  }
  ASSERT_FALSE(genuine.empty());
  EXPECT_EQ(run_cli(base + " --session " + genuine + " --template " + path("tpl/s3-u01.template.json")), 0);

  // Other users' sessions against user 1's template.
  int rejected = 0, total = 0, seen = 0;
  for (const auto& e : entries) {
    if (e.user_id == "s3-u01" || e.label != Label::genuine || seen++ % 7 || total >= 20) continue;
    ++total;
    rejected += run_cli(base + " --session " + resolve_manifest_path(manifest_, e.path) + " --template " +
                        path("tpl/s3-u01.template.json")) == 1;
  }
  EXPECT_GE(rejected, 19) << "of " << total;

  EXPECT_EQ(run_cli(base + " --session " + genuine + " --template " + path("tpl/none.template.json")), 2);
  EXPECT_EQ(run_cli("frobnicate"), 2);
}
#endif

}  // namespace
}  // namespace touchauth
