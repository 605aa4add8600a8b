#include "touchauth/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <json.hpp>
#include <set>
#include <sstream>

#include "touchauth/augment.hpp"
#include "touchauth/pipeline.hpp"
#include "touchauth/synth.hpp"

namespace touchauth {

namespace fs = std::filesystem;

namespace {

void ensure_dir(const std::string& dir) {
  if (dir.empty()) return;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir + "': " + ec.message());
}

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

std::string pad(int v, int width) {
  std::string s = std::to_string(v);
  return std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(s.size()))), '0') + s;
}

struct LoadedEntry {
  ManifestEntry entry;
  std::string path;
};

std::vector<LoadedEntry> load_entries(const std::string& manifest) {
  std::vector<LoadedEntry> out;
  for (auto& e : read_manifest(manifest)) {
    out.push_back({e, resolve_manifest_path(manifest, e.path)});
  }
  return out;
}

Session read_with_context(const std::string& path) {
  try {
    return read_session(path);
  } catch (const Error&) {
    rethrow_with_context(path);
  }
}

// Embeds sessions in parallel; row i belongs to paths[i].
Eigen::MatrixXd embed_paths(const std::vector<std::string>& paths, const FusionModel& model,
                            const PipelineConfig& cfg, std::vector<std::string>* ids) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(paths.size()), model.output_dim());
  std::vector<std::string> sid(paths.size());
  parallel_for(paths.size(), cfg.workers, [&](std::size_t i) {
    const auto s = read_with_context(paths[i]);
    try {
      out.row(static_cast<Eigen::Index>(i)) = embed_session(s, model, cfg).transpose();
    } catch (const Error&) {
      rethrow_with_context("session " + s.meta.session_id);
    }
    sid[i] = s.meta.session_id;
  });
  if (ids) *ids = std::move(sid);
  return out;
}

std::string created_at() {
  std::time_t t = 0;
  if (const char* env = std::getenv("SOURCE_DATE_EPOCH")) t = static_cast<std::time_t>(std::strtoll(env, nullptr, 10));
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::uint64_t user_seed(std::uint64_t seed, const std::string& user) {
  return Rng::derive(seed, fnv1a64(user));
}

}  // namespace

void write_resolved_config(const PipelineConfig& cfg, const std::string& out_dir) {
  ensure_dir(out_dir);
  write_text_file(join(out_dir, "resolved_config.json"), config_to_json(cfg));
}

std::map<Label, int> parse_attack_counts(const std::string& text) {
  std::map<Label, int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw SchemaError("attack spec '" + item + "' must look like kind=count");
    const Label kind = label_from_string(item.substr(0, eq));
    if (kind == Label::genuine) throw SchemaError("attack kind must be mimicry, replica or puppet");
    int count = 0;
    try {
      count = std::stoi(item.substr(eq + 1));
    } catch (const std::exception&) {
      throw SchemaError("attack count in '" + item + "' is not an integer");
    }
    if (count < 0) throw SchemaError("attack count must be >= 0");
    out[kind] = count;
  }
  return out;
}

// ---------------------------------------------------------------- synth

SynthReport cmd_synth(const SynthOptions& opt, const PipelineConfig& cfg) {
  cfg.synth.validate();
  if (opt.n_users < 1 || opt.sessions_per_user < 1) throw InvariantError("synth: need users >= 1 and sessions >= 1");
  if (opt.n_pretrain_users < 0 || opt.pretrain_sessions < 1) throw InvariantError("synth: bad pretraining counts");
  ensure_dir(opt.out_dir);

  const std::string tag = "s" + std::to_string(cfg.seed);
  auto make_user = [&](std::uint64_t group, int idx, const char* role) {
    auto p = gen_user(Rng::derive(cfg.seed, group * 1'000'000 + static_cast<std::uint64_t>(idx)), cfg.synth);
    p.user_id = tag + "-" + role + pad(idx, 2);
    return p;
  };
  std::vector<UserProfile> users, attackers, pretrain;
  for (int u = 0; u < opt.n_users; ++u) users.push_back(make_user(1, u, "u"));
  for (int u = 0; u < opt.n_users; ++u) attackers.push_back(make_user(3, u, "a"));
  for (int u = 0; u < opt.n_pretrain_users; ++u) pretrain.push_back(make_user(2, u, "p"));

  struct Job {
    const UserProfile* profile;
    const UserProfile* attacker;  // null for genuine
    Label kind;
    int index;
    bool pretrain;
    std::string session_id;
    std::string rel_path;
  };
  std::vector<Job> jobs;
  auto add_genuine = [&](const UserProfile& p, int count, bool is_pretrain) {
    for (int k = 0; k < count; ++k) {
      const std::string sid = p.user_id + "-g" + pad(k, 4);
      jobs.push_back({&p, nullptr, Label::genuine, k, is_pretrain, sid, "sessions/" + p.user_id + "/" + sid + ".ndjson"});
    }
  };
  for (const auto& p : users) add_genuine(p, opt.sessions_per_user, false);
  for (std::size_t u = 0; u < users.size(); ++u) {
    for (const auto& [kind, count] : opt.attacks) {
      for (int k = 0; k < count; ++k) {
        const std::string sid = users[u].user_id + "-" + std::string(to_string(kind)) + pad(k, 4);
        jobs.push_back({&users[u], &attackers[u], kind, k, false, sid,
                        "sessions/" + users[u].user_id + "/" + sid + ".ndjson"});
      }
    }
  }
  for (const auto& p : pretrain) add_genuine(p, opt.pretrain_sessions, true);

  std::set<std::string> dirs;
  for (const auto& j : jobs) dirs.insert(fs::path(join(opt.out_dir, j.rel_path)).parent_path().string());
  for (const auto& d : dirs) ensure_dir(d);

  parallel_for(jobs.size(), cfg.workers, [&](std::size_t i) {
    const auto& j = jobs[i];
    Rng rng(Rng::derive(Rng::derive(j.profile->seed, static_cast<std::uint64_t>(j.kind)), static_cast<std::uint64_t>(j.index)));
    GeneratedSession g;
    if (j.kind == Label::genuine) {
      g = gen_session(*j.profile, rng, cfg.synth, j.session_id);
    } else {
      const double fidelity = j.kind == Label::mimicry   ? cfg.synth.mimicry_fidelity
                              : j.kind == Label::replica ? cfg.synth.replica_fidelity
                                                         : cfg.synth.puppet_fidelity;
      g = gen_attack(*j.profile, *j.attacker, {j.kind, fidelity}, rng, cfg.synth, j.session_id);
    }
    const auto path = join(opt.out_dir, j.rel_path);
    write_session(g.session, path);
    const auto truth = fs::path(path).replace_extension(".truth.json").string();
    write_text_file(truth, truth_to_json(g.truth, g.session.meta));
  });

  std::vector<ManifestEntry> main_entries, pre_entries;
  for (const auto& j : jobs) {
    (j.pretrain ? pre_entries : main_entries).push_back({j.rel_path, j.profile->user_id, j.kind});
  }
  SynthReport rep;
  rep.manifest_path = join(opt.out_dir, "manifest.json");
  write_manifest(main_entries, rep.manifest_path);
  if (!pre_entries.empty()) {
    rep.pretrain_manifest_path = join(opt.out_dir, "pretrain_manifest.json");
    write_manifest(pre_entries, rep.pretrain_manifest_path);
  }
  std::vector<UserProfile> all = users;
  all.insert(all.end(), pretrain.begin(), pretrain.end());
  all.insert(all.end(), attackers.begin(), attackers.end());
  write_text_file(join(opt.out_dir, "profiles.json"), profiles_to_json(all));
  rep.n_sessions = jobs.size();
  return rep;
}

// ---------------------------------------------------------------- pretrain

PretrainReport cmd_pretrain(const std::string& manifest, const PipelineConfig& cfg,
                            const std::string& out_dir) {
  cfg.validate();
  std::vector<LoadedEntry> entries;
  for (auto& e : load_entries(manifest))
    if (e.entry.label == Label::genuine) entries.push_back(std::move(e));

  std::vector<std::string> user_ids;
  for (const auto& e : entries) user_ids.push_back(e.entry.user_id);
  std::sort(user_ids.begin(), user_ids.end());
  user_ids.erase(std::unique(user_ids.begin(), user_ids.end()), user_ids.end());
  if (user_ids.size() < 2) {
    throw DegenerateInputError("pretrain: need genuine sessions from at least 2 users, manifest has " +
                               std::to_string(user_ids.size()));
  }

  const std::size_t n = entries.size();
  std::vector<CapSequence> seqs(n);
  std::vector<Descriptors> desc(n);
  parallel_for(n, cfg.workers, [&](std::size_t i) {
    const auto s = read_with_context(entries[i].path);
    try {
      const auto p = preprocess(s, cfg);
      desc[i] = describe(p, cfg);
      seqs[i] = p.seq;
    } catch (const Error&) {
      rethrow_with_context("session " + s.meta.session_id);
    }
  });

  const auto augmented = augment_dataset(seqs, cfg.augment);
  std::vector<std::optional<Eigen::VectorXd>> aug_cap(augmented.size());
  parallel_for(augmented.size(), cfg.workers, [&](std::size_t i) {
    if (augmented[i].copy < 0) return;
    try {
      aug_cap[i] = describe_cap(augmented[i].seq, cfg);
    } catch (const DegenerateInputError&) {
      // Noise can erase a faint touch; such copies are dropped.
    }
  });

  const auto cap_dim = desc.front().cap.size();
  const auto dim = cap_dim + desc.front().imu.size();
  std::vector<Eigen::VectorXd> rows;
  std::vector<int> labels;
  auto label_of = [&](std::size_t src) {
    return static_cast<int>(std::lower_bound(user_ids.begin(), user_ids.end(), entries[src].entry.user_id) -
                            user_ids.begin());
  };
  std::size_t n_aug = 0;
  for (std::size_t i = 0; i < augmented.size(); ++i) {
    const auto src = augmented[i].source;
    Eigen::VectorXd x(dim);
    if (augmented[i].copy < 0) {
      x = desc[src].joined();
    } else {
      if (!aug_cap[i]) continue;
      x << *aug_cap[i], desc[src].imu;
      ++n_aug;
    }
    rows.push_back(std::move(x));
    labels.push_back(label_of(src));
  }
  Eigen::MatrixXd inputs(static_cast<Eigen::Index>(rows.size()), dim);
  for (std::size_t i = 0; i < rows.size(); ++i) inputs.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();

  auto trained = fusion_train(inputs, labels, static_cast<int>(cap_dim), cfg.embed);

  // Impostor proxy for enrollment: the first sessions of each pretraining user.
  std::map<std::string, int> taken;
  std::vector<Eigen::VectorXd> pool;
  for (std::size_t i = 0; i < n; ++i) {
    if (taken[entries[i].entry.user_id]++ >= cfg.pretrain.pool_per_user) continue;
    pool.push_back(trained.model.forward_joined(desc[i].joined()));
  }
  trained.model.impostor_pool.resize(static_cast<Eigen::Index>(pool.size()), trained.model.output_dim());
  for (std::size_t i = 0; i < pool.size(); ++i) trained.model.impostor_pool.row(static_cast<Eigen::Index>(i)) = pool[i].transpose();

  PretrainReport rep{std::move(trained.model), std::move(trained.log), n, n_aug, user_ids.size()};
  if (!out_dir.empty()) {
    ensure_dir(out_dir);
    save_model(rep.model, join(out_dir, "model.json"));
    std::string csv = "epoch,loss,accuracy\n";
    for (std::size_t e = 0; e < rep.log.loss.size(); ++e) {
      csv += std::to_string(e + 1) + "," + fixed6(rep.log.loss[e]) + "," + fixed6(rep.log.accuracy[e]) + "\n";
    }
    write_text_file(join(out_dir, "training_log.csv"), csv);
    write_resolved_config(cfg, out_dir);
  }
  return rep;
}

// ---------------------------------------------------------------- enroll

EnrollReport cmd_enroll(const std::string& manifest, const std::string& user_id,
                        const std::string& model_path, const PipelineConfig& cfg,
                        const std::string& out_dir) {
  cfg.validate();
  if (!fs::exists(model_path)) throw IoError("missing model file '" + model_path + "'");
  const auto model = load_model(model_path);
  if (model.impostor_pool.rows() == 0) throw SchemaError("model has no impostor pool; re-run pretrain");

  std::map<std::string, std::vector<std::string>> by_user;
  for (const auto& e : load_entries(manifest)) {
    if (e.entry.label != Label::genuine) continue;
    if (user_id != "all" && e.entry.user_id != user_id) continue;
    by_user[e.entry.user_id].push_back(e.path);
  }
  if (by_user.empty()) throw DegenerateInputError("enroll: no genuine sessions for user '" + user_id + "'");

  // Pick each user's enrollment subset with a user-specific seeded shuffle.
  std::vector<std::string> users;
  std::vector<std::vector<std::string>> chosen;
  for (auto& [u, paths] : by_user) {
    Rng rng(user_seed(cfg.seed, u));
    for (std::size_t i = paths.size(); i > 1; --i) std::swap(paths[i - 1], paths[rng.below(i)]);
    const auto take = static_cast<std::size_t>(std::ceil(cfg.oneclass.enroll_fraction * static_cast<double>(paths.size())));
    if (static_cast<int>(take) < cfg.oneclass.min_samples) {
      throw DegenerateInputError("enroll " + u + ": insufficient data (" + std::to_string(take) +
                                 " enrollment sessions, need " + std::to_string(cfg.oneclass.min_samples) + ")");
    }
    users.push_back(u);
    chosen.emplace_back(paths.begin(), paths.begin() + static_cast<std::ptrdiff_t>(take));
  }

  std::vector<std::string> all_paths;
  for (const auto& c : chosen) all_paths.insert(all_paths.end(), c.begin(), c.end());
  std::vector<std::string> ids;
  const Eigen::MatrixXd emb = embed_paths(all_paths, model, cfg, &ids);

  EnrollReport rep;
  rep.templates.resize(users.size());
  std::vector<Eigen::Index> offsets{0};
  for (const auto& c : chosen) offsets.push_back(offsets.back() + static_cast<Eigen::Index>(c.size()));
  const std::string hash = model.config_hash();
  const std::string stamp = created_at();
  parallel_for(users.size(), cfg.workers, [&](std::size_t u) {
    const Eigen::MatrixXd X = emb.middleRows(offsets[u], offsets[u + 1] - offsets[u]);
    try {
      auto t = enroll(users[u], X, model.impostor_pool, cfg.enroll_config(user_seed(cfg.seed, users[u])));
      t.embed_config_hash = hash;
      t.created_at = stamp;
      t.enrolled_sessions.assign(ids.begin() + offsets[u], ids.begin() + offsets[u + 1]);
      std::sort(t.enrolled_sessions.begin(), t.enrolled_sessions.end());
      rep.templates[u] = std::move(t);
    } catch (const Error&) {
      rethrow_with_context("user " + users[u]);
    }
  });

  if (!out_dir.empty()) {
    ensure_dir(out_dir);
    for (const auto& t : rep.templates) {
      rep.paths.push_back(join(out_dir, t.user_id + ".template.json"));
      save_template(t, rep.paths.back());
    }
    write_resolved_config(cfg, out_dir);
  }
  return rep;
}

// ---------------------------------------------------------------- verify

std::string VerifyReport::json() const {
  nlohmann::ordered_json j;
  j["score"] = score;
  j["accept"] = accept;
  j["latency_ms"] = latency_ms;
  return j.dump();
}

VerifyReport cmd_verify(const std::string& session_path, const std::string& template_path,
                        const std::string& model_path, const PipelineConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  for (const auto& p : {session_path, template_path, model_path}) {
    if (!fs::exists(p)) throw IoError("missing file '" + p + "'");
  }
  const auto tmpl = load_template(template_path);
  const auto model = load_model(model_path);
  if (!tmpl.embed_config_hash.empty() && tmpl.embed_config_hash != model.config_hash()) {
    throw SchemaError("template " + template_path + " was enrolled with a different model");
  }
  const auto session = read_session(session_path);
  Eigen::VectorXd e;
  try {
    e = embed_session(session, model, cfg);
  } catch (const Error&) {
    rethrow_with_context("session " + session.meta.session_id);
  }
  const auto d = verify(tmpl, e);
  VerifyReport rep;
  rep.score = d.score;
  rep.accept = d.accept;
  rep.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

// ---------------------------------------------------------------- evaluate

EvaluationReport cmd_evaluate(const std::string& manifest, const std::string& templates_dir,
                              const std::string& model_path, const PipelineConfig& cfg,
                              const std::string& out_dir) {
  cfg.validate();
  if (!fs::exists(model_path)) throw IoError("missing model file '" + model_path + "'");
  const auto model = load_model(model_path);
  const auto entries = load_entries(manifest);

  std::set<std::string> manifest_users;
  for (const auto& e : entries) manifest_users.insert(e.entry.user_id);
  std::vector<UserTemplate> templates;
  for (const auto& u : manifest_users) {
    const auto path = join(templates_dir, u + ".template.json");
    if (!fs::exists(path)) throw IoError("missing template for user " + u + " (" + path + ")");
    templates.push_back(load_template(path));
    if (templates.back().embed_config_hash != model.config_hash()) {
      throw SchemaError("template " + path + " was enrolled with a different model");
    }
  }

  std::vector<std::string> paths;
  for (const auto& e : entries) paths.push_back(e.path);
  std::vector<std::string> ids;
  const Eigen::MatrixXd emb = embed_paths(paths, model, cfg, &ids);

  EvaluationReport rep;
  std::vector<double> pooled_gen, pooled_imp;
  std::map<Label, std::pair<std::int64_t, std::int64_t>> per_kind;
  std::vector<std::vector<double>> user_gen(templates.size()), user_imp(templates.size());
  std::vector<std::map<Label, AttackRow>> user_attacks(templates.size());
  parallel_for(templates.size(), cfg.workers, [&](std::size_t u) {
    const auto& t = templates[u];
    const std::set<std::string> enrolled(t.enrolled_sessions.begin(), t.enrolled_sessions.end());
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const auto& e = entries[i].entry;
      const bool own = e.user_id == t.user_id;
      if (e.label == Label::genuine) {
        if (own && enrolled.count(ids[i])) continue;
        const double s = verify(t, emb.row(static_cast<Eigen::Index>(i)).transpose()).score;
        (own ? user_gen[u] : user_imp[u]).push_back(s);
      } else if (own) {
        const auto d = verify(t, emb.row(static_cast<Eigen::Index>(i)).transpose());
        auto& row = user_attacks[u][e.label];
        row.victim = t.user_id;
        row.kind = e.label;
        row.attempts++;
        row.accepted += d.accept;
      }
    }
  });

  for (std::size_t u = 0; u < templates.size(); ++u) {
    const auto& t = templates[u];
    if (user_gen[u].empty() || user_imp[u].empty()) {
      throw DegenerateInputError("evaluate: user " + t.user_id + " has no held-out genuine or impostor sessions");
    }
    rep.users.push_back({t.user_id, summarize(user_gen[u], user_imp[u], t.threshold)});
    for (double s : user_gen[u]) pooled_gen.push_back(s - t.threshold);
    for (double s : user_imp[u]) pooled_imp.push_back(s - t.threshold);
    for (const auto& [kind, row] : user_attacks[u]) {
      rep.attacks.push_back(row);
      per_kind[kind].first += row.attempts;
      per_kind[kind].second += row.accepted;
    }
  }
  rep.pooled = summarize(pooled_gen, pooled_imp, 0.0);
  for (const auto& [kind, c] : per_kind) {
    rep.attack_far[kind] = c.first ? static_cast<double>(c.second) / static_cast<double>(c.first) : 0.0;
  }

  if (!out_dir.empty()) {
    ensure_dir(out_dir);
    write_text_file(join(out_dir, "roc.csv"), roc_csv(roc(pooled_gen, pooled_imp)));
    write_text_file(join(out_dir, "summary.json"), summary_json(rep.pooled));
    write_text_file(join(out_dir, "hist.csv"), histogram_csv(score_histogram(pooled_gen, pooled_imp, 50)));
    std::string per_user = "user_id,eer,far,frr,bac,threshold,n_genuine,n_impostor\n";
    for (std::size_t u = 0; u < templates.size(); ++u) {
      const auto dir = join(join(out_dir, "users"), templates[u].user_id);
      ensure_dir(dir);
      write_text_file(join(dir, "roc.csv"), roc_csv(roc(user_gen[u], user_imp[u])));
      write_text_file(join(dir, "summary.json"), summary_json(rep.users[u].summary));
      write_text_file(join(dir, "hist.csv"), histogram_csv(score_histogram(user_gen[u], user_imp[u], 50)));
      const auto& s = rep.users[u].summary;
      per_user += templates[u].user_id + "," + fixed6(s.eer) + "," + fixed6(s.at_threshold.far) + "," +
                  fixed6(s.at_threshold.frr) + "," + fixed6(s.at_threshold.bac) + "," + fixed6(s.threshold) +
                  "," + std::to_string(s.n_genuine) + "," + std::to_string(s.n_impostor) + "\n";
    }
    write_text_file(join(out_dir, "per_user.csv"), per_user);

    std::string attack_csv = "victim,attack,attempts,accepted,far\n";
    for (const auto& a : rep.attacks) {
      attack_csv += a.victim + "," + std::string(to_string(a.kind)) + "," + std::to_string(a.attempts) + "," +
                    std::to_string(a.accepted) + "," + fixed6(a.far()) + "\n";
    }
    write_text_file(join(out_dir, "attack_far.csv"), attack_csv);

    std::vector<std::string> proj_ids, proj_labels;
    std::vector<Eigen::Index> rows;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      rows.push_back(static_cast<Eigen::Index>(i));
      proj_ids.push_back(ids[i]);
      proj_labels.push_back(entries[i].entry.user_id + ":" + std::string(to_string(entries[i].entry.label)));
    }
    if (rows.size() >= 3) {
      Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()), emb.cols());
      for (std::size_t r = 0; r < rows.size(); ++r) X.row(static_cast<Eigen::Index>(r)) = emb.row(rows[r]);
      write_text_file(join(out_dir, "proj.csv"), projection_csv(project_2d(X), proj_ids, proj_labels));
    }
    write_resolved_config(cfg, out_dir);
  }
  return rep;
}

}  // namespace touchauth
