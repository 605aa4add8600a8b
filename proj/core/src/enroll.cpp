#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <json.hpp>
#include <limits>
#include <numeric>

#include "touchauth/embed.hpp"
#include "touchauth/metrics.hpp"
#include "touchauth/oneclass.hpp"

namespace touchauth {

using nlohmann::json;

std::string to_string(ClassifierKind k) {
  switch (k) {
    case ClassifierKind::ocsvm: return "ocsvm";
    case ClassifierKind::lof: return "lof";
    case ClassifierKind::iforest: return "iforest";
  }
  return "ocsvm";
}

ClassifierKind classifier_from_string(const std::string& s) {
  if (s == "ocsvm") return ClassifierKind::ocsvm;
  if (s == "lof") return ClassifierKind::lof;
  if (s == "iforest") return ClassifierKind::iforest;
  throw SchemaError("unknown classifier kind '" + s + "'");
}

OneClassModel fit(const Samples& X, const ClassifierParams& p, const SolverOptions& opt) {
  switch (p.kind) {
    case ClassifierKind::ocsvm: return ocsvm_train(X, p.nu, p.gamma, opt.kkt_tol, opt.max_iter);
    case ClassifierKind::lof: return lof_fit(X, p.k);
    case ClassifierKind::iforest: return iforest_fit(X, p.n_trees, p.psi, p.seed);
  }
  throw InvariantError("fit: unknown classifier kind");
}

double score(const OneClassModel& m, const Eigen::VectorXd& x) {
  struct Visitor {
    const Eigen::VectorXd& x;
    double operator()(const OcSvmModel& s) const { return ocsvm_score(s, x); }
    double operator()(const LofModel& s) const { return lof_score(s, x); }
    double operator()(const IForestModel& s) const { return iforest_score(s, x); }
  };
  return std::visit(Visitor{x}, m);
}

std::vector<double> score_all(const OneClassModel& m, const Samples& X) {
  std::vector<double> out(static_cast<std::size_t>(X.rows()));
  for (Eigen::Index i = 0; i < X.rows(); ++i) out[i] = score(m, X.row(i).transpose());
  return out;
}

std::vector<double> training_scores(const OneClassModel& m, const Samples& train) {
  if (const auto* lof = std::get_if<LofModel>(&m)) {
    std::vector<double> out(static_cast<std::size_t>(lof->train.rows()));
    for (Eigen::Index i = 0; i < lof->train.rows(); ++i) out[i] = lof_score_train(*lof, i);
    return out;
  }
  return score_all(m, train);
}

std::vector<ClassifierParams> expand_grid(ClassifierKind kind, const GridConfig& grid, int dim,
                                          std::uint64_t seed) {
  std::vector<ClassifierParams> out;
  ClassifierParams base;
  base.kind = kind;
  base.seed = seed;
  base.n_trees = grid.n_trees;
  switch (kind) {
    case ClassifierKind::ocsvm:
      for (double nu : grid.nu) {
        for (double g : grid.gamma_scale) {
          auto p = base;
          p.nu = nu;
          p.gamma = g / dim;
          out.push_back(p);
        }
      }
      break;
    case ClassifierKind::lof:
      for (int k : grid.k) {
        auto p = base;
        p.k = k;
        out.push_back(p);
      }
      break;
    case ClassifierKind::iforest:
      for (int psi : grid.psi) {
        auto p = base;
        p.psi = psi;
        out.push_back(p);
      }
      break;
  }
  return out;
}

GridResult grid_search(const Samples& genuine_train, const Samples& genuine_val,
                       const Samples& impostor_val, const std::vector<ClassifierParams>& grid,
                       const SolverOptions& opt) {
  if (grid.empty()) throw InvariantError("grid_search: grid is empty");
  if (genuine_train.rows() == 0 || genuine_val.rows() == 0 || impostor_val.rows() == 0) {
    throw InvariantError("grid_search: train, validation and impostor sets must be non-empty");
  }
  GridResult res;
  bool found = false;
  for (const auto& p : grid) {
    if (p.kind == ClassifierKind::lof && p.k >= genuine_train.rows()) {
      res.eers.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    const auto model = fit(genuine_train, p, opt);
    const double e = eer(score_all(model, genuine_val), score_all(model, impostor_val));
    res.eers.push_back(e);
    if (!found || e < res.best_eer) {
      res.best = p;
      res.best_eer = e;
      found = true;
    }
  }
  if (!found) throw DegenerateInputError("grid_search: no feasible grid point");
  return res;
}

namespace {

Samples take_rows(const Samples& X, std::span<const std::size_t> idx) {
  Samples out(static_cast<Eigen::Index>(idx.size()), X.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) out.row(k) = X.row(idx[k]);
  return out;
}

// Genuine scores for the threshold. Kernel scores of training points include
// their own similarity and sit above those of unseen sessions, so fold models
// score the points they did not see.
std::vector<double> threshold_scores(const Samples& genuine, const ClassifierParams& p,
                                     const OneClassModel& full, const EnrollConfig& cfg) {
  const auto n = genuine.rows();
  const auto folds = std::min<Eigen::Index>(cfg.threshold_folds, n);
  if (folds < 2 || p.kind == ClassifierKind::lof) return training_scores(full, genuine);
  std::vector<double> out(static_cast<std::size_t>(n));
  for (Eigen::Index f = 0; f < folds; ++f) {
    std::vector<std::size_t> in, held;
    for (Eigen::Index i = 0; i < n; ++i) (i % folds == f ? held : in).push_back(static_cast<std::size_t>(i));
    const auto m = fit(take_rows(genuine, in), p, cfg.solver);
    for (auto i : held) out[i] = score(m, genuine.row(static_cast<Eigen::Index>(i)).transpose());
  }
  return out;
}

}  // namespace

UserTemplate enroll(const std::string& user_id, const Samples& genuine, const Samples& impostor_pool,
                    const EnrollConfig& cfg) {
  const auto n = genuine.rows();
  if (n < cfg.min_samples) {
    throw DegenerateInputError("enroll " + user_id + ": insufficient samples (" + std::to_string(n) +
                               " genuine, need " + std::to_string(cfg.min_samples) + ")");
  }
  if (impostor_pool.rows() == 0) throw DegenerateInputError("enroll: impostor pool is empty");
  if (impostor_pool.cols() != genuine.cols()) throw InvariantError("enroll: dimension mismatch");
  if (!(cfg.val_fraction > 0.0 && cfg.val_fraction < 1.0)) throw InvariantError("enroll: val_fraction");
  if (!(cfg.threshold_percentile >= 0.0 && cfg.threshold_percentile <= 100.0)) {
    throw InvariantError("enroll: threshold_percentile must be in [0, 100]");
  }

  std::vector<std::size_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(cfg.seed);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  const auto n_val = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::lround(cfg.val_fraction * static_cast<double>(n))), 1,
      order.size() - 2);
  const std::span<const std::size_t> all(order);
  const Samples val = take_rows(genuine, all.first(n_val));
  const Samples train = take_rows(genuine, all.subspan(n_val));

  const auto grid = expand_grid(cfg.kind, cfg.grid, static_cast<int>(genuine.cols()), cfg.seed);
  const auto gs = grid_search(train, val, impostor_pool, grid, cfg.solver);

  UserTemplate t;
  t.user_id = user_id;
  t.kind = cfg.kind;
  t.params = gs.best;
  t.grid_eer = gs.best_eer;
  t.model = fit(genuine, gs.best, cfg.solver);
  t.threshold = quantile(threshold_scores(genuine, gs.best, t.model, cfg), cfg.threshold_percentile / 100.0);
  if (!std::isfinite(t.threshold)) throw InvariantError("enroll: non-finite threshold");
  return t;
}

Decision verify(const UserTemplate& t, const Eigen::VectorXd& embedding) {
  Decision d;
  d.score = score(t.model, embedding);
  d.accept = d.score >= t.threshold;
  return d;
}

namespace {

json params_json(const UserTemplate& t) {
  json p;
  if (const auto* m = std::get_if<OcSvmModel>(&t.model)) {
    p = {{"nu", m->nu},
         {"gamma", m->gamma},
         {"rho", m->rho},
         {"n_sv", m->support_vectors.rows()},
         {"dim", m->support_vectors.cols()},
         {"support_vectors", encode_matrix(m->support_vectors)},
         {"alpha", encode_matrix(m->alpha)}};
  } else if (const auto* m = std::get_if<LofModel>(&t.model)) {
    p = {{"k", m->k}, {"n", m->train.rows()}, {"dim", m->train.cols()}, {"train", encode_matrix(m->train)}};
  } else if (const auto* m = std::get_if<IForestModel>(&t.model)) {
    json trees = json::array();
    for (const auto& tree : m->trees) {
      json feature = json::array(), split = json::array(), left = json::array(),
           right = json::array(), size = json::array();
      for (const auto& nd : tree.nodes) {
        feature.push_back(nd.feature);
        split.push_back(nd.split);
        left.push_back(nd.left);
        right.push_back(nd.right);
        size.push_back(nd.size);
      }
      trees.push_back({{"feature", feature}, {"split", split}, {"left", left}, {"right", right}, {"size", size}});
    }
    p = {{"psi", m->psi}, {"seed", m->seed}, {"n_trees", m->trees.size()}, {"trees", trees}};
  }
  return p;
}

}  // namespace

std::string template_to_json(const UserTemplate& t) {
  nlohmann::ordered_json j;
  j["format"] = "touchauth-template";
  j["version"] = 1;
  j["user_id"] = t.user_id;
  j["kind"] = to_string(t.kind);
  j["threshold"] = t.threshold;
  j["grid_eer"] = t.grid_eer;
  j["embed_config_hash"] = t.embed_config_hash;
  j["created_at"] = t.created_at;
  j["enrolled_sessions"] = t.enrolled_sessions;
  j["params"] = params_json(t);
  return j.dump(1) + "\n";
}

UserTemplate template_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("template: ") + e.what());
  }
  try {
    if (j.at("format") != "touchauth-template") throw SchemaError("template: wrong format tag");
    UserTemplate t;
    t.user_id = j.at("user_id").get<std::string>();
    t.kind = classifier_from_string(j.at("kind").get<std::string>());
    t.threshold = j.at("threshold").get<double>();
    t.grid_eer = j.at("grid_eer").get<double>();
    t.embed_config_hash = j.at("embed_config_hash").get<std::string>();
    t.created_at = j.at("created_at").get<std::string>();
    t.enrolled_sessions = j.at("enrolled_sessions").get<std::vector<std::string>>();
    const auto& p = j.at("params");
    t.params.kind = t.kind;
    switch (t.kind) {
      case ClassifierKind::ocsvm: {
        OcSvmModel m;
        m.nu = p.at("nu").get<double>();
        m.gamma = p.at("gamma").get<double>();
        m.rho = p.at("rho").get<double>();
        const auto nsv = p.at("n_sv").get<Eigen::Index>();
        m.support_vectors = decode_matrix(p.at("support_vectors").get<std::string>(), nsv,
                                          p.at("dim").get<Eigen::Index>());
        m.alpha = decode_matrix(p.at("alpha").get<std::string>(), nsv, 1);
        t.params.nu = m.nu;
        t.params.gamma = m.gamma;
        t.model = std::move(m);
        break;
      }
      case ClassifierKind::lof: {
        const int k = p.at("k").get<int>();
        t.params.k = k;
        t.model = lof_fit(decode_matrix(p.at("train").get<std::string>(), p.at("n").get<Eigen::Index>(),
                                        p.at("dim").get<Eigen::Index>()),
                          k);
        break;
      }
      case ClassifierKind::iforest: {
        IForestModel m;
        m.psi = p.at("psi").get<int>();
        m.seed = p.at("seed").get<std::uint64_t>();
        for (const auto& tj : p.at("trees")) {
          IsoTree tree;
          const auto f = tj.at("feature").get<std::vector<int>>();
          const auto s = tj.at("split").get<std::vector<double>>();
          const auto l = tj.at("left").get<std::vector<int>>();
          const auto r = tj.at("right").get<std::vector<int>>();
          const auto z = tj.at("size").get<std::vector<int>>();
          if (s.size() != f.size() || l.size() != f.size() || r.size() != f.size() || z.size() != f.size()) {
            throw SchemaError("template: ragged tree arrays");
          }
          for (std::size_t i = 0; i < f.size(); ++i) {
            const int nn = static_cast<int>(f.size());
            if (f[i] >= 0 && (l[i] <= static_cast<int>(i) || r[i] <= static_cast<int>(i) || l[i] >= nn || r[i] >= nn)) {
              throw SchemaError("template: tree child index out of range");
            }
            tree.nodes.push_back({f[i], s[i], l[i], r[i], z[i]});
          }
          if (tree.nodes.empty()) throw SchemaError("template: empty tree");
          m.trees.push_back(std::move(tree));
        }
        t.params.psi = m.psi;
        t.params.seed = m.seed;
        t.params.n_trees = static_cast<int>(m.trees.size());
        t.model = std::move(m);
        break;
      }
    }
    if (!std::isfinite(t.threshold)) throw SchemaError("template: threshold must be finite");
    return t;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("template: ") + e.what());
  }
}

void save_template(const UserTemplate& t, const std::string& path) {
  write_text_file(path, template_to_json(t));
}

UserTemplate load_template(const std::string& path) { return template_from_json(read_text_file(path)); }

}  // namespace touchauth
