#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "touchauth/util.hpp"

namespace touchauth {

/// Samples are matrix rows throughout this module.
using Samples = Eigen::MatrixXd;

// ---- OC-SVM -------------------------------------------------------------

struct OcSvmSolution {
  Eigen::VectorXd alpha;
  double rho = 0.0;
  double max_violation = 0.0;
  double objective = 0.0;  // 0.5 * a'Ka
  long iterations = 0;
};

/// SMO on min 0.5 a'Ka s.t. 0 <= a_i <= 1/(nu n), sum a = 1, picking the
/// maximal violating pair each step. Throws ConvergenceError after max_iter.
OcSvmSolution ocsvm_solve(const Eigen::MatrixXd& K, double nu, double tol = 1e-6,
                          long max_iter = 10'000'000);

Eigen::MatrixXd rbf_kernel(const Samples& X, double gamma);

struct OcSvmModel {
  Samples support_vectors;
  Eigen::VectorXd alpha;
  double rho = 0.0;
  double gamma = 0.0;
  double nu = 0.0;
  double max_violation = 0.0;
};

OcSvmModel ocsvm_train(const Samples& X, double nu, double gamma, double tol = 1e-6,
                       long max_iter = 10'000'000);
/// sum_i a_i exp(-gamma |x_i - x|^2) - rho; higher is more genuine.
double ocsvm_score(const OcSvmModel& m, const Eigen::VectorXd& x);

// ---- LOF ----------------------------------------------------------------

struct LofModel {
  Samples train;
  int k = 0;
  std::vector<double> k_distance;
  std::vector<double> lrd;
};

LofModel lof_fit(const Samples& X, int k);
/// -LOF(x) against the full training set.
double lof_score(const LofModel& m, const Eigen::VectorXd& x);
/// -LOF of training point i with itself excluded from its neighborhood.
double lof_score_train(const LofModel& m, Eigen::Index i);

// ---- Isolation forest ---------------------------------------------------

struct IsoNode {
  int feature = -1;  // -1 marks an external node
  double split = 0.0;
  int left = -1;
  int right = -1;
  int size = 0;
};

struct IsoTree {
  std::vector<IsoNode> nodes;  // nodes[0] is the root
  int height() const;
};

struct IForestModel {
  std::vector<IsoTree> trees;
  int psi = 0;
  std::uint64_t seed = 0;
};

/// Average path length of an unsuccessful BST search over n points.
double iforest_c(double n);

IForestModel iforest_fit(const Samples& X, int n_trees, int psi, std::uint64_t seed);
double iforest_path_length(const IForestModel& m, const Eigen::VectorXd& x);
/// 2^(-E[h(x)] / c(psi)).
double iforest_anomaly(const IForestModel& m, const Eigen::VectorXd& x);
/// -anomaly; higher is more genuine.
double iforest_score(const IForestModel& m, const Eigen::VectorXd& x);

// ---- Common interface ---------------------------------------------------

enum class ClassifierKind { ocsvm, lof, iforest };
std::string to_string(ClassifierKind k);
ClassifierKind classifier_from_string(const std::string& s);

struct ClassifierParams {
  ClassifierKind kind = ClassifierKind::ocsvm;
  double nu = 0.1;
  double gamma = 1.0 / 320.0;
  int k = 10;
  int psi = 256;
  int n_trees = 100;
  std::uint64_t seed = 0;

  bool operator==(const ClassifierParams&) const = default;
};

using OneClassModel = std::variant<OcSvmModel, LofModel, IForestModel>;

struct SolverOptions {
  double kkt_tol = 1e-6;
  long max_iter = 10'000'000;
};

OneClassModel fit(const Samples& X, const ClassifierParams& p, const SolverOptions& opt = {});
double score(const OneClassModel& m, const Eigen::VectorXd& x);
std::vector<double> score_all(const OneClassModel& m, const Samples& X);
/// In-sample scores of the training rows (LOF excludes each point from its own
/// neighborhood).
std::vector<double> training_scores(const OneClassModel& m, const Samples& train);

struct GridConfig {
  std::vector<double> nu = {0.01, 0.05, 0.1, 0.2};
  /// Multiplied by 1/d at search time.
  std::vector<double> gamma_scale = {0.1, 1.0, 10.0};
  std::vector<int> k = {5, 10, 20};
  std::vector<int> psi = {64, 128, 256};
  int n_trees = 100;
};

/// Grid points in search order for the given kind and dimension.
std::vector<ClassifierParams> expand_grid(ClassifierKind kind, const GridConfig& grid, int dim,
                                          std::uint64_t seed);

struct GridResult {
  ClassifierParams best;
  double best_eer = 1.0;
  std::vector<double> eers;  // per grid point, NaN when a point was infeasible
};

GridResult grid_search(const Samples& genuine_train, const Samples& genuine_val,
                       const Samples& impostor_val, const std::vector<ClassifierParams>& grid,
                       const SolverOptions& opt = {});

struct EnrollConfig {
  ClassifierKind kind = ClassifierKind::ocsvm;
  GridConfig grid;
  double threshold_percentile = 2.0;
  /// The threshold percentile is taken over out-of-fold scores from this many
  /// folds; 0 or 1 uses in-sample scores. LOF always scores training points
  /// with themselves excluded.
  int threshold_folds = 5;
  double val_fraction = 0.2;
  int min_samples = 20;
  std::uint64_t seed = 0;
  SolverOptions solver;
};

struct UserTemplate {
  std::string user_id;
  ClassifierKind kind = ClassifierKind::ocsvm;
  ClassifierParams params;
  OneClassModel model;
  double threshold = 0.0;
  double grid_eer = 0.0;
  std::string embed_config_hash;
  std::string created_at;
  std::vector<std::string> enrolled_sessions;
};

UserTemplate enroll(const std::string& user_id, const Samples& genuine, const Samples& impostor_pool,
                    const EnrollConfig& cfg);

struct Decision {
  double score = 0.0;
  bool accept = false;
};

Decision verify(const UserTemplate& t, const Eigen::VectorXd& embedding);

std::string template_to_json(const UserTemplate& t);
UserTemplate template_from_json(const std::string& text);
void save_template(const UserTemplate& t, const std::string& path);
UserTemplate load_template(const std::string& path);

}  // namespace touchauth
