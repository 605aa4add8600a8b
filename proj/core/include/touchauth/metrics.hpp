#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace touchauth {

struct Confusion {
  std::int64_t ta = 0;  // genuine accepted
  std::int64_t tr = 0;  // impostor rejected
  std::int64_t fa = 0;  // impostor accepted
  std::int64_t fr = 0;  // genuine rejected
};

/// Undefined rates (zero denominator) are NaN with the matching flag cleared.
struct Rates {
  double far = 0.0;
  double frr = 0.0;
  double accuracy = 0.0;
  double bac = 0.0;
  bool far_defined = true;
  bool frr_defined = true;
  bool accuracy_defined = true;
  bool bac_defined = true;
};

Rates rates(const Confusion& c);

/// Accept when score >= threshold.
Confusion confusion_at(std::span<const double> genuine, std::span<const double> impostor,
                       double threshold);

struct RocPoint {
  double threshold = 0.0;
  double far = 0.0;
  double frr = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;  // ascending threshold, -inf first and +inf last
};

RocCurve roc(std::span<const double> genuine, std::span<const double> impostor);
double eer(const RocCurve& curve);
/// Threshold at the EER crossing (interpolated the same way as the rates).
double eer_threshold(const RocCurve& curve);
double eer(std::span<const double> genuine, std::span<const double> impostor);

struct Histogram {
  std::vector<double> edges;  // bins + 1
  std::vector<std::int64_t> genuine;
  std::vector<std::int64_t> impostor;
};

Histogram score_histogram(std::span<const double> genuine, std::span<const double> impostor,
                          int bins);

struct Projection {
  Eigen::MatrixXd coords;      // n x 2
  Eigen::MatrixXd components;  // d x 2
  Eigen::Vector2d eigenvalues = Eigen::Vector2d::Zero();
  bool rank_deficient = false;
};

/// Top-2 principal directions by power iteration with deflation.
Projection project_2d(const Eigen::MatrixXd& X, double tol = 1e-9, int max_iter = 1000);

std::string roc_csv(const RocCurve& curve);
std::string histogram_csv(const Histogram& h);
std::string projection_csv(const Projection& p, std::span<const std::string> ids,
                           std::span<const std::string> labels);

struct Summary {
  double eer = 0.0;
  double eer_threshold = 0.0;
  double bac_at_eer = 0.0;
  Rates at_threshold;
  double threshold = 0.0;
  std::int64_t n_genuine = 0;
  std::int64_t n_impostor = 0;
};

Summary summarize(std::span<const double> genuine, std::span<const double> impostor,
                  double threshold);
std::string summary_json(const Summary& s);

}  // namespace touchauth
