#include "touchauth/metrics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <limits>

#include "touchauth/util.hpp"

namespace touchauth {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double ratio(std::int64_t num, std::int64_t den, bool& defined) {
  defined = den > 0;
  return defined ? static_cast<double>(num) / static_cast<double>(den) : kNaN;
}

}  // namespace

Rates rates(const Confusion& c) {
  if (c.ta < 0 || c.tr < 0 || c.fa < 0 || c.fr < 0) throw InvariantError("confusion counts must be >= 0");
  Rates r;
  r.far = ratio(c.fa, c.fa + c.tr, r.far_defined);
  r.frr = ratio(c.fr, c.fr + c.ta, r.frr_defined);
  r.accuracy = ratio(c.ta + c.tr, c.ta + c.tr + c.fa + c.fr, r.accuracy_defined);
  r.bac_defined = r.far_defined && r.frr_defined;
  r.bac = r.bac_defined
              ? 0.5 * (static_cast<double>(c.ta) / static_cast<double>(c.ta + c.fr) +
                       static_cast<double>(c.tr) / static_cast<double>(c.tr + c.fa))
              : kNaN;
  return r;
}

Confusion confusion_at(std::span<const double> genuine, std::span<const double> impostor,
                       double threshold) {
  Confusion c;
  for (double s : genuine) (s >= threshold ? c.ta : c.fr)++;
  for (double s : impostor) (s >= threshold ? c.fa : c.tr)++;
  return c;
}

RocCurve roc(std::span<const double> genuine, std::span<const double> impostor) {
  if (genuine.empty() || impostor.empty()) throw InvariantError("roc: both score sets must be non-empty");
  std::vector<double> g(genuine.begin(), genuine.end());
  std::vector<double> im(impostor.begin(), impostor.end());
  for (double s : g)
    if (std::isnan(s)) throw InvariantError("roc: NaN score");
  for (double s : im)
    if (std::isnan(s)) throw InvariantError("roc: NaN score");
  std::sort(g.begin(), g.end());
  std::sort(im.begin(), im.end());

  std::vector<double> thr;
  thr.reserve(g.size() + im.size() + 2);
  thr.push_back(-kInf);
  std::merge(g.begin(), g.end(), im.begin(), im.end(), std::back_inserter(thr));
  thr.push_back(kInf);
  thr.erase(std::unique(thr.begin(), thr.end()), thr.end());

  const auto ng = static_cast<double>(g.size());
  const auto ni = static_cast<double>(im.size());
  RocCurve curve;
  curve.points.reserve(thr.size());
  for (double t : thr) {
    const auto below_g = std::lower_bound(g.begin(), g.end(), t) - g.begin();
    const auto below_i = std::lower_bound(im.begin(), im.end(), t) - im.begin();
    // The +inf sentinel rejects everything, including scores equal to +inf.
    const bool top = t == kInf;
    curve.points.push_back({t, top ? 0.0 : (ni - static_cast<double>(below_i)) / ni,
                            top ? 1.0 : static_cast<double>(below_g) / ng});
  }
  return curve;
}

namespace {

struct Crossing {
  double rate = 0.0;
  double threshold = 0.0;
};

Crossing crossing(const RocCurve& curve) {
  const auto& p = curve.points;
  if (p.empty()) throw InvariantError("eer: empty curve");
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double d = p[k].far - p[k].frr;
    if (d == 0.0) return {p[k].far, p[k].threshold};
    if (k + 1 < p.size()) {
      const double dn = p[k + 1].far - p[k + 1].frr;
      if (d > 0.0 && dn < 0.0) {
        const double s = d / (d - dn);
        const double rate = p[k].far + s * (p[k + 1].far - p[k].far);
        double t;
        if (std::isinf(p[k].threshold)) {
          t = p[k + 1].threshold;
        } else if (std::isinf(p[k + 1].threshold)) {
          t = p[k].threshold;
        } else {
          t = p[k].threshold + s * (p[k + 1].threshold - p[k].threshold);
        }
        return {rate, t};
      }
    }
  }
  throw InvariantError("eer: FAR - FRR never changes sign");
}

}  // namespace

double eer(const RocCurve& curve) { return crossing(curve).rate; }
double eer_threshold(const RocCurve& curve) { return crossing(curve).threshold; }

double eer(std::span<const double> genuine, std::span<const double> impostor) {
  return eer(roc(genuine, impostor));
}

Histogram score_histogram(std::span<const double> genuine, std::span<const double> impostor,
                          int bins) {
  if (bins < 2) throw InvariantError("score_histogram: bins must be >= 2");
  double lo = kInf, hi = -kInf;
  for (auto set : {genuine, impostor}) {
    for (double s : set) {
      if (!std::isfinite(s)) throw InvariantError("score_histogram: non-finite score");
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
  }
  if (lo > hi) lo = hi = 0.0;
  const double width = hi > lo ? hi - lo : 1.0;
  Histogram h;
  for (int b = 0; b <= bins; ++b) h.edges.push_back(lo + width * b / bins);
  h.genuine.assign(bins, 0);
  h.impostor.assign(bins, 0);
  auto bin_of = [&](double s) {
    const auto b = static_cast<int>(std::floor((s - lo) / width * bins));
    return std::clamp(b, 0, bins - 1);
  };
  for (double s : genuine) h.genuine[bin_of(s)]++;
  for (double s : impostor) h.impostor[bin_of(s)]++;
  return h;
}

Projection project_2d(const Eigen::MatrixXd& X, double tol, int max_iter) {
  const auto n = X.rows();
  const auto d = X.cols();
  if (n < 3) throw InvariantError("project_2d: need at least 3 points");
  const Eigen::MatrixXd centered = X.rowwise() - X.colwise().mean();
  Eigen::MatrixXd C = centered.transpose() * centered / static_cast<double>(n - 1);

  Projection out;
  out.components = Eigen::MatrixXd::Zero(d, 2);
  Rng rng(0x70ca);
  double first = 0.0;
  for (int comp = 0; comp < 2; ++comp) {
    Eigen::VectorXd v(d);
    for (Eigen::Index i = 0; i < d; ++i) v(i) = rng.normal();
    v.normalize();
    double lambda = 0.0;
    for (int it = 0; it < max_iter; ++it) {
      Eigen::VectorXd w = C * v;
      const double nw = w.norm();
      if (nw == 0.0) {
        lambda = 0.0;
        break;
      }
      w /= nw;
      const double delta = std::min((w - v).norm(), (w + v).norm());
      v = w;
      lambda = v.dot(C * v);
      if (delta < tol) break;
    }
    const bool degenerate = comp == 0 ? lambda <= 1e-300 : lambda <= 1e-12 * first;
    if (degenerate) {
      out.rank_deficient = true;
      break;
    }
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    out.components.col(comp) = v;
    out.eigenvalues(comp) = lambda;
    if (comp == 0) first = lambda;
    C -= lambda * v * v.transpose();
  }
  out.coords = centered * out.components;
  return out;
}

std::string roc_csv(const RocCurve& curve) {
  std::string out = "threshold,far,frr\n";
  for (const auto& p : curve.points) {
    const std::string t = std::isinf(p.threshold) ? (p.threshold > 0 ? "inf" : "-inf") : fixed6(p.threshold);
    out += t + "," + fixed6(p.far) + "," + fixed6(p.frr) + "\n";
  }
  return out;
}

std::string histogram_csv(const Histogram& h) {
  std::string out = "bin_lo,bin_hi,genuine,impostor\n";
  for (std::size_t b = 0; b < h.genuine.size(); ++b) {
    out += fixed6(h.edges[b]) + "," + fixed6(h.edges[b + 1]) + "," + std::to_string(h.genuine[b]) +
           "," + std::to_string(h.impostor[b]) + "\n";
  }
  return out;
}

std::string projection_csv(const Projection& p, std::span<const std::string> ids,
                           std::span<const std::string> labels) {
  if (static_cast<Eigen::Index>(ids.size()) != p.coords.rows() || labels.size() != ids.size()) {
    throw InvariantError("projection_csv: id/label count mismatch");
  }
  std::string out = "session_id,label,pc1,pc2\n";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out += ids[i] + "," + labels[i] + "," + fixed6(p.coords(i, 0)) + "," + fixed6(p.coords(i, 1)) + "\n";
  }
  return out;
}

Summary summarize(std::span<const double> genuine, std::span<const double> impostor,
                  double threshold) {
  Summary s;
  const auto curve = roc(genuine, impostor);
  const auto c = crossing(curve);
  s.eer = c.rate;
  s.eer_threshold = c.threshold;
  s.bac_at_eer = 1.0 - c.rate;
  s.threshold = threshold;
  s.at_threshold = rates(confusion_at(genuine, impostor, threshold));
  s.n_genuine = static_cast<std::int64_t>(genuine.size());
  s.n_impostor = static_cast<std::int64_t>(impostor.size());
  return s;
}

std::string summary_json(const Summary& s) {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  nlohmann::ordered_json j;
  j["accept_rule"] = "score >= threshold";
  j["eer"] = num(s.eer);
  j["eer_threshold"] = num(s.eer_threshold);
  j["bac_at_eer"] = num(s.bac_at_eer);
  j["threshold"] = num(s.threshold);
  j["bac_at_threshold"] = num(s.at_threshold.bac);
  j["far"] = num(s.at_threshold.far);
  j["frr"] = num(s.at_threshold.frr);
  j["accuracy"] = num(s.at_threshold.accuracy);
  j["n_genuine"] = s.n_genuine;
  j["n_impostor"] = s.n_impostor;
  return j.dump(2) + "\n";
}

}  // namespace touchauth
