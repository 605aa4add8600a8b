#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "touchauth/embed.hpp"

namespace touchauth {

using nlohmann::json;

std::string to_string(Modality m) {
  switch (m) {
    case Modality::fused: return "fused";
    case Modality::cap_only: return "cap_only";
    case Modality::imu_only: return "imu_only";
  }
  return "fused";
}

Modality modality_from_string(const std::string& s) {
  if (s == "fused") return Modality::fused;
  if (s == "cap_only") return Modality::cap_only;
  if (s == "imu_only") return Modality::imu_only;
  throw SchemaError("unknown modality '" + s + "'");
}

namespace {

Eigen::MatrixXd leaky(const Eigen::MatrixXd& z, double slope) {
  return z.unaryExpr([slope](double v) { return v > 0.0 ? v : slope * v; });
}

}  // namespace

FusionParams FusionParams::zeros_like(const FusionParams& p) {
  return {Eigen::MatrixXd::Zero(p.W1.rows(), p.W1.cols()), Eigen::VectorXd::Zero(p.b1.size()),
          Eigen::MatrixXd::Zero(p.W2.rows(), p.W2.cols()), Eigen::VectorXd::Zero(p.b2.size()),
          Eigen::MatrixXd::Zero(p.Wc.rows(), p.Wc.cols()), Eigen::VectorXd::Zero(p.bc.size())};
}

FusionParams FusionParams::init(int input, int hidden, int output, int classes, Rng& rng) {
  auto he = [&rng](int rows, int cols) {
    Eigen::MatrixXd m(rows, cols);
    const double sd = std::sqrt(2.0 / cols);
    // Fill row-major so the draw order does not depend on storage order.
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) m(r, c) = sd * rng.normal();
    return m;
  };
  FusionParams p;
  p.W1 = he(hidden, input);
  p.b1 = Eigen::VectorXd::Zero(hidden);
  p.W2 = he(output, hidden);
  p.b2 = Eigen::VectorXd::Zero(output);
  p.Wc = he(classes, output);
  p.bc = Eigen::VectorXd::Zero(classes);
  return p;
}

FusionModel::FusionModel(Eigen::MatrixXd W1, Eigen::VectorXd b1, Eigen::MatrixXd W2,
                         Eigen::VectorXd b2, Eigen::VectorXd norm_mean, Eigen::VectorXd norm_std,
                         int cap_dim)
    : W1_(std::move(W1)),
      b1_(std::move(b1)),
      W2_(std::move(W2)),
      b2_(std::move(b2)),
      norm_mean_(std::move(norm_mean)),
      norm_std_(std::move(norm_std)),
      cap_dim_(cap_dim) {
  check_dims();
}

void FusionModel::check_dims() const {
  const auto d = W1_.cols();
  if (b1_.size() != W1_.rows() || W2_.cols() != W1_.rows() || b2_.size() != W2_.rows() ||
      norm_mean_.size() != d || norm_std_.size() != d) {
    throw InvariantError("fusion model: inconsistent layer dimensions");
  }
  if (cap_dim_ < 0 || cap_dim_ > d) throw InvariantError("fusion model: cap_dim out of range");
  if ((norm_std_.array() <= 0.0).any()) throw InvariantError("fusion model: norm_std must be > 0");
  if (!W1_.allFinite() || !W2_.allFinite() || !b1_.allFinite() || !b2_.allFinite()) {
    throw InvariantError("fusion model: non-finite weights");
  }
}

Eigen::VectorXd FusionModel::normalize(const Eigen::VectorXd& x) const {
  if (x.size() != input_dim()) {
    throw InvariantError("fusion forward: input has " + std::to_string(x.size()) +
                         " values, expected " + std::to_string(input_dim()));
  }
  Eigen::VectorXd z = (x - norm_mean_).cwiseQuotient(norm_std_);
  if (modality == Modality::cap_only) z.tail(input_dim() - cap_dim_).setZero();
  if (modality == Modality::imu_only) z.head(cap_dim_).setZero();
  return z;
}

Eigen::VectorXd FusionModel::hidden(const Eigen::VectorXd& x) const {
  return leaky(W1_ * normalize(x) + b1_, leaky_slope);
}

Eigen::VectorXd FusionModel::forward_joined(const Eigen::VectorXd& x) const {
  return W2_ * hidden(x) + b2_;
}

Eigen::VectorXd FusionModel::forward(const Eigen::VectorXd& cap, const Eigen::VectorXd& imu) const {
  Eigen::VectorXd x(cap.size() + imu.size());
  x << cap, imu;
  return forward_joined(x);
}

Eigen::VectorXd FusionModel::forward_train(const Eigen::VectorXd& cap, const Eigen::VectorXd& imu,
                                           Rng& rng) const {
  Eigen::VectorXd x(cap.size() + imu.size());
  x << cap, imu;
  Eigen::VectorXd h = hidden(x);
  const double keep = 1.0 - dropout_p;
  for (Eigen::Index i = 0; i < h.size(); ++i) h(i) = rng.uniform() < dropout_p ? 0.0 : h(i) / keep;
  return W2_ * h + b2_;
}

void FusionModel::standardize_output(const Eigen::VectorXd& mean, const Eigen::VectorXd& std) {
  if (mean.size() != output_dim() || std.size() != output_dim()) {
    throw InvariantError("standardize_output: dimension mismatch");
  }
  const Eigen::VectorXd inv = std.cwiseInverse();
  W2_ = inv.asDiagonal() * W2_;
  b2_ = inv.cwiseProduct(b2_ - mean);
  if (impostor_pool.size() > 0) {
    impostor_pool = (impostor_pool.rowwise() - mean.transpose()) * inv.asDiagonal();
  }
}

std::string encode_matrix(const Eigen::MatrixXd& m) {
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(m.size()) * sizeof(double));
  std::size_t off = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double v = m(r, c);
      std::memcpy(bytes.data() + off, &v, sizeof(double));
      off += sizeof(double);
    }
  }
  return base64_encode(bytes);
}

Eigen::MatrixXd decode_matrix(const std::string& blob, Eigen::Index rows, Eigen::Index cols) {
  const auto bytes = base64_decode(blob);
  if (bytes.size() != static_cast<std::size_t>(rows * cols) * sizeof(double)) {
    throw SchemaError("matrix blob has " + std::to_string(bytes.size()) + " bytes, expected " +
                      std::to_string(rows * cols * sizeof(double)));
  }
  Eigen::MatrixXd m(rows, cols);
  std::size_t off = 0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      std::memcpy(&m(r, c), bytes.data() + off, sizeof(double));
      off += sizeof(double);
    }
  }
  return m;
}

namespace {

json hyper_json(const EmbedConfig& c) {
  return {{"hidden", c.hidden},     {"output", c.output},   {"lr", c.lr},
          {"epochs", c.epochs},     {"batch", c.batch},     {"momentum", c.momentum},
          {"seed", c.seed},         {"leaky_slope", c.leaky_slope}, {"dropout_p", c.dropout_p},
          {"standardize_output", c.standardize_output}, {"modality", to_string(c.modality)}};
}

Eigen::VectorXd decode_vector(const json& j, const char* key, Eigen::Index n) {
  return decode_matrix(j.at(key).get<std::string>(), n, 1);
}

}  // namespace

std::string FusionModel::to_json() const {
  json j;
  j["format"] = "touchauth-fusion-model";
  j["version"] = 1;
  j["input_dim"] = input_dim();
  j["hidden_dim"] = hidden_dim();
  j["output_dim"] = output_dim();
  j["cap_dim"] = cap_dim_;
  j["modality"] = to_string(modality);
  j["leaky_slope"] = leaky_slope;
  j["dropout_p"] = dropout_p;
  j["hyper"] = hyper_json(hyper);
  j["W1"] = encode_matrix(W1_);
  j["b1"] = encode_matrix(b1_);
  j["W2"] = encode_matrix(W2_);
  j["b2"] = encode_matrix(b2_);
  j["norm_mean"] = encode_matrix(norm_mean_);
  j["norm_std"] = encode_matrix(norm_std_);
  j["impostor_pool"] = {{"rows", impostor_pool.rows()}, {"data", encode_matrix(impostor_pool)}};
  return j.dump(1) + "\n";
}

FusionModel FusionModel::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("model file: ") + e.what());
  }
  try {
    if (j.at("format") != "touchauth-fusion-model") throw SchemaError("model file: wrong format tag");
    const Eigen::Index d = j.at("input_dim").get<Eigen::Index>();
    const Eigen::Index h = j.at("hidden_dim").get<Eigen::Index>();
    const Eigen::Index e = j.at("output_dim").get<Eigen::Index>();
    FusionModel m(decode_matrix(j.at("W1").get<std::string>(), h, d), decode_vector(j, "b1", h),
                  decode_matrix(j.at("W2").get<std::string>(), e, h), decode_vector(j, "b2", e),
                  decode_vector(j, "norm_mean", d), decode_vector(j, "norm_std", d),
                  j.at("cap_dim").get<int>());
    m.modality = modality_from_string(j.at("modality").get<std::string>());
    m.leaky_slope = j.at("leaky_slope").get<double>();
    m.dropout_p = j.at("dropout_p").get<double>();
    const auto& hy = j.at("hyper");
    m.hyper.hidden = hy.at("hidden").get<int>();
    m.hyper.output = hy.at("output").get<int>();
    m.hyper.lr = hy.at("lr").get<double>();
    m.hyper.epochs = hy.at("epochs").get<int>();
    m.hyper.batch = hy.at("batch").get<int>();
    m.hyper.momentum = hy.at("momentum").get<double>();
    m.hyper.seed = hy.at("seed").get<std::uint64_t>();
    m.hyper.leaky_slope = hy.at("leaky_slope").get<double>();
    m.hyper.dropout_p = hy.at("dropout_p").get<double>();
    m.hyper.standardize_output = hy.at("standardize_output").get<bool>();
    m.hyper.modality = modality_from_string(hy.at("modality").get<std::string>());
    const auto& pool = j.at("impostor_pool");
    m.impostor_pool =
        decode_matrix(pool.at("data").get<std::string>(), pool.at("rows").get<Eigen::Index>(), e);
    return m;
  } catch (const json::exception& ex) {
    throw SchemaError(std::string("model file: ") + ex.what());
  }
}

std::string FusionModel::config_hash() const {
  std::string acc = to_string(modality);
  for (const Eigen::MatrixXd* m : {&W1_, &W2_}) acc += encode_matrix(*m);
  for (const Eigen::VectorXd* v : {&b1_, &b2_, &norm_mean_, &norm_std_}) acc += encode_matrix(*v);
  return hex64(fnv1a64(acc));
}

void save_model(const FusionModel& model, const std::string& path) {
  write_text_file(path, model.to_json());
}

FusionModel load_model(const std::string& path) { return FusionModel::from_json(read_text_file(path)); }

double fusion_loss(const FusionParams& p, const Eigen::MatrixXd& X, std::span<const int> labels,
                   double slope, const Eigen::MatrixXd* dropout, FusionParams* grad) {
  const auto B = X.cols();
  if (static_cast<std::size_t>(B) != labels.size()) throw InvariantError("fusion_loss: label count");
  const Eigen::MatrixXd Z1 = (p.W1 * X).colwise() + p.b1;
  Eigen::MatrixXd H = leaky(Z1, slope);
  if (dropout) H.array() *= dropout->array();
  const Eigen::MatrixXd E = (p.W2 * H).colwise() + p.b2;
  Eigen::MatrixXd S = (p.Wc * E).colwise() + p.bc;

  double loss = 0.0;
  for (Eigen::Index b = 0; b < B; ++b) {
    const double mx = S.col(b).maxCoeff();
    S.col(b).array() = (S.col(b).array() - mx).exp();
    const double z = S.col(b).sum();
    S.col(b) /= z;
    loss -= std::log(std::max(S(labels[b], b), 1e-300));
  }
  loss /= static_cast<double>(B);
  if (!grad) return loss;

  Eigen::MatrixXd dS = S;
  for (Eigen::Index b = 0; b < B; ++b) dS(labels[b], b) -= 1.0;
  dS /= static_cast<double>(B);
  grad->Wc.noalias() = dS * E.transpose();
  grad->bc = dS.rowwise().sum();
  const Eigen::MatrixXd dE = p.Wc.transpose() * dS;
  grad->W2.noalias() = dE * H.transpose();
  grad->b2 = dE.rowwise().sum();
  Eigen::MatrixXd dZ = p.W2.transpose() * dE;
  if (dropout) dZ.array() *= dropout->array();
  dZ.array() *= Z1.array().unaryExpr([slope](double v) { return v > 0.0 ? 1.0 : slope; });
  grad->W1.noalias() = dZ * X.transpose();
  grad->b1 = dZ.rowwise().sum();
  return loss;
}

namespace {

void sgd_step(Eigen::MatrixXd& w, Eigen::MatrixXd& v, const Eigen::MatrixXd& g, double lr, double mu) {
  v = mu * v + g;
  w -= lr * v;
}

void sgd_step(Eigen::VectorXd& w, Eigen::VectorXd& v, const Eigen::VectorXd& g, double lr, double mu) {
  v = mu * v + g;
  w -= lr * v;
}

}  // namespace

TrainingResult fusion_train(const Eigen::MatrixXd& inputs, std::span<const int> labels, int cap_dim,
                            const EmbedConfig& cfg) {
  const auto n = inputs.rows();
  const auto d = inputs.cols();
  if (static_cast<std::size_t>(n) != labels.size()) throw InvariantError("fusion_train: label count");
  if (cfg.hidden < 1 || cfg.output < 1 || cfg.batch < 1 || cfg.epochs < 0) {
    throw InvariantError("fusion_train: invalid hyperparameters");
  }
  if (!(cfg.dropout_p >= 0.0 && cfg.dropout_p < 1.0)) throw InvariantError("fusion_train: dropout_p");
  if (!inputs.allFinite()) throw InvariantError("fusion_train: non-finite descriptor");
  std::set<int> classes(labels.begin(), labels.end());
  if (classes.size() < 2) {
    throw DegenerateInputError("fusion_train: need at least 2 classes, got " +
                               std::to_string(classes.size()));
  }
  if (*classes.begin() < 0) throw InvariantError("fusion_train: negative label");
  const int n_classes = *classes.rbegin() + 1;

  Eigen::VectorXd mean = inputs.colwise().mean().transpose();
  Eigen::VectorXd sd =
      ((inputs.rowwise() - mean.transpose()).array().square().colwise().mean()).sqrt().transpose();
  for (Eigen::Index i = 0; i < sd.size(); ++i)
    if (!(sd(i) > 1e-12)) sd(i) = 1.0;

  Rng rng(cfg.seed);
  FusionParams p = FusionParams::init(static_cast<int>(d), cfg.hidden, cfg.output, n_classes, rng);

  FusionModel shell(p.W1, p.b1, p.W2, p.b2, mean, sd, cap_dim);
  shell.modality = cfg.modality;
  Eigen::MatrixXd X(d, n);
  for (Eigen::Index i = 0; i < n; ++i) X.col(i) = shell.normalize(inputs.row(i).transpose());

  FusionParams vel = FusionParams::zeros_like(p);
  FusionParams g = FusionParams::zeros_like(p);
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  const double keep = 1.0 - cfg.dropout_p;

  TrainingLog log;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch);
      const auto bs = static_cast<Eigen::Index>(stop - start);
      Eigen::MatrixXd xb(d, bs);
      std::vector<int> yb(bs);
      for (Eigen::Index b = 0; b < bs; ++b) {
        xb.col(b) = X.col(order[start + b]);
        yb[b] = labels[order[start + b]];
      }
      Eigen::MatrixXd mask(cfg.hidden, bs);
      for (Eigen::Index b = 0; b < bs; ++b)
        for (int h = 0; h < cfg.hidden; ++h)
          mask(h, b) = rng.uniform() < cfg.dropout_p ? 0.0 : 1.0 / keep;
      fusion_loss(p, xb, yb, cfg.leaky_slope, &mask, &g);
      sgd_step(p.W1, vel.W1, g.W1, cfg.lr, cfg.momentum);
      sgd_step(p.b1, vel.b1, g.b1, cfg.lr, cfg.momentum);
      sgd_step(p.W2, vel.W2, g.W2, cfg.lr, cfg.momentum);
      sgd_step(p.b2, vel.b2, g.b2, cfg.lr, cfg.momentum);
      sgd_step(p.Wc, vel.Wc, g.Wc, cfg.lr, cfg.momentum);
      sgd_step(p.bc, vel.bc, g.bc, cfg.lr, cfg.momentum);
    }
    if (!p.W1.allFinite() || !p.W2.allFinite()) {
      throw ConvergenceError("fusion_train: weights diverged at epoch " + std::to_string(epoch + 1),
                             std::numeric_limits<double>::infinity());
    }

    const Eigen::MatrixXd Z1 = (p.W1 * X).colwise() + p.b1;
    Eigen::MatrixXd S = (p.Wc * ((p.W2 * leaky(Z1, cfg.leaky_slope)).colwise() + p.b2)).colwise() + p.bc;
    double loss = 0.0;
    int correct = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index arg = 0;
      const double mx = S.col(i).maxCoeff(&arg);
      correct += static_cast<int>(arg) == labels[i];
      loss += std::log((S.col(i).array() - mx).exp().sum()) - (S(labels[i], i) - mx);
    }
    loss /= static_cast<double>(n);
    log.loss.push_back(loss);
    log.accuracy.push_back(static_cast<double>(correct) / static_cast<double>(n));
  }

  TrainingResult result{FusionModel(p.W1, p.b1, p.W2, p.b2, mean, sd, cap_dim), p, std::move(log)};
  auto& model = result.model;
  model.modality = cfg.modality;
  model.leaky_slope = cfg.leaky_slope;
  model.dropout_p = cfg.dropout_p;
  model.hyper = cfg;
  if (cfg.standardize_output) {
    const Eigen::MatrixXd E =
        (p.W2 * leaky((p.W1 * X).colwise() + p.b1, cfg.leaky_slope)).colwise() + p.b2;
    const Eigen::VectorXd emean = E.rowwise().mean();
    Eigen::VectorXd esd = (E.colwise() - emean).array().square().rowwise().mean().sqrt();
    for (Eigen::Index i = 0; i < esd.size(); ++i)
      if (!(esd(i) > 1e-12)) esd(i) = 1.0;
    model.standardize_output(emean, esd);
  }
  return result;
}

void write_embeddings_csv(const std::string& path, std::span<const std::string> ids,
                          const Eigen::MatrixXd& rows) {
  if (static_cast<Eigen::Index>(ids.size()) != rows.rows()) {
    throw InvariantError("write_embeddings_csv: id count does not match rows");
  }
  std::string out = "session_id";
  for (Eigen::Index c = 0; c < rows.cols(); ++c) out += ",e" + std::to_string(c);
  out += '\n';
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    out += ids[r];
    for (Eigen::Index c = 0; c < rows.cols(); ++c) {
      out += ',';
      out += fixed6(rows(r, c));
    }
    out += '\n';
  }
  write_text_file(path, out);
}

EmbeddingMap load_external_embeddings(const std::string& path, int dim) {
  std::istringstream in(read_text_file(path));
  std::string line;
  if (!std::getline(in, line) || line.rfind("session_id", 0) != 0) {
    throw SchemaError(path + ": missing 'session_id,e0,...' header");
  }
  EmbeddingMap out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string_view> fields;
    std::string_view rest(line);
    for (;;) {
      const auto pos = rest.find(',');
      fields.push_back(rest.substr(0, pos));
      if (pos == std::string_view::npos) break;
      rest.remove_prefix(pos + 1);
    }
    const auto where = path + " line " + std::to_string(lineno);
    if (static_cast<int>(fields.size()) - 1 != dim) {
      throw SchemaError(where + ": row has " + std::to_string(fields.size() - 1) +
                        " values, expected " + std::to_string(dim));
    }
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i) {
      const auto f = fields[i + 1];
      const auto res = std::from_chars(f.data(), f.data() + f.size(), v(i));
      if (res.ec != std::errc() || res.ptr != f.data() + f.size() || !std::isfinite(v(i))) {
        throw ParseError(where + ": bad value in column " + std::to_string(i + 1));
      }
    }
    std::string id(fields[0]);
    if (id.empty()) throw SchemaError(where + ": empty session id");
    if (!out.emplace(id, std::move(v)).second) throw SchemaError(where + ": duplicate id '" + id + "'");
  }
  return out;
}

}  // namespace touchauth
