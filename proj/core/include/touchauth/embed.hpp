#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "touchauth/capsense.hpp"
#include "touchauth/motion.hpp"
#include "touchauth/util.hpp"

namespace touchauth {

inline constexpr int kFrameFeatures = 8;
inline constexpr int kCapDownsample = 64;
inline constexpr int kImuChannels = 6;
inline constexpr int kPoolGrid = 4;
inline constexpr int kImuChannelFeatures = kPoolGrid * kPoolGrid + 6;

inline constexpr int cap_descriptor_size(int n_frames) {
  return kFrameFeatures * n_frames + kCapDownsample;
}
inline constexpr int kImuDescriptorSize = kImuChannels * kImuChannelFeatures;

/// Per frame: energy, cell count, centroid x/y, weighted var_x, var_y, cov_xy,
/// peak; then a uniform downsample of the smoothed flattened sequence.
Eigen::VectorXd cap_descriptor(const CapSequence& seq, const TouchTrack& track,
                               int smooth_window = 5);

/// Per motion channel: 4x4 mean-pooled dB spectrogram, then mean, std, RMS,
/// skewness, excess kurtosis and time-averaged spectral centroid.
Eigen::VectorXd imu_descriptor(const MotionSegment& segment, double fs, int stft_win = 32,
                               int stft_hop = 8);

enum class Modality { fused, cap_only, imu_only };
std::string to_string(Modality m);
Modality modality_from_string(const std::string& s);

struct EmbedConfig {
  int hidden = 512;
  int output = 320;
  double lr = 0.01;
  int epochs = 50;
  int batch = 32;
  double momentum = 0.9;
  double leaky_slope = 0.01;
  double dropout_p = 0.3;
  std::uint64_t seed = 11;
  /// Rescale outputs to zero mean / unit variance over the training inputs.
  bool standardize_output = true;
  Modality modality = Modality::fused;
};

/// Weights of the two layers plus the temporary classification head.
struct FusionParams {
  Eigen::MatrixXd W1;
  Eigen::VectorXd b1;
  Eigen::MatrixXd W2;
  Eigen::VectorXd b2;
  Eigen::MatrixXd Wc;
  Eigen::VectorXd bc;

  static FusionParams zeros_like(const FusionParams& p);
  /// He-style init: N(0, 2 / fan_in) weights, zero biases.
  static FusionParams init(int input, int hidden, int output, int classes, Rng& rng);
};

class FusionModel {
 public:
  FusionModel() = default;
  FusionModel(Eigen::MatrixXd W1, Eigen::VectorXd b1, Eigen::MatrixXd W2, Eigen::VectorXd b2,
              Eigen::VectorXd norm_mean, Eigen::VectorXd norm_std, int cap_dim);

  int input_dim() const { return static_cast<int>(W1_.cols()); }
  int hidden_dim() const { return static_cast<int>(W1_.rows()); }
  int output_dim() const { return static_cast<int>(W2_.rows()); }
  int cap_dim() const { return cap_dim_; }

  /// Inference: deterministic, no dropout.
  Eigen::VectorXd forward(const Eigen::VectorXd& cap, const Eigen::VectorXd& imu) const;
  /// Training-mode forward with inverted dropout drawn from rng.
  Eigen::VectorXd forward_train(const Eigen::VectorXd& cap, const Eigen::VectorXd& imu,
                                Rng& rng) const;
  Eigen::VectorXd forward_joined(const Eigen::VectorXd& x) const;

  /// z-scored (and modality-masked) input.
  Eigen::VectorXd normalize(const Eigen::VectorXd& x) const;
  Eigen::VectorXd hidden(const Eigen::VectorXd& x) const;

  const Eigen::MatrixXd& W1() const { return W1_; }
  const Eigen::VectorXd& b1() const { return b1_; }
  const Eigen::MatrixXd& W2() const { return W2_; }
  const Eigen::VectorXd& b2() const { return b2_; }
  const Eigen::VectorXd& norm_mean() const { return norm_mean_; }
  const Eigen::VectorXd& norm_std() const { return norm_std_; }

  double leaky_slope = 0.01;
  double dropout_p = 0.3;
  Modality modality = Modality::fused;
  EmbedConfig hyper;
  /// Embeddings of pretraining sessions, one row each; impostor proxy at enrollment.
  Eigen::MatrixXd impostor_pool;

  /// Folds an affine output map e' = (e - mean) / std into W2 and b2.
  void standardize_output(const Eigen::VectorXd& mean, const Eigen::VectorXd& std);

  std::string to_json() const;
  static FusionModel from_json(const std::string& text);
  /// Stable digest of the weights and normalization, stored in templates.
  std::string config_hash() const;

 private:
  void check_dims() const;

  Eigen::MatrixXd W1_;
  Eigen::VectorXd b1_;
  Eigen::MatrixXd W2_;
  Eigen::VectorXd b2_;
  Eigen::VectorXd norm_mean_;
  Eigen::VectorXd norm_std_;
  int cap_dim_ = 0;
};

void save_model(const FusionModel& model, const std::string& path);
FusionModel load_model(const std::string& path);

/// Mean softmax cross-entropy of the head on a batch. X holds normalized inputs
/// as columns. With `dropout` (hidden x batch, entries 0 or 1/(1-p)) the hidden
/// activations are multiplied by it. Gradients are written when `grad` is set.
double fusion_loss(const FusionParams& p, const Eigen::MatrixXd& X, std::span<const int> labels,
                   double leaky_slope, const Eigen::MatrixXd* dropout, FusionParams* grad);

struct TrainingLog {
  std::vector<double> loss;      // per epoch, inference mode over the whole set
  std::vector<double> accuracy;  // head accuracy, same pass
};

struct TrainingResult {
  FusionModel model;
  FusionParams params;  // final weights including the head, before output scaling
  TrainingLog log;
};

/// Rows of `inputs` are concatenated [cap | imu] descriptors; labels are class
/// indices. Single-threaded and bitwise deterministic for a given seed.
TrainingResult fusion_train(const Eigen::MatrixXd& inputs, std::span<const int> labels, int cap_dim,
                            const EmbedConfig& cfg);

using EmbeddingMap = std::map<std::string, Eigen::VectorXd>;

/// Header "session_id,e0,...,e{d-1}".
void write_embeddings_csv(const std::string& path, std::span<const std::string> ids,
                          const Eigen::MatrixXd& rows);
EmbeddingMap load_external_embeddings(const std::string& path, int dim = 320);

std::string encode_matrix(const Eigen::MatrixXd& m);
Eigen::MatrixXd decode_matrix(const std::string& blob, Eigen::Index rows, Eigen::Index cols);

}  // namespace touchauth
