#include <cmath>

#include "hnce/errors.hpp"
#include "hnce/random.hpp"
#include "hnce/scorer.hpp"

namespace hnce {

MlpScorer::MlpScorer(std::size_t input_count, std::size_t label_count, const MlpConfig& config)
    : inputs_(input_count), labels_(label_count), config_(config) {
  if (inputs_ == 0 || labels_ < 2) throw ConfigError("mlp scorer needs inputs and at least 2 labels");
  if (config_.hidden == 0) throw ConfigError("mlp hidden width must be positive");
  Rng rng(config_.seed);
  if (config_.features == FeatureEncoding::OneHot) {
    feature_dim_ = inputs_;
    features_.assign(inputs_ * feature_dim_, 0.0);
    for (InputId x = 0; x < inputs_; ++x) features_[x * feature_dim_ + x] = 1.0;
  } else {
    if (config_.feature_dim == 0) throw ConfigError("gaussian features need feature_dim > 0");
    feature_dim_ = config_.feature_dim;
    features_.resize(inputs_ * feature_dim_);
    for (double& v : features_) v = standard_normal(rng);
  }
  const std::size_t h = config_.hidden;
  layout_.add("W1", feature_dim_, h);
  layout_.add("b1", 1, h);
  layout_.add("W2", h, labels_);
  layout_.add("b2", 1, labels_);
  params_.assign(layout_.total_size(), 0.0);
  for (double& v : block("W1")) v = config_.init_scale * standard_normal(rng);
  for (double& v : block("W2")) v = config_.init_scale * standard_normal(rng);
}

nlohmann::json MlpScorer::describe() const {
  return {{"family", "mlp"},
          {"input_count", inputs_},
          {"label_count", labels_},
          {"hidden", config_.hidden},
          {"features", config_.features == FeatureEncoding::OneHot ? "onehot" : "gaussian"},
          {"feature_dim", feature_dim_},
          {"init_scale", config_.init_scale},
          {"seed", config_.seed}};
}

std::span<const double> MlpScorer::features(InputId x) const {
  return std::span<const double>(features_).subspan(x * feature_dim_, feature_dim_);
}

std::vector<double> MlpScorer::hidden_preactivation(InputId x) const {
  const std::size_t h = config_.hidden;
  const auto w1 = block("W1");
  const auto b1 = block("b1");
  std::vector<double> pre(b1.begin(), b1.end());
  const auto feat = features(x);
  for (std::size_t f = 0; f < feature_dim_; ++f) {
    const double v = feat[f];
    if (v == 0.0) continue;
    const double* row = w1.data() + f * h;
    for (std::size_t j = 0; j < h; ++j) pre[j] += v * row[j];
  }
  return pre;
}

double MlpScorer::score(InputId x, LabelId y) const {
  const auto pre = hidden_preactivation(x);
  const auto w2 = block("W2");
  double s = block("b2")[y];
  for (std::size_t j = 0; j < pre.size(); ++j)
    if (pre[j] > 0.0) s += pre[j] * w2[j * labels_ + y];
  return s;
}

void MlpScorer::score_all(InputId x, std::span<double> out) const {
  const auto pre = hidden_preactivation(x);
  const auto w2 = block("W2");
  const auto b2 = block("b2");
  std::copy(b2.begin(), b2.end(), out.begin());
  for (std::size_t j = 0; j < pre.size(); ++j) {
    if (pre[j] <= 0.0) continue;
    const double a = pre[j];
    const double* row = w2.data() + j * labels_;
    for (LabelId y = 0; y < labels_; ++y) out[y] += a * row[y];
  }
}

void MlpScorer::accumulate_gradient(InputId x, std::span<const LabelId> labels,
                                    std::span<const double> weights,
                                    std::span<double> grad) const {
  const std::size_t h = config_.hidden;
  const auto pre = hidden_preactivation(x);
  const auto w2 = block("W2");
  const auto& bw1 = layout_.block("W1");
  const auto& bb1 = layout_.block("b1");
  const auto& bw2 = layout_.block("W2");
  const auto& bb2 = layout_.block("b2");

  std::vector<double> dhidden(h, 0.0);
  for (std::size_t k = 0; k < labels.size(); ++k) {
    const LabelId y = labels[k];
    const double w = weights[k];
    if (w == 0.0) continue;
    grad[bb2.offset + y] += w;
    for (std::size_t j = 0; j < h; ++j) {
      if (pre[j] <= 0.0) continue;
      grad[bw2.offset + j * labels_ + y] += w * pre[j];
      dhidden[j] += w * w2[j * labels_ + y];
    }
  }
  for (std::size_t j = 0; j < h; ++j) {
    if (pre[j] <= 0.0) dhidden[j] = 0.0;
    grad[bb1.offset + j] += dhidden[j];
  }
  const auto feat = features(x);
  for (std::size_t f = 0; f < feature_dim_; ++f) {
    const double v = feat[f];
    if (v == 0.0) continue;
    double* row = grad.data() + bw1.offset + f * h;
    for (std::size_t j = 0; j < h; ++j) row[j] += v * dhidden[j];
  }
}

void MlpScorer::accumulate_gradient_dense(InputId x, std::span<const double> weights,
                                          std::span<double> grad) const {
  const std::size_t h = config_.hidden;
  const auto pre = hidden_preactivation(x);
  const auto w2 = block("W2");
  const auto& bw1 = layout_.block("W1");
  const auto& bb1 = layout_.block("b1");
  const auto& bw2 = layout_.block("W2");
  const auto& bb2 = layout_.block("b2");

  for (LabelId y = 0; y < labels_; ++y) grad[bb2.offset + y] += weights[y];
  std::vector<double> dhidden(h, 0.0);
  for (std::size_t j = 0; j < h; ++j) {
    if (pre[j] <= 0.0) continue;
    const double a = pre[j];
    double* grow = grad.data() + bw2.offset + j * labels_;
    const double* wrow = w2.data() + j * labels_;
    double acc = 0.0;
    for (LabelId y = 0; y < labels_; ++y) {
      grow[y] += weights[y] * a;
      acc += weights[y] * wrow[y];
    }
    dhidden[j] = acc;
  }
  for (std::size_t j = 0; j < h; ++j) grad[bb1.offset + j] += dhidden[j];
  const auto feat = features(x);
  for (std::size_t f = 0; f < feature_dim_; ++f) {
    const double v = feat[f];
    if (v == 0.0) continue;
    double* row = grad.data() + bw1.offset + f * h;
    for (std::size_t j = 0; j < h; ++j) row[j] += v * dhidden[j];
  }
}

std::unique_ptr<Scorer> MlpScorer::clone() const { return std::make_unique<MlpScorer>(*this); }

}  // namespace hnce
