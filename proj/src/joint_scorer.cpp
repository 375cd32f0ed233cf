#include <cmath>

#include "hnce/errors.hpp"
#include "hnce/joint.hpp"
#include "hnce/random.hpp"

namespace hnce {

namespace {
using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstRowMap = Eigen::Map<const RowMajor>;
}  // namespace

JointScorer::JointScorer(std::shared_ptr<const std::vector<Sequence>> inputs,
                         std::shared_ptr<const std::vector<Sequence>> labels,
                         const JointConfig& config)
    : inputs_(std::move(inputs)), labels_(std::move(labels)), config_(config) {
  if (!inputs_ || !labels_ || inputs_->empty() || labels_->empty())
    throw ConfigError("joint scorer needs input and label sequences");
  if (config_.vocab_size == 0 || config_.hidden == 0)
    throw ConfigError("joint scorer needs positive vocab and hidden sizes");
  const std::size_t h = config_.hidden;
  layout_.add("token_embeddings", config_.vocab_size + 2, h);  // + [CLS], [SEP]
  layout_.add("segment_embeddings", 2, h);
  layout_.add("bilinear", h, h);
  layout_.add("head_weight", 1, h);
  layout_.add("head_bias", 1, 1);
  params_.resize(layout_.total_size());
  Rng rng(config_.seed);
  for (double& v : params_) v = config_.init_scale * standard_normal(rng);
  block("head_bias")[0] = 0.0;
}

nlohmann::json JointScorer::describe() const {
  return {{"family", "joint"},
          {"vocab_size", config_.vocab_size},
          {"hidden", config_.hidden},
          {"init_scale", config_.init_scale},
          {"seed", config_.seed}};
}

double JointScorer::evaluate(const Sequence& x, const Sequence& y, double weight,
                             std::span<double>* grad) const {
  const auto h = static_cast<Eigen::Index>(config_.hidden);
  const int cls = static_cast<int>(config_.vocab_size);
  const int sep = cls + 1;
  std::vector<int> tokens;
  std::vector<int> segments;
  tokens.reserve(x.size() + y.size() + 2);
  tokens.push_back(cls);
  segments.push_back(0);
  for (int t : x) tokens.push_back(t), segments.push_back(0);
  tokens.push_back(sep);
  segments.push_back(0);
  for (int t : y) tokens.push_back(t), segments.push_back(1);
  for (int t : tokens)
    if (t < 0 || t > sep) throw ConfigError("joint scorer: token outside the vocabulary");

  const auto len = static_cast<Eigen::Index>(tokens.size());
  const auto& tok_b = layout_.block("token_embeddings");
  const auto& seg_b = layout_.block("segment_embeddings");
  const auto& bil_b = layout_.block("bilinear");
  const auto& w_b = layout_.block("head_weight");
  const ConstRowMap tok(params_.data() + tok_b.offset, static_cast<Eigen::Index>(tok_b.rows), h);
  const ConstRowMap seg(params_.data() + seg_b.offset, 2, h);
  const ConstRowMap bil(params_.data() + bil_b.offset, h, h);
  const Eigen::Map<const Eigen::VectorXd> w(params_.data() + w_b.offset, h);
  const double bias = params_[layout_.block("head_bias").offset];

  RowMajor e(len, h);
  for (Eigen::Index j = 0; j < len; ++j)
    e.row(j) = tok.row(tokens[static_cast<std::size_t>(j)]) + seg.row(segments[static_cast<std::size_t>(j)]);
  const RowMajor eb = e * bil;
  RowMajor alpha = eb * e.transpose();
  for (Eigen::Index i = 0; i < len; ++i) {
    const double top = alpha.row(i).maxCoeff();
    alpha.row(i) = (alpha.row(i).array() - top).exp();
    alpha.row(i) /= alpha.row(i).sum();
  }
  const RowMajor attended = alpha * e;
  const Eigen::VectorXd pooled = attended.colwise().mean().transpose();
  const Eigen::VectorXd activ = pooled.array().tanh();
  const double value = w.dot(activ) + bias;
  if (grad == nullptr) return value;

  std::span<double> g = *grad;
  for (Eigen::Index j = 0; j < h; ++j) g[w_b.offset + static_cast<std::size_t>(j)] += weight * activ(j);
  g[layout_.block("head_bias").offset] += weight;

  const Eigen::VectorXd d_pooled = (w.array() * (1.0 - activ.array().square())).matrix();
  // Every attended row receives d_pooled / len.
  const RowMajor d_attended = RowMajor::Ones(len, 1) * (d_pooled.transpose() / static_cast<double>(len));
  RowMajor d_e = alpha.transpose() * d_attended;
  const RowMajor d_alpha = d_attended * e.transpose();
  RowMajor d_logits(len, len);
  for (Eigen::Index i = 0; i < len; ++i) {
    const double inner = alpha.row(i).dot(d_alpha.row(i));
    d_logits.row(i) = alpha.row(i).array() * (d_alpha.row(i).array() - inner);
  }
  d_e += d_logits * (e * bil.transpose());  // through the query row e_i
  d_e += d_logits.transpose() * eb;           // through the key row e_j
  const RowMajor d_bil = e.transpose() * d_logits * e;

  for (Eigen::Index r = 0; r < h; ++r)
    for (Eigen::Index c = 0; c < h; ++c)
      g[bil_b.offset + static_cast<std::size_t>(r * h + c)] += weight * d_bil(r, c);
  for (Eigen::Index j = 0; j < len; ++j) {
    const auto ti = static_cast<std::size_t>(tokens[static_cast<std::size_t>(j)]);
    const auto si = static_cast<std::size_t>(segments[static_cast<std::size_t>(j)]);
    for (Eigen::Index c = 0; c < h; ++c) {
      const double v = weight * d_e(j, c);
      g[tok_b.offset + ti * static_cast<std::size_t>(h) + static_cast<std::size_t>(c)] += v;
      g[seg_b.offset + si * static_cast<std::size_t>(h) + static_cast<std::size_t>(c)] += v;
    }
  }
  return value;
}

double JointScorer::score(InputId x, LabelId y) const {
  return evaluate((*inputs_)[x], (*labels_)[y], 0.0, nullptr);
}

void JointScorer::accumulate_gradient(InputId x, std::span<const LabelId> labels,
                                      std::span<const double> weights,
                                      std::span<double> grad) const {
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (weights[k] == 0.0) continue;
    evaluate((*inputs_)[x], (*labels_)[labels[k]], weights[k], &grad);
  }
}

std::unique_ptr<Scorer> JointScorer::clone() const { return std::make_unique<JointScorer>(*this); }

}  // namespace hnce
