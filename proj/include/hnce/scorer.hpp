#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hnce/types.hpp"
#include "json.hpp"

namespace hnce {

// A named row-major block inside the flat parameter vector.
struct ParameterBlock {
  std::string name;
  std::size_t offset = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const { return rows * cols; }
  friend bool operator==(const ParameterBlock&, const ParameterBlock&) = default;
};

class ParameterLayout {
 public:
  // Appends a block after the existing ones and returns its offset.
  std::size_t add(std::string name, std::size_t rows, std::size_t cols);

  const ParameterBlock& block(std::string_view name) const;
  bool contains(std::string_view name) const;
  std::span<const ParameterBlock> blocks() const { return blocks_; }
  std::size_t total_size() const { return total_; }

  nlohmann::json to_json() const;
  friend bool operator==(const ParameterLayout&, const ParameterLayout&) = default;

 private:
  std::vector<ParameterBlock> blocks_;
  std::size_t total_ = 0;
};

// A differentiable score function s(x, y) over indexed inputs and labels.
//
// Evaluation is const and side-effect free; the only mutation goes through
// parameters(), which the training loop owns.
class Scorer {
 public:
  virtual ~Scorer() = default;

  virtual std::string_view family() const = 0;
  virtual std::size_t input_count() const = 0;
  virtual std::size_t label_count() const = 0;

  // Hyperparameters needed to rebuild an equivalent scorer (not the values).
  virtual nlohmann::json describe() const = 0;

  virtual double score(InputId x, LabelId y) const = 0;

  // out[y] = score(x, y) for every label.
  virtual void score_all(InputId x, std::span<double> out) const;
  std::vector<double> score_all(InputId x) const;

  virtual std::vector<double> score_candidates(InputId x, std::span<const LabelId> labels) const;

  // grad += sum_k weights[k] * d score(x, labels[k]) / d theta
  virtual void accumulate_gradient(InputId x, std::span<const LabelId> labels,
                                   std::span<const double> weights,
                                   std::span<double> grad) const = 0;

  // Same with one weight per label in [0, label_count).
  virtual void accumulate_gradient_dense(InputId x, std::span<const double> weights,
                                         std::span<double> grad) const;

  std::vector<double> grad_score(InputId x, LabelId y) const;

  virtual std::unique_ptr<Scorer> clone() const = 0;

  std::span<const double> parameters() const { return params_; }
  std::span<double> parameters() { return params_; }
  std::size_t parameter_count() const { return params_.size(); }
  const ParameterLayout& layout() const { return layout_; }

 protected:
  Scorer() = default;
  Scorer(const Scorer&) = default;
  Scorer& operator=(const Scorer&) = default;

  std::span<const double> block(std::string_view name) const;
  std::span<double> block(std::string_view name);

  std::vector<double> params_;
  ParameterLayout layout_;
};

// p(.|x), the softmax of score_all.
std::vector<double> model_distribution(const Scorer& scorer, InputId x);

// Free-form table of scores; the parameters are the entries themselves.
class TabularScorer final : public Scorer {
 public:
  TabularScorer(std::size_t input_count, std::size_t label_count);
  // Row-major |X| x |Y| table.
  TabularScorer(std::size_t input_count, std::size_t label_count, std::vector<double> table);

  std::string_view family() const override { return "tabular"; }
  std::size_t input_count() const override { return inputs_; }
  std::size_t label_count() const override { return labels_; }
  nlohmann::json describe() const override;

  double score(InputId x, LabelId y) const override;
  using Scorer::score_all;
  void score_all(InputId x, std::span<double> out) const override;
  void accumulate_gradient(InputId x, std::span<const LabelId> labels,
                           std::span<const double> weights,
                           std::span<double> grad) const override;
  void accumulate_gradient_dense(InputId x, std::span<const double> weights,
                                 std::span<double> grad) const override;
  std::unique_ptr<Scorer> clone() const override;

  double& at(InputId x, LabelId y) { return params_[x * labels_ + y]; }

 private:
  std::size_t inputs_;
  std::size_t labels_;
};

enum class FeatureEncoding { OneHot, Gaussian };

struct MlpConfig {
  std::size_t hidden = 128;
  FeatureEncoding features = FeatureEncoding::OneHot;
  std::size_t feature_dim = 0;  // Gaussian features only; one-hot uses |X|
  double init_scale = 0.1;
  std::uint64_t seed = 0;
};

// score(x, .) = ReLU(feat(x) W1 + b1) W2 + b2 with fixed input features.
class MlpScorer final : public Scorer {
 public:
  MlpScorer(std::size_t input_count, std::size_t label_count, const MlpConfig& config);

  std::string_view family() const override { return "mlp"; }
  std::size_t input_count() const override { return inputs_; }
  std::size_t label_count() const override { return labels_; }
  nlohmann::json describe() const override;

  double score(InputId x, LabelId y) const override;
  using Scorer::score_all;
  void score_all(InputId x, std::span<double> out) const override;
  void accumulate_gradient(InputId x, std::span<const LabelId> labels,
                           std::span<const double> weights,
                           std::span<double> grad) const override;
  void accumulate_gradient_dense(InputId x, std::span<const double> weights,
                                 std::span<double> grad) const override;
  std::unique_ptr<Scorer> clone() const override;

  std::size_t feature_dim() const { return feature_dim_; }
  std::size_t hidden() const { return config_.hidden; }
  std::span<const double> features(InputId x) const;

 private:
  std::vector<double> hidden_preactivation(InputId x) const;

  std::size_t inputs_;
  std::size_t labels_;
  std::size_t feature_dim_;
  MlpConfig config_;
  std::vector<double> features_;  // |X| x F, row-major
};

}  // namespace hnce
