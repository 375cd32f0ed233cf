#include "hnce/scorer.hpp"

#include <numeric>
#include <stdexcept>

#include "hnce/errors.hpp"
#include "hnce/numerics.hpp"

namespace hnce {

std::size_t ParameterLayout::add(std::string name, std::size_t rows, std::size_t cols) {
  if (contains(name)) throw ConfigError("duplicate parameter block: " + name);
  blocks_.push_back({std::move(name), total_, rows, cols});
  total_ += rows * cols;
  return blocks_.back().offset;
}

const ParameterBlock& ParameterLayout::block(std::string_view name) const {
  for (const auto& b : blocks_)
    if (b.name == name) return b;
  throw ConfigError("unknown parameter block: " + std::string(name));
}

bool ParameterLayout::contains(std::string_view name) const {
  for (const auto& b : blocks_)
    if (b.name == name) return true;
  return false;
}

nlohmann::json ParameterLayout::to_json() const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& b : blocks_)
    out.push_back({{"name", b.name}, {"offset", b.offset}, {"rows", b.rows}, {"cols", b.cols}});
  return out;
}

void Scorer::score_all(InputId x, std::span<double> out) const {
  for (LabelId y = 0; y < out.size(); ++y) out[y] = score(x, y);
}

std::vector<double> Scorer::score_all(InputId x) const {
  std::vector<double> out(label_count());
  score_all(x, out);
  return out;
}

std::vector<double> Scorer::score_candidates(InputId x, std::span<const LabelId> labels) const {
  std::vector<double> out;
  out.reserve(labels.size());
  for (LabelId y : labels) out.push_back(score(x, y));
  return out;
}

void Scorer::accumulate_gradient_dense(InputId x, std::span<const double> weights,
                                       std::span<double> grad) const {
  std::vector<LabelId> labels(label_count());
  std::iota(labels.begin(), labels.end(), LabelId{0});
  accumulate_gradient(x, labels, weights, grad);
}

std::vector<double> Scorer::grad_score(InputId x, LabelId y) const {
  std::vector<double> grad(parameter_count(), 0.0);
  const LabelId label[] = {y};
  const double weight[] = {1.0};
  accumulate_gradient(x, label, weight, grad);
  return grad;
}

std::span<const double> Scorer::block(std::string_view name) const {
  const auto& b = layout_.block(name);
  return std::span<const double>(params_).subspan(b.offset, b.size());
}

std::span<double> Scorer::block(std::string_view name) {
  const auto& b = layout_.block(name);
  return std::span<double>(params_).subspan(b.offset, b.size());
}

std::vector<double> model_distribution(const Scorer& scorer, InputId x) {
  auto p = scorer.score_all(x);
  softmax_inplace(p);
  return p;
}

// --- tabular ---------------------------------------------------------------

TabularScorer::TabularScorer(std::size_t input_count, std::size_t label_count)
    : TabularScorer(input_count, label_count, std::vector<double>(input_count * label_count, 0.0)) {}

TabularScorer::TabularScorer(std::size_t input_count, std::size_t label_count,
                             std::vector<double> table)
    : inputs_(input_count), labels_(label_count) {
  if (inputs_ == 0 || labels_ == 0) throw ConfigError("tabular scorer needs nonempty spaces");
  if (table.size() != inputs_ * labels_) throw ConfigError("tabular scorer: table has the wrong size");
  if (!all_finite(table)) throw ConfigError("tabular scorer: non-finite entry");
  layout_.add("table", inputs_, labels_);
  params_ = std::move(table);
}

nlohmann::json TabularScorer::describe() const {
  return {{"family", "tabular"}, {"input_count", inputs_}, {"label_count", labels_}};
}

double TabularScorer::score(InputId x, LabelId y) const { return params_[x * labels_ + y]; }

void TabularScorer::score_all(InputId x, std::span<double> out) const {
  std::copy_n(params_.begin() + static_cast<std::ptrdiff_t>(x * labels_), labels_, out.begin());
}

void TabularScorer::accumulate_gradient(InputId x, std::span<const LabelId> labels,
                                        std::span<const double> weights,
                                        std::span<double> grad) const {
  for (std::size_t k = 0; k < labels.size(); ++k) grad[x * labels_ + labels[k]] += weights[k];
}

void TabularScorer::accumulate_gradient_dense(InputId x, std::span<const double> weights,
                                              std::span<double> grad) const {
  for (LabelId y = 0; y < labels_; ++y) grad[x * labels_ + y] += weights[y];
}

std::unique_ptr<Scorer> TabularScorer::clone() const { return std::make_unique<TabularScorer>(*this); }

}  // namespace hnce
