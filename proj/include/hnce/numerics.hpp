#pragma once

#include <span>
#include <vector>

namespace hnce {

// log(sum(exp(v))) with max shift. Returns -inf for an empty span.
double log_sum_exp(std::span<const double> values);

// Max-shifted softmax.
std::vector<double> softmax(std::span<const double> values);
void softmax_inplace(std::span<double> values);

double l2_norm(std::span<const double> v);
double max_abs_diff(std::span<const double> a, std::span<const double> b);

// Shannon entropy in nats; 0 log 0 = 0.
double entropy(std::span<const double> probs);

// Largest |a_i - b_i| / max(|a_i|, |b_i|, floor).
double max_relative_error(std::span<const double> a, std::span<const double> b,
                          double floor = 1e-8);

bool all_finite(std::span<const double> v);

// a += scale * b
void axpy(double scale, std::span<const double> b, std::span<double> a);

}  // namespace hnce
