#pragma once

#include <span>

#include "fedzge/tensor.hpp"

namespace fedzge {

/// Floor applied to probabilities inside every log (CE, KL, entropy).
inline constexpr double kProbabilityFloor = 1e-12;

/// Row-wise softmax of logits / tau, computed with max subtraction.
Tensor softmax_t(const Tensor& logits, double tau = 1.0);

/// Mean over rows of -log softmax(logits)[label]. Labels are 0-based.
double cross_entropy(const Tensor& logits, std::span<const int> labels);
/// Gradient of cross_entropy with respect to the logits.
Tensor cross_entropy_grad(const Tensor& logits, std::span<const int> labels);

/// Mean over rows of sum p log(p / q) on row-stochastic inputs.
double kl_div(const Tensor& p, const Tensor& q);

Tensor one_hot(std::span<const int> labels, std::size_t classes);

/// KL(softmax(teacher / tau) || softmax(student / tau)), batch mean.
double distill_kl(const Tensor& teacher_logits, const Tensor& student_logits, double tau);

struct DistillGrads {
  Tensor teacher;
  Tensor student;
};

/// Gradients of distill_kl with respect to both logit sets.
DistillGrads distill_kl_grad(const Tensor& teacher_logits, const Tensor& student_logits, double tau);

}  // namespace fedzge
