#include "fedzge/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fedzge/error.hpp"

namespace fedzge {

namespace {

void require_tau(double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw Error("temperature must be a positive finite value");
}

void require_labels(const Tensor& logits, std::span<const int> labels) {
  if (logits.rank() != 2) throw ShapeError("logits must be a (batch, classes) matrix");
  if (labels.size() != logits.rows()) throw ShapeError("label count does not match batch size");
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= logits.cols()) {
      throw DataError("label " + std::to_string(y) + " out of range for " + std::to_string(logits.cols()) +
                      " classes");
    }
  }
}

// log softmax(row)[index]
double log_softmax_at(std::span<const double> row, std::size_t index) {
  const double m = *std::max_element(row.begin(), row.end());
  double sum = 0.0;
  for (double v : row) sum += std::exp(v - m);
  return row[index] - m - std::log(sum);
}

double safe_log(double p) { return std::log(std::max(p, kProbabilityFloor)); }

}  // namespace

Tensor softmax_t(const Tensor& logits, double tau) {
  require_tau(tau);
  logits.check_finite("softmax_t");
  Tensor out = logits;
  const std::size_t cols = out.cols();
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    const double m = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (auto& v : row) {
      v = std::exp((v - m) / tau);
      sum += v;
    }
    for (std::size_t j = 0; j < cols; ++j) row[j] /= sum;
  }
  return out;
}

double cross_entropy(const Tensor& logits, std::span<const int> labels) {
  require_labels(logits, labels);
  logits.check_finite("cross_entropy");
  const double log_floor = std::log(kProbabilityFloor);
  double total = 0.0;
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    total -= std::max(log_softmax_at(logits.row(r), static_cast<std::size_t>(labels[r])), log_floor);
  }
  return total / static_cast<double>(logits.rows());
}

Tensor cross_entropy_grad(const Tensor& logits, std::span<const int> labels) {
  require_labels(logits, labels);
  const double log_floor = std::log(kProbabilityFloor);
  const auto batch = static_cast<double>(logits.rows());
  Tensor grad = softmax_t(logits, 1.0);
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto row = grad.row(r);
    const auto y = static_cast<std::size_t>(labels[r]);
    if (log_softmax_at(logits.row(r), y) < log_floor) {
      std::fill(row.begin(), row.end(), 0.0);
      continue;
    }
    row[y] -= 1.0;
    for (auto& v : row) v /= batch;
  }
  return grad;
}

double kl_div(const Tensor& p, const Tensor& q) {
  require_same_shape(p, q, "kl_div");
  double total = 0.0;
  for (std::size_t r = 0; r < p.rows(); ++r) {
    auto pr = p.row(r);
    auto qr = q.row(r);
    for (std::size_t j = 0; j < pr.size(); ++j) {
      if (pr[j] > 0.0) total += pr[j] * (safe_log(pr[j]) - safe_log(qr[j]));
    }
  }
  const double value = total / static_cast<double>(p.rows());
  if (!std::isfinite(value)) throw NumericError("kl_div: non-finite result");
  return value;
}

Tensor one_hot(std::span<const int> labels, std::size_t classes) {
  Tensor out({labels.size(), classes});
  for (std::size_t r = 0; r < labels.size(); ++r) {
    if (labels[r] < 0 || static_cast<std::size_t>(labels[r]) >= classes) throw DataError("one_hot: label out of range");
    out(r, static_cast<std::size_t>(labels[r])) = 1.0;
  }
  return out;
}

double distill_kl(const Tensor& teacher_logits, const Tensor& student_logits, double tau) {
  require_same_shape(teacher_logits, student_logits, "distill_kl");
  return kl_div(softmax_t(teacher_logits, tau), softmax_t(student_logits, tau));
}

DistillGrads distill_kl_grad(const Tensor& teacher_logits, const Tensor& student_logits, double tau) {
  require_same_shape(teacher_logits, student_logits, "distill_kl_grad");
  const Tensor p = softmax_t(teacher_logits, tau);
  const Tensor q = softmax_t(student_logits, tau);
  const double scale = 1.0 / (tau * static_cast<double>(p.rows()));
  DistillGrads out{Tensor::zeros_like(p), Tensor::zeros_like(p)};
  for (std::size_t r = 0; r < p.rows(); ++r) {
    auto pr = p.row(r);
    auto qr = q.row(r);
    auto gt = out.teacher.row(r);
    auto gs = out.student.row(r);
    double mean_log_ratio = 0.0;
    for (std::size_t j = 0; j < pr.size(); ++j) mean_log_ratio += pr[j] * (safe_log(pr[j]) - safe_log(qr[j]));
    for (std::size_t j = 0; j < pr.size(); ++j) {
      gs[j] = scale * (qr[j] - pr[j]);
      gt[j] = scale * pr[j] * (safe_log(pr[j]) - safe_log(qr[j]) - mean_log_ratio);
    }
  }
  return out;
}

}  // namespace fedzge
