#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fedzge/adam.hpp"
#include "fedzge/datasets.hpp"
#include "fedzge/network.hpp"
#include "fedzge/rng.hpp"

namespace fedzge {

enum class Access {
  black_box,  // logits in, logits out; parameters never leave or enter
  white_box,  // additionally uploads/downloads its model
};

/// One federated participant. Its dataset, model and optimizer state are
/// private; the server interacts only through the capabilities below.
class Client {
 public:
  Client(std::size_t id, Dataset data, Network model, Access access, std::uint64_t seed);

  std::size_t id() const noexcept { return id_; }
  std::size_t sample_count() const noexcept { return data_.size(); }
  Access access() const noexcept { return access_; }

  /// Forward-only logits in eval mode.
  Tensor predict(const Tensor& batch);
  /// predict() on each batch, in order.
  std::vector<Tensor> predict_all(std::span<const Tensor> batches);

  /// Mini-batch Adam on cross-entropy over the private data. Returns the
  /// mean loss of the last epoch. A zero learning rate leaves the model
  /// untouched.
  double local_train(std::size_t epochs, double learning_rate, std::size_t batch_size);

  /// Full-batch Adam steps pulling the model toward `teacher_logits` on `x`.
  /// Returns the loss before the last step.
  double local_distill(const Tensor& x, const Tensor& teacher_logits, std::size_t epochs, double learning_rate,
                       double tau, bool temperature_squared);

  /// As local_distill plus cross-entropy on the provided labels.
  double local_distill_labeled(const Tensor& x, std::span<const int> labels, const Tensor& teacher_logits,
                               std::size_t epochs, double learning_rate, double tau, bool temperature_squared);

  /// Accuracy of the private model on `ds`, evaluated on-device.
  double evaluate_on(const Dataset& ds);
  double train_accuracy() { return evaluate_on(data_); }
  double last_train_loss() const noexcept { return last_train_loss_; }

  /// White-box only; CapabilityError otherwise.
  Network upload_model() const;
  /// White-box only; replaces the model parameters.
  void download_parameters(std::span<const double> params);

 private:
  void require_white_box(const char* what) const;

  std::size_t id_;
  Dataset data_;
  Network model_;
  Access access_;
  AdamState optimizer_;
  Rng rng_;
  double last_train_loss_ = 0.0;
};

/// argmax accuracy (ties to the lowest class index) in eval mode.
double evaluate(Network& model, const Dataset& test);

/// Predicted class per row, ties to the lowest index.
std::vector<int> argmax_rows(const Tensor& logits);

}  // namespace fedzge
