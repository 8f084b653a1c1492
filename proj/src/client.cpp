#include "fedzge/client.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "fedzge/error.hpp"
#include "fedzge/losses.hpp"

namespace fedzge {

namespace {

class ModeGuard {
 public:
  ModeGuard(Network& net, Mode mode) : net_(net), previous_(net.mode()) { net_.set_mode(mode); }
  ~ModeGuard() { net_.set_mode(previous_); }
  ModeGuard(const ModeGuard&) = delete;
  ModeGuard& operator=(const ModeGuard&) = delete;

 private:
  Network& net_;
  Mode previous_;
};

}  // namespace

Client::Client(std::size_t id, Dataset data, Network model, Access access, std::uint64_t seed)
    : id_(id), data_(std::move(data)), model_(std::move(model)), access_(access), rng_(seed) {
  if (data_.size() == 0) throw DataError("client " + std::to_string(id) + " has an empty dataset");
  optimizer_ = AdamState(model_.parameter_count());
}

Tensor Client::predict(const Tensor& batch) {
  ModeGuard guard(model_, Mode::eval);
  return model_.forward(batch);
}

std::vector<Tensor> Client::predict_all(std::span<const Tensor> batches) {
  std::vector<Tensor> out;
  out.reserve(batches.size());
  for (const auto& b : batches) out.push_back(predict(b));
  return out;
}

double Client::local_train(std::size_t epochs, double learning_rate, std::size_t batch_size) {
  if (batch_size == 0) throw Error("local_train: batch size must be positive");
  ModeGuard guard(model_, Mode::train);
  std::vector<std::size_t> order(data_.size());
  std::iota(order.begin(), order.end(), 0);
  double epoch_loss = 0.0;
  for (std::size_t e = 0; e < epochs; ++e) {
    std::shuffle(order.begin(), order.end(), rng_);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const std::size_t end = std::min(order.size(), start + batch_size);
      const Dataset batch = data_.subset(std::span<const std::size_t>(order).subspan(start, end - start));
      const Tensor logits = model_.forward(batch.samples);
      total += cross_entropy(logits, batch.labels) * static_cast<double>(end - start);
      if (learning_rate == 0.0) continue;
      const auto grads = model_.backward(cross_entropy_grad(logits, batch.labels));
      adam_step(model_.parameters(), grads.params, optimizer_, learning_rate);
    }
    epoch_loss = total / static_cast<double>(order.size());
  }
  last_train_loss_ = epoch_loss;
  return epoch_loss;
}

double Client::local_distill(const Tensor& x, const Tensor& teacher_logits, std::size_t epochs, double learning_rate,
                             double tau, bool temperature_squared) {
  ModeGuard guard(model_, Mode::train);
  const double scale = temperature_squared ? tau * tau : 1.0;
  double loss = 0.0;
  for (std::size_t e = 0; e < epochs; ++e) {
    const Tensor logits = model_.forward(x);
    loss = scale * distill_kl(teacher_logits, logits, tau);
    if (learning_rate == 0.0) continue;
    const auto grads = model_.backward(scale * distill_kl_grad(teacher_logits, logits, tau).student);
    adam_step(model_.parameters(), grads.params, optimizer_, learning_rate);
  }
  return loss;
}

double Client::local_distill_labeled(const Tensor& x, std::span<const int> labels, const Tensor& teacher_logits,
                                     std::size_t epochs, double learning_rate, double tau, bool temperature_squared) {
  ModeGuard guard(model_, Mode::train);
  const double scale = temperature_squared ? tau * tau : 1.0;
  double loss = 0.0;
  for (std::size_t e = 0; e < epochs; ++e) {
    const Tensor logits = model_.forward(x);
    loss = cross_entropy(logits, labels) + scale * distill_kl(teacher_logits, logits, tau);
    if (learning_rate == 0.0) continue;
    Tensor upstream = cross_entropy_grad(logits, labels);
    axpy(scale, distill_kl_grad(teacher_logits, logits, tau).student, upstream);
    const auto grads = model_.backward(upstream);
    adam_step(model_.parameters(), grads.params, optimizer_, learning_rate);
  }
  return loss;
}

double Client::evaluate_on(const Dataset& ds) { return evaluate(model_, ds); }

void Client::require_white_box(const char* what) const {
  if (access_ != Access::white_box) {
    throw CapabilityError(std::string(what) + ": client " + std::to_string(id_) + " is a black-box client");
  }
}

Network Client::upload_model() const {
  require_white_box("upload_model");
  return model_;
}

void Client::download_parameters(std::span<const double> params) {
  require_white_box("download_parameters");
  if (params.size() != model_.parameter_count()) throw ShapeError("download_parameters: parameter count mismatch");
  std::copy(params.begin(), params.end(), model_.parameters().begin());
}

std::vector<int> argmax_rows(const Tensor& logits) {
  std::vector<int> out(logits.rows());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto row = logits.row(r);
    out[r] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

double evaluate(Network& model, const Dataset& test) {
  if (test.size() == 0) throw DataError("evaluate: empty test set");
  ModeGuard guard(model, Mode::eval);
  const auto predicted = argmax_rows(model.forward(test.samples));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) correct += predicted[i] == test.labels[i] ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

}  // namespace fedzge
