#include "fedzge/comms.hpp"

#include <cmath>
#include <cstdio>

#include "fedzge/error.hpp"

namespace fedzge {

std::string_view to_string(Direction d) { return d == Direction::down ? "down" : "up"; }

std::string_view to_string(PayloadKind k) {
  switch (k) {
    case PayloadKind::synthetic_batch: return "synthetic_batch";
    case PayloadKind::perturbed_batches: return "perturbed_batches";
    case PayloadKind::local_logits: return "local_logits";
    case PayloadKind::ensemble_logits: return "ensemble_logits";
    case PayloadKind::global_logits: return "global_logits";
    case PayloadKind::auxiliary_data: return "auxiliary_data";
    case PayloadKind::auxiliary_labels: return "auxiliary_labels";
    case PayloadKind::model_parameters: return "model_parameters";
    case PayloadKind::generator_parameters: return "generator_parameters";
    case PayloadKind::label_statistics: return "label_statistics";
  }
  return "unknown";
}

bool is_parameter_payload(PayloadKind k) {
  return k == PayloadKind::model_parameters || k == PayloadKind::generator_parameters;
}

CommLedger::CommLedger(const CommLedger& other) : entries_(other.entries()) {}

CommLedger& CommLedger::operator=(const CommLedger& other) {
  if (this != &other) {
    auto copy = other.entries();
    std::lock_guard lock(mutex_);
    entries_ = std::move(copy);
  }
  return *this;
}

void CommLedger::record(std::size_t round, std::size_t client, Direction direction, PayloadKind kind,
                        PayloadShape shape) {
  std::lock_guard lock(mutex_);
  entries_.push_back({round, client, direction, kind, shape.bytes()});
}

std::vector<LedgerEntry> CommLedger::entries() const {
  std::lock_guard lock(mutex_);
  return entries_;
}

std::size_t CommLedger::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

ByteTotals CommLedger::totals() const {
  std::lock_guard lock(mutex_);
  ByteTotals t;
  for (const auto& e : entries_) (e.direction == Direction::down ? t.down : t.up) += e.bytes;
  return t;
}

ByteTotals CommLedger::round_totals(std::size_t round) const {
  std::lock_guard lock(mutex_);
  ByteTotals t;
  for (const auto& e : entries_) {
    if (e.round == round) (e.direction == Direction::down ? t.down : t.up) += e.bytes;
  }
  return t;
}

void CommLedger::write_csv(std::ostream& out) const {
  out << "round,client,direction,kind,bytes\n";
  for (const auto& e : entries()) {
    out << e.round << ',' << e.client << ',' << to_string(e.direction) << ',' << to_string(e.kind) << ',' << e.bytes
        << '\n';
  }
}

std::string_view to_string(CommMethod m) {
  switch (m) {
    case CommMethod::fedavg: return "fedavg";
    case CommMethod::mhat: return "mhat";
    case CommMethod::dsfl: return "dsfl";
    case CommMethod::fedgen: return "fedgen";
    case CommMethod::fedftg: return "fedftg";
    case CommMethod::dfrd: return "dfrd";
    case CommMethod::fedzkt: return "fedzkt";
    case CommMethod::fedzge: return "fedzge";
    case CommMethod::fedzge_whitebox: return "fedzge_whitebox";
  }
  return "unknown";
}

namespace {

std::uint64_t need(const std::optional<PayloadShape>& shape, const char* name, CommMethod method) {
  if (!shape) throw Error("formula_bytes(" + std::string(to_string(method)) + "): missing shape '" + name + "'");
  return shape->bytes();
}

}  // namespace

ByteTotals formula_bytes(const MethodCommSpec& s) {
  const std::uint64_t tk = s.rounds * s.clients;
  const auto m = s.method;
  ByteTotals per;  // per client per round
  switch (m) {
    case CommMethod::fedavg:
      per.down = need(s.global_model, "global_model", m);
      per.up = need(s.local_model, "local_model", m);
      break;
    case CommMethod::mhat:
      per.down = need(s.auxiliary_data, "auxiliary_data", m) + need(s.auxiliary_labels, "auxiliary_labels", m) +
                 need(s.global_output, "global_output", m);
      per.up = need(s.local_output, "local_output", m);
      break;
    case CommMethod::dsfl:
      per.down = need(s.auxiliary_data, "auxiliary_data", m) + need(s.ensemble_output, "ensemble_output", m);
      per.up = need(s.local_output, "local_output", m);
      break;
    case CommMethod::fedgen:
      per.down = need(s.global_model, "global_model", m) + need(s.generator, "generator", m);
      per.up = need(s.local_model, "local_model", m) + need(s.label_statistics, "label_statistics", m);
      break;
    case CommMethod::fedftg:
    case CommMethod::dfrd:
      per.down = need(s.global_model, "global_model", m);
      per.up = need(s.local_model, "local_model", m) + need(s.label_statistics, "label_statistics", m);
      break;
    case CommMethod::fedzkt:
      per.down = need(s.local_model, "local_model", m);
      per.up = need(s.local_model, "local_model", m);
      break;
    case CommMethod::fedzge: {
      const auto x = need(s.synthetic_data, "synthetic_data", m);
      per.down = x + need(s.ensemble_output, "ensemble_output", m) + x * s.directions;
      const auto f = need(s.local_output, "local_output", m);
      per.up = f + f * s.directions;
      break;
    }
    case CommMethod::fedzge_whitebox:
      per.down = need(s.synthetic_data, "synthetic_data", m) + need(s.ensemble_output, "ensemble_output", m);
      per.up = need(s.local_model, "local_model", m);
      break;
  }
  return {tk * per.down, tk * per.up};
}

double to_gib(std::uint64_t bytes) { return static_cast<double>(bytes) / 1073741824.0; }

std::string format_gib(std::uint64_t bytes) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", to_gib(bytes));
  return buf;
}

MethodCommSpec batch_payload_spec(CommMethod method, std::uint64_t rounds, std::uint64_t clients,
                                  std::uint64_t directions, std::uint64_t batch, std::uint64_t sample_elements,
                                  std::uint64_t classes) {
  MethodCommSpec s;
  s.method = method;
  s.rounds = rounds;
  s.clients = clients;
  s.directions = directions;
  const PayloadShape data{batch * sample_elements};
  const PayloadShape logits{batch * classes};
  s.synthetic_data = data;
  s.auxiliary_data = data;
  s.auxiliary_labels = PayloadShape{batch};
  s.global_output = logits;
  s.local_output = logits;
  s.ensemble_output = logits;
  s.label_statistics = PayloadShape{classes};
  return s;
}

}  // namespace fedzge
