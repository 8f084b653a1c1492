#pragma once

#include <cstddef>
#include <cstdint>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace fedzge {

/// Payload size as an element count times a per-element width (4 bytes by
/// default, i.e. float32 values and int32 labels).
struct PayloadShape {
  std::uint64_t elements = 0;
  std::uint64_t bytes_per_element = 4;

  std::uint64_t bytes() const { return elements * bytes_per_element; }
};

enum class Direction { down, up };

enum class PayloadKind {
  synthetic_batch,
  perturbed_batches,
  local_logits,
  ensemble_logits,
  global_logits,
  auxiliary_data,
  auxiliary_labels,
  model_parameters,
  generator_parameters,
  label_statistics,
};

std::string_view to_string(Direction d);
std::string_view to_string(PayloadKind k);

/// Model weights of any kind (the payloads a black-box protocol never sends).
bool is_parameter_payload(PayloadKind k);

struct LedgerEntry {
  std::size_t round = 0;
  std::size_t client = 0;
  Direction direction = Direction::down;
  PayloadKind kind = PayloadKind::synthetic_batch;
  std::uint64_t bytes = 0;

  bool operator==(const LedgerEntry&) const = default;
};

struct ByteTotals {
  std::uint64_t down = 0;
  std::uint64_t up = 0;

  std::uint64_t total() const { return down + up; }
  bool operator==(const ByteTotals&) const = default;
};

/// Append-only record of every server/client transfer. Appends are
/// serialized; the protocols append from the server thread in ascending
/// client order.
class CommLedger {
 public:
  CommLedger() = default;
  CommLedger(const CommLedger& other);
  CommLedger& operator=(const CommLedger& other);

  void record(std::size_t round, std::size_t client, Direction direction, PayloadKind kind, PayloadShape shape);

  std::vector<LedgerEntry> entries() const;
  std::size_t size() const;
  ByteTotals totals() const;
  ByteTotals round_totals(std::size_t round) const;

  /// CSV with header `round,client,direction,kind,bytes`.
  void write_csv(std::ostream& out) const;

 private:
  mutable std::mutex mutex_;
  std::vector<LedgerEntry> entries_;
};

/// Methods with a closed-form communication cost.
enum class CommMethod { fedavg, mhat, dsfl, fedgen, fedftg, dfrd, fedzkt, fedzge, fedzge_whitebox };

std::string_view to_string(CommMethod m);

/// Inputs for one closed-form cost row. `clients` is the number of clients
/// participating per round. Each formula uses only the shapes it needs; a
/// missing one is an error.
struct MethodCommSpec {
  CommMethod method = CommMethod::fedzge;
  std::uint64_t rounds = 0;
  std::uint64_t clients = 0;
  std::uint64_t directions = 0;  // q

  std::optional<PayloadShape> global_model;
  std::optional<PayloadShape> local_model;
  std::optional<PayloadShape> generator;
  std::optional<PayloadShape> global_output;
  std::optional<PayloadShape> local_output;
  std::optional<PayloadShape> ensemble_output;
  std::optional<PayloadShape> auxiliary_data;
  std::optional<PayloadShape> auxiliary_labels;
  std::optional<PayloadShape> synthetic_data;
  std::optional<PayloadShape> label_statistics;
};

ByteTotals formula_bytes(const MethodCommSpec& spec);

/// bytes / 2^30
double to_gib(std::uint64_t bytes);
/// to_gib rounded to two decimals, e.g. "63.17".
std::string format_gib(std::uint64_t bytes);

/// Output/data shapes for batches of `batch` samples of `sample_elements`
/// values each with `classes` logits: fills synthetic/auxiliary data, aux
/// labels, all logit outputs and the C-length label statistic.
MethodCommSpec batch_payload_spec(CommMethod method, std::uint64_t rounds, std::uint64_t clients,
                                  std::uint64_t directions, std::uint64_t batch, std::uint64_t sample_elements,
                                  std::uint64_t classes);

}  // namespace fedzge
