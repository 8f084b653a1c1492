#include "fedzge/datasets.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>

#include "fedzge/error.hpp"
#include "fedzge/log.hpp"
#include "fedzge/rng.hpp"

namespace fedzge {

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(num_classes, 0);
  for (int y : labels) ++counts.at(static_cast<std::size_t>(y));
  return counts;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  if (indices.empty()) throw DataError("dataset subset must not be empty");
  const std::size_t d = dim();
  Dataset out;
  out.num_classes = num_classes;
  out.samples = Tensor({indices.size(), d});
  out.labels.reserve(indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    auto src = samples.row(indices[r]);
    std::copy(src.begin(), src.end(), out.samples.row(r).begin());
    out.labels.push_back(labels[indices[r]]);
  }
  return out;
}

std::vector<double> class_mean(std::size_t label, std::size_t classes, std::size_t dim) {
  // Smallest base giving every class a distinct digit string over at most
  // `dim` digits; digit levels are spread evenly over [-1, 1].
  std::size_t base = 2;
  auto capacity = [&](std::size_t b) {
    double cap = 1.0;
    for (std::size_t i = 0; i < dim && cap < static_cast<double>(classes); ++i) cap *= static_cast<double>(b);
    return cap;
  };
  while (capacity(base) < static_cast<double>(classes)) ++base;
  std::size_t digits = 0;
  for (std::size_t span = 1; span < classes; span *= base) ++digits;
  digits = std::clamp<std::size_t>(digits, 1, dim);

  std::vector<std::size_t> code(digits);
  std::size_t rest = label;
  for (auto& c : code) {
    c = rest % base;
    rest /= base;
  }
  std::vector<double> mean(dim);
  for (std::size_t j = 0; j < dim; ++j) {
    mean[j] = -1.0 + 2.0 * static_cast<double>(code[j % digits]) / static_cast<double>(base - 1);
  }
  return mean;
}

Dataset make_synthetic(std::size_t classes, std::size_t dim, std::size_t per_class, double spread,
                       std::uint64_t seed) {
  if (classes < 2) throw DataError("make_synthetic: need at least 2 classes");
  if (dim < 2) throw DataError("make_synthetic: need at least 2 dimensions");
  if (per_class < 1) throw DataError("make_synthetic: need at least 1 sample per class");
  if (!(spread >= 0.0) || !std::isfinite(spread)) throw DataError("make_synthetic: spread must be non-negative");

  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double scale = 1.0 / (1.0 + 3.0 * spread);
  Dataset ds;
  ds.num_classes = classes;
  ds.samples = Tensor({classes * per_class, dim});
  ds.labels.reserve(classes * per_class);
  for (std::size_t c = 0; c < classes; ++c) {
    const auto mean = class_mean(c, classes, dim);
    for (std::size_t i = 0; i < per_class; ++i) {
      auto row = ds.samples.row(ds.labels.size());
      for (std::size_t j = 0; j < dim; ++j) {
        const double noise = spread > 0.0 ? spread * normal(rng) : 0.0;
        row[j] = std::clamp((mean[j] + noise) * scale, -1.0, 1.0);
      }
      ds.labels.push_back(static_cast<int>(c));
    }
  }
  return ds;
}

namespace {

std::vector<double> sample_dirichlet(std::size_t k, double alpha, Rng& rng) {
  std::gamma_distribution<double> gamma(alpha, 1.0);
  std::vector<double> p(k);
  double sum = 0.0;
  for (auto& v : p) {
    v = gamma(rng);
    sum += v;
  }
  if (!(sum > 0.0)) {
    // Every draw underflowed; only reachable for extremely small alpha.
    std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(k));
    return p;
  }
  for (auto& v : p) v /= sum;
  return p;
}

std::vector<std::size_t> apportion(std::span<const double> proportions, std::size_t total) {
  const std::size_t k = proportions.size();
  std::vector<std::size_t> counts(k);
  std::vector<double> remainder(k);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const double exact = proportions[i] * static_cast<double>(total);
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    remainder[i] = exact - static_cast<double>(counts[i]);
    assigned += counts[i];
  }
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t i = 0; assigned < total; ++i, ++assigned) ++counts[order[i % k]];
  return counts;
}

}  // namespace

std::vector<std::vector<std::size_t>> dirichlet_partition_indices(const Dataset& ds, const PartitionSpec& spec) {
  if (spec.clients < 1) throw DataError("partition: need at least one client");
  if (!(spec.alpha > 0.0)) throw DataError("partition: alpha must be positive");
  if (ds.size() < spec.clients) throw DataError("partition: fewer samples than clients");

  Rng rng(spec.seed);
  std::vector<std::vector<std::size_t>> by_class(ds.num_classes);
  for (std::size_t i = 0; i < ds.size(); ++i) by_class[static_cast<std::size_t>(ds.labels[i])].push_back(i);

  std::vector<std::vector<std::size_t>> shards(spec.clients);
  for (std::size_t c = 0; c < ds.num_classes; ++c) {
    auto& members = by_class[c];
    if (members.empty()) throw DataError("partition: class " + std::to_string(c) + " has no samples");
    std::shuffle(members.begin(), members.end(), rng);
    const auto proportions = sample_dirichlet(spec.clients, spec.alpha, rng);
    const auto counts = apportion(proportions, members.size());
    std::size_t cursor = 0;
    for (std::size_t k = 0; k < spec.clients; ++k) {
      shards[k].insert(shards[k].end(), members.begin() + static_cast<std::ptrdiff_t>(cursor),
                       members.begin() + static_cast<std::ptrdiff_t>(cursor + counts[k]));
      cursor += counts[k];
    }
  }

  for (std::size_t k = 0; k < spec.clients; ++k) {
    if (!shards[k].empty()) continue;
    auto largest = std::max_element(shards.begin(), shards.end(),
                                    [](const auto& a, const auto& b) { return a.size() < b.size(); });
    shards[k].push_back(largest->back());
    largest->pop_back();
    log(LogLevel::info, "partition: client " + std::to_string(k) + " was empty; moved one sample from client " +
                            std::to_string(largest - shards.begin()));
  }
  return shards;
}

std::vector<Dataset> dirichlet_partition(const Dataset& ds, const PartitionSpec& spec) {
  std::vector<Dataset> out;
  for (const auto& idx : dirichlet_partition_indices(ds, spec)) out.push_back(ds.subset(idx));
  return out;
}

void save_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << "label";
  for (std::size_t j = 0; j < ds.dim(); ++j) out << ",f" << j;
  out << '\n';
  char buf[64];
  for (std::size_t r = 0; r < ds.size(); ++r) {
    out << ds.labels[r];
    for (double v : ds.samples.row(r)) {
      auto res = std::to_chars(buf, buf + sizeof(buf), v);
      out << ',' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
    }
    out << '\n';
  }
}

namespace {

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path, std::optional<std::size_t> num_classes) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": no rows");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_commas(line);
  if (header.size() < 2 || header[0] != "label") throw DataError(path.string() + ": line 1: malformed header");
  const std::size_t dim = header.size() - 1;
  for (std::size_t j = 0; j < dim; ++j) {
    if (header[j + 1] != "f" + std::to_string(j)) throw DataError(path.string() + ": line 1: malformed header");
  }

  std::vector<double> values;
  std::vector<int> labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_commas(line);
    const std::string where = path.string() + ": line " + std::to_string(line_no);
    if (fields.size() != dim + 1) {
      throw DataError(where + ": expected " + std::to_string(dim + 1) + " fields, got " + std::to_string(fields.size()));
    }
    int label = 0;
    auto [lp, lec] = std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), label);
    if (lec != std::errc() || lp != fields[0].data() + fields[0].size() || label < 0) {
      throw DataError(where + ": unknown label '" + fields[0] + "'");
    }
    if (num_classes && static_cast<std::size_t>(label) >= *num_classes) {
      throw DataError(where + ": unknown label " + std::to_string(label));
    }
    labels.push_back(label);
    for (std::size_t j = 1; j <= dim; ++j) {
      double v = 0.0;
      auto [p, ec] = std::from_chars(fields[j].data(), fields[j].data() + fields[j].size(), v);
      if (ec != std::errc() || p != fields[j].data() + fields[j].size() || !std::isfinite(v)) {
        throw DataError(where + ": malformed value '" + fields[j] + "'");
      }
      values.push_back(v);
    }
  }
  if (labels.empty()) throw DataError(path.string() + ": no rows");
  Dataset ds;
  ds.num_classes = num_classes ? *num_classes : static_cast<std::size_t>(*std::max_element(labels.begin(), labels.end())) + 1;
  ds.samples = Tensor({labels.size(), dim}, std::move(values));
  ds.labels = std::move(labels);
  return ds;
}

}  // namespace fedzge
