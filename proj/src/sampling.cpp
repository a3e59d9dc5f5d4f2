#include "sampling.hpp"

#include <algorithm>
#include <map>
#include <numeric>

namespace aware {

std::vector<Batch> balanced_batches(std::span<const int> labels, std::size_t batch_size, Rng& rng) {
  const std::size_t n = labels.size();
  require(n >= 1, "cannot sample from an empty label set");
  if (batch_size > n) {
    fail(ErrorKind::invalid_argument,
         "batch size " + std::to_string(batch_size) + " exceeds row count " + std::to_string(n));
  }
  require(batch_size >= 1, "batch size must be positive");

  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < n; ++i) members[labels[i]].push_back(i);
  std::vector<std::vector<std::size_t>> pools;
  for (auto& [cls, rows] : members) pools.push_back(std::move(rows));
  const std::size_t n_classes = pools.size();

  // Each row weighs 1/N_c, so every class holds equal mass while it has untaken rows.
  // Inside a batch, taken rows are swapped to the front of their pool.
  std::vector<std::size_t> taken(n_classes);
  std::vector<double> mass(n_classes);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t n_batches = (n + batch_size - 1) / batch_size;
  std::vector<Batch> out(n_batches);
  for (auto& batch : out) {
    std::fill(taken.begin(), taken.end(), 0);
    batch.reserve(batch_size);
    for (std::size_t draw = 0; draw < batch_size; ++draw) {
      double total = 0.0;
      for (std::size_t c = 0; c < n_classes; ++c) {
        mass[c] = taken[c] < pools[c].size() ? 1.0 : 0.0;
        total += mass[c];
      }
      double u = unit(rng) * total;
      std::size_t c = 0;
      for (; c + 1 < n_classes; ++c) {
        if (mass[c] > 0.0 && u < mass[c]) break;
        u -= mass[c];
      }
      while (pools[c].size() == taken[c]) c = (c + n_classes - 1) % n_classes;  // guard against rounding at the edge
      auto& pool = pools[c];
      std::uniform_int_distribution<std::size_t> pick(taken[c], pool.size() - 1);
      std::swap(pool[taken[c]], pool[pick(rng)]);
      batch.push_back(pool[taken[c]]);
      ++taken[c];
    }
  }
  return out;
}

std::vector<Batch> uniform_batches(std::size_t n, std::size_t batch_size, Rng& rng) {
  require(batch_size >= 1, "batch size must be positive");
  if (batch_size > n) {
    fail(ErrorKind::invalid_argument,
         "batch size " + std::to_string(batch_size) + " exceeds row count " + std::to_string(n));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Batch> out;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t end = std::min(n, start + batch_size);
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start), order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

}  // namespace aware
