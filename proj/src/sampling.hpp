#pragma once

#include "common.hpp"

#include <span>
#include <vector>

namespace aware {

using Batch = std::vector<std::size_t>;

// One epoch (ceil(N / batch_size) batches) of class-balanced batches. Rows are
// drawn with weight 1 / N_class, without replacement inside a batch and with
// replacement across batches. Indices refer to positions in `labels`.
std::vector<Batch> balanced_batches(std::span<const int> labels, std::size_t batch_size, Rng& rng);

// One epoch of plain shuffled batches (every row once; the last batch may be short).
std::vector<Batch> uniform_batches(std::size_t n, std::size_t batch_size, Rng& rng);

}  // namespace aware
