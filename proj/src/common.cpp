#include "common.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <exception>
#include <thread>
#include <vector>

namespace aware {

std::string to_string(DistanceKind kind) {
  switch (kind) {
    case DistanceKind::squared_euclidean:
      return "squared_euclidean";
    case DistanceKind::cosine:
      return "cosine";
  }
  return "unknown";
}

DistanceKind distance_kind_from_string(const std::string& name) {
  if (name == "squared_euclidean" || name == "squared-euclidean" || name == "euclidean") {
    return DistanceKind::squared_euclidean;
  }
  if (name == "cosine") return DistanceKind::cosine;
  fail(ErrorKind::config, "unknown distance kind '" + name + "' (expected squared_euclidean or cosine)");
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::string format_double(double v) {
  if (std::isnan(v)) return "NA";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void parallel_ranges(std::size_t n, unsigned jobs, const std::function<void(std::size_t, std::size_t)>& fn) {
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (jobs == 1) {
    fn(0, n);
    return;
  }
  std::vector<std::exception_ptr> errors(jobs);
  std::vector<std::thread> threads;
  const std::size_t chunk = (n + jobs - 1) / jobs;
  for (unsigned t = 0; t < jobs; ++t) {
    const std::size_t begin = std::min(n, t * chunk);
    const std::size_t end = std::min(n, begin + chunk);
    threads.emplace_back([&, t, begin, end] {
      try {
        fn(begin, end);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : threads) th.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace aware
