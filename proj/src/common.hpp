#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>

namespace aware {

// Rows are instances throughout the library.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

using Rng = std::mt19937_64;

enum class ErrorKind {
  invalid_argument,  // caller broke a precondition
  config,            // schema / manifest / configuration problem
  data,              // malformed or inconsistent data, shape mismatch
  io,                // file system failures
  numeric,           // non-finite values where finite ones are required
  backbone,          // external backbone protocol failure
  internal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(ErrorKind::invalid_argument, what);
}

enum class DistanceKind { squared_euclidean, cosine };

std::string to_string(DistanceKind kind);
DistanceKind distance_kind_from_string(const std::string& name);

// Mixes a base seed with a stream index (splitmix64 finalizer), used wherever
// independent sub-streams are needed from one user seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// Shortest decimal text that parses back to the same double; "NA" for NaN.
std::string format_double(double v);

// Runs fn(begin, end) over contiguous slices of [0, n) on up to `jobs` threads
// and rethrows the first failure after all slices finish.
void parallel_ranges(std::size_t n, unsigned jobs, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace aware
