#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace lmc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Bad arguments or configuration (CLI exit code 1).
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Input outside the mathematical domain (negative radius, non-finite state, ...).
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

/// A non-finite value appeared during a simulation.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Per-member random stream. Streams are keyed by (seed, stream index) so that
/// an ensemble gives the same output regardless of thread layout.
class RngStream {
 public:
  RngStream() : RngStream(0, 0) {}
  RngStream(std::uint64_t seed, std::uint64_t stream) : engine_(mix(mix(seed) ^ (stream + 0x6c6d63756c6d6375ull))) {}

  /// splitmix64 finalizer.
  static constexpr std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  double gaussian() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  std::uint64_t bits() { return engine_(); }
  std::mt19937_64& engine() { return engine_; }

  template <class Derived>
  void fill_gaussian(Eigen::MatrixBase<Derived>& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = normal_(engine_);
  }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// Runs fn(i) for i in [0, n) on up to hardware_concurrency threads.
/// Work is split into contiguous blocks; fn must only touch member-local state.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn, unsigned max_threads = 0) {
  unsigned hw = max_threads ? max_threads : std::max(1u, std::thread::hardware_concurrency());
  const std::size_t threads = std::min<std::size_t>(hw, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  pool.reserve(threads);
  const std::size_t block = (n + threads - 1) / threads;
  for (std::size_t t = 0; t < threads; ++t) {
    const std::size_t lo = t * block, hi = std::min(n, lo + block);
    pool.emplace_back([lo, hi, t, &fn, &errors] {
      try {
        for (std::size_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// Pairwise summation; result depends only on the order of `v`.
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 16) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t h = v.size() / 2;
  return pairwise_sum(v.subspan(0, h)) + pairwise_sum(v.subspan(h));
}

struct MeanSe {
  double mean = 0.0;
  double std_error = 0.0;
  double variance = 0.0;
};

/// Sample mean, unbiased variance and standard error of the mean.
inline MeanSe mean_se(std::span<const double> v) {
  MeanSe r;
  if (v.empty()) return r;
  const double n = static_cast<double>(v.size());
  r.mean = pairwise_sum(v) / n;
  std::vector<double> sq(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) sq[i] = (v[i] - r.mean) * (v[i] - r.mean);
  r.variance = v.size() > 1 ? pairwise_sum(sq) / (n - 1.0) : 0.0;
  r.std_error = std::sqrt(r.variance / n);
  return r;
}

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw UsageError(msg);
}

}  // namespace lmc
