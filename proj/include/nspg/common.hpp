#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace nspg {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = 3.14159265358979323846;

/// Raised when an operation's preconditions are violated (bad input, unmet hypothesis).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Worker count: hardware concurrency capped by the NSPG_THREADS environment variable.
std::size_t thread_count();

/// Runs f(i) for i in [0, n). Each index is handled exactly once; callers write
/// into per-index slots so results do not depend on scheduling.
template <class F>
void parallel_for(std::size_t n, F&& f) {
  const std::size_t workers = std::min(thread_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) f(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace nspg
