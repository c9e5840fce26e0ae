#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace igabem {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat36 = Eigen::Matrix<double, 3, 6>;
using MatX = Eigen::MatrixXd;
using VecX = Eigen::VectorXd;

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid argument or evaluation outside an operation's domain.
class DomainError : public Error {
public:
  using Error::Error;
};

/// Inconsistent or non-evaluable geometry (trim image escapes, inverted map, ...).
class GeometryError : public Error {
public:
  using Error::Error;
};

/// Cell-mesh generation failure.
class MeshError : public Error {
public:
  using Error::Error;
};

/// Boundary/volume system assembly failure (duplicate dofs, quadrature accuracy, ...).
class AssemblyError : public Error {
public:
  using Error::Error;
};

/// Solution-stage failure (singular system, non-convergence).
class SolverError : public Error {
public:
  using Error::Error;
};

/// Input/output failure (config schema, unwritable paths).
class IoError : public Error {
public:
  using Error::Error;
};

/// Number of worker threads: IGABEM_THREADS env var, else hardware concurrency.
inline unsigned thread_count() {
  if (const char* env = std::getenv("IGABEM_THREADS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n >= 1) return static_cast<unsigned>(n);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

/// Runs fn(i) for i in [0, n). Work is split into contiguous index blocks, one per
/// thread, so results written to disjoint per-index slots are deterministic.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const unsigned threads = thread_count();
  if (threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const unsigned used = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  std::vector<std::thread> pool;
  pool.reserve(used);
  std::exception_ptr first_error;
  std::mutex error_mutex;
  const std::size_t chunk = (n + used - 1) / used;
  for (unsigned t = 0; t < used; ++t) {
    const std::size_t begin = t * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    pool.emplace_back([&, begin, end] {
      try {
        for (std::size_t i = begin; i < end; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

/// Spatial hash key for merging coincident points at resolution tol.
inline std::uint64_t point_key(const Vec3& x, double tol) {
  auto q = [tol](double v) {
    return static_cast<std::int64_t>(std::llround(v / tol));
  };
  std::uint64_t h = 1469598103934665603ull;
  for (const std::int64_t c : {q(x.x()), q(x.y()), q(x.z())}) {
    for (int b = 0; b < 8; ++b) {
      h ^= static_cast<std::uint64_t>((c >> (8 * b)) & 0xff);
      h *= 1099511628211ull;
    }
  }
  return h;
}

}  // namespace igabem
