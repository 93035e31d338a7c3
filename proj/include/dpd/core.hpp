#pragma once

#include <cstddef>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

namespace dpd {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Error hierarchy. Each maps to a distinct CLI exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller broke an operation's precondition (dimension mismatch, bad sizes).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

// A solver regime or run configuration is inconsistent with the problem constants.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Non-finite iterate detected.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& iterate, long t)
      : Error("divergence: non-finite value in " + iterate + " at t=" + std::to_string(t)),
        iterate_(iterate),
        t_(t) {}
  const std::string& iterate() const noexcept { return iterate_; }
  long t() const noexcept { return t_; }

 private:
  std::string iterate_;
  long t_;
};

class NumericalFailure : public Error {
 public:
  using Error::Error;
};

class UnsupportedPoint : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw ContractViolation(what);
}

inline void require_same_size(const Vec& a, Index n, const char* what) {
  if (a.size() != n) {
    throw ContractViolation(std::string(what) + ": expected length " + std::to_string(n) +
                            ", got " + std::to_string(a.size()));
  }
}

// Worker count for internal loops, capped by DPD_THREADS (default 1).
inline unsigned thread_count() {
  static const unsigned n = [] {
    const char* env = std::getenv("DPD_THREADS");
    if (env == nullptr) return 1u;
    const long v = std::strtol(env, nullptr, 10);
    if (v <= 1) return 1u;
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    return static_cast<unsigned>(std::min<long>(v, hw));
  }();
  return n;
}

// Runs body(begin, end) over [0, n) split into contiguous chunks. Each index is
// written by exactly one worker, so results do not depend on the thread count.
template <typename Body>
void parallel_for(Index n, Body&& body) {
  const unsigned workers = thread_count();
  if (workers <= 1 || n < 2048) {
    body(Index{0}, n);
    return;
  }
  std::vector<std::thread> pool;
  const Index chunk = (n + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    const Index lo = w * chunk;
    const Index hi = std::min<Index>(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&body, lo, hi] { body(lo, hi); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace dpd
