#pragma once

/// Shared vocabulary for the lsvar library: matrix aliases, the error type,
/// transition intervals and a small deterministic parallel-for.

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace lsvar {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Stable error categories; the CLI maps each to a fixed exit code.
enum class ErrorCode {
  invalid_argument = 2,
  unstable_model = 3,
  degenerate_interval = 4,
  fit_failure = 5,
  detection_failure = 6,
  io_error = 7,
  parse_error = 8,
  undefined_value = 9,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::unstable_model: return "unstable_model";
    case ErrorCode::degenerate_interval: return "degenerate_interval";
    case ErrorCode::fit_failure: return "fit_failure";
    case ErrorCode::detection_failure: return "detection_failure";
    case ErrorCode::io_error: return "io_error";
    case ErrorCode::parse_error: return "parse_error";
    case ErrorCode::undefined_value: return "undefined_value";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) throw Error(code, message);
}

/// Half-open range of transition indices [begin, end). Transition t pairs the
/// observations (X_{t-1}, X_t), so a series with T rows has transitions
/// 1..T-1 and the whole series is Interval{1, T}.
struct Interval {
  Index begin = 1;
  Index end = 1;

  Index size() const { return end - begin; }
  bool contains(Index t) const { return t >= begin && t < end; }
  friend bool operator==(const Interval&, const Interval&) = default;
  friend auto operator<=>(const Interval&, const Interval&) = default;
};

/// Worker count: LSVAR_THREADS if set and positive, else hardware concurrency.
inline unsigned worker_count() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("LSVAR_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<unsigned>(std::min<long>(v, 1024));
  }
  return hw;
}

/// Runs body(i) for i in [0, n). Each index is processed exactly once, so
/// results written to per-index slots do not depend on scheduling. The first
/// exception thrown by any body is rethrown on the calling thread.
template <class Body>
void parallel_for(std::size_t n, Body&& body, unsigned max_workers = 0) {
  unsigned workers = max_workers ? max_workers : worker_count();
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto run = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace lsvar
