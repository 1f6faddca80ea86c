#pragma once

// Cartesian parameter grids and a flat work-sharing loop. Grid order is
// row-major in the axis list: the last axis varies fastest.

#include <atomic>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "adiabat/common.hpp"

namespace adiabat::grid {

struct AxisSpec {
  std::string name;
  double lo = 0.0;
  double hi = 0.0;
  int count = 1;  // count == 1 pins the axis at lo
};

inline std::vector<double> axis_values(const AxisSpec& axis) {
  require(axis.count >= 1, "axis '" + axis.name + "': count must be >= 1");
  if (axis.count == 1) return {axis.lo};
  require(axis.hi > axis.lo, "axis '" + axis.name + "': hi must exceed lo");
  std::vector<double> v(axis.count);
  const double step = (axis.hi - axis.lo) / (axis.count - 1);
  for (int i = 0; i < axis.count; ++i) v[i] = axis.lo + step * i;
  v.back() = axis.hi;
  return v;
}

inline std::vector<ParameterPoint> grid_points(const std::vector<AxisSpec>& axes) {
  require(!axes.empty(), "grid_points: need at least one axis");
  std::vector<std::vector<double>> values;
  size_t total = 1;
  for (const auto& axis : axes) {
    values.push_back(axis_values(axis));
    total *= values.back().size();
  }
  std::vector<ParameterPoint> points;
  points.reserve(total);
  const int d = static_cast<int>(axes.size());
  std::vector<size_t> idx(d, 0);
  for (size_t flat = 0; flat < total; ++flat) {
    ParameterPoint p(d);
    size_t rem = flat;
    for (int a = d - 1; a >= 0; --a) {
      const size_t n = values[a].size();
      p[a] = values[a][rem % n];
      rem /= n;
    }
    points.push_back(std::move(p));
  }
  return points;
}

// Runs fn(i) for i in [0, n) on up to `threads` workers. Work is handed out
// through a shared counter, so uneven task costs still balance. The first
// exception wins and is rethrown on the calling thread after all workers
// finish.
template <typename Fn>
void parallel_for(int n, int threads, Fn&& fn) {
  if (n <= 0) return;
  if (threads <= 1 || n == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  const int workers = std::min(threads, n);
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto body = [&] {
    while (!failed.load(std::memory_order_relaxed)) {
      const int i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= n) break;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed.store(true, std::memory_order_relaxed);
        break;
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace adiabat::grid
