#pragma once

#include <exception>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace urisk {

// Execution policy for the data-parallel kernels (grid profiles, per-tau
// fits, Monte Carlo replications). Every kernel writes results into
// index-addressed slots and merges them in index order afterwards, so the
// serial path is the reference and the OpenMP path must match it exactly.
enum class Exec { serial, openmp };

void set_max_threads(int n);  // 0 = leave the OpenMP default
int max_threads();

template <typename Fn>
void for_each_index(int count, Exec exec, Fn&& fn) {
#ifdef _OPENMP
  if (exec == Exec::openmp && count > 1) {
    std::vector<std::exception_ptr> errs(static_cast<std::size_t>(count));
    bool failed = false;
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < count; ++i) {
      try {
        fn(i);
      } catch (...) {
        errs[static_cast<std::size_t>(i)] = std::current_exception();
#pragma omp atomic write
        failed = true;
      }
    }
    if (failed)
      for (auto& e : errs)
        if (e) std::rethrow_exception(e);  // lowest index wins, deterministically
    return;
  }
#endif
  for (int i = 0; i < count; ++i) fn(i);
}

}  // namespace urisk
