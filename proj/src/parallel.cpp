#include "urisk/parallel.hpp"

namespace urisk {

namespace {
int g_max_threads = 0;
}

void set_max_threads(int n) {
  g_max_threads = n;
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#endif
}

int max_threads() {
#ifdef _OPENMP
  return g_max_threads > 0 ? g_max_threads : omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace urisk
