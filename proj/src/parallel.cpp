#include "tdbo/parallel.hpp"

#include <atomic>
#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tdbo {
namespace {

std::atomic<int> g_threads{0};

int env_threads() {
  const char* env = std::getenv("TDBO_THREADS");
  if (env == nullptr) return 0;
  const int n = std::atoi(env);
  return n > 0 ? n : 0;
}

}  // namespace

void set_threads(int n) { g_threads.store(n > 0 ? n : 0); }

int threads() {
  if (const int n = env_threads(); n > 0) return n;
  if (const int n = g_threads.load(); n > 0) return n;
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace tdbo
