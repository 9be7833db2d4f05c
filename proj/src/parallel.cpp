#include "mcf/parallel.hpp"

#include <omp.h>

#include <atomic>

namespace mcf::par {

namespace {
std::atomic<int> g_threads{0};
std::atomic<Exec> g_exec{Exec::parallel};
}  // namespace

void set_threads(int n) { g_threads = n > 0 ? n : 0; }

int threads() {
  int n = g_threads.load();
  return n > 0 ? n : omp_get_max_threads();
}

void set_default_exec(Exec e) { g_exec = e; }
Exec default_exec() { return g_exec.load(); }

}  // namespace mcf::par
