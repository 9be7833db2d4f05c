#pragma once

#include <cstddef>
#include <exception>
#include <vector>

namespace mcf::par {

enum class Exec { serial, parallel };

// Process-wide defaults; the CLI sets them from --threads.
void set_threads(int n);
int threads();
void set_default_exec(Exec e);
Exec default_exec();

// Evaluates f(i) for i in [0,n) and returns results by index, so the output is
// independent of scheduling. The first exception (lowest index) is rethrown.
template <class R, class F>
std::vector<R> map_indexed(std::size_t n, F&& f, Exec mode = default_exec()) {
  std::vector<R> out(n);
  if (mode == Exec::serial || n < 2) {
    for (std::size_t i = 0; i < n; ++i) out[i] = f(i);
    return out;
  }
  std::vector<std::exception_ptr> errs(n);
  const long long nn = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads())
  for (long long i = 0; i < nn; ++i) {
    try {
      out[i] = f(static_cast<std::size_t>(i));
    } catch (...) {
      errs[i] = std::current_exception();
    }
  }
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace mcf::par
