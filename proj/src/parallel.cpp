#include "ambidoa/parallel.hpp"

#include <cstdlib>
#include <string>

#include <omp.h>

namespace ambidoa {

int thread_count() {
  if (const char* env = std::getenv("AMBIDOA_THREADS")) {
    try {
      int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (...) {
    }
  }
  return omp_get_max_threads();
}

void configure_threads_from_env() { omp_set_num_threads(thread_count()); }

}  // namespace ambidoa
