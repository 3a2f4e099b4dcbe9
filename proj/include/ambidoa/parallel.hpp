#pragma once

namespace ambidoa {

// Every data-parallel kernel exposes both paths. The serial one is the
// reference the tests compare against; results must be bit-identical.
enum class Exec { serial, parallel };

// Thread cap from AMBIDOA_THREADS (unset or invalid -> OpenMP default).
int thread_count();

// Applies AMBIDOA_THREADS to the OpenMP runtime once per process.
void configure_threads_from_env();

}  // namespace ambidoa
