#pragma once

#include <cstddef>
#include <functional>

namespace slope {

/// Worker count used by replicate/fold loops. Set from the CLI --jobs flag or
/// the SLOPE_DESIGNER_THREADS env var; defaults to 1.
std::size_t get_jobs();
void set_jobs(std::size_t jobs);
std::size_t jobs_from_env(std::size_t fallback);

/// Runs fn(i) for i in [0, n). Work is split into contiguous chunks, one per
/// worker; results must be written to per-index slots so the reduction order
/// (done by the caller, sequentially) is independent of the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace slope
