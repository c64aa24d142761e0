#pragma once

#include <cstddef>
#include <functional>

namespace llmfrac {

/// Caps the number of worker threads used by parallel_for. 0 means
/// hardware concurrency. Thread count never affects results: jobs are
/// independent and write to preassigned slots.
void set_worker_threads(unsigned n) noexcept;
unsigned worker_threads() noexcept;

/// Runs fn(0) .. fn(n_jobs-1) on up to worker_threads() threads.
/// fn must not touch shared mutable state other than its own slot.
void parallel_for(std::size_t n_jobs, const std::function<void(std::size_t)>& fn);

}  // namespace llmfrac
