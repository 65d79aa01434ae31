// Copyright 2026 The rdfield Authors
// SPDX-License-Identifier: Apache-2.0

#include "rdfield/threading.hpp"

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace rdf {

std::size_t default_worker_count() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<std::size_t>(hw);
}

namespace {

std::size_t resolve_workers(std::size_t count, int n_workers) {
  std::size_t w = n_workers <= 0 ? default_worker_count()
                                 : static_cast<std::size_t>(n_workers);
  return std::clamp<std::size_t>(w, 1, std::max<std::size_t>(count, 1));
}

void run_blocks(std::size_t count,
                const std::function<void(std::size_t, std::size_t)>& fn,
                std::size_t workers) {
  if (count == 0) return;
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i, 0);
    return;
  }

  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t slot = 0; slot < workers; ++slot) {
    const std::size_t begin = slot * count / workers;
    const std::size_t end = (slot + 1) * count / workers;
    pool.emplace_back([&, slot, begin, end] {
      try {
        for (std::size_t i = begin; i < end; ++i) fn(i, slot);
      } catch (...) {
        errors[slot] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }
}

}  // namespace

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn,
                  int n_workers) {
  run_blocks(count, [&fn](std::size_t i, std::size_t) { fn(i); },
             resolve_workers(count, n_workers));
}

void parallel_for_workers(std::size_t count,
                          const std::function<void(std::size_t, std::size_t)>& fn,
                          int n_workers) {
  run_blocks(count, fn, resolve_workers(count, n_workers));
}

}  // namespace rdf
