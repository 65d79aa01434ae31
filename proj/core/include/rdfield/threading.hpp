// Copyright 2026 The rdfield Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>

namespace rdf {

/// Number of workers to use for `n_workers <= 0` requests.
std::size_t default_worker_count();

/// Runs fn(index) for index in [0, count) over `n_workers` threads with a
/// static block partition. Work item `i` always lands in block
/// i * n_workers / count, so results that are written per-index are
/// bit-identical for any worker count. Runs inline when n_workers <= 1.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn,
                  int n_workers);

/// Variant that passes the worker slot id alongside the index, for
/// per-worker accumulation buffers. Buffers must be merged by the caller in
/// slot order.
void parallel_for_workers(std::size_t count,
                          const std::function<void(std::size_t, std::size_t)>& fn,
                          int n_workers);

}  // namespace rdf
