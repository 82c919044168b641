#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace evfusion {

inline constexpr std::size_t kDefaultChunk = 256;

// Calls fn(chunk, begin, end) for every fixed-size chunk of [0, n). Chunk
// boundaries depend only on n and chunk_size, never on the thread count, so
// per-chunk partial results reduced in chunk order are reproducible. If any
// chunk throws, the exception of the lowest-indexed failing chunk is rethrown.
void for_each_chunk(std::size_t n, std::size_t chunk_size, std::size_t threads,
                    const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

inline std::size_t chunk_count(std::size_t n, std::size_t chunk_size) {
  return (n + chunk_size - 1) / chunk_size;
}

// Pairwise (cascade) summation.
double pairwise_sum(std::span<const double> values);

}  // namespace evfusion
