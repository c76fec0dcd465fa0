#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace rfap {

// Error taxonomy shared by all modules. The CLI maps these onto exit codes.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ContractError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Rng = std::mt19937_64;

/// Derives an independent RNG stream from a master seed and a stream tag.
/// Streams with different tags never collide for a fixed master seed.
inline Rng make_stream(std::uint64_t seed, std::uint64_t tag) {
  std::seed_seq seq{seed, tag, std::uint64_t{0x9e3779b97f4a7c15ull}};
  return Rng(seq);
}

/// Runs fn(begin, end, chunk_index) over [0, n) partitioned into exactly
/// `threads` contiguous chunks. Chunk boundaries depend only on (n, threads),
/// so any per-chunk accumulation merged in chunk order is reproducible for a
/// fixed thread count.
inline void parallel_chunks(std::size_t n, int threads,
                            const std::function<void(std::size_t, std::size_t, int)>& fn) {
  if (threads < 1) threads = 1;
  if (n == 0) return;
  if (threads == 1 || n == 1) {
    fn(0, n, 0);
    return;
  }
  const int nchunks = static_cast<int>(std::min<std::size_t>(threads, n));
  std::vector<std::thread> pool;
  pool.reserve(nchunks);
  for (int c = 0; c < nchunks; ++c) {
    const std::size_t begin = n * c / nchunks;
    const std::size_t end = n * (c + 1) / nchunks;
    pool.emplace_back([&fn, begin, end, c] { fn(begin, end, c); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace rfap
