#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ips {

inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Replication runner with a thread-count-independent reduction: replications
// are grouped into fixed-size blocks, block partials are merged in block
// order. Partial must be default-constructible with merge(const Partial&).
template <class Partial, class PerRep>
Partial run_replications(std::uint64_t reps, int threads, PerRep per_rep) {
  constexpr std::uint64_t kBlock = 256;
  const std::uint64_t nblocks = (reps + kBlock - 1) / kBlock;
  std::vector<Partial> partials(static_cast<std::size_t>(nblocks));
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;

  auto work = [&] {
    for (;;) {
      const std::uint64_t b = next.fetch_add(1);
      if (b >= nblocks) return;
      const std::uint64_t lo = b * kBlock;
      const std::uint64_t hi = std::min(reps, lo + kBlock);
      try {
        Partial& p = partials[static_cast<std::size_t>(b)];
        for (std::uint64_t r = lo; r < hi; ++r) per_rep(r, p);
      } catch (...) {
        std::lock_guard<std::mutex> lk(error_mu);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };

  const int nthreads = std::min<std::uint64_t>(resolve_threads(threads), std::max<std::uint64_t>(nblocks, 1));
  if (nthreads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(nthreads));
    for (int i = 0; i < nthreads; ++i) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);

  Partial total;
  for (const auto& p : partials) total.merge(p);
  return total;
}

}  // namespace ips
