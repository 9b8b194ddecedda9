#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <vector>

namespace dmft_sgd {

/// Thread count: DMFT_SGD_THREADS if set to a positive integer, else
/// `requested` if positive, else std::thread::hardware_concurrency().
int resolve_threads(int requested = 0);

/// Runs body(i) for i in [0, count) on up to `threads` workers. Each index
/// is executed exactly once; exceptions from workers are rethrown on the
/// calling thread (the first one wins).
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body);

/// Deterministic chunked reduction over [0, count).
///
/// The range is cut into fixed chunks of `chunk` items, independent of the
/// thread count. Each chunk is reduced into a fresh accumulator by
/// `process(acc, begin, end)`; chunks are then folded into the result
/// strictly in chunk order with `merge(result, acc)`. The outcome is
/// therefore bit-identical for any number of threads.
template <typename Acc, typename MakeAcc, typename Process, typename Merge>
Acc chunked_reduce(std::size_t count, std::size_t chunk, int threads, MakeAcc make_acc, Process process,
                   Merge merge) {
    Acc result = make_acc();
    if (count == 0) return result;
    chunk = std::max<std::size_t>(chunk, 1);
    const std::size_t n_chunks = (count + chunk - 1) / chunk;
    const std::size_t wave = static_cast<std::size_t>(std::max(threads, 1));
    for (std::size_t first = 0; first < n_chunks; first += wave) {
        const std::size_t in_wave = std::min(wave, n_chunks - first);
        std::vector<Acc> partial;
        partial.reserve(in_wave);
        for (std::size_t i = 0; i < in_wave; ++i) partial.push_back(make_acc());
        parallel_for(in_wave, threads, [&](std::size_t i) {
            const std::size_t c = first + i;
            const std::size_t begin = c * chunk;
            const std::size_t end = std::min(count, begin + chunk);
            process(partial[i], begin, end);
        });
        for (auto& p : partial) merge(result, p);
    }
    return result;
}

}  // namespace dmft_sgd
