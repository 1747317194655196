#pragma once

#include <condition_variable>
#include <exception>
#include <map>
#include <mutex>
#include <thread>
#include <utility>
#include <vector>

namespace rshe::harness {

// Runs work(b) for b = 0..n_batches-1 on `workers` threads with static cyclic
// assignment (worker w owns batches w, w+W, ...), and hands every result to
// combine(b, partial) strictly in batch order. Combination order is therefore
// a pure function of the batch structure, never of the worker count. A
// bounded admission window keeps at most O(workers) partials pending so big
// per-batch accumulators do not pile up.
template <typename Partial, typename Work, typename Combine>
void run_batches_ordered(int n_batches, int workers, Work&& work,
                         Combine&& combine) {
  if (workers < 1) workers = 1;
  if (workers == 1) {
    for (int b = 0; b < n_batches; ++b) combine(b, work(b));
    return;
  }

  std::mutex mu;
  std::condition_variable cv;
  std::map<int, Partial> pending;
  int frontier = 0;
  const int window = 2 * workers + 2;
  std::exception_ptr failure;

  auto deliver = [&](int b, Partial&& p) {
    std::unique_lock lock(mu);
    pending.emplace(b, std::move(p));
    while (!pending.empty() && pending.begin()->first == frontier) {
      auto node = pending.extract(pending.begin());
      int idx = node.key();
      Partial partial = std::move(node.mapped());
      lock.unlock();
      combine(idx, std::move(partial));  // only one thread can hold frontier
      lock.lock();
      frontier = idx + 1;
      cv.notify_all();
    }
  };

  auto worker_loop = [&](int w) {
    try {
      for (int b = w; b < n_batches; b += workers) {
        {
          std::unique_lock lock(mu);
          cv.wait(lock, [&] {
            return failure != nullptr || b < frontier + window;
          });
          if (failure) return;
        }
        Partial p = work(b);
        deliver(b, std::move(p));
      }
    } catch (...) {
      std::lock_guard lock(mu);
      if (!failure) failure = std::current_exception();
      cv.notify_all();
    }
  };

  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (int w = 0; w < workers; ++w) threads.emplace_back(worker_loop, w);
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace rshe::harness
