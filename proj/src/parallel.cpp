#include "hoifit/parallel.hpp"

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

#include "hoifit/errors.hpp"

namespace hoifit {

void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  if (workers < 1) throw ValidationError("parallel_for: workers must be >= 1");
  workers = std::min(workers, n);
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  // first_bad holds the smallest index whose call threw, so error behavior
  // does not depend on thread scheduling.
  std::vector<std::exception_ptr> errs(static_cast<size_t>(n));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    const int lo = static_cast<int>(static_cast<long long>(n) * w / workers);
    const int hi =
        static_cast<int>(static_cast<long long>(n) * (w + 1) / workers);
    pool.emplace_back([lo, hi, &fn, &errs] {
      for (int i = lo; i < hi; ++i) {
        try {
          fn(i);
        } catch (...) {
          errs[static_cast<size_t>(i)] = std::current_exception();
          break;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (int i = 0; i < n; ++i) {
    if (errs[static_cast<size_t>(i)]) {
      std::rethrow_exception(errs[static_cast<size_t>(i)]);
    }
  }
}

}  // namespace hoifit
