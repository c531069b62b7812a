#include "drlab/common.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

namespace drlab {

Mat matrix_exponential(const Mat& m, int d) {
  // Scale so the Frobenius norm of the scaled matrix is below 1/2, run the
  // Taylor series to convergence, then square back.
  double nrm = frobenius(m);
  int squarings = 0;
  double scale = 1.0;
  while (nrm * scale > 0.5) {
    scale *= 0.5;
    ++squarings;
  }
  Mat a = scale * m;
  Mat term = Mat::identity(d);
  Mat sum = term;
  for (int k = 1; k <= 24; ++k) {
    term = (1.0 / k) * mul(term, a);
    sum = sum + term;
    if (frobenius(term) < 1e-18) break;
  }
  for (int s = 0; s < squarings; ++s) sum = mul(sum, sum);
  return sum;
}

double pairwise_sum(std::span<const double> terms) {
  const std::size_t n = terms.size();
  if (n <= 32) {
    double s = 0.0;
    for (double t : terms) s += t;
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(terms.first(half)) + pairwise_sum(terms.subspan(half));
}

namespace {
std::atomic<int> g_workers{1};
}

void set_worker_count(int n) {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw <= 0) hw = 1;
  g_workers.store(std::clamp(n <= 0 ? hw : n, 1, 256));
}

int worker_count() { return g_workers.load(); }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const int workers = std::min<std::size_t>(g_workers.load(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto run = [&] {
    const std::size_t chunk = std::max<std::size_t>(1, n / (8 * static_cast<std::size_t>(workers)));
    for (;;) {
      std::size_t begin = next.fetch_add(chunk);
      if (begin >= n) return;
      std::size_t end = std::min(n, begin + chunk);
      for (std::size_t i = begin; i < end; ++i) body(i);
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers) - 1);
  for (int t = 1; t < workers; ++t) pool.emplace_back(run);
  run();
  for (auto& th : pool) th.join();
}

}  // namespace drlab
