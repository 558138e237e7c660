#include "rps/stats.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace rps {

MeanEstimate estimate_mean(std::span<const double> values) {
  MeanEstimate out;
  out.count = values.size();
  if (values.empty()) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.std_dev = std::sqrt(ss / static_cast<double>(values.size() - 1));
    out.half_width = 1.96 * out.std_dev / std::sqrt(static_cast<double>(values.size()));
  }
  return out;
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("fit_line: x and y differ in length");
  const std::size_t n = x.size();
  if (n < 2) throw std::invalid_argument("fit_line: need at least two points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_line: x values are all equal");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  fit.points = n;
  return fit;
}

std::vector<std::vector<double>> run_samples(std::size_t samples, unsigned workers,
                                             const std::function<std::vector<double>(std::size_t)>& task) {
  std::vector<std::vector<double>> results(samples);
  const unsigned threads = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(samples, 1))));
  if (threads == 1) {
    for (std::size_t s = 0; s < samples; ++s) results[s] = task(s);
    return results;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t s = next.fetch_add(1);
      if (s >= samples) return;
      try {
        results[s] = task(s);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(samples);
        return;
      }
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (unsigned w = 0; w < threads; ++w) pool.emplace_back(worker);
  pool.clear();
  if (failure) std::rethrow_exception(failure);
  return results;
}

}  // namespace rps
