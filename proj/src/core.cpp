#include "thermiga/core.hpp"

#include <cstdio>
#include <map>
#include <mutex>
#include <thread>

namespace thermiga {

Mat3 Mat3::inverse() const {
  const double d = det();
  if (d == 0.0) throw numeric_error("singular 3x3 matrix");
  Mat3 inv;
  inv.a[0] = (a[4] * a[8] - a[5] * a[7]) / d;
  inv.a[1] = (a[2] * a[7] - a[1] * a[8]) / d;
  inv.a[2] = (a[1] * a[5] - a[2] * a[4]) / d;
  inv.a[3] = (a[5] * a[6] - a[3] * a[8]) / d;
  inv.a[4] = (a[0] * a[8] - a[2] * a[6]) / d;
  inv.a[5] = (a[2] * a[3] - a[0] * a[5]) / d;
  inv.a[6] = (a[3] * a[7] - a[4] * a[6]) / d;
  inv.a[7] = (a[1] * a[6] - a[0] * a[7]) / d;
  inv.a[8] = (a[0] * a[4] - a[1] * a[3]) / d;
  return inv;
}

namespace {

GaussRule compute_gauss(int n) {
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  // Newton iteration on Legendre polynomials; nodes seeded by the Chebyshev
  // approximation. Accurate to machine precision for the counts used here.
  for (int i = 0; i < n; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      pp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    rule.nodes[n - 1 - i] = x;
    rule.weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * pp * pp);
  }
  return rule;
}

}  // namespace

const GaussRule& gauss_rule(int n_points) {
  if (n_points < 1) throw std::invalid_argument("gauss rule needs >= 1 point");
  static std::map<int, GaussRule> cache;
  static std::mutex mtx;
  std::lock_guard<std::mutex> lock(mtx);
  auto it = cache.find(n_points);
  if (it == cache.end()) it = cache.emplace(n_points, compute_gauss(n_points)).first;
  return it->second;
}

void parallel_for(std::size_t n, int n_threads,
                  const std::function<void(std::size_t, std::size_t)>& body) {
  if (n == 0) return;
  if (n_threads <= 1 || n < 2) {
    body(0, n);
    return;
  }
  const std::size_t workers = std::min<std::size_t>(n_threads, n);
  const std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&body, begin, end] { body(begin, end); });
  }
  for (auto& t : pool) t.join();
}

std::string fmt_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace thermiga
