// Small shared utilities: 3-vectors, seeded RNG, deterministic parallel loops,
// and the smooth cutoff profile used by the dyadic projectors.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace boltzlab {

using cplx = std::complex<double>;

inline constexpr double pi = 3.14159265358979323846264338327950288;
inline constexpr double two_pi = 2.0 * pi;
inline constexpr double four_pi = 4.0 * pi;

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
  double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
};

inline Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
inline Vec3 operator-(Vec3 a) { return {-a.x, -a.y, -a.z}; }

inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm2(Vec3 a) { return dot(a, a); }
inline double norm(Vec3 a) { return std::sqrt(norm2(a)); }

// Orthonormal frame (e1, e2) completing the unit vector n. Deterministic in n.
inline void orthonormal_frame(Vec3 n, Vec3& e1, Vec3& e2) {
  const Vec3 seed = std::abs(n.x) <= std::abs(n.y)
                        ? (std::abs(n.x) <= std::abs(n.z) ? Vec3{1, 0, 0} : Vec3{0, 0, 1})
                        : (std::abs(n.y) <= std::abs(n.z) ? Vec3{0, 1, 0} : Vec3{0, 0, 1});
  Vec3 u = seed - dot(seed, n) * n;
  const double un = norm(u);
  e1 = (1.0 / un) * u;
  e2 = {n.y * e1.z - n.z * e1.y, n.z * e1.x - n.x * e1.z, n.x * e1.y - n.y * e1.x};
}

// splitmix64: tiny, seedable, platform-stable. All randomness in the project
// flows from instances of this generator so runs replay bit-for-bit.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  double normal() {
    // Box-Muller; consumes exactly two uniforms per pair.
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    u1 = std::max(u1, 0x1.0p-60);
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(two_pi * u2);
    have_spare_ = true;
    return r * std::cos(two_pi * u2);
  }

  Vec3 unit_vector() {
    while (true) {
      Vec3 p{uniform(-1, 1), uniform(-1, 1), uniform(-1, 1)};
      const double n2 = norm2(p);
      if (n2 > 1e-12 && n2 <= 1.0) return (1.0 / std::sqrt(n2)) * p;
    }
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

inline int hardware_threads() {
  if (const char* env = std::getenv("BOLTZLAB_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

// Deterministic data-parallel loop: the index range is split into contiguous
// blocks, one per worker, and every output index is written by exactly one
// worker. Results do not depend on the thread count.
template <class F>
void parallel_for(std::size_t n, F&& body) {
  const int nt = hardware_threads();
  if (nt <= 1 || n < 64) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(nt), n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t b = w * chunk;
    const std::size_t e = std::min(n, b + chunk);
    if (b >= e) break;
    pool.emplace_back([b, e, &body] {
      for (std::size_t i = b; i < e; ++i) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

// Always spawns one worker per block (up to the thread budget), for coarse
// hand-partitioned work where the per-block cost is large.
template <class F>
void parallel_blocks(int nblocks, F&& body) {
  const int nt = std::min(nblocks, hardware_threads());
  if (nt <= 1) {
    for (int b = 0; b < nblocks; ++b) body(b);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(nblocks);
  for (int b = 0; b < nblocks; ++b) pool.emplace_back([b, &body] { body(b); });
  for (auto& t : pool) t.join();
}

// C-infinity transition profile: chi(t) = 1 for |t| <= 1, 0 for |t| >= 2,
// strictly monotone in between (the e^{-1/s} construction).
inline double smooth_cutoff(double t) {
  const double a = std::abs(t);
  if (a <= 1.0) return 1.0;
  if (a >= 2.0) return 0.0;
  auto psi = [](double s) { return s > 0.0 ? std::exp(-1.0 / s) : 0.0; };
  const double p = psi(2.0 - a);
  return p / (p + psi(a - 1.0));
}

inline bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace boltzlab
