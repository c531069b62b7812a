#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace drlab {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

enum class Errc {
  parameter,     // bad argument value
  domain,        // point outside the evaluable domain
  precondition,  // operation preconditions not met
  refusal,       // mathematically meaningful refusal (CLI exit code 2)
  parse,         // malformed input file
  io,            // file system problem
  internal,
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& msg) { throw Error(code, msg); }

// ---------------------------------------------------------------------------
// Small fixed-capacity linear algebra (dimensions 1..3).
// Unused trailing components are kept at zero so dot/norm over all three
// components stay valid for any dimension.
// ---------------------------------------------------------------------------

struct Vec {
  std::array<double, 3> c{0.0, 0.0, 0.0};

  Vec() = default;
  Vec(double x) : c{x, 0.0, 0.0} {}
  Vec(double x, double y) : c{x, y, 0.0} {}
  Vec(double x, double y, double z) : c{x, y, z} {}

  double operator[](int i) const { return c[static_cast<std::size_t>(i)]; }
  double& operator[](int i) { return c[static_cast<std::size_t>(i)]; }
};

inline Vec operator+(Vec a, const Vec& b) {
  for (int i = 0; i < 3; ++i) a[i] += b[i];
  return a;
}
inline Vec operator-(Vec a, const Vec& b) {
  for (int i = 0; i < 3; ++i) a[i] -= b[i];
  return a;
}
inline Vec operator*(double s, Vec a) {
  for (int i = 0; i < 3; ++i) a[i] *= s;
  return a;
}
inline Vec operator-(Vec a) { return -1.0 * a; }
inline double dot(const Vec& a, const Vec& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}
inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }
inline double norm_sq(const Vec& a) { return dot(a, a); }

// Row-major 3x3 backing store; the active block is d x d.
struct Mat {
  std::array<double, 9> a{};

  double operator()(int i, int j) const { return a[static_cast<std::size_t>(3 * i + j)]; }
  double& operator()(int i, int j) { return a[static_cast<std::size_t>(3 * i + j)]; }

  static Mat identity(int d) {
    Mat m;
    for (int i = 0; i < d; ++i) m(i, i) = 1.0;
    return m;
  }
  static Mat outer(const Vec& u, const Vec& v) {
    Mat m;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) m(i, j) = u[i] * v[j];
    return m;
  }
};

inline Vec mul(const Mat& m, const Vec& v) {
  Vec r;
  for (int i = 0; i < 3; ++i)
    r[i] = m(i, 0) * v[0] + m(i, 1) * v[1] + m(i, 2) * v[2];
  return r;
}
inline Mat mul(const Mat& x, const Mat& y) {
  Mat r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      r(i, j) = x(i, 0) * y(0, j) + x(i, 1) * y(1, j) + x(i, 2) * y(2, j);
  return r;
}
inline Mat operator+(Mat x, const Mat& y) {
  for (int i = 0; i < 9; ++i) x.a[static_cast<std::size_t>(i)] += y.a[static_cast<std::size_t>(i)];
  return x;
}
inline Mat operator*(double s, Mat x) {
  for (double& v : x.a) v *= s;
  return x;
}
inline Mat transpose(const Mat& m) {
  Mat r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r(i, j) = m(j, i);
  return r;
}
inline double trace(const Mat& m, int d) {
  double t = 0.0;
  for (int i = 0; i < d; ++i) t += m(i, i);
  return t;
}
inline double frobenius(const Mat& m) {
  double s = 0.0;
  for (double v : m.a) s += v * v;
  return std::sqrt(s);
}
inline Mat sym_part(const Mat& m) { return 0.5 * (m + transpose(m)); }

// exp(M) restricted to the leading d x d block, by scaling and squaring with
// a Taylor series on the scaled matrix.
Mat matrix_exponential(const Mat& m, int d);

// ---------------------------------------------------------------------------
// Deterministic reductions and sampling
// ---------------------------------------------------------------------------

// Pairwise summation with a fixed reduction tree; bit-stable for a fixed
// term order regardless of worker count.
double pairwise_sum(std::span<const double> terms);

// Counter-based generator: stream(seed, index) is reproducible and
// independent of evaluation order.
struct SplitMix64 {
  std::uint64_t state;
  explicit SplitMix64(std::uint64_t seed) : state(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  // uniform in [0,1)
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index) {
  SplitMix64 g(seed ^ (0x632be59bd9b4e019ULL * (index + 1)));
  return g.next();
}

// ---------------------------------------------------------------------------
// Worker pool
// ---------------------------------------------------------------------------

// Global worker count used by parallel_for. Results must be written to
// caller-owned slots indexed by the loop variable, so the outcome does not
// depend on the worker count.
void set_worker_count(int n);
int worker_count();

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace drlab
