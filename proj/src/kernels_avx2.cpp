#include <cmath>

#include "kernels_impl.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#define JPEGIV_HAVE_AVX2_KERNELS 1
#include <immintrin.h>
#endif

namespace jpegiv::kernels::detail {

#ifdef JPEGIV_HAVE_AVX2_KERNELS
namespace {

#define JPEGIV_AVX2 __attribute__((target("avx2,fma")))

JPEGIV_AVX2 double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

JPEGIV_AVX2 void lift_accumulate(double* y, const double* lo, const double* hi, const double* wl, const double* wh,
                                 double scale, std::size_t n) {
  const __m256d c = _mm256_set1_pd(scale);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    __m256d t = _mm256_mul_pd(_mm256_loadu_pd(wl + k), _mm256_loadu_pd(lo + k));
    t = _mm256_fmadd_pd(_mm256_loadu_pd(wh + k), _mm256_loadu_pd(hi + k), t);
    _mm256_storeu_pd(y + k, _mm256_fmadd_pd(c, t, _mm256_loadu_pd(y + k)));
  }
  for (; k < n; ++k) y[k] += scale * (wl[k] * lo[k] + wh[k] * hi[k]);
}

JPEGIV_AVX2 void mcp_threshold(const double* in, double* out, double lambda, double gamma, double alpha,
                               std::size_t n) {
  const __m256d sign_mask = _mm256_set1_pd(-0.0);
  const __m256d knot = _mm256_set1_pd(gamma * lambda);
  const __m256d shift = _mm256_set1_pd(lambda / alpha);
  const __m256d denom = _mm256_set1_pd(1.0 - 1.0 / (alpha * gamma));
  const __m256d zero = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d x = _mm256_loadu_pd(in + k);
    const __m256d sign = _mm256_and_pd(x, sign_mask);
    const __m256d ax = _mm256_andnot_pd(sign_mask, x);
    const __m256d shrunk = _mm256_sub_pd(ax, shift);
    const __m256d positive = _mm256_cmp_pd(shrunk, zero, _CMP_GT_OQ);
    const __m256d r = _mm256_or_pd(_mm256_div_pd(shrunk, denom), sign);
    const __m256d firm = _mm256_and_pd(r, positive);
    const __m256d pass = _mm256_cmp_pd(ax, knot, _CMP_GT_OQ);
    _mm256_storeu_pd(out + k, _mm256_blendv_pd(firm, x, pass));
  }
  for (; k < n; ++k) {
    const double x = in[k];
    const double ax = std::fabs(x);
    if (ax > gamma * lambda) {
      out[k] = x;
      continue;
    }
    const double shrunk = ax - lambda / alpha;
    if (shrunk <= 0.0) {
      out[k] = 0.0;
      continue;
    }
    const double r = shrunk / (1.0 - 1.0 / (alpha * gamma));
    out[k] = std::signbit(x) ? -r : r;
  }
}

JPEGIV_AVX2 double mcp_penalty_sum(const double* theta, double lambda, double gamma, std::size_t n) {
  const __m256d sign_mask = _mm256_set1_pd(-0.0);
  const __m256d knot = _mm256_set1_pd(gamma * lambda);
  const __m256d lam = _mm256_set1_pd(lambda);
  const __m256d inv2g = _mm256_set1_pd(1.0 / (2.0 * gamma));
  const __m256d flat = _mm256_set1_pd(0.5 * lambda * lambda * gamma);
  __m256d acc = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d t = _mm256_andnot_pd(sign_mask, _mm256_loadu_pd(theta + k));
    const __m256d inner = _mm256_fnmadd_pd(_mm256_mul_pd(t, t), inv2g, _mm256_mul_pd(lam, t));
    const __m256d above = _mm256_cmp_pd(t, knot, _CMP_GT_OQ);
    acc = _mm256_add_pd(acc, _mm256_blendv_pd(inner, flat, above));
  }
  double total = hsum(acc);
  const double knot_s = gamma * lambda;
  for (; k < n; ++k) {
    const double t = std::fabs(theta[k]);
    total += (t <= knot_s) ? lambda * t - t * t / (2.0 * gamma) : 0.5 * lambda * lambda * gamma;
  }
  return total;
}

JPEGIV_AVX2 void add_scaled(double* out, const double* a, const double* b, double scale, std::size_t n) {
  const __m256d c = _mm256_set1_pd(scale);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4)
    _mm256_storeu_pd(out + k, _mm256_fmadd_pd(c, _mm256_loadu_pd(b + k), _mm256_loadu_pd(a + k)));
  for (; k < n; ++k) out[k] = a[k] + scale * b[k];
}

JPEGIV_AVX2 void difference(double* out, const double* a, const double* b, std::size_t n) {
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4)
    _mm256_storeu_pd(out + k, _mm256_sub_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k)));
  for (; k < n; ++k) out[k] = a[k] - b[k];
}

JPEGIV_AVX2 double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 8 <= n; k += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k + 4), _mm256_loadu_pd(b + k + 4), acc1);
  }
  for (; k + 4 <= n; k += 4) acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k), acc0);
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; k < n; ++k) s += a[k] * b[k];
  return s;
}

JPEGIV_AVX2 double squared_distance(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k));
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  double s = hsum(acc);
  for (; k < n; ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

#undef JPEGIV_AVX2

constexpr KernelTable kAvx2{lift_accumulate, mcp_threshold, mcp_penalty_sum, add_scaled,
                            difference,      dot,           squared_distance};

}  // namespace

const KernelTable* avx2_table() noexcept { return &kAvx2; }

#else

const KernelTable* avx2_table() noexcept { return nullptr; }

#endif

}  // namespace jpegiv::kernels::detail
