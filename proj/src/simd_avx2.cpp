#include "georay/simd.hpp"

#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>

namespace georay::simd::avx2 {

bool compiled() { return true; }

namespace {
double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d sh = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}
}  // namespace

double dot(const double* a, const double* b, std::size_t n) {
    __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        s0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), s0);
        s1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), s1);
    }
    for (; i + 4 <= n; i += 4) s0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), s0);
    double s = hsum(_mm256_add_pd(s0, s1));
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy(double a, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    for (; i < n; ++i) y[i] += a * x[i];
}

void spmv_csr(std::size_t nrows, const std::size_t* row_ptr, const std::uint32_t* col, const double* val,
              const double* x, double* y) {
#pragma omp parallel for schedule(dynamic, 64)
    for (long r = 0; r < static_cast<long>(nrows); ++r) {
        std::size_t k = row_ptr[r];
        const std::size_t end = row_ptr[r + 1];
        __m256d acc = _mm256_setzero_pd();
        for (; k + 4 <= end; k += 4) {
            const __m128i idx = _mm_loadu_si128(reinterpret_cast<const __m128i*>(col + k));
            const __m256d xv = _mm256_i32gather_pd(x, idx, 8);
            acc = _mm256_fmadd_pd(_mm256_loadu_pd(val + k), xv, acc);
        }
        double s = hsum(acc);
        for (; k < end; ++k) s += val[k] * x[col[k]];
        y[r] = s;
    }
}

void spmv_csr_t(std::size_t nrows, const std::size_t* row_ptr, const std::uint32_t* col, const double* val,
                const double* a, double* y) {
    // scatter has no AVX2 form; vectorise the products only
    alignas(32) double buf[4];
    for (std::size_t r = 0; r < nrows; ++r) {
        const double ar = a[r];
        if (ar == 0.0) continue;
        const __m256d va = _mm256_set1_pd(ar);
        std::size_t k = row_ptr[r];
        const std::size_t end = row_ptr[r + 1];
        for (; k + 4 <= end; k += 4) {
            _mm256_store_pd(buf, _mm256_mul_pd(va, _mm256_loadu_pd(val + k)));
            y[col[k]] += buf[0];
            y[col[k + 1]] += buf[1];
            y[col[k + 2]] += buf[2];
            y[col[k + 3]] += buf[3];
        }
        for (; k < end; ++k) y[col[k]] += ar * val[k];
    }
}

}  // namespace georay::simd::avx2

#else

#include <stdexcept>

namespace georay::simd::avx2 {
bool compiled() { return false; }
[[noreturn]] static void missing() { throw std::logic_error("AVX2 kernels not compiled in"); }
double dot(const double*, const double*, std::size_t) { missing(); }
void axpy(double, const double*, double*, std::size_t) { missing(); }
void spmv_csr(std::size_t, const std::size_t*, const std::uint32_t*, const double*, const double*, double*) {
    missing();
}
void spmv_csr_t(std::size_t, const std::size_t*, const std::uint32_t*, const double*, const double*, double*) {
    missing();
}
}  // namespace georay::simd::avx2

#endif
