#include "georay/simd.hpp"

namespace georay::simd::scalar {

double dot(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void spmv_csr(std::size_t nrows, const std::size_t* row_ptr, const std::uint32_t* col, const double* val,
              const double* x, double* y) {
#pragma omp parallel for schedule(dynamic, 64)
    for (long i = 0; i < static_cast<long>(nrows); ++i) {
        double s = 0.0;
        for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) s += val[k] * x[col[k]];
        y[i] = s;
    }
}

void spmv_csr_t(std::size_t nrows, const std::size_t* row_ptr, const std::uint32_t* col, const double* val,
                const double* a, double* y) {
    for (std::size_t i = 0; i < nrows; ++i) {
        const double ai = a[i];
        if (ai == 0.0) continue;
        for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) y[col[k]] += ai * val[k];
    }
}

}  // namespace georay::simd::scalar
