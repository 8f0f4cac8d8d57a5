#pragma once

#include <cstddef>
#include <cstdint>

// Hot vector kernels with a scalar reference and an AVX2 variant selected at
// runtime. GEORAY_SIMD=scalar forces the reference path.
namespace georay::simd {

enum class Isa { scalar, avx2 };

Isa active();
void force(Isa isa);  // throws if the CPU lacks the requested ISA
bool cpu_has_avx2();
const char* name(Isa isa);

double dot(const double* a, const double* b, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
// y[i] = sum_k val[k] x[col[k]] over row i
void spmv_csr(std::size_t nrows, const std::size_t* row_ptr, const std::uint32_t* col, const double* val,
              const double* x, double* y);
// y[col[k]] += a_i val[k] over row i (transpose product, serial scatter)
void spmv_csr_t(std::size_t nrows, const std::size_t* row_ptr, const std::uint32_t* col, const double* val,
                const double* a, double* y);

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
void spmv_csr(std::size_t nrows, const std::size_t* row_ptr, const std::uint32_t* col, const double* val,
              const double* x, double* y);
void spmv_csr_t(std::size_t nrows, const std::size_t* row_ptr, const std::uint32_t* col, const double* val,
                const double* a, double* y);
}  // namespace scalar

namespace avx2 {
bool compiled();
double dot(const double* a, const double* b, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
void spmv_csr(std::size_t nrows, const std::size_t* row_ptr, const std::uint32_t* col, const double* val,
              const double* x, double* y);
void spmv_csr_t(std::size_t nrows, const std::size_t* row_ptr, const std::uint32_t* col, const double* val,
                const double* a, double* y);
}  // namespace avx2

}  // namespace georay::simd
