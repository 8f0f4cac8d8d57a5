#include "georay/simd.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>
#include <stdexcept>

namespace georay::simd {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

namespace {
Isa detect() {
    const char* env = std::getenv("GEORAY_SIMD");
    if (env && std::strcmp(env, "scalar") == 0) return Isa::scalar;
    return (avx2::compiled() && cpu_has_avx2()) ? Isa::avx2 : Isa::scalar;
}
std::atomic<int>& current() {
    static std::atomic<int> isa{static_cast<int>(detect())};
    return isa;
}
}  // namespace

Isa active() { return static_cast<Isa>(current().load(std::memory_order_relaxed)); }

void force(Isa isa) {
    if (isa == Isa::avx2 && !(avx2::compiled() && cpu_has_avx2()))
        throw std::runtime_error("AVX2 requested but not available");
    current().store(static_cast<int>(isa));
}

const char* name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

double dot(const double* a, const double* b, std::size_t n) {
    return active() == Isa::avx2 ? avx2::dot(a, b, n) : scalar::dot(a, b, n);
}

void axpy(double a, const double* x, double* y, std::size_t n) {
    active() == Isa::avx2 ? avx2::axpy(a, x, y, n) : scalar::axpy(a, x, y, n);
}

void spmv_csr(std::size_t nrows, const std::size_t* row_ptr, const std::uint32_t* col, const double* val,
              const double* x, double* y) {
    active() == Isa::avx2 ? avx2::spmv_csr(nrows, row_ptr, col, val, x, y)
                          : scalar::spmv_csr(nrows, row_ptr, col, val, x, y);
}

void spmv_csr_t(std::size_t nrows, const std::size_t* row_ptr, const std::uint32_t* col, const double* val,
                const double* a, double* y) {
    active() == Isa::avx2 ? avx2::spmv_csr_t(nrows, row_ptr, col, val, a, y)
                          : scalar::spmv_csr_t(nrows, row_ptr, col, val, a, y);
}

}  // namespace georay::simd
