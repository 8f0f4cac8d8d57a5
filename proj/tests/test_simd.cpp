#include <doctest.h>

#include "georay/simd.hpp"

#include <cmath>
#include <random>
#include <vector>

using namespace georay;

namespace {

struct Csr {
    std::size_t rows = 0, cols = 0;
    std::vector<std::size_t> ptr{0};
    std::vector<std::uint32_t> col;
    std::vector<double> val;
};

// Rows of varying length, including empty and odd lengths, to hit the tails.
Csr random_csr(std::size_t rows, std::size_t cols, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_int_distribution<int> len(0, 23);
    std::uniform_int_distribution<std::uint32_t> c(0, static_cast<std::uint32_t>(cols - 1));
    std::normal_distribution<double> nd;
    Csr m;
    m.rows = rows;
    m.cols = cols;
    for (std::size_t r = 0; r < rows; ++r) {
        const int n = r % 7 == 0 ? 0 : len(rng);
        for (int k = 0; k < n; ++k) {
            m.col.push_back(c(rng));
            m.val.push_back(nd(rng));
        }
        m.ptr.push_back(m.col.size());
    }
    return m;
}

std::vector<double> randv(std::size_t n, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> nd;
    std::vector<double> v(n);
    for (auto& x : v) x = nd(rng);
    return v;
}

}  // namespace

TEST_CASE("dispatch names and forcing") {
    CHECK(std::string(simd::name(simd::Isa::scalar)) == "scalar");
    simd::force(simd::Isa::scalar);
    CHECK(simd::active() == simd::Isa::scalar);
    if (simd::cpu_has_avx2() && simd::avx2::compiled()) {
        simd::force(simd::Isa::avx2);
        CHECK(simd::active() == simd::Isa::avx2);
    } else {
        CHECK_THROWS(simd::force(simd::Isa::avx2));
    }
}

TEST_CASE("AVX2 kernels match the scalar reference") {
    if (!(simd::cpu_has_avx2() && simd::avx2::compiled())) {
        MESSAGE("AVX2 unavailable; skipping equivalence");
        return;
    }
    for (std::size_t n : {std::size_t(0), std::size_t(1), std::size_t(3), std::size_t(4), std::size_t(7),
                          std::size_t(64), std::size_t(1001)}) {
        const auto a = randv(n, 1), b = randv(n, 2);
        const double ds = simd::scalar::dot(a.data(), b.data(), n);
        const double dv = simd::avx2::dot(a.data(), b.data(), n);
        double mag = 0.0;
        for (std::size_t i = 0; i < n; ++i) mag += std::abs(a[i] * b[i]);
        CHECK(std::abs(ds - dv) <= 1e-14 * mag + 1e-300);

        auto ys = b, yv = b;
        simd::scalar::axpy(-0.7, a.data(), ys.data(), n);
        simd::avx2::axpy(-0.7, a.data(), yv.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(ys[i] - yv[i]) <= 1e-15 * (std::abs(ys[i]) + 1));
    }

    const Csr m = random_csr(257, 131, 3);
    const auto x = randv(m.cols, 4), g = randv(m.rows, 5);
    std::vector<double> ys(m.rows), yv(m.rows);
    simd::scalar::spmv_csr(m.rows, m.ptr.data(), m.col.data(), m.val.data(), x.data(), ys.data());
    simd::avx2::spmv_csr(m.rows, m.ptr.data(), m.col.data(), m.val.data(), x.data(), yv.data());
    for (std::size_t i = 0; i < m.rows; ++i) CHECK(std::abs(ys[i] - yv[i]) <= 1e-13 * (std::abs(ys[i]) + 1));

    std::vector<double> ts(m.cols, 0.0), tv(m.cols, 0.0);
    simd::scalar::spmv_csr_t(m.rows, m.ptr.data(), m.col.data(), m.val.data(), g.data(), ts.data());
    simd::avx2::spmv_csr_t(m.rows, m.ptr.data(), m.col.data(), m.val.data(), g.data(), tv.data());
    for (std::size_t i = 0; i < m.cols; ++i) CHECK(std::abs(ts[i] - tv[i]) <= 1e-13 * (std::abs(ts[i]) + 1));
}

// Reference against a dense product, independent of either kernel.
TEST_CASE("sparse products match a dense oracle") {
    const Csr m = random_csr(40, 30, 8);
    std::vector<double> dense(m.rows * m.cols, 0.0);
    for (std::size_t r = 0; r < m.rows; ++r)
        for (std::size_t k = m.ptr[r]; k < m.ptr[r + 1]; ++k) dense[r * m.cols + m.col[k]] += m.val[k];
    const auto x = randv(m.cols, 9), g = randv(m.rows, 10);
    std::vector<double> y(m.rows), t(m.cols, 0.0);
    simd::spmv_csr(m.rows, m.ptr.data(), m.col.data(), m.val.data(), x.data(), y.data());
    simd::spmv_csr_t(m.rows, m.ptr.data(), m.col.data(), m.val.data(), g.data(), t.data());
    for (std::size_t r = 0; r < m.rows; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < m.cols; ++c) s += dense[r * m.cols + c] * x[c];
        CHECK(y[r] == doctest::Approx(s).epsilon(1e-12).scale(1.0));
    }
    for (std::size_t c = 0; c < m.cols; ++c) {
        double s = 0.0;
        for (std::size_t r = 0; r < m.rows; ++r) s += dense[r * m.cols + c] * g[r];
        CHECK(t[c] == doctest::Approx(s).epsilon(1e-12).scale(1.0));
    }
}
