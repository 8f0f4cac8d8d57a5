#include <doctest.h>

#include "georay/symbol.hpp"

#include <cmath>

using namespace georay;

namespace {

// Composite Simpson rule, independent of the library quadrature.
template <class Fn>
cplx simpson(Fn&& f, double a, double b, int n) {
    const double h = (b - a) / n;
    cplx s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return s * h / 3.0;
}

}  // namespace

TEST_CASE("Fourier transform of the untruncated Gaussian") {
    CutoffSpec cs;
    cs.truncate = false;
    const double nu = 0.3;
    for (cplx w : {cplx(0, 0), cplx(2.0, 0), cplx(1.5, -0.7)}) {
        const cplx ref = std::sqrt(2 * pi * nu) * std::exp(-0.5 * nu * w * w);
        CHECK(std::abs(chi_hat(cs, nu, w) - ref) < 1e-14);
    }
}

TEST_CASE("Fourier transform of the truncated cutoff matches quadrature") {
    CutoffSpec cs{CutoffMode::constant_nu, 0.0625, 1.0, 4.0, 0.1, 1.0, true};
    const double nu = cs.nu, smax = cutoff_s_max(cs, nu);
    for (cplx w : {cplx(0, 0), cplx(3.0, 0), cplx(7.0, -1.0), cplx(-2.0, -0.4)}) {
        const cplx ref = simpson([&](double s) { return chi_eval(cs, s, nu) * std::exp(-cplx(0, 1) * w * s); }, -smax,
                                 smax, 20000);
        CHECK(std::abs(chi_hat(cs, nu, w) - ref) < 1e-9);
    }
}

TEST_CASE("closed-form X-transform of the front-face kernel") {
    CutoffSpec cs{CutoffMode::constant_nu, 0.0625, 1.0, 4.0, 0.1, 1.0, true};
    Mat2 Q;
    Q << 0.6, 0.1, 0.1, 0.4;
    const double F = 1.5;
    for (const Vec2& Y : {Vec2(0.3, 0.1), Vec2(-0.5, 0.8), Vec2(0.05, 0.0)}) {
        const double r = Y.norm();
        const double q = (Y / r).dot(Q * (Y / r));
        const double smax = cutoff_s_max(cs, cs.nu);
        const double a = q * r * r - smax * r, b = q * r * r + smax * r;
        for (double xi : {0.0, 2.0, -5.0}) {
            const cplx ref = simpson(
                [&](double X) { return std::exp(cplx(0, -xi * X)) * frontface_kernel(Vec2::Zero(), X, Y, cs, F, Q); },
                a, b, 20000);
            CHECK(std::abs(frontface_xft(cs, F, Q, xi, Y) - ref) < 1e-8 * std::abs(ref) + 1e-12);
        }
    }
    CHECK_THROWS_AS(frontface_xft(cs, F, Q, 0.0, Vec2::Zero()), DomainError);
}

TEST_CASE("FFT symbol is Hermitian and real-positive at the origin") {
    CutoffSpec cs{CutoffMode::constant_nu, 0.0625, 1.0, 4.0, 0.1, 1.0, true};
    const Mat2 Q = 0.5 * Mat2::Identity();
    const SymbolGrid sg = boundary_symbol_fft(Vec2::Zero(), cs, 1.0, Q, {33, 33, 20.0, 1e-10});
    const std::size_t n = sg.xi.size(), m = sg.eta1.size();
    REQUIRE(n == 33);
    CHECK(sg.xi[0] == doctest::Approx(-sg.xi[n - 1]));
    double worst = 0.0, peak = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j)
            for (std::size_t k = 0; k < m; ++k) {
                const cplx a = sg.at(i, j, k), b = sg.at(n - 1 - i, m - 1 - j, m - 1 - k);
                worst = std::max(worst, std::abs(a - std::conj(b)));
                peak = std::max(peak, std::abs(a));
            }
    CHECK(worst <= 1e-10 * peak);
    const cplx origin = sg.at(n / 2, m / 2, m / 2);
    CHECK(origin.real() > 0.0);
    CHECK(std::abs(origin.imag()) < 1e-10 * peak);
}

TEST_CASE("isotropic symbol table agrees with direct quadrature") {
    const double F = 1.0, q = 0.5;
    IsotropicAnalyticSymbol tab(F, q, 30.0, 2048);
    const Mat2 Q = q * Mat2::Identity();
    for (double xi : {0.0, 3.0}) {
        for (const Vec2& eta : {Vec2(0.5, 0.0), Vec2(2.0, 1.0), Vec2(0.0, 6.0)}) {
            const double direct = boundary_symbol_analytic(F, Q, xi, eta);
            CHECK(tab(xi, eta) == doctest::Approx(direct).epsilon(1e-4));
        }
    }
    CHECK_THROWS_AS(boundary_symbol_analytic(0.0, Q, 0.0, Vec2::Zero()), DomainError);
}

TEST_CASE("analytic symbol rotates with the form") {
    Mat2 Q;
    Q << 0.8, 0.0, 0.0, 0.3;
    Mat2 Qr;
    Qr << 0.3, 0.0, 0.0, 0.8;
    const double a = boundary_symbol_analytic(1.0, Q, 1.0, Vec2(1.2, 0.4));
    const double b = boundary_symbol_analytic(1.0, Qr, 1.0, Vec2(0.4, 1.2));
    CHECK(a == doctest::Approx(b).epsilon(1e-8));
}

TEST_CASE("ellipticity of the default cutoff and its failure for a zero cutoff") {
    CutoffSpec cs{CutoffMode::constant_nu, 0.0625, 1.0, 4.0, 0.1, 1.0, true};
    const Mat2 Q = 0.5 * Mat2::Identity();
    const SymbolScanSpec spec{33, 33, 20.0, 1e-10};
    const EllipticityReport ok = ellipticity_scan(boundary_symbol_fft(Vec2::Zero(), cs, 0.4, Q, spec), spec.half);
    CHECK(ok.ok);
    CHECK(ok.c_min > ok.margin * ok.noise_floor);

    cs.amplitude = 0.0;
    const EllipticityReport bad = ellipticity_scan(boundary_symbol_fft(Vec2::Zero(), cs, 0.4, Q, spec), spec.half);
    CHECK_FALSE(bad.ok);
}

TEST_CASE("alpha form of the flat chart vanishes") {
    auto m = make_flat_euclidean();
    CHECK(alpha_form(*m, Vec2::Zero()).norm() < 1e-12);
    RadialChart ch({1.0, 0.0}, 1.0, 0.2);
    const Mat2 Q = alpha_form(ch, Vec2::Zero());
    // isotropic at the pole
    CHECK(Q(0, 0) == doctest::Approx(Q(1, 1)).epsilon(1e-6));
    CHECK(std::abs(Q(0, 1)) < 1e-6);
    CHECK(Q(0, 0) > 0.0);
}

TEST_CASE("window grows as F decreases") {
    CutoffSpec cs{CutoffMode::constant_nu, 0.0625, 1.0, 4.0, 0.1, 1.0, true};
    const Mat2 Q = 0.5 * Mat2::Identity();
    CHECK(frontface_window(cs, 0.2, Q) > frontface_window(cs, 2.0, Q));
}
