#include <doctest.h>

#include "georay/chart.hpp"
#include "georay/metric.hpp"

#include <cmath>
#include <random>

using namespace georay;

TEST_CASE("flat chart is the identity") {
    auto m = make_flat_euclidean();
    const MetricCoeffs c = m->coeffs(0.3, Vec2(0.1, -0.2));
    CHECK(c.F == 1.0);
    CHECK((c.H - Mat2::Identity()).norm() == 0.0);
    CHECK(alpha_eval(*m, 0.3, Vec2(0.1, -0.2), Vec2(1, 0)) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(hamiltonian_eval(*m, 0.3, Vec2::Zero(), 2.0, Vec2(1.0, 1.0)) == doctest::Approx(6.0));
}

TEST_CASE("radial chart embeds into the ball and inverts") {
    RadialChart ch({1.0, 0.2}, 1.0, 0.2);
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> ux(0.0, 0.2), uy(-0.4, 0.4);
    for (int i = 0; i < 50; ++i) {
        const double x = ux(rng);
        const Vec2 y(uy(rng), uy(rng));
        const Vec3 u = ch.to_ambient(x, y);
        CHECK(u.norm() == doctest::Approx(ch.radius_of(x)).epsilon(1e-12));
        double x2;
        Vec2 y2;
        ch.from_ambient(u, x2, y2);
        CHECK(x2 == doctest::Approx(x).epsilon(1e-10));
        CHECK((y2 - y).norm() < 1e-10);
    }
    // x = c is the sphere r = R
    CHECK(ch.radius_of(0.2) == doctest::Approx(1.0));
}

// Independent oracle: pull back c^{-2}|du|^2 by finite differences of the
// embedding and compare with the dual coefficients.
TEST_CASE("radial chart coefficients match the pulled-back metric") {
    RadialProfile prof{1.0, 0.2};
    RadialChart ch(prof, 1.0, 0.2);
    const double hd = 1e-6;
    for (Vec3 z : {Vec3(0.05, 0.1, -0.2), Vec3(0.15, -0.3, 0.05), Vec3(0.19, 0.0, 0.0)}) {
        Mat3 J;
        for (int a = 0; a < 3; ++a) {
            Vec3 zp = z, zm = z;
            zp[a] += hd;
            zm[a] -= hd;
            J.col(a) = (ch.to_ambient(zp[0], Vec2(zp[1], zp[2])) - ch.to_ambient(zm[0], Vec2(zm[1], zm[2]))) / (2 * hd);
        }
        const Vec3 u = ch.to_ambient(z[0], Vec2(z[1], z[2]));
        const double sp = prof(u.norm());
        const Mat3 g = J.transpose() * J / (sp * sp);
        const Mat3 ginv = g.inverse();
        const MetricCoeffs c = ch.coeffs(z[0], Vec2(z[1], z[2]));
        CHECK(ginv(0, 0) == doctest::Approx(c.F).epsilon(1e-6));
        CHECK(std::abs(ginv(0, 1)) < 1e-6);
        CHECK(std::abs(ginv(0, 2)) < 1e-6);
        CHECK(ginv(1, 1) == doctest::Approx(c.H(0, 0)).epsilon(1e-6));
        CHECK(ginv(2, 2) == doctest::Approx(c.H(1, 1)).epsilon(1e-6));
        CHECK(ginv(1, 2) == doctest::Approx(c.H(0, 1)).epsilon(1e-6).scale(1.0));
    }
}

TEST_CASE("analytic derivatives agree with differences") {
    RadialChart ch({1.0, 0.2}, 1.0, 0.2);
    const double x = 0.1, hd = 1e-6;
    const Vec2 y(0.2, -0.1);
    const MetricCoeffs c = ch.coeffs(x, y);
    const MetricCoeffs cp = ch.coeffs(x + hd, y), cm = ch.coeffs(x - hd, y);
    CHECK(c.F_x == doctest::Approx((cp.F - cm.F) / (2 * hd)).epsilon(1e-6));
    CHECK((c.H_x - (cp.H - cm.H) / (2 * hd)).norm() < 1e-6);
    for (int k = 0; k < 2; ++k) {
        Vec2 yp = y, ym = y;
        yp[k] += hd;
        ym[k] -= hd;
        const MetricCoeffs a = ch.coeffs(x, yp), b = ch.coeffs(x, ym);
        CHECK(c.F_y[k] == doctest::Approx((a.F - b.F) / (2 * hd)).epsilon(1e-6).scale(1.0));
        CHECK((c.H_y[k] - (a.H - b.H) / (2 * hd)).norm() < 1e-6);
    }
}

TEST_CASE("checked evaluation rejects points outside") {
    RadialChart ch({1.0, 0.0}, 1.0, 0.2);
    // the chart continues beyond r = R; it ends at the centre and far from the pole
    CHECK(ch.inside(0.5, Vec2::Zero()));
    CHECK_FALSE(ch.inside(-0.85, Vec2::Zero()));
    CHECK_FALSE(ch.inside(0.1, Vec2(3.5, 0.0)));
    CHECK_THROWS_AS(ch.checked(-0.85, Vec2::Zero()), DomainError);
    CHECK_NOTHROW(ch.checked(0.1, Vec2::Zero()));
}

TEST_CASE("tangent rays bend away from the boundary in a radial medium") {
    RadialChart ch({1.0, 0.2}, 1.0, 0.2);
    CHECK(alpha_lower_bound(ch, 0.02, 0.2, 0.3, 5, 5, 8) > 0.0);
    // Euclidean ball: alpha of the chart is positive as well
    RadialChart flat({1.0, 0.0}, 1.0, 0.2);
    CHECK(alpha_eval(flat, 0.1, Vec2::Zero(), Vec2(1, 0)) > 0.0);
}

TEST_CASE("Herglotz condition") {
    CHECK(herglotz_check([](double r) { return 1.0 + 0.2 * r; }, 0.1, 1.0, 50).ok);
    // r / c(r) = r e^{-2r} decreases beyond r = 1/2
    const HerglotzReport bad = herglotz_check([](double r) { return std::exp(2 * r); }, 0.1, 1.0, 50);
    CHECK_FALSE(bad.ok);
    CHECK(bad.min_value < 0.0);
    CHECK_THROWS_AS(herglotz_check([](double r) { return 1.0 - 2 * r; }, 0.1, 1.0, 20), DomainError);
    CHECK_THROWS_AS(herglotz_check([](double) { return 1.0; }, 1.0, 0.5, 20), ValidationError);
}

TEST_CASE("conformal perturbation scales both blocks") {
    auto base = make_radial_chart({1.0, 0.0}, 1.0, 0.2);
    auto pert = perturb_metric(base, 0.01, Vec3(0.1, 0.0, 0.0), 0.15);
    const MetricCoeffs a = base->coeffs(0.1, Vec2::Zero()), b = pert->coeffs(0.1, Vec2::Zero());
    CHECK(b.F / a.F == doctest::Approx(1.01));
    CHECK(b.H(0, 0) / a.H(0, 0) == doctest::Approx(1.01));
    auto same = perturb_metric(base, 0.0, Vec3(0.1, 0.0, 0.0), 0.15);
    CHECK(same->coeffs(0.05, Vec2(0.1, 0.1)).F == doctest::Approx(base->coeffs(0.05, Vec2(0.1, 0.1)).F));
}

TEST_CASE("ball boundary chart") {
    const BoundaryChart b = ball_boundary(1.0, 0.1, 0.2);
    const BoundaryChartCheck chk = check_boundary_chart(b);
    CHECK(chk.ok);
    CHECK(std::abs(chk.x_tilde_at_p) < 1e-12);
    CHECK(b.x_c(b.p) == doctest::Approx(0.2));
}

TEST_CASE("adapted chart of a constant-speed ball is block diagonal") {
    const BoundaryChart b = ball_boundary(1.0, 0.0, 0.1);
    AdaptedChartReport rep;
    AdaptedChartBox box{0.0, 0.1, 0.2, {5, 9, 9}};
    auto m = build_adapted_chart([](const Vec3&) { return 1.0; }, b, box, &rep);
    CHECK(rep.max_cross_term < 1e-4);
    CHECK(rep.min_jacobian > 0.0);
    RadialChart ref({1.0, 0.0}, 1.0, 0.1);
    const MetricCoeffs a = m->coeffs(0.05, Vec2(0.05, 0.0)), r = ref.coeffs(0.05, Vec2(0.05, 0.0));
    CHECK(a.F == doctest::Approx(r.F).epsilon(1e-3));
    CHECK(a.H(0, 0) == doctest::Approx(r.H(0, 0)).epsilon(1e-3));
}

// Ball of radius R, unit speed: the tangent line at radius r moves at ambient
// speed r/R in this parametrization, so x'' = r/R^2 and alpha = r/(2R^2).
TEST_CASE("alpha of the Euclidean ball chart") {
    for (double R : {1.0, 2.0}) {
        RadialChart ch({1.0, 0.0}, R, 0.2);
        for (double x : {0.2, 0.1}) {
            const double r = ch.radius_of(x);
            for (const Vec2& w : {Vec2(1, 0), Vec2(0.6, -0.8)})
                CHECK(alpha_eval(ch, x, Vec2::Zero(), w) == doctest::Approx(r / (2 * R * R)).epsilon(1e-6));
        }
    }
}
