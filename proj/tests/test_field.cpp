#include <doctest.h>

#include "georay/field.hpp"
#include "georay/phantom.hpp"

#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

using namespace georay;

namespace {
GridBox small_box() { return GridBox::from_extent({6, 7, 8}, {0.05, -0.5, -0.5}, {0.2, 0.5, 0.5}); }
}  // namespace

TEST_CASE("grid indexing round-trips") {
    const GridBox b = small_box();
    CHECK(b.size() == 336);
    for (std::size_t idx : {std::size_t(0), std::size_t(17), std::size_t(335)}) {
        const auto ijk = b.unflatten(idx);
        CHECK(b.index(ijk[0], ijk[1], ijk[2]) == idx);
    }
    CHECK(b.hi(0) == doctest::Approx(0.2));
    CHECK(b.hi(2) == doctest::Approx(0.5));
}

TEST_CASE("trilinear interpolation reproduces affine functions") {
    const GridBox b = small_box();
    GridField f(b);
    auto aff = [](const Vec3& z) { return 1.0 + 2.0 * z[0] - 0.5 * z[1] + 0.25 * z[2]; };
    for (std::size_t i = 0; i < b.size(); ++i) f[i] = aff(b.node(i));
    std::mt19937 rng(1);
    std::uniform_real_distribution<double> ux(0.05, 0.2), uy(-0.5, 0.5);
    for (int n = 0; n < 100; ++n) {
        const Vec3 z(ux(rng), uy(rng), uy(rng));
        CHECK(f(z) == doctest::Approx(aff(z)).epsilon(1e-12));
    }
    CHECK(f(Vec3(0.3, 0.0, 0.0)) == 0.0);
    CHECK(f(Vec3(0.1, 0.6, 0.0)) == 0.0);
}

TEST_CASE("field files round-trip bit for bit") {
    GridField f(small_box());
    std::mt19937 rng(2);
    std::normal_distribution<double> g;
    for (auto& v : f.values()) v = g(rng);
    std::stringstream ss;
    write_field(ss, f);
    const GridField h = read_field(ss);
    CHECK(h.box() == f.box());
    CHECK(h.values() == f.values());

    const auto path = std::filesystem::temp_directory_path() / "georay_test_field.bin";
    write_field(path.string(), f);
    CHECK(read_field(path.string()).values() == f.values());
    std::filesystem::remove(path);
}

TEST_CASE("corrupt field files are rejected") {
    std::stringstream bad("georay-field v2 1 1 1 0 0 0 1 1 1\n");
    CHECK_THROWS_AS(read_field(bad), ValidationError);
    GridField f(small_box(), 1.0);
    std::stringstream ss;
    write_field(ss, f);
    std::string s = ss.str();
    s.resize(s.size() - 8);
    std::stringstream cut(s);
    CHECK_THROWS_AS(read_field(cut), ValidationError);
    CHECK_THROWS_AS(read_field("/nonexistent/georay.field"), ValidationError);
}

TEST_CASE("weighted norm of a constant field") {
    const GridBox b = small_box();
    GridField f(b, 2.0);
    WeightedNormSpec w;
    w.x_floor = 0.0;
    // s = 0, r = 0, F = 0: sqrt(sum 4 x^{-4} dV)
    double ref = 0.0;
    for (int i = 0; i < b.n[0]; ++i) ref += 4.0 * std::pow(b.coord(0, i), -4) * b.cell_volume() * b.n[1] * b.n[2];
    CHECK(sc_norm(f, w) == doctest::Approx(std::sqrt(ref)));
    // derivatives of a constant vanish except through the weight; with F = 0, r = 0 they vanish
    w.s = 1;
    CHECK(sc_norm(f, w) == doctest::Approx(std::sqrt(ref)));
}

TEST_CASE("weighted norm is homogeneous and honours the floor") {
    const GridBox b = small_box();
    GridField f(b);
    for (std::size_t i = 0; i < b.size(); ++i) f[i] = std::sin(7 * b.node(i)[1]) + b.node(i)[0];
    WeightedNormSpec w{1, 0.5, 0.1, 0.2, 0.1};
    GridField f3 = f;
    for (auto& v : f3.values()) v *= -3.0;
    CHECK(sc_norm(f3, w) == doctest::Approx(3.0 * sc_norm(f, w)));
    const NormResult r = sc_norm_ex(f, w);
    CHECK(r.excluded_l2 > 0.0);
    CHECK(r.included < b.size());
    CHECK_THROWS_AS(sc_norm(f, WeightedNormSpec{2, 0, 0, 0, 0}), ValidationError);
}

TEST_CASE("phantoms") {
    PhantomSpec s;
    s.kind = PhantomKind::gaussian_bump;
    s.center = Vec3(0.1, 0.0, 0.0);
    Phantom g(s);
    CHECK(g(s.center) == doctest::Approx(1.0));
    CHECK(g(Vec3(0.1, 0.07, 0.0)) == 0.0);
    const double r = 0.01;
    CHECK(g(Vec3(0.1 + r, 0, 0)) == doctest::Approx(std::exp(-r * r / (2 * s.sigma * s.sigma))));

    s.kind = PhantomKind::poly_bump;
    s.radii = Vec3(0.04, 0.2, 0.2);
    Phantom p(s);
    CHECK(p(Vec3(0.12, 0.1, 0.0)) == doctest::Approx(std::pow(1 - 0.25 - 0.25, 3)));
    CHECK(p(Vec3(0.1, 0.21, 0.0)) == 0.0);

    s.kind = PhantomKind::zero;
    CHECK(Phantom(s)(Vec3(0.1, 0, 0)) == 0.0);
    CHECK(phantom_kind_from_string(to_string(PhantomKind::two_shell)) == PhantomKind::two_shell);
    CHECK_THROWS_AS(phantom_kind_from_string("blob"), ValidationError);

    CHECK(smooth_step_down(-1.0) == 1.0);
    CHECK(smooth_step_down(2.0) == 0.0);
    CHECK(smooth_step_down(0.5) == doctest::Approx(0.5));
}

TEST_CASE("phantom support must lie in the working region") {
    const GridBox b = GridBox::from_extent({9, 9, 9}, {0.0, -0.5, -0.5}, {0.2, 0.5, 0.5});
    PhantomSpec s;
    s.center = Vec3(0.11, 0.0, 0.0);
    s.support = 0.06;
    CHECK_NOTHROW(make_phantom(s, b, 0.05, 0.2));
    s.center = Vec3(0.03, 0.0, 0.0);
    CHECK_THROWS_AS(make_phantom(s, b, 0.05, 0.2), ValidationError);
}
