#include <doctest.h>

#include "georay/inversion.hpp"
#include "georay/layer_strip.hpp"
#include "georay/setup.hpp"

#include <cmath>

using namespace georay;

namespace {

SlabConfig herglotz_slab(std::array<int, 3> dims = {12, 13, 13}) {
    SlabConfig s;
    s.kind = MetricKind::radial_herglotz;
    s.profile = {1.0, 0.2};
    s.dims = dims;
    return s;
}

PhantomSpec bump(double c) {
    PhantomSpec ps;
    ps.kind = PhantomKind::gaussian_bump;
    ps.center = Vec3(0.55 * c, 0.0, 0.0);
    ps.sigma = 0.1 * c;
    ps.support = 0.3 * c;
    return ps;
}

struct Case {
    LocalProblem p;
    std::shared_ptr<const ConjugatedOp> op;
    GridField truth;
    XRayData data;
};

Case make_case(const SlabConfig& s, double c, double amplitude = 1.0) {
    Case k;
    k.p = make_slab_problem(s, c);
    k.op = make_operator(k.p);
    PhantomSpec ps = bump(c);
    ps.amplitude = amplitude;
    k.truth = make_phantom(ps, k.p.box, k.p.x_floor, c);
    k.data = xray_batch(k.op->metric(), k.truth, k.op->rays());
    return k;
}

double rel_diff(const GridField& a, const GridField& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.values().size(); ++i) {
        num += (a[i] - b[i]) * (a[i] - b[i]);
        den += b[i] * b[i];
    }
    return std::sqrt(num / den);
}

}  // namespace

TEST_CASE("dense solve recovers an inverse-crime phantom") {
    const Case k = make_case(herglotz_slab(), 0.2);
    SolveConfig cfg;
    cfg.method = SolveMethod::dense_direct;
    LocalSolver solver(k.op, k.p.K, cfg);
    const ReconstructionReport r = solver.solve(k.data, &k.truth);
    CHECK(r.converged);
    CHECK(r.rel_l2_on_K < 1e-8);
    CHECK(r.final_plain_residual < 1e-10);
    CHECK(r.stability_applicable);
    CHECK(r.stability_constant > 0.0);
    CHECK(std::isfinite(r.stability_sc));
    CHECK(r.warnings.empty());
}

TEST_CASE("iterative solvers agree with the dense oracle") {
    const Case k = make_case(herglotz_slab(), 0.2);
    SolveConfig dcfg;
    dcfg.method = SolveMethod::dense_direct;
    const ReconstructionReport dense = LocalSolver(k.op, k.p.K, dcfg).solve(k.data);

    SolveConfig ccfg;
    ccfg.method = SolveMethod::cgnr;
    ccfg.max_iter = 2000;
    ccfg.tol = 1e-11;
    const ReconstructionReport cg = LocalSolver(k.op, k.p.K, ccfg).solve(k.data);
    CHECK(cg.converged);
    CHECK(cg.residual_history.back() <= ccfg.tol);
    CHECK(rel_diff(cg.f_hat, dense.f_hat) < 1e-5);

    SolveConfig ncfg;
    ncfg.max_iter = 200;
    ncfg.tol = 1e-10;
    LocalSolver ns(k.op, k.p.K, ncfg);
    const ReconstructionReport ne = ns.solve(k.data);
    CHECK(ne.converged);
    CHECK(rel_diff(ne.f_hat, dense.f_hat) < 1e-5);
}

// The preconditioned residual contracts at least as fast as the defect allows.
TEST_CASE("Neumann residual ratio is bounded by the defect") {
    const Case k = make_case(herglotz_slab(), 0.2);
    SolveConfig cfg;
    cfg.max_iter = 60;
    cfg.tol = 1e-12;
    LocalSolver solver(k.op, k.p.K, cfg);
    const ReconstructionReport r = solver.solve(k.data);
    REQUIRE(r.defect < 1.0);
    REQUIRE(r.residual_history.size() > 3);
    const auto& h = r.residual_history;
    // asymptotic rate over the tail of the history
    const std::size_t a = h.size() / 2, b = h.size() - 1;
    const double rate = std::pow(h[b] / h[a], 1.0 / static_cast<double>(b - a));
    CHECK(rate <= r.defect + 0.05);
    for (std::size_t i = 1; i < h.size(); ++i) CHECK(h[i] <= h[i - 1] * (r.defect + 0.05) + 1e-14);
}

TEST_CASE("zero data gives a zero reconstruction without a stability constant") {
    Case k = make_case(herglotz_slab(), 0.2);
    for (auto& v : k.data.v) v = 0.0;
    for (SolveMethod m : {SolveMethod::neumann_preconditioned, SolveMethod::cgnr, SolveMethod::dense_direct}) {
        SolveConfig cfg;
        cfg.method = m;
        const ReconstructionReport r = LocalSolver(k.op, k.p.K, cfg).solve(k.data);
        CHECK(r.converged);
        CHECK_FALSE(r.stability_applicable);
        for (double v : r.f_hat.values()) CHECK(v == 0.0);
    }
}

TEST_CASE("solve rejects data from another ray grid") {
    const Case k = make_case(herglotz_slab(), 0.2);
    XRayData d = k.data;
    d.n_omega += 1;
    LocalSolver solver(k.op, k.p.K, SolveConfig{});
    CHECK_THROWS_AS(solver.solve(d), ValidationError);
    CHECK_THROWS_AS(solver.solve_rhs({1.0, 2.0}, 1.0), ValidationError);
    CHECK_THROWS_AS(solve_method_from_string("gmres"), ValidationError);
}

TEST_CASE("injectivity certificate scales with the cutoff amplitude") {
    SlabConfig s = herglotz_slab({10, 11, 11});
    LocalProblem p = make_slab_problem(s, 0.2);
    const InjectivityReport base = injectivity_certificate(*make_operator(p), p.K);
    CHECK(base.ok);
    CHECK(base.n_cols == region_nodes(p.box, p.K).size());

    p.cutoff.amplitude = 2.0;
    const InjectivityReport twice = injectivity_certificate(*make_operator(p), p.K);
    CHECK(twice.sigma_min == doctest::Approx(2 * base.sigma_min).epsilon(1e-8));
    CHECK(twice.sigma_max == doctest::Approx(2 * base.sigma_max).epsilon(1e-8));

    p.cutoff.amplitude = 0.0;
    CHECK_FALSE(injectivity_certificate(*make_operator(p), p.K).ok);
}

TEST_CASE("small-c search skips offsets whose support is too thin") {
    const SlabConfig s = herglotz_slab({6, 9, 9});
    SolveConfig cfg;
    const SmallCReport r = small_c_search([&](double c) { return make_slab_problem(s, c); }, {0.2, 0.1}, cfg);
    REQUIRE(r.entries.size() == 2);
    for (const auto& e : r.entries) {
        CHECK(e.skipped);
        CHECK_FALSE(e.note.empty());
    }
    CHECK_FALSE(r.found);
    CHECK_FALSE(r.message.empty());
}

TEST_CASE("small-c search reports defects and calls the hook") {
    const SlabConfig s = herglotz_slab({12, 13, 13});
    SolveConfig cfg;
    int calls = 0;
    const SmallCReport r = small_c_search([&](double c) { return make_slab_problem(s, c); }, {0.2, 0.1}, cfg,
                                          [&](const LocalProblem&, LocalSolver&) { ++calls; });
    REQUIRE(r.entries.size() == 2);
    CHECK(calls == 2);
    for (const auto& e : r.entries) CHECK(std::isfinite(e.defect));
    if (r.found) CHECK((r.c_star == 0.2 || r.c_star == 0.1));
}

TEST_CASE("layer intervals") {
    const auto iv = parse_layer_intervals("0:0.1, 0.055:0.2");
    REQUIRE(iv.size() == 2);
    CHECK(iv[1].t_lo == 0.055);
    CHECK(iv[1].t_hi == 0.2);
    CHECK_THROWS_AS(parse_layer_intervals("0-0.1"), ValidationError);
    CHECK(layer_blend(0.0, 0.1, 0.02) == 1.0);
    CHECK(layer_blend(0.2, 0.1, 0.02) == 0.0);
    CHECK(layer_blend(0.11, 0.1, 0.02) == doctest::Approx(0.5));
}

// One layer with t' = 0 is the plain local problem with K reaching x = c.
TEST_CASE("single-layer strip equals the local solve") {
    const SlabConfig s = herglotz_slab({12, 13, 13});
    const double c = 0.11;
    PhantomSpec ps = bump(c);
    ps.center = Vec3(0.06, 0.0, 0.0);
    ps.support = 0.03;
    ps.sigma = 0.01;
    const LayerSetup setup = synthetic_layer_setup(s, {{0.0, c}}, ps);
    SolveConfig cfg;
    const LayerStripReport lr = layer_strip(setup, cfg);
    REQUIRE(lr.complete);
    REQUIRE(lr.layers.size() == 1);

    LocalProblem p = make_slab_problem(s, c);
    p.K.x_hi = std::floor(c / p.box.d[0] + 1e-9) * p.box.d[0];
    auto op = make_operator(p);
    LocalSolver solver(op, p.K, cfg);
    const ReconstructionReport r = solver.solve(setup.data(0, *op));
    CHECK(lr.f_hat.values() == r.f_hat.values());
    CHECK(lr.layers[0].report.residual_history == r.residual_history);
}

TEST_CASE("zero phantom stays zero through every layer") {
    const SlabConfig s = herglotz_slab({12, 13, 13});
    PhantomSpec ps;
    ps.kind = PhantomKind::zero;
    const LayerSetup setup = synthetic_layer_setup(s, parse_layer_intervals("0:0.11,0.055:0.22"), ps);
    const LayerStripReport lr = layer_strip(setup, SolveConfig{});
    REQUIRE(lr.complete);
    REQUIRE(lr.layers.size() == 2);
    for (const auto& l : lr.layers)
        for (double v : l.report.f_hat.values()) CHECK(v == 0.0);
    for (double v : lr.f_hat.values()) CHECK(v == 0.0);
}

TEST_CASE("layer strip validates its intervals") {
    const SlabConfig s = herglotz_slab({12, 13, 13});
    PhantomSpec ps;
    ps.kind = PhantomKind::zero;
    CHECK_THROWS_AS(layer_strip(synthetic_layer_setup(s, parse_layer_intervals("0.01:0.11"), ps), SolveConfig{}),
                    ValidationError);
    // second layer does not overlap the first
    CHECK_THROWS_AS(
        layer_strip(synthetic_layer_setup(s, parse_layer_intervals("0:0.11,0.12:0.22"), ps), SolveConfig{}),
        ValidationError);
    // depth not a multiple of the depth step
    CHECK_THROWS_AS(
        layer_strip(synthetic_layer_setup(s, parse_layer_intervals("0:0.11,0.055:0.215"), ps), SolveConfig{}),
        ValidationError);
}

TEST_CASE("data metric is the slab metric without perturbation") {
    SlabConfig s = herglotz_slab();
    const LocalProblem p = make_slab_problem(s, 0.2);
    CHECK(data_metric(s, p) == p.metric);
    s.perturb_amplitude = 0.01;
    s.seed = 3;
    const MetricPtr a = data_metric(s, p), b = data_metric(s, p);
    const Vec3 z = p.box.node(p.box.size() / 2);
    CHECK(a->coeffs(z[0], Vec2(z[1], z[2])).F == b->coeffs(z[0], Vec2(z[1], z[2])).F);
    CHECK(a->coeffs(z[0], Vec2(z[1], z[2])).F != p.metric->coeffs(z[0], Vec2(z[1], z[2])).F);
}
