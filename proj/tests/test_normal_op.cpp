#include <doctest.h>

#include "georay/inversion.hpp"
#include "georay/parametrix.hpp"
#include "georay/setup.hpp"

#include <cmath>
#include <random>

using namespace georay;

namespace {

LocalProblem small_problem(std::array<int, 3> dims = {8, 9, 9}) {
    SlabConfig s;
    s.kind = MetricKind::radial_herglotz;
    s.profile = {1.0, 0.2};
    s.dims = dims;
    s.rays.n_omega = 8;
    s.rays.n_lambda = 5;
    return make_slab_problem(s, 0.2);
}

GridField random_on(const GridBox& b, const SupportRegion& K, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> nd;
    GridField f(b);
    for (std::size_t i = 0; i < b.size(); ++i)
        if (K.contains(b.node(i))) f[i] = nd(rng);
    return f;
}

double dotv(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace

TEST_CASE("cutoff profile") {
    CutoffSpec cs{CutoffMode::constant_nu, 0.04, 1.0, 4.0, 0.1, 1.0, true};
    CHECK(chi_eval(cs, 0.0, 0.04) == 1.0);
    CHECK(chi_eval(cs, 0.1, 0.04) == doctest::Approx(std::exp(-0.125)));
    CHECK(chi_eval(cs, 0.8, 0.04) == 0.0);     // s_max = 0.8
    CHECK(chi_eval(cs, 0.7999, 0.04) < 1e-10);  // taper reaches zero smoothly
    CHECK(chi_eval(cs, -0.3, 0.04) == chi_eval(cs, 0.3, 0.04));
    cs.truncate = false;
    CHECK(chi_eval(cs, 0.8, 0.04) == doctest::Approx(std::exp(-8.0)));
    CHECK(cutoff_mode_from_string("alpha_matched") == CutoffMode::alpha_matched);
    CHECK_THROWS_AS(cutoff_mode_from_string("box"), ValidationError);
}

TEST_CASE("alpha-matched cutoff uses alpha / F") {
    RadialChart ch({1.0, 0.2}, 1.0, 0.2);
    CutoffSpec cs;
    cs.mode = CutoffMode::alpha_matched;
    cs.F = 0.5;
    const Vec2 w(1, 0);
    CHECK(cutoff_nu(cs, ch, Vec2::Zero(), w) == doctest::Approx(alpha_eval(ch, 0.0, Vec2::Zero(), w) / 0.5));
}

TEST_CASE("operator construction validates its inputs") {
    LocalProblem p = small_problem();
    p.F = 0.0;
    CHECK_THROWS_AS(make_operator(p), ValidationError);
    p = small_problem();
    p.x_floor = 0.0;
    CHECK_THROWS_AS(make_operator(p), ValidationError);
}

// A computed along curves must equal the weighted average of I f.
TEST_CASE("normal operator agrees with averaged X-ray data") {
    const LocalProblem p = small_problem();
    auto op = make_operator(p);
    const GridField f = random_on(p.box, p.K, 1);
    const GridField a = op->apply_A(f);
    const GridField b = op->average(xray_batch(op->metric(), f, op->rays()));
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.values().size(); ++i) {
        num += (a[i] - b[i]) * (a[i] - b[i]);
        den += b[i] * b[i];
    }
    REQUIRE(den > 0.0);
    CHECK(std::sqrt(num / den) < 1e-12);
}

TEST_CASE("conjugation relates A and B") {
    const LocalProblem p = small_problem();
    auto op = make_operator(p);
    const GridField ft = random_on(p.box, p.K, 2);
    GridField f(p.box);
    for (std::size_t i = 0; i < p.box.size(); ++i) f[i] = std::exp(p.F / p.box.node(i)[0]) * ft[i];
    const GridField bf = op->apply_B(ft);
    const GridField rhs = op->data_to_rhs(xray_batch(op->metric(), f, op->rays()));
    for (std::size_t i = 0; i < p.box.size(); ++i) CHECK(bf[i] == doctest::Approx(rhs[i]).epsilon(1e-10).scale(1e-12));
}

TEST_CASE("sparse system matches the matrix-free operator") {
    const LocalProblem p = small_problem();
    auto op = make_operator(p);
    const SparseB S = assemble_sparse(*op, p.K);
    CHECK(S.cols() == region_nodes(p.box, p.K).size());
    CHECK(S.rows() == op->rays().n_base());
    const GridField ft = random_on(p.box, p.K, 3);
    std::vector<double> out(S.rows());
    S.apply(S.gather_cols(ft).data(), out.data());
    const GridField mf = op->apply_B(ft);
    const std::vector<double> ref = S.gather_rows(mf);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        num += (out[i] - ref[i]) * (out[i] - ref[i]);
        den += ref[i] * ref[i];
    }
    CHECK(std::sqrt(num / den) < 1e-10);

    const Eigen::MatrixXd D = assemble_dense(*op, p.K);
    CHECK((D - S.dense()).norm() <= 1e-12 * D.norm());
}

TEST_CASE("transpose passes the dot-product test") {
    const LocalProblem p = small_problem();
    auto op = make_operator(p);
    const SparseB S = assemble_sparse(*op, p.K);
    std::mt19937 rng(4);
    std::normal_distribution<double> nd;
    std::vector<double> f(S.cols()), g(S.rows()), Sf(S.rows()), Stg(S.cols());
    for (auto& v : f) v = nd(rng);
    for (auto& v : g) v = nd(rng);
    S.apply(f.data(), Sf.data());
    S.apply_t(g.data(), Stg.data());
    CHECK(dotv(Sf, g) == doctest::Approx(dotv(f, Stg)).epsilon(1e-12));
}

TEST_CASE("row subsets assemble the same rows") {
    const LocalProblem p = small_problem();
    auto op = make_operator(p);
    const SparseB full = assemble_sparse(*op, p.K);
    const SparseB part = assemble_sparse(*op, p.K, {3, 10});
    REQUIRE(part.rows() == 2);
    CHECK(part.row(0) == full.row(3));
    CHECK(part.row(1) == full.row(10));

    const GridField ft = random_on(p.box, p.K, 5);
    GridField w(p.box);
    for (std::size_t i = 0; i < p.box.size(); ++i) w[i] = ft[i];
    const GridField all = op->apply_A(w);
    const GridField some = op->apply_A_rows(w, {3, 10});
    const auto& rg = op->rays();
    CHECK(some[rg.base_node[3]] == all[rg.base_node[3]]);
    CHECK(some[rg.base_node[10]] == all[rg.base_node[10]]);
    CHECK(some[rg.base_node[4]] == 0.0);
}

TEST_CASE("constant parametrix") {
    Parametrix G = Parametrix::constant(4.0);
    CHECK(G.is_constant());
    std::vector<double> g{4.0, -8.0}, f;
    G.apply(g, f);
    CHECK(f == std::vector<double>{1.0, -2.0});
}

TEST_CASE("constant parametrix is refused on a rectangular system") {
    const LocalProblem p = small_problem();
    auto op = make_operator(p);
    const SparseB S = assemble_sparse(*op, p.K);
    REQUIRE(S.rows() != S.cols());
    CHECK_THROWS_AS(parametrix_defect(S, Parametrix::constant(2.0)), ValidationError);
    CHECK_THROWS_AS(Parametrix::constant(0.0), ValidationError);
}

TEST_CASE("frozen parametrix reduces the defect below one") {
    const LocalProblem p = small_problem({12, 13, 13});
    auto op = make_operator(p);
    SolveConfig cfg;
    LocalSolver solver(op, p.K, cfg);
    REQUIRE(solver.certificate().ok);
    const DefectEstimate d = solver.defect();
    CHECK(d.norm < 1.0);
    CHECK(d.norm > 0.0);
}
