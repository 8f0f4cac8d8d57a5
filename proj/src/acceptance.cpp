#include "georay/acceptance.hpp"
#include "georay/layer_strip.hpp"
#include "georay/setup.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

namespace georay {

namespace {

std::string fmt(double v, int prec = 3) {
    std::ostringstream os;
    os << std::setprecision(prec) << v;
    return os.str();
}

// Line integral of A exp(-|z - c|^2 / 2 s^2) along z0 + t v, |t| <= T.
double gaussian_line_integral(double A, const Vec3& c, double s, const Vec3& z0, const Vec3& v, double T) {
    const Vec3 p = z0 - c;
    const double vn = v.norm();
    const double a = p.dot(v) / (vn * vn);
    const double perp2 = p.squaredNorm() - a * a * vn * vn;
    const double k = vn / (s * std::sqrt(2.0));
    return A * std::exp(-perp2 / (2 * s * s)) * s * std::sqrt(M_PI / 2) / vn *
           (std::erf(k * (T + a)) + std::erf(k * (T - a)));
}

CriterionResult forward_oracle(const RunConfig& cfg) {
    const MetricPtr m = make_flat_euclidean();
    std::mt19937_64 rng(static_cast<unsigned>(cfg.integer("run.seed")) + 101);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst = 0.0;
    for (int n = 0; n < 50; ++n) {
        const Vec3 c(0.2 * u(rng), 0.2 * u(rng), 0.2 * u(rng));
        const double s = 0.1 + 0.05 * u(rng);
        const double A = 1.25 + 0.75 * u(rng);
        RayParams p;
        p.x = c[0] + 0.25 * u(rng);
        p.y = Vec2(c[1] + 0.25 * u(rng), c[2] + 0.25 * u(rng));
        p.lambda = 0.5 * u(rng);
        const double th = M_PI * u(rng);
        p.omega = Vec2(std::cos(th), std::sin(th));
        p.t_span = 2.5;
        p.h = 1.0 / 256;
        auto f = [&](const Vec3& z) { return A * std::exp(-(z - c).squaredNorm() / (2 * s * s)); };
        const double num = xray_single(*m, f, p);
        const double ref = gaussian_line_integral(A, c, s, Vec3(p.x, p.y[0], p.y[1]),
                                                  Vec3(p.lambda, p.omega[0], p.omega[1]), p.t_span);
        worst = std::max(worst, std::abs(num - ref) / std::abs(ref));
    }
    return {worst <= 1e-5, "max rel err " + fmt(worst) + " over 50 rays (<= 1e-5)"};
}

CriterionResult convexity(const RunConfig& cfg) {
    const double c = 0.2;
    const MetricPtr m = make_radial_chart(RadialProfile{1.0, 0.2}, 1.0, c);
    const double C = alpha_lower_bound(*m, 0.0, c, 0.3, 9, 9, 16);
    std::mt19937_64 rng(static_cast<unsigned>(cfg.integer("run.seed")) + 202);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = std::numeric_limits<double>::infinity();
    int bound_fail = 0;
    for (int n = 0; n < 200; ++n) {
        RayParams p;
        p.x = 0.005 + (c - 0.005) * u(rng);
        p.y = Vec2(0.6 * u(rng) - 0.3, 0.6 * u(rng) - 0.3);
        const double th = 2 * M_PI * u(rng);
        p.omega = Vec2(std::cos(th), std::sin(th));
        p.lambda = std::sqrt(2 * C) * std::sqrt(p.x) * (2 * u(rng) - 1);
        p.t_span = 0.5;
        p.h = 0.5 / 256;
        const ConvexityReport r = verify_convexity_bound(*m, C, p);
        worst = std::min(worst, r.min_x);
        if (!r.ok) ++bound_fail;
    }
    return {worst >= -1e-6, "min x along 200 rays " + fmt(worst) + " (alpha >= C = " + fmt(C) +
                                "; quadratic lower bound violated on " + std::to_string(bound_fail) + ")"};
}

CriterionResult alpha_consistency(const RunConfig& cfg) {
    const MetricPtr m = make_radial_chart(RadialProfile{1.0, 0.2}, 1.0, 0.2);
    std::mt19937_64 rng(static_cast<unsigned>(cfg.integer("run.seed")) + 303);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int n = 0; n < 100; ++n) {
        RayParams p;
        p.x = 0.2 * u(rng);
        p.y = Vec2(0.8 * u(rng) - 0.4, 0.8 * u(rng) - 0.4);
        const double th = 2 * M_PI * u(rng);
        p.omega = Vec2(std::cos(th), std::sin(th));
        p.lambda = 0.0;
        p.h = 1e-3;
        p.t_span = 16e-3;
        const RayPath path = trace(*m, p);
        std::size_t i0 = 0;
        for (std::size_t i = 0; i < path.t.size(); ++i)
            if (std::abs(path.t[i]) < std::abs(path.t[i0])) i0 = i;
        std::size_t ip = i0, im = i0;
        for (std::size_t i = 0; i < path.t.size(); ++i) {
            if (std::abs(path.t[i] - p.h) < 1e-12) ip = i;
            if (std::abs(path.t[i] + p.h) < 1e-12) im = i;
        }
        const double d2 = (path.z[ip][0] - 2 * path.z[i0][0] + path.z[im][0]) / (p.h * p.h);
        const double a = alpha_eval(*m, p.x, p.y, p.omega);
        worst = std::max(worst, std::abs(d2 - 2 * a) / std::abs(2 * a));
    }
    return {worst <= 1e-3, "max rel deviation " + fmt(worst) + " over 100 tangent rays (<= 1e-3)"};
}

CriterionResult symbol_closed_form(const RunConfig&) {
    const double F = 1.0;
    CutoffSpec cs;
    cs.mode = CutoffMode::alpha_matched;
    cs.F = F;
    cs.truncate = false;
    const Mat2 Q = Mat2::Identity();
    const SymbolScanSpec sp;
    const SymbolGrid sg = boundary_symbol_fft(Vec2::Zero(), cs, F, Q, sp);
    const IsotropicAnalyticSymbol an(F, 1.0, 60 / F);
    const std::size_t mid = sg.xi.size() / 2;
    const double scale = sg.at(mid, mid, mid).real() / an(0.0, Vec2::Zero());
    double worst = 0.0;
    for (std::size_t i = 0; i < sg.xi.size(); ++i)
        for (std::size_t j = 0; j < sg.eta1.size(); ++j)
            for (std::size_t k = 0; k < sg.eta2.size(); ++k) {
                const double z2 = sg.xi[i] * sg.xi[i] + sg.eta1[j] * sg.eta1[j] + sg.eta2[k] * sg.eta2[k];
                if (z2 > sp.half * sp.half) continue;
                const double a = scale * an(sg.xi[i], Vec2(sg.eta1[j], sg.eta2[k]));
                worst = std::max(worst, std::abs(sg.at(i, j, k) - a) / std::abs(a));
            }
    return {worst <= 0.02, "max rel deviation " + fmt(worst) + " on |zeta| <= 40 (<= 2%)"};
}

CriterionResult ellipticity(const RunConfig& cfg) {
    std::ostringstream os;
    bool all = true;
    double worst_ratio = std::numeric_limits<double>::infinity();
    for (double F : {0.5, 1.0, 2.0})
        for (double cond : {1.0, 4.0}) {
            CutoffSpec cs;
            cs.mode = CutoffMode::alpha_matched;
            cs.F = F;
            cs.truncate = true;
            cs.s_max_sigmas = cfg.real("cutoff.s_max");
            cs.taper = cfg.real("cutoff.taper");
            Mat2 Q;
            Q << 1.0, 0.0, 0.0, cond;
            const SymbolGrid sg = boundary_symbol_fft(Vec2::Zero(), cs, F, Q);
            const EllipticityReport r = ellipticity_scan(sg, 40.0);
            all = all && r.ok;
            worst_ratio = std::min(worst_ratio, r.noise_floor > 0 ? r.c_min / r.noise_floor : 0.0);
            os << " F=" << F << "/cond=" << cond << ":" << fmt(r.c_min);
        }
    return {all, "c_min" + os.str() + "; worst c_min/noise " + fmt(worst_ratio) + " (>= 1e4)"};
}

CriterionResult injectivity(const RunConfig& cfg) {
    SlabConfig s = slab_from_config(cfg);
    s.dims = {14, 14, 14};
    const auto sched = cfg.reals("chart.c_schedule");
    const double c = *std::min_element(sched.begin(), sched.end());
    const LocalProblem p = make_slab_problem(s, c);
    const auto op = make_operator(p);
    const InjectivityReport r = injectivity_certificate(*op, p.K);
    const double ratio = r.sigma_max > 0 ? r.sigma_min / r.sigma_max : 0.0;
    return {ratio > 1e-6, "c = " + fmt(c) + ", " + std::to_string(r.n_cols) + " columns, sigma_min/sigma_max " +
                              fmt(ratio) + " (> 1e-6)"};
}

// Schedule study shared by the small-c criteria.
struct ScheduleStudy {
    SmallCReport search;
    std::map<double, ReconstructionReport> recon;  // same layer-relative phantom at each c
};

PhantomSpec relative_bump(double c) {
    PhantomSpec ps;
    ps.kind = PhantomKind::poly_bump;
    ps.center = Vec3(0.55 * c, 0.0, 0.0);
    ps.radii = Vec3(0.3 * c, 0.15, 0.15);
    return ps;
}

const ScheduleStudy& schedule_study(const RunConfig& cfg) {
    static std::map<std::string, ScheduleStudy> cache;
    const std::string key = cfg.serialize();
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    const SlabConfig s = slab_from_config(cfg);
    SolveConfig sc = solve_from_config(cfg);
    sc.method = SolveMethod::neumann_preconditioned;
    ScheduleStudy st;
    st.search = small_c_search([&](double c) { return make_slab_problem(s, c); }, sc.c_schedule, sc,
                               [&](const LocalProblem& p, LocalSolver& solver) {
                                   const GridField f = make_phantom(relative_bump(p.c), p.box, p.x_floor, p.c);
                                   const XRayData d = xray_batch(*p.metric, f, solver.op().rays());
                                   st.recon[p.c] = solver.solve(d, &f);
                               });
    return cache.emplace(key, std::move(st)).first->second;
}

PhantomSpec relative_gaussian(double c) {
    PhantomSpec ps;
    ps.kind = PhantomKind::gaussian_bump;
    ps.center = Vec3(0.55 * c, 0.0, 0.0);
    ps.sigma = 0.1 * c;
    ps.support = 0.3 * c;
    return ps;
}

CriterionResult local_reconstruction(const RunConfig& cfg) {
    SlabConfig s = slab_from_config(cfg);
    SolveConfig sc = solve_from_config(cfg);
    sc.method = SolveMethod::neumann_preconditioned;

    // small-c search on the grid of the iterative solve; the Neumann solve runs
    // at every scheduled c that qualifies and the one at c_star is kept
    s.dims = {32, 32, 32};
    std::map<double, ReconstructionReport> runs;
    const SmallCReport search =
        small_c_search([&](double c) { return make_slab_problem(s, c); }, sc.c_schedule, sc,
                       [&](const LocalProblem& p, LocalSolver& solver) {
                           if (!(solver.defect().norm < 0.5)) return;
                           const GridField f = make_phantom(relative_gaussian(p.c), p.box, p.x_floor, p.c);
                           runs[p.c] = solver.solve(xray_batch(*p.metric, f, solver.op().rays()), &f);
                       });
    std::ostringstream os;
    os << "32^3 defects";
    for (const auto& e : search.entries) os << " " << fmt(e.c) << ":" << (e.skipped ? "skipped" : fmt(e.defect));
    if (!search.found) return {false, os.str() + "; " + search.message};
    const double c = search.c_star;
    const ReconstructionReport& r32 = runs.at(c);

    s.dims = {16, 16, 16};
    const LocalProblem p16 = make_slab_problem(s, c);
    const GridField f16 = make_phantom(relative_gaussian(c), p16.box, p16.x_floor, c);
    sc.method = SolveMethod::dense_direct;
    LocalSolver dense(make_operator(p16), p16.K, sc);
    const auto r16 = dense.solve(xray_batch(*p16.metric, f16, dense.op().rays()), &f16);

    const bool ok = r16.rel_l2_on_K <= 0.02 && r32.rel_l2_on_K <= 0.05 && r32.defect < 0.5;
    os << "; c_star " << fmt(c) << "; 16^3 dense rel " << fmt(r16.rel_l2_on_K) << " (<= 2%); 32^3 neumann rel "
       << fmt(r32.rel_l2_on_K) << " (<= 5%) in " << r32.iterations << " it, ||Id - G B|| " << fmt(r32.defect)
       << " (< 1/2)";
    return {ok, os.str()};
}

CriterionResult small_c_monotone(const RunConfig& cfg) {
    const ScheduleStudy& st = schedule_study(cfg);
    std::ostringstream os;
    bool mono = true;
    double prev = std::numeric_limits<double>::infinity();
    double smin = std::numeric_limits<double>::infinity(), smax = 0.0;
    double scmin = smin, scmax = 0.0;
    os << "defects";
    for (const auto& e : st.search.entries) {
        if (e.skipped) {
            os << " " << fmt(e.c) << ":skipped";
            mono = false;
            continue;
        }
        os << " " << fmt(e.c) << ":" << fmt(e.defect);
        if (e.defect > prev) mono = false;
        prev = e.defect;
        const auto& r = st.recon.at(e.c);
        smin = std::min(smin, r.stability_constant);
        smax = std::max(smax, r.stability_constant);
        scmin = std::min(scmin, r.stability_sc);
        scmax = std::max(scmax, r.stability_sc);
    }
    const double spread = smax / smin;
    os << "; stability constant spread " << fmt(spread) << " (<= 2)";
    os << "; sc-norm variant spread " << fmt(scmax / scmin);
    return {mono && spread <= 2.0, os.str()};
}

CriterionResult layer_stripping(const RunConfig& cfg) {
    RunConfig lc = cfg;
    lc.set("metric.kind", "radial_herglotz");
    lc.set("phantom.kind", "two_shell");
    const SlabConfig s = slab_from_config(lc);
    const auto iv = parse_layer_intervals(lc.str("layer.intervals"));
    if (iv.size() != 2) return {false, "layer.intervals must give two layers"};
    const PhantomSpec ps = phantom_from_config(lc, iv.back().t_hi);
    LayerSetup ls = synthetic_layer_setup(s, iv, ps);
    ls.d_rho = lc.real("layer.d_rho");
    ls.blend_width = lc.real("layer.blend_width");
    SolveConfig sc = solve_from_config(lc);
    const LayerStripReport rep = layer_strip(ls, sc);
    if (!rep.complete) return {false, rep.warnings.empty() ? "incomplete" : rep.warnings.front()};
    // Outer first: layer 1 must carry the outer shell, layer 2 the inner one.
    auto energy = [&](const LayerResult& L, double rho_c) {
        double e = 0.0;
        const GridBox& b = L.report.f_hat.box();
        for (std::size_t i = 0; i < b.size(); ++i) {
            const double rho = L.problem.c - b.node(i)[0];
            if (std::abs(rho - rho_c) <= ps.rho_w) e += L.report.f_hat[i] * L.report.f_hat[i];
        }
        return e;
    };
    const bool order = energy(rep.layers[0], ps.rho_c1) > energy(rep.layers[0], ps.rho_c2) &&
                       energy(rep.layers[1], ps.rho_c2) > energy(rep.layers[1], ps.rho_c1);
    const double e1 = rep.layers[0].report.rel_l2_on_K, e2 = rep.layers[1].report.rel_l2_on_K;
    return {order && e1 <= 0.1 && e2 <= 0.1, "layer 1 (outer) rel " + fmt(e1) + ", layer 2 (inner) rel " + fmt(e2) +
                                                 " (<= 10%); outer first: " + (order ? "yes" : "no") +
                                                 "; assembled rel " + fmt(rep.rel_l2_total)};
}

CriterionResult smoothing_order(const RunConfig& cfg) {
    SlabConfig s = slab_from_config(cfg);
    const double c = 0.4;
    s.dims = {20, 48, 48};
    s.rays.n_omega = 96;
    const LocalProblem p = make_slab_problem(s, c);
    const ConjugatedOp op(p.metric, p.box, p.x_floor, p.rays, p.cutoff, p.F);
    // rows in the interior of the bump, subsampled in y
    std::vector<std::size_t> rows;
    for (std::size_t b = 0; b < op.rays().n_base(); ++b) {
        const auto ijk = p.box.unflatten(op.rays().base_node[b]);
        const Vec3 z = op.rays().base[b];
        if (z[0] >= 0.35 * c && z[0] <= 0.75 * c && std::abs(z[1]) <= 0.2 && std::abs(z[2]) <= 0.2 && ijk[1] % 2 == 0 &&
            ijk[2] % 2 == 0)
            rows.push_back(b);
    }
    std::vector<double> ratio;
    std::ostringstream os;
    // k = 32 is reported as a diagnostic of the approach to the asymptotic regime
    for (double k : {4.0, 8.0, 16.0, 32.0}) {
        PhantomSpec ps;
        ps.kind = PhantomKind::oscillatory;
        ps.center = Vec3(0.55 * c, 0.0, 0.0);
        ps.radii = Vec3(0.3 * c, 0.4, 0.4);
        ps.k = k;
        const GridField f = make_phantom(ps, p.box, p.x_floor, c);
        // B f~ with f~ = f
        GridField w(p.box);
        for (std::size_t i = 0; i < p.box.size(); ++i) w[i] = f[i] * std::exp(p.F / p.box.node(i)[0]);
        const GridField a = op.apply_A_rows(w, rows);
        double nb = 0.0, nf = 0.0;
        for (std::size_t b : rows) {
            const double v = a[op.rays().base_node[b]] * op.row_scale(b);
            nb += v * v;
            nf += f[op.rays().base_node[b]] * f[op.rays().base_node[b]];
        }
        ratio.push_back(std::sqrt(nb / nf));
        os << " k=" << k << ":" << fmt(ratio.back());
    }
    const double q1 = ratio[0] / ratio[1], q2 = ratio[1] / ratio[2];
    const double q3 = ratio[2] / ratio[3];
    const bool ok = q1 >= 1.6 && q1 <= 2.4 && q2 >= 1.6 && q2 <= 2.4;
    return {ok, "||B f_k|| / ||f_k||" + os.str() + "; halving factors " + fmt(q1) + ", " + fmt(q2) +
                    " (2 +- 20%); diagnostic 16->32: " + fmt(q3)};
}

CriterionResult metric_perturbation(const RunConfig& cfg) {
    SlabConfig s = slab_from_config(cfg);
    const double c = cfg.real("chart.c");
    const LocalProblem p = make_slab_problem(s, c);
    PhantomSpec ps;
    ps.kind = PhantomKind::gaussian_bump;
    ps.center = Vec3(0.55 * c, 0.0, 0.0);
    ps.sigma = 0.1 * c;
    ps.support = 0.3 * c;
    const GridField f = make_phantom(ps, p.box, p.x_floor, c);
    SolveConfig sc = solve_from_config(cfg);
    LocalSolver solver(make_operator(p), p.K, sc);
    const auto r0 = solver.solve(xray_batch(*p.metric, f, solver.op().rays()), &f);
    s.perturb_amplitude = 0.01;
    const MetricPtr mp = data_metric(s, p);
    const auto r1 = solver.solve(xray_batch(*mp, f, solver.op().rays()), &f);
    double num = 0.0, den = 0.0;
    for (std::size_t node : region_nodes(p.box, p.K)) {
        num += (r1.f_hat[node] - r0.f_hat[node]) * (r1.f_hat[node] - r0.f_hat[node]);
        den += r0.f_hat[node] * r0.f_hat[node];
    }
    const double rel = std::sqrt(num / den);
    return {rel <= 0.1, "1% bump changes f^ by " + fmt(rel) + " rel on K (<= 10%); errors vs phantom " +
                            fmt(r0.rel_l2_on_K) + " -> " + fmt(r1.rel_l2_on_K)};
}

}  // namespace

const std::vector<Criterion>& acceptance_criteria() {
    static const std::vector<Criterion> list = {
        {1, "forward transform vs closed-form line integrals", 10, forward_oracle},
        {2, "curves stay in the half-space (radial Herglotz)", 20, convexity},
        {3, "second difference of x along tangent rays = 2 alpha", 10, alpha_consistency},
        {4, "boundary symbol FFT vs analytic convolution", 60, symbol_closed_form},
        {5, "ellipticity certificate of the boundary symbol", 120, ellipticity},
        {6, "injectivity of the assembled operator at small c", 300, injectivity},
        {7, "local reconstruction (dense 16^3, Neumann 32^3)", 600, local_reconstruction},
        {8, "small-c monotonicity and stability uniformity", 300, small_c_monotone},
        {9, "layer stripping on two shells", 600, layer_stripping},
        {10, "order -1 smoothing under frequency doubling", 60, smoothing_order},
        {11, "stability under a 1% metric perturbation", 300, metric_perturbation},
    };
    return list;
}

void list_criteria(std::ostream& os) {
    for (const auto& c : acceptance_criteria())
        os << std::setw(2) << c.id << "  " << c.name << "  (budget " << c.budget_s << " s)\n";
}

int run_acceptance(const RunConfig& cfg, std::ostream& os, const std::vector<int>& only) {
    int failures = 0;
    for (const auto& c : acceptance_criteria()) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
        const auto t0 = std::chrono::steady_clock::now();
        CriterionResult r;
        try {
            r = c.run(cfg);
        } catch (const std::exception& e) {
            r = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = secs <= c.budget_s;
        const bool pass = r.pass && in_time;
        if (!pass) ++failures;
        os << (pass ? "PASS" : "FAIL") << "  " << std::setw(2) << c.id << "  " << c.name << ": " << r.detail << " ["
           << std::fixed << std::setprecision(1) << secs << " s / " << c.budget_s << " s"
           << (in_time ? "" : ", over budget") << "]" << std::defaultfloat << std::endl;
    }
    return failures;
}

}  // namespace georay
