#include "georay/inversion.hpp"
#include "georay/simd.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace georay {

std::string to_string(SolveMethod m) {
    switch (m) {
        case SolveMethod::neumann_preconditioned: return "neumann_preconditioned";
        case SolveMethod::cgnr: return "cgnr";
        case SolveMethod::dense_direct: return "dense_direct";
    }
    return "unknown";
}

SolveMethod solve_method_from_string(const std::string& s) {
    for (SolveMethod m : {SolveMethod::neumann_preconditioned, SolveMethod::cgnr, SolveMethod::dense_direct})
        if (to_string(m) == s) return m;
    throw ValidationError("unknown solve method '" + s + "'");
}

namespace {

double norm2(const std::vector<double>& v) { return std::sqrt(simd::dot(v.data(), v.data(), v.size())); }

}  // namespace

double data_norm(const RayGrid& rg, const GridBox& box, const XRayData& d) {
    if (!d.matches(rg)) throw ValidationError("data_norm: data does not match the ray grid");
    double s = 0.0;
    for (std::size_t b = 0; b < rg.n_base(); ++b)
        for (int i = 0; i < rg.n_lambda(); ++i)
            for (int j = 0; j < rg.n_omega(); ++j) {
                const double v = d.v[rg.index(b, i, j)];
                s += rg.lambda_weight(b, i) * rg.omega_weights[j] * v * v;
            }
    return std::sqrt(s * box.cell_volume());
}

EllipticityReport certify_ellipticity(const ConjugatedOp& op, const SupportRegion& K, const SymbolScanSpec& scan) {
    const Vec2 yc = 0.5 * (K.y_lo + K.y_hi);
    const Mat2 Q = alpha_form(op.metric(), yc);
    CutoffSpec cs = op.cutoff();
    cs.F = op.F();
    const SymbolGrid sg = boundary_symbol_fft(yc, cs, op.F(), Q, scan);
    return ellipticity_scan(sg, scan.half);
}

std::shared_ptr<const ConjugatedOp> make_operator(const LocalProblem& p) {
    CutoffSpec cs = p.cutoff;
    cs.F = p.F;
    return std::make_shared<const ConjugatedOp>(p.metric, p.box, p.x_floor, p.rays, cs, p.F);
}

LocalSolver::LocalSolver(std::shared_ptr<const ConjugatedOp> op, const SupportRegion& K, const SolveConfig& cfg)
    : op_(std::move(op)), K_(K), cfg_(cfg) {
    if (cfg_.max_iter < 1) throw ValidationError("solve.max_iter must be >= 1");
    if (!(cfg_.tol > 0 && cfg_.tol < 1)) throw ValidationError("solve.tol must lie in (0, 1)");
    if (!(cfg_.taper_low > 0)) throw ValidationError("solve.taper_low must be > 0");
    if (K_.x_lo < op_->x_floor() - 1e-12)
        throw ValidationError("support region K must satisfy x >= x_floor");
}

const SparseB& LocalSolver::system() {
    if (!S_) S_.emplace(assemble_sparse(*op_, K_));
    return *S_;
}

const EllipticityReport& LocalSolver::certificate() {
    if (!cert_) cert_ = certify_ellipticity(*op_, K_, cfg_.cert_scan);
    return *cert_;
}

const Parametrix& LocalSolver::parametrix() {
    if (!G_) {
        ParametrixSpec ps;
        ps.taper_low = cfg_.taper_low;
        ps.blocks = cfg_.blocks;
        G_.emplace(*op_, system(), ps, certificate());
    }
    return *G_;
}

DefectEstimate LocalSolver::defect() {
    if (!defect_) defect_ = parametrix_defect(system(), parametrix());
    return *defect_;
}

ReconstructionReport LocalSolver::solve(const XRayData& data, const GridField* truth) {
    const SparseB& S = system();
    const GridField g = op_->data_to_rhs(data);
    return solve_rhs(S.gather_rows(g), data_norm(op_->rays(), op_->box(), data), truth);
}

ReconstructionReport LocalSolver::solve_rhs(const std::vector<double>& g, double data_l2, const GridField* truth) {
    const SparseB& S = system();
    const std::size_t n = S.cols(), m = S.rows();
    if (g.size() != m) throw ValidationError("right-hand side size does not match the system rows");
    ReconstructionReport rep;
    rep.method = to_string(cfg_.method);
    std::vector<double> f(n, 0.0), r(m), Bf(m);
    const double gn = norm2(g);

    if (gn == 0.0) {
        rep.converged = true;
        rep.residual_history.push_back(0.0);
    } else if (cfg_.method == SolveMethod::neumann_preconditioned) {
        const Parametrix& G = parametrix();
        rep.defect = defect().norm;
        if (!(rep.defect < 1.0))
            rep.warnings.push_back("measured ||Id - G B|| >= 1: Neumann series not guaranteed to converge");
        std::vector<double> u;
        G.apply(g, u);
        const double g0 = norm2(u);
        r = g;
        for (int it = 1; it <= cfg_.max_iter; ++it) {
            G.apply(r, u);
            const double res = norm2(u) / g0;
            rep.residual_history.push_back(res);
            if (res <= cfg_.tol) {
                rep.converged = true;
                break;
            }
            simd::axpy(1.0, u.data(), f.data(), n);
            S.apply(f.data(), Bf.data());
            for (std::size_t i = 0; i < m; ++i) r[i] = g[i] - Bf[i];
            rep.iterations = it;
        }
    } else if (cfg_.method == SolveMethod::cgnr) {
        std::vector<double> z(n), p(n), q(m), w(n);
        r = g;
        S.apply_t(r.data(), z.data());
        const double z0 = norm2(z);
        p = z;
        double zz = simd::dot(z.data(), z.data(), n);
        rep.residual_history.push_back(1.0);
        for (int it = 1; it <= cfg_.max_iter; ++it) {
            S.apply(p.data(), q.data());
            const double a = zz / simd::dot(q.data(), q.data(), m);
            simd::axpy(a, p.data(), f.data(), n);
            simd::axpy(-a, q.data(), r.data(), m);
            S.apply_t(r.data(), z.data());
            const double zz_new = simd::dot(z.data(), z.data(), n);
            rep.iterations = it;
            rep.residual_history.push_back(std::sqrt(zz_new) / z0);
            if (std::sqrt(zz_new) / z0 <= cfg_.tol) {
                rep.converged = true;
                break;
            }
            const double beta = zz_new / zz;
            zz = zz_new;
            for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
        }
    } else {
        if (static_cast<double>(m) * n > 8e7) {
            std::ostringstream os;
            os << "dense_direct: " << m << " x " << n << " system too large; coarsen each axis by a factor of at least "
               << std::ceil(std::pow(m * double(n) / 8e7, 1.0 / 6) * 100) / 100;
            throw ValidationError(os.str());
        }
        const Eigen::MatrixXd D = S.dense();
        const Eigen::Map<const Eigen::VectorXd> gv(g.data(), static_cast<Eigen::Index>(m));
        const Eigen::VectorXd x = D.colPivHouseholderQr().solve(gv);
        for (std::size_t i = 0; i < n; ++i) f[i] = x[i];
        rep.iterations = 1;
        rep.converged = true;
        rep.residual_history.push_back((gv - D * x).norm() / gn);
    }

    S.apply(f.data(), Bf.data());
    for (std::size_t i = 0; i < m; ++i) r[i] = g[i] - Bf[i];
    rep.final_plain_residual = gn > 0 ? norm2(r) / gn : 0.0;
    if (cfg_.method != SolveMethod::dense_direct && !rep.converged)
        rep.warnings.push_back("no convergence within max_iter; partial result");
    if (rep.final_plain_residual > cfg_.residual_warn)
        rep.warnings.push_back("data not fully explained by a field supported in K (possible support leakage)");

    // f^ = e^{F/x} f~ on K
    std::vector<double> fh(n);
    for (std::size_t c = 0; c < n; ++c) fh[c] = S.col_scale()[c] * f[c];
    rep.f_hat = S.scatter_cols(fh);

    const WeightedNormSpec ws{0, cfg_.norm_r, op_->F(), 0.0, op_->x_floor()};
    if (truth) {
        double num = 0.0, den = 0.0;
        for (std::size_t c = 0; c < n; ++c) {
            const double t = (*truth)[S.col_nodes()[c]];
            num += (fh[c] - t) * (fh[c] - t);
            den += t * t;
        }
        rep.rel_l2_on_K = den > 0 ? std::sqrt(num / den) : std::sqrt(num);
        GridField diff = rep.f_hat;
        for (std::size_t i = 0; i < diff.values().size(); ++i) diff[i] -= (*truth)[i];
        const double wt = sc_norm(*truth, ws);
        rep.rel_weighted = wt > 0 ? sc_norm(diff, ws) / wt : sc_norm(diff, ws);
    }
    if (data_l2 > 0) {
        rep.stability_constant = sc_norm(rep.f_hat, ws) / data_l2;
        rep.stability_applicable = true;
        // scattering-norm variant on f~ and B f~
        GridField ft = S.scatter_cols(f);
        const double num = sc_norm(ft, WeightedNormSpec{0, cfg_.norm_r, 0.0, 0.0, op_->x_floor()});
        const double den = sc_norm(S.scatter_rows(Bf), WeightedNormSpec{1, cfg_.norm_r, 0.0, 0.0, op_->x_floor()});
        if (den > 0) rep.stability_sc = num / den;
    }
    return rep;
}

InjectivityReport injectivity_certificate(const ConjugatedOp& op, const SupportRegion& K, std::size_t max_cols) {
    const Eigen::MatrixXd D = assemble_dense(op, K, max_cols);
    InjectivityReport r;
    r.n_cols = static_cast<std::size_t>(D.cols());
    if (D.cols() == 0) return r;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(D);
    const auto& s = svd.singularValues();
    r.sigma_max = s[0];
    r.sigma_min = D.rows() >= D.cols() ? s[s.size() - 1] : 0.0;
    r.ok = r.sigma_max > 0 && r.sigma_min > 1e-10 * r.sigma_max;
    return r;
}

SmallCReport small_c_search(const std::function<LocalProblem(double)>& make, const std::vector<double>& schedule,
                            const SolveConfig& cfg,
                            const std::function<void(const LocalProblem&, LocalSolver&)>& on_solver) {
    SmallCReport rep;
    for (double c : schedule) {
        SmallCEntry e;
        e.c = c;
        const LocalProblem p = make(c);
        const auto nodes = region_nodes(p.box, p.K);
        int xl = 0;
        {
            std::vector<int> lv;
            for (std::size_t nd : nodes) lv.push_back(p.box.unflatten(nd)[0]);
            std::sort(lv.begin(), lv.end());
            xl = static_cast<int>(std::unique(lv.begin(), lv.end()) - lv.begin());
        }
        if (xl < 4) {
            e.skipped = true;
            e.note = "skipped: support region spans fewer than 4 grid cells in x";
            rep.entries.push_back(e);
            continue;
        }
        LocalSolver solver(make_operator(p), p.K, cfg);
        if (!solver.certificate().ok) {
            e.skipped = true;
            e.note = "skipped: ellipticity certificate failed";
            rep.entries.push_back(e);
            continue;
        }
        e.defect = solver.defect().norm;
        if (on_solver) on_solver(p, solver);
        if (e.defect < 0.5 && (!rep.found || c > rep.c_star)) {
            rep.c_star = c;
            rep.found = true;
        }
        rep.entries.push_back(e);
    }
    if (!rep.found) rep.message = "no scheduled c reached ||Id - G B|| < 1/2; use a finer foliation (smaller c)";
    return rep;
}

void write_report(const std::string& path, const ReconstructionReport& r) {
    std::ofstream os(path);
    if (!os) throw ValidationError("cannot open for writing: " + path);
    os << std::setprecision(12);
    os << "method = " << r.method << "\n";
    os << "c_used = " << r.c_used << "\n";
    os << "iterations = " << r.iterations << "\n";
    os << "converged = " << (r.converged ? "true" : "false") << "\n";
    os << "rel_l2_on_K = " << r.rel_l2_on_K << "\n";
    os << "rel_weighted = " << r.rel_weighted << "\n";
    os << "final_plain_residual = " << r.final_plain_residual << "\n";
    os << "defect = " << r.defect << "\n";
    if (r.stability_applicable)
        os << "stability_constant = " << r.stability_constant << "\nstability_sc = " << r.stability_sc << "\n";
    else
        os << "stability_constant = not_applicable\n";
    for (const auto& w : r.warnings) os << "warning = " << w << "\n";
}

void write_residual_csv(const std::string& path, const std::vector<double>& hist) {
    std::ofstream os(path);
    if (!os) throw ValidationError("cannot open for writing: " + path);
    os << std::setprecision(12) << "iteration,residual\n";
    for (std::size_t k = 0; k < hist.size(); ++k) os << k << ',' << hist[k] << '\n';
}

}  // namespace georay
