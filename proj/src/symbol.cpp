#include "georay/symbol.hpp"
#include "georay/phantom.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace georay {

Mat2 alpha_form(const MetricModel& m, const Vec2& y) {
    const double a1 = alpha_eval(m, 0.0, y, Vec2(1, 0));
    const double a2 = alpha_eval(m, 0.0, y, Vec2(0, 1));
    const double ad = alpha_eval(m, 0.0, y, Vec2(1, 1).normalized());
    Mat2 Q;
    Q << a1, ad - 0.5 * (a1 + a2), ad - 0.5 * (a1 + a2), a2;
    return Q;
}

double symbol_nu(const CutoffSpec& cs, double F, double qhat) {
    return cs.mode == CutoffMode::constant_nu ? cs.nu : qhat / F;
}

namespace {

struct GL {
    std::vector<double> x, w;
};

const GL& gl64() {
    static const GL g = [] {
        GL r;
        gauss_legendre(64, r.x, r.w);
        return r;
    }();
    return g;
}

// 2 int_a^b chi(s) cos(w s) ds by Gauss-Legendre
cplx cos_transform(const CutoffSpec& cs, double nu, cplx w, double a, double b) {
    const GL& g = gl64();
    const double m = 0.5 * (a + b), r = 0.5 * (b - a);
    cplx s = 0.0;
    for (std::size_t k = 0; k < g.x.size(); ++k) {
        const double u = m + r * g.x[k];
        s += g.w[k] * chi_eval(cs, u, nu) * std::cos(w * u);
    }
    return 2.0 * r * s;
}

void check_form(const Mat2& Q) {
    if (std::abs(Q(0, 1) - Q(1, 0)) > 1e-12 * Q.norm()) throw ValidationError("alpha form Q must be symmetric");
    if (!(Q(0, 0) > 0 && Q.determinant() > 0)) throw ValidationError("alpha form Q must be positive definite");
}

}  // namespace

cplx chi_hat(const CutoffSpec& cs, double nu, cplx w) {
    if (!cs.truncate) return cs.amplitude * std::sqrt(2 * pi * nu) * std::exp(-0.5 * nu * w * w);
    const double smax = cutoff_s_max(cs, nu);
    if (smax <= 0 || cs.amplitude == 0.0) return 0.0;
    const double start = (1.0 - cs.taper) * smax;
    return cos_transform(cs, nu, w, 0.0, start) + (cs.taper > 0 ? cos_transform(cs, nu, w, start, smax) : 0.0);
}

double frontface_kernel(const Vec2&, double X, const Vec2& Y, const CutoffSpec& cs, double F, const Mat2& Q) {
    const double r = Y.norm();
    if (r == 0.0) throw DomainError("front-face kernel is singular at Y = 0");
    const Vec2 e = Y / r;
    const double q = e.dot(Q * e);
    const double nu = symbol_nu(cs, F, q);
    return std::exp(-F * X) / r / r * chi_eval(cs, (X - q * r * r) / r, nu);
}

cplx frontface_xft(const CutoffSpec& cs, double F, const Mat2& Q, double xi, const Vec2& Y) {
    const double r = Y.norm();
    if (r == 0.0) throw DomainError("front-face kernel is singular at Y = 0");
    const Vec2 e = Y / r;
    const double q = e.dot(Q * e);
    const double nu = symbol_nu(cs, F, q);
    return std::exp(-cplx(F, xi) * q * r * r) * chi_hat(cs, nu, cplx(xi, -F) * r) / r;
}

namespace {

// Radial profile R(s) = |Y| times the X-transform along direction with
// Q(Y^,Y^) = q. For truncated chi, chi^ of the unit-variance cutoff is
// evaluated along the complex ray t (xi - i F) from fixed quadrature nodes,
// optionally tabulated.
class SliceProfile {
public:
    SliceProfile(const CutoffSpec& cs, double F, double xi) : cs_(cs), F_(F), xi_(xi) {
        if (!cs.truncate) return;
        CutoffSpec unit = cs;
        unit.mode = CutoffMode::constant_nu;
        unit.nu = 1.0;
        const double smax = cutoff_s_max(unit, 1.0), start = (1.0 - cs.taper) * smax;
        const GL& g = gl64();
        for (auto [a, b] : {std::pair{0.0, start}, std::pair{start, smax}}) {
            if (b <= a) continue;
            const double m = 0.5 * (a + b), r = 0.5 * (b - a);
            for (std::size_t k = 0; k < g.x.size(); ++k) {
                u_.push_back(m + r * g.x[k]);
                wc_.push_back(2.0 * r * g.w[k] * chi_eval(unit, u_.back(), 1.0));
            }
        }
    }
    void tabulate(double t_max, int n = 4096) {
        if (!cs_.truncate) return;
        n_ = n;
        dt_ = t_max / (n_ - 3);
        tab_.resize(n_);
        for (int k = 0; k < n_; ++k) tab_[k] = direct(k * dt_);
    }
    cplx direct(double t) const {
        const cplx w = cplx(xi_, -F_) * t;
        cplx s = 0.0;
        for (std::size_t k = 0; k < u_.size(); ++k) s += wc_[k] * std::cos(w * u_[k]);
        return s;
    }
    cplx chi_hat_scaled(double nu, double s) const {
        if (!cs_.truncate) return chi_hat(cs_, nu, cplx(xi_, -F_) * s);
        const double t = std::sqrt(nu) * s;
        if (tab_.empty()) return std::sqrt(nu) * direct(t);
        const double u = t / dt_;
        int k = static_cast<int>(u);
        if (k >= n_ - 2) return std::sqrt(nu) * direct(t);
        const double f = u - k;
        const cplx p0 = k > 0 ? tab_[k - 1] : tab_[1];  // even in t
        const cplx p1 = tab_[k], p2 = tab_[k + 1], p3 = tab_[k + 2];
        // Catmull-Rom
        const cplx v = p1 + 0.5 * f * (p2 - p0 + f * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + f * (3.0 * (p1 - p2) + p3 - p0)));
        return std::sqrt(nu) * v;
    }
    cplx operator()(double q, double nu, double s) const {
        return std::exp(-cplx(F_, xi_) * q * s * s) * chi_hat_scaled(nu, s);
    }

private:
    CutoffSpec cs_;
    double F_, xi_;
    std::vector<double> u_, wc_;
    int n_ = 0;
    double dt_ = 1.0;
    std::vector<cplx> tab_;
};

// Smallest s with |R| < tol |R(0)| from there on (coarse outward scan).
double slice_extent(const SliceProfile& R, double q, double nu, double tol) {
    const double r0 = std::abs(R(q, nu, 0.0));
    if (r0 == 0.0) return 0.0;
    double s = 0.0, last_big = 0.0;
    const double ds = 0.01;
    int quiet = 0;
    while (s < 1e4) {
        s += ds * std::max(1.0, s);
        if (std::abs(R(q, nu, s)) >= tol * r0) {
            last_big = s;
            quiet = 0;
        } else if (++quiet > 200) {
            break;
        }
    }
    if (s >= 1e4) throw NumericalError("front-face kernel does not decay: window unbounded (is F > 0?)");
    return last_big + ds * std::max(1.0, last_big);
}

double qform(const Mat2& Q, double th) {
    const Vec2 e(std::cos(th), std::sin(th));
    return e.dot(Q * e);
}

}  // namespace

double frontface_window(const CutoffSpec& cs, double F, const Mat2& Q, double tol) {
    if (!(F > 0)) throw DomainError("front-face kernel is not integrable for F <= 0");
    check_form(Q);
    double numax = 0.0;
    for (int m = 0; m < 64; ++m) numax = std::max(numax, symbol_nu(cs, F, qform(Q, pi * m / 64)));
    const SliceProfile R(cs, F, 0.0);
    double w = 0.0;
    for (int m = 0; m < 64; ++m) {
        const double q = qform(Q, pi * m / 64);
        w = std::max(w, slice_extent(R, q, symbol_nu(cs, F, q), tol));
    }
    return w;
}

SymbolGrid boundary_symbol_fft(const Vec2& y, const CutoffSpec& cs, double F, const Mat2& Q,
                               const SymbolScanSpec& spec) {
    if (!(F > 0)) throw DomainError("boundary symbol needs F > 0: the front-face kernel is not integrable otherwise");
    check_form(Q);
    if (spec.n_xi < 2 || spec.n_eta < 2 || !(spec.half > 0)) throw ValidationError("bad symbol scan grid");
    SymbolGrid sg;
    sg.y = y;
    sg.F = F;
    sg.Q = Q;
    auto nodes = [&](int n) {
        std::vector<double> v(n);
        for (int i = 0; i < n; ++i) v[i] = -spec.half + 2 * spec.half * i / (n - 1);
        return v;
    };
    sg.xi = nodes(spec.n_xi);
    sg.eta1 = nodes(spec.n_eta);
    sg.eta2 = nodes(spec.n_eta);
    const std::size_t ne = spec.n_eta;
    sg.values.assign(spec.n_xi * ne * ne, cplx(0, 0));
    const double k_max = spec.half * std::sqrt(2.0) * 1.01;

    double numax = 0.0;
    for (int m = 0; m < 64; ++m) numax = std::max(numax, symbol_nu(cs, F, qform(Q, pi * m / 64)));
    sg.window = frontface_window(cs, F, Q, spec.tail_tol);

    // xi >= 0 computed, xi < 0 from sigma(-xi, -eta) = conj sigma(xi, eta)
    for (int ix = 0; ix < spec.n_xi; ++ix) {
        const double xi = sg.xi[ix];
        if (xi < 0 && std::abs(sg.xi[spec.n_xi - 1 - ix] + xi) < 1e-12) continue;
        SliceProfile probe(cs, F, xi);
        double s_end = 0.0;
        for (int m = 0; m < 16; ++m) {
            const double q = qform(Q, pi * m / 16);
            s_end = std::max(s_end, slice_extent(probe, q, symbol_nu(cs, F, q), spec.tail_tol));
        }
        probe.tabulate(std::sqrt(numax) * s_end * 1.05);
        const double ds = std::min({s_end / 256, pi / (1.5 * k_max), 0.05});
        const int M = static_cast<int>(std::ceil(s_end / ds)) + 1;
        int P = 2;
        while (P < 2 * M + 2 || 2 * pi / (P * ds) > 1.0 / (6 * s_end)) P *= 2;
        const double dk = 2 * pi / (P * ds);
        int n_theta = static_cast<int>(std::ceil(0.6 * k_max * s_end / 8.0)) * 8;
        n_theta = std::clamp(n_theta, 64, 4096);

        std::vector<double> kq;  // |k| samples: g(|k|) on [0, k_max]
        const int nk = static_cast<int>(std::ceil(k_max / dk)) + 3;
        fftw_complex* buf = fftw_alloc_complex(P);
        fftw_plan plan = fftw_plan_dft_1d(P, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
        std::vector<std::vector<cplx>> slices(n_theta, std::vector<cplx>(nk));
        std::vector<double> cth(n_theta), sth(n_theta);
        for (int m = 0; m < n_theta; ++m) {
            const double th = pi * m / n_theta;
            cth[m] = std::cos(th);
            sth[m] = std::sin(th);
            const double q = qform(Q, th);
            const double nu = symbol_nu(cs, F, q);
            cplx* b = reinterpret_cast<cplx*>(buf);
            std::fill(b, b + P, cplx(0, 0));
            for (int j = 0; j < M; ++j) {
                const cplx v = probe(q, nu, j * ds);
                b[j] += v;
                if (j > 0) b[P - j] += v;
            }
            fftw_execute(plan);
            for (int j = 0; j < nk; ++j) slices[m][j] = ds * b[j];
        }
        fftw_destroy_plan(plan);
        fftw_free(buf);

        const double wth = pi / n_theta;
        auto interp = [&](const std::vector<cplx>& g, double k) {
            const double u = std::abs(k) / dk;
            const int j = static_cast<int>(u);
            const double f = u - j;
            const cplx p0 = j > 0 ? g[j - 1] : g[1];
            const cplx p1 = g[j], p2 = g[j + 1], p3 = g[j + 2];
            return p1 + 0.5 * f * (p2 - p0 + f * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + f * (3.0 * (p1 - p2) + p3 - p0)));
        };
#pragma omp parallel for schedule(static)
        for (long a = 0; a < static_cast<long>(ne); ++a)
            for (std::size_t b2 = 0; b2 < ne; ++b2) {
                const double e1 = sg.eta1[a], e2 = sg.eta2[b2];
                cplx s = 0.0;
                for (int m = 0; m < n_theta; ++m) s += interp(slices[m], e1 * cth[m] + e2 * sth[m]);
                sg.values[sg.index(ix, a, b2)] = wth * s;
            }
    }
    for (int ix = 0; ix < spec.n_xi; ++ix) {
        const int jx = spec.n_xi - 1 - ix;
        if (!(sg.xi[ix] < 0 && std::abs(sg.xi[jx] + sg.xi[ix]) < 1e-12)) continue;
        for (std::size_t a = 0; a < ne; ++a)
            for (std::size_t b2 = 0; b2 < ne; ++b2)
                sg.values[sg.index(ix, a, b2)] = std::conj(sg.values[sg.index(jx, ne - 1 - a, ne - 1 - b2)]);
    }
    return sg;
}

double boundary_symbol_analytic(double F, const Mat2& Q, double xi, const Vec2& eta) {
    if (!(F > 0)) throw DomainError("analytic boundary symbol needs F > 0");
    check_form(Q);
    const double jx = std::sqrt(xi * xi + F * F);
    const Vec2 u = eta / jx;
    const Mat2 Qi = Q.inverse();
    const double pref = F / std::sqrt(Q.determinant());
    // phi(u) = int_0^{2 pi} int_0^inf G(u - rho e) d rho d theta
    auto inner = [&](double th) {
        const Vec2 e(std::cos(th), std::sin(th));
        const double A = e.dot(Qi * e), B = e.dot(Qi * u), C = u.dot(Qi * u);
        auto g = [&](double rho) { return std::exp(-0.5 * F * (A * rho * rho - 2 * B * rho + C)); };
        const double peak = std::max(0.0, B / A), width = 1.0 / std::sqrt(F * A);
        double err = 0.0;
        double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(g, 0.0, peak, 10, 1e-13, &err);
        v += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(g, peak, peak + 12 * width, 10, 1e-13, &err);
        return v;
    };
    double prev = 0.0, val = 0.0;
    for (int n = 64; n <= 1 << 16; n *= 2) {
        double s = 0.0;
        for (int k = 0; k < n; ++k) s += inner(2 * pi * k / n);
        val = s * 2 * pi / n;
        if (n > 64 && std::abs(val - prev) <= 1e-10 * std::abs(val)) return pref * val / jx;
        prev = val;
    }
    throw NumericalError("analytic boundary symbol: angular quadrature did not converge");
}

IsotropicAnalyticSymbol::IsotropicAnalyticSymbol(double F, double q, double u_max, int n) : F_(F) {
    du_ = u_max / (n - 3);
    phi_.resize(n);
    const Mat2 Q = q * Mat2::Identity();
    for (int k = 0; k < n; ++k) phi_[k] = boundary_symbol_analytic(F, Q, 0.0, Vec2(k * du_ * F, 0.0)) * F;
}

double IsotropicAnalyticSymbol::operator()(double xi, const Vec2& eta) const {
    const double jx = std::sqrt(xi * xi + F_ * F_);
    const double u = eta.norm() / jx / du_;
    const int j = static_cast<int>(u);
    if (j + 2 >= static_cast<int>(phi_.size())) throw DomainError("isotropic symbol table range exceeded");
    const double f = u - j;
    const double p0 = j > 0 ? phi_[j - 1] : phi_[1], p1 = phi_[j], p2 = phi_[j + 1], p3 = phi_[j + 2];
    return (p1 + 0.5 * f * (p2 - p0 + f * (2 * p0 - 5 * p1 + 4 * p2 - p3 + f * (3 * (p1 - p2) + p3 - p0)))) / jx;
}

EllipticityReport ellipticity_scan(const SymbolGrid& sg, double half, double margin) {
    EllipticityReport r;
    r.margin = margin;
    r.c_min = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < sg.xi.size(); ++i)
        for (std::size_t j = 0; j < sg.eta1.size(); ++j)
            for (std::size_t k = 0; k < sg.eta2.size(); ++k) {
                const double a = std::abs(sg.at(i, j, k));
                r.peak = std::max(r.peak, a);
                const double z2 = sg.xi[i] * sg.xi[i] + sg.eta1[j] * sg.eta1[j] + sg.eta2[k] * sg.eta2[k];
                if (z2 > half * half * (1 + 1e-12)) continue;
                const double c = a * std::sqrt(sg.F * sg.F + z2);
                if (c < r.c_min) {
                    r.c_min = c;
                    r.xi = sg.xi[i];
                    r.eta1 = sg.eta1[j];
                    r.eta2 = sg.eta2[k];
                }
            }
    r.noise_floor = 1e-8 * r.peak;
    r.ok = std::isfinite(r.c_min) && r.c_min > margin * r.noise_floor;
    return r;
}

void write_symbol_csv(const std::string& path, const SymbolGrid& sg, int stride) {
    std::ofstream os(path);
    if (!os) throw ValidationError("cannot open for writing: " + path);
    os << std::setprecision(12) << "xi,eta1,eta2,re,im,abs_times_bracket\n";
    for (std::size_t i = 0; i < sg.xi.size(); i += stride)
        for (std::size_t j = 0; j < sg.eta1.size(); j += stride)
            for (std::size_t k = 0; k < sg.eta2.size(); k += stride) {
                const cplx v = sg.at(i, j, k);
                const double br = std::sqrt(sg.F * sg.F + sg.xi[i] * sg.xi[i] + sg.eta1[j] * sg.eta1[j] +
                                            sg.eta2[k] * sg.eta2[k]);
                os << sg.xi[i] << ',' << sg.eta1[j] << ',' << sg.eta2[k] << ',' << v.real() << ',' << v.imag() << ','
                   << std::abs(v) * br << '\n';
            }
}

void write_ellipticity_report(const std::string& path, const EllipticityReport& r) {
    std::ofstream os(path);
    if (!os) throw ValidationError("cannot open for writing: " + path);
    os << std::setprecision(12) << "c_min = " << r.c_min << "\nargmin_xi = " << r.xi << "\nargmin_eta1 = " << r.eta1
       << "\nargmin_eta2 = " << r.eta2 << "\npeak = " << r.peak << "\nnoise_floor = " << r.noise_floor
       << "\nmargin = " << r.margin << "\nok = " << (r.ok ? "true" : "false") << '\n';
}

cplx interior_symbol(const MetricModel& m, const CutoffSpec& cs, double kappa, const Vec3& z, const Vec3& zeta,
                     const InteriorSymbolSpec& spec) {
    const double kz = zeta.norm();
    const double R = spec.probe_radius;
    if (kz == 0.0) throw DomainError("interior symbol needs zeta != 0");
    if (kz * R < 20.0) {
        std::ostringstream os;
        os << "interior symbol: probe radius " << R << " too small for |zeta| = " << kz << " (need |zeta| R >= 20)";
        throw NumericalError(os.str());
    }
    const double x = z[0];
    const Vec2 y(z[1], z[2]);
    std::vector<double> ln, lw;
    gauss_legendre(spec.n_lambda, ln, lw);
    int n_omega = static_cast<int>(std::ceil(std::max(256.0, 8 * pi * kz * R) / 2)) * 2;
    RayParams p;
    p.x = x;
    p.y = y;
    p.t_span = std::min(spec.t_span, 1.5 * R);
    p.h = std::min({0.25 / kz, R / 64, p.t_span / 16});
    const double sig = R / 4;
    auto probe = [&](double px, double py1, double py2) {
        const Vec3 d(px - z[0], py1 - z[1], py2 - z[2]);
        const double r = d.norm();
        if (r >= R) return cplx(0, 0);
        const double env = std::exp(-r * r / (2 * sig * sig)) * smooth_step_down((r - 0.8 * R) / (0.2 * R));
        return env * std::exp(cplx(0, zeta.dot(d)));
    };
    cplx total = 0.0;
    for (int j = 0; j < n_omega; ++j) {
        const double th = 2 * pi * j / n_omega;
        p.omega = Vec2(std::cos(th), std::sin(th));
        const double nu = cutoff_nu(cs, m, y, p.omega);
        for (int i = 0; i < spec.n_lambda; ++i) {
            const double s = kappa * ln[i];
            const double w = chi_eval(cs, s, nu) / x * kappa * x * lw[i] * 2 * pi / n_omega;
            if (w == 0.0) continue;
            p.lambda = s * x;
            cplx acc = 0.0;
            march(m, p, ExitRule{}, [&](double a, double b, double c, double wt) { acc += wt * probe(a, b, c); });
            total += w * acc;
        }
    }
    return kz * total;
}

}  // namespace georay
