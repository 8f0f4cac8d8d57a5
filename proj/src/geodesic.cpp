#include "georay/geodesic.hpp"

#include <algorithm>
#include <sstream>

namespace georay {

void validate_ray_params(const RayParams& p) {
    if (std::abs(p.omega.norm() - 1.0) > 1e-12) throw ValidationError("ray omega must be a unit vector");
    if (!(p.t_span > 0.0) || !(p.h > 0.0)) throw ValidationError("ray t_span and h must be positive");
    if (p.h > p.t_span / 16 * (1 + 1e-12)) throw ValidationError("ray step h must be <= t_span/16");
}

PhaseState initial_state(const MetricModel& m, const RayParams& p) {
    const MetricCoeffs c = m.checked(p.x, p.y);
    // 2 diag(F, H) zeta = (lambda, omega)
    const Vec2 eta = 0.5 * c.H.ldlt().solve(p.omega);
    return {p.x, p.y[0], p.y[1], 0.5 * p.lambda / c.F, eta[0], eta[1]};
}

void hamilton_rhs(const MetricModel& m, const PhaseState& s, PhaseState& ds) {
    const MetricCoeffs c = m.coeffs(s[0], Vec2(s[1], s[2]));
    const double xi = s[3];
    const Vec2 eta(s[4], s[5]);
    const Vec2 hv = c.H * eta;
    ds[0] = 2 * c.F * xi;
    ds[1] = 2 * hv[0];
    ds[2] = 2 * hv[1];
    const double xi2 = xi * xi;
    ds[3] = -(c.F_x * xi2 + eta.dot(c.H_x * eta));
    ds[4] = -(c.F_y[0] * xi2 + eta.dot(c.H_y[0] * eta));
    ds[5] = -(c.F_y[1] * xi2 + eta.dot(c.H_y[1] * eta));
}

void rk4_step(const MetricModel& m, PhaseState& s, const PhaseState& k1, double h) {
    PhaseState k2, k3, k4, tmp;
    for (int i = 0; i < 6; ++i) tmp[i] = s[i] + 0.5 * h * k1[i];
    hamilton_rhs(m, tmp, k2);
    for (int i = 0; i < 6; ++i) tmp[i] = s[i] + 0.5 * h * k2[i];
    hamilton_rhs(m, tmp, k3);
    for (int i = 0; i < 6; ++i) tmp[i] = s[i] + h * k3[i];
    hamilton_rhs(m, tmp, k4);
    for (int i = 0; i < 6; ++i) s[i] += h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
}

double phase_energy(const MetricModel& m, const PhaseState& s) {
    const MetricCoeffs c = m.coeffs(s[0], Vec2(s[1], s[2]));
    const Vec2 eta(s[4], s[5]);
    return c.F * s[3] * s[3] + eta.dot(c.H * eta);
}

RayPath trace(const MetricModel& m, const RayParams& p) {
    validate_ray_params(p);
    const int n = static_cast<int>(std::floor(p.t_span / p.h + 1e-9));
    const PhaseState s0 = initial_state(m, p);
    RayPath path;
    path.energy0 = phase_energy(m, s0);

    std::vector<PhaseState> fwd{s0}, bwd;
    auto run = [&](int dir, std::vector<PhaseState>& out) {
        PhaseState s = s0, d;
        for (int k = 1; k <= n; ++k) {
            hamilton_rhs(m, s, d);
            rk4_step(m, s, d, dir * p.h);
            if (!m.inside(s[0], Vec2(s[1], s[2]))) {
                path.truncated = true;
                return;
            }
            out.push_back(s);
        }
    };
    run(1, fwd);
    run(-1, bwd);

    const std::size_t total = fwd.size() + bwd.size();
    path.t.reserve(total);
    path.z.reserve(total);
    path.zeta.reserve(total);
    auto push = [&](const PhaseState& s, double t) {
        path.t.push_back(t);
        path.z.emplace_back(s[0], s[1], s[2]);
        path.zeta.emplace_back(s[3], s[4], s[5]);
        const double drift = std::abs(phase_energy(m, s) - path.energy0) / path.energy0;
        path.max_rel_drift = std::max(path.max_rel_drift, drift);
    };
    for (std::size_t i = bwd.size(); i-- > 0;) push(bwd[i], -static_cast<double>(i + 1) * p.h);
    for (std::size_t i = 0; i < fwd.size(); ++i) push(fwd[i], static_cast<double>(i) * p.h);
    if (path.max_rel_drift > 1e-6) {
        std::ostringstream os;
        os << "ray energy drift " << path.max_rel_drift << " above 1e-6; reduce the step h";
        throw NumericalError(os.str());
    }
    return path;
}

ConvexityReport verify_convexity_bound(const MetricModel& m, double C, const RayParams& p) {
    if (!(C > 0.0)) throw ValidationError("convexity bound needs C > 0");
    const RayPath path = trace(m, p);
    ConvexityReport rep;
    rep.min_x = std::numeric_limits<double>::infinity();
    rep.bound = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < path.t.size(); ++i) {
        const double t = path.t[i];
        rep.min_x = std::min(rep.min_x, path.z[i][0]);
        const double rhs = 0.5 * C * (t + p.lambda / C) * (t + p.lambda / C) + (p.x - p.lambda * p.lambda / (2 * C));
        rep.bound = std::min(rep.bound, rhs);
    }
    rep.ok = rep.min_x >= rep.bound - 1e-6;
    return rep;
}

double escape_time(const MetricModel& m, const RayParams& p, double x0) {
    const RayPath path = trace(m, p);
    double te = 0.0;
    for (std::size_t i = 0; i < path.t.size(); ++i)
        if (path.z[i][0] < x0) te = std::max(te, std::abs(path.t[i]));
    return te;
}

ScatteringCoords scattering_coords(const Vec3& z, const Vec3& zp) {
    const double x = z[0];
    if (!(x > 0.0)) throw DomainError("scattering coordinates need x > 0");
    ScatteringCoords sc;
    sc.X = (zp[0] - x) / (x * x);
    sc.Y = Vec2(zp[1] - z[1], zp[2] - z[2]) / x;
    return sc;
}

double choose_delta0(const MetricModel& m, const std::vector<Vec3>& base, double x_lo, double x_hi, double y_half,
                     double delta_max, int n_dirs) {
    auto stays = [&](double delta) {
        for (const Vec3& b : base)
            for (int k = 0; k < n_dirs; ++k) {
                const double th = 2 * pi * k / n_dirs;
                RayParams p;
                p.x = b[0];
                p.y = Vec2(b[1], b[2]);
                p.omega = Vec2(std::cos(th), std::sin(th));
                p.t_span = delta;
                p.h = delta / 32;
                bool ok = true;
                ExitRule none;
                try {
                    const unsigned fl = march(m, p, none, [&](double x, double y1, double y2, double) {
                        if (x < x_lo || x > x_hi || std::abs(y1) > y_half || std::abs(y2) > y_half) ok = false;
                    });
                    if (fl & march_truncated) ok = false;
                } catch (const std::exception&) {
                    ok = false;
                }
                if (!ok) return false;
            }
        return true;
    };
    if (stays(delta_max)) return delta_max;
    double lo = 0.0, hi = delta_max;
    for (int it = 0; it < 30; ++it) {
        const double mid = 0.5 * (lo + hi);
        (stays(mid) ? lo : hi) = mid;
    }
    return lo;
}

}  // namespace georay
