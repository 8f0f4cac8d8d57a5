#pragma once

#include "georay/metric.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <vector>

namespace georay {

struct RayParams {
    double x = 0.0;
    Vec2 y = Vec2::Zero();
    double lambda = 0.0;
    Vec2 omega = Vec2(1.0, 0.0);
    double t_span = 0.5;
    double h = 0.5 / 256;
};

struct RayPath {
    std::vector<double> t;
    std::vector<Vec3> z;     // (x, y1, y2)
    std::vector<Vec3> zeta;  // (xi, eta1, eta2)
    double energy0 = 0.0;
    double max_rel_drift = 0.0;
    bool truncated = false;  // left the validity region before |t| = t_span
};

// Phase-space state (x, y1, y2, xi, eta1, eta2).
using PhaseState = std::array<double, 6>;

PhaseState initial_state(const MetricModel& m, const RayParams& p);
void hamilton_rhs(const MetricModel& m, const PhaseState& s, PhaseState& ds);
// Classical RK4 step; k1 = hamilton_rhs(s) supplied by the caller.
void rk4_step(const MetricModel& m, PhaseState& s, const PhaseState& k1, double h);
double phase_energy(const MetricModel& m, const PhaseState& s);

void validate_ray_params(const RayParams& p);

// Full trace over [-t_span, t_span]; samples every h.
RayPath trace(const MetricModel& m, const RayParams& p);

// Early termination for integrands supported in a box: stop once the ray is
// beyond the box face and moving away from it.
struct ExitRule {
    double x_exit = std::numeric_limits<double>::infinity();
    double y_lo[2] = {-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    double y_hi[2] = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
};

enum MarchFlags : unsigned { march_ok = 0u, march_truncated = 1u, march_exited = 2u };

// Visits (x, y1, y2, w) at the trapezoid nodes t = k h, |k| <= N, with w the
// trapezoid weight. Returns MarchFlags. Throws NumericalError on energy drift
// above 1e-6.
template <class Visit>
unsigned march(const MetricModel& m, const RayParams& p, const ExitRule& ex, Visit&& visit) {
    const int n = static_cast<int>(std::floor(p.t_span / p.h + 1e-9));
    const double h = p.h;
    unsigned flags = march_ok;
    const PhaseState s0 = initial_state(m, p);
    const double e0 = phase_energy(m, s0);
    visit(s0[0], s0[1], s0[2], n == 0 ? 0.0 : h);
    for (int dir = 1; dir >= -1; dir -= 2) {
        PhaseState s = s0, d;
        const double hs = dir * h;
        bool stepped = false;
        for (int k = 1; k <= n; ++k) {
            hamilton_rhs(m, s, d);
            if ((s[0] > ex.x_exit && d[0] * dir > 0) || (s[1] > ex.y_hi[0] && d[1] * dir > 0) ||
                (s[1] < ex.y_lo[0] && d[1] * dir < 0) || (s[2] > ex.y_hi[1] && d[2] * dir > 0) ||
                (s[2] < ex.y_lo[1] && d[2] * dir < 0)) {
                flags |= march_exited;
                break;
            }
            rk4_step(m, s, d, hs);
            stepped = true;
            if (!m.inside(s[0], Vec2(s[1], s[2]))) {
                flags |= march_truncated;
                break;
            }
            visit(s[0], s[1], s[2], k == n ? 0.5 * h : h);
        }
        if (stepped && !(flags & march_truncated)) {
            const double drift = std::abs(phase_energy(m, s) - e0) / e0;
            if (drift > 1e-6) throw NumericalError("ray energy drift above 1e-6; reduce the step h");
        }
    }
    return flags;
}

struct ConvexityReport {
    double min_x = 0.0;
    double bound = 0.0;
    bool ok = false;
};

// C is the configured lower bound for alpha on the working region.
ConvexityReport verify_convexity_bound(const MetricModel& m, double C, const RayParams& p);

// Escape time: largest |t| at which the traced curve is still below x0.
double escape_time(const MetricModel& m, const RayParams& p, double x0);

struct ScatteringCoords {
    double X = 0.0;
    Vec2 Y = Vec2::Zero();
};
// X = (x' - x)/x^2, Y = (y' - y)/x for z = (x, y), z' = (x', y').
ScatteringCoords scattering_coords(const Vec3& z, const Vec3& z_prime);

// Largest delta0 <= delta_max such that tangent rays from the sample base
// points stay inside the box {x_lo <= x <= x_hi, |y_k| <= y_half} for |t| < delta0.
double choose_delta0(const MetricModel& m, const std::vector<Vec3>& base, double x_lo, double x_hi, double y_half,
                     double delta_max = 0.5, int n_dirs = 8);

}  // namespace georay
