#include "georay/setup.hpp"
#include "georay/chart.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace georay {

namespace {

void require(bool ok, const std::string& key, const std::string& what) {
    if (!ok) throw ValidationError("config key '" + key + "': " + what);
}

}  // namespace

SlabConfig slab_from_config(const RunConfig& cfg) {
    SlabConfig s;
    const std::string kind = cfg.str("metric.kind");
    if (kind == "euclidean") {
        s.kind = MetricKind::euclidean;
        s.profile = RadialProfile{cfg.real("metric.c0"), 0.0};
    } else if (kind == "radial_herglotz") {
        s.kind = MetricKind::radial_herglotz;
        s.profile = RadialProfile{cfg.real("metric.c0"), cfg.real("metric.c1")};
    } else {
        throw ValidationError("config key 'metric.kind': unknown metric '" + kind +
                              "' (expected euclidean or radial_herglotz)");
    }
    s.R = cfg.real("metric.R");
    require(s.R > 0, "metric.R", "must be > 0");
    require(s.profile.c0 > 0 && s.profile(s.R) > 0, "metric.c0", "sound speed must stay positive on the ball");
    // Herglotz: d/dr (r / c(r)) = c0 / c(r)^2 > 0 for c = c0 + c1 r, so positivity of c suffices.
    s.epsilon = cfg.real("chart.epsilon");
    require(s.epsilon >= 0 && s.epsilon < 1, "chart.epsilon", "must lie in [0, 1)");
    s.perturb_amplitude = cfg.real("metric.perturb_amplitude");
    require(std::abs(s.perturb_amplitude) < 0.5, "metric.perturb_amplitude", "must satisfy |a| < 0.5");
    s.perturb_width = cfg.real("metric.perturb_width");
    require(s.perturb_width > 0, "metric.perturb_width", "must be > 0");
    s.seed = static_cast<unsigned>(cfg.integer("run.seed"));

    const auto dims = cfg.integers("grid.dims");
    require(dims.size() == 3, "grid.dims", "expected three integers");
    for (int d : dims) require(d >= 4 && d <= 512, "grid.dims", "each entry must lie in [4, 512]");
    s.dims = {dims[0], dims[1], dims[2]};
    s.y_half = cfg.real("grid.y_half");
    require(s.y_half > 0, "grid.y_half", "must be > 0");
    s.x_floor_frac = cfg.real("grid.x_floor");
    require(s.x_floor_frac > 0 && s.x_floor_frac < 1, "grid.x_floor", "must lie in (0, 1)");
    s.K_x_hi_frac = cfg.real("support.x_hi");
    require(s.K_x_hi_frac > s.x_floor_frac && s.K_x_hi_frac <= 1, "support.x_hi", "must lie in (grid.x_floor, 1]");
    s.K_y_half = cfg.real("support.y_half");
    require(s.K_y_half > 0 && s.K_y_half <= s.y_half, "support.y_half", "must lie in (0, grid.y_half]");

    s.rays.kappa = cfg.real("ray.kappa");
    require(s.rays.kappa > 0, "ray.kappa", "must be > 0");
    s.rays.delta0 = cfg.real("ray.delta0");
    require(s.rays.delta0 > 0, "ray.delta0", "must be > 0");
    s.rays.h = cfg.real("ray.h");
    require(s.rays.h > 0 && s.rays.h <= s.rays.delta0 / 16 * (1 + 1e-12), "ray.h", "must lie in (0, delta0/16]");
    s.rays.n_lambda = cfg.integer("ray.n_lambda");
    require(s.rays.n_lambda >= 2 && s.rays.n_lambda <= 64, "ray.n_lambda", "must lie in [2, 64]");
    s.rays.n_omega = cfg.integer("ray.n_omega");
    require(s.rays.n_omega >= 4 && s.rays.n_omega <= 256, "ray.n_omega", "must lie in [4, 256]");

    s.cutoff.mode = cutoff_mode_from_string(cfg.str("cutoff.mode"));
    s.cutoff.nu = cfg.real("cutoff.nu");
    require(s.cutoff.nu > 0, "cutoff.nu", "must be > 0");
    s.cutoff.s_max_sigmas = cfg.real("cutoff.s_max");
    require(s.cutoff.s_max_sigmas > 0, "cutoff.s_max", "must be > 0");
    s.cutoff.taper = cfg.real("cutoff.taper");
    require(s.cutoff.taper >= 0 && s.cutoff.taper < 1, "cutoff.taper", "must lie in [0, 1)");
    s.F_over_c = cfg.real("cutoff.F_over_c");
    require(s.F_over_c > 0, "cutoff.F_over_c", "F must be > 0");
    return s;
}

SolveConfig solve_from_config(const RunConfig& cfg) {
    SolveConfig sc;
    sc.method = solve_method_from_string(cfg.str("solve.method"));
    sc.max_iter = cfg.integer("solve.max_iter");
    require(sc.max_iter >= 1, "solve.max_iter", "must be >= 1");
    sc.tol = cfg.real("solve.tol");
    require(sc.tol > 0 && sc.tol < 1, "solve.tol", "must lie in (0, 1)");
    sc.taper_low = cfg.real("solve.taper_low");
    require(sc.taper_low > 0 && sc.taper_low < 1, "solve.taper_low", "must lie in (0, 1)");
    sc.blocks = cfg.integer("solve.blocks");
    require(sc.blocks >= 1 && sc.blocks <= 8, "solve.blocks", "must lie in [1, 8]");
    sc.norm_r = cfg.real("solve.norm_r");
    sc.c_schedule = cfg.reals("chart.c_schedule");
    for (double c : sc.c_schedule) require(c > 0 && c < 1, "chart.c_schedule", "offsets must lie in (0, 1)");
    const double c = cfg.real("chart.c");
    require(c > 0 && c < 1, "chart.c", "must lie in (0, 1)");
    return sc;
}

PhantomSpec phantom_from_config(const RunConfig& cfg, double c) {
    PhantomSpec p;
    p.kind = phantom_kind_from_string(cfg.str("phantom.kind"));
    p.amplitude = cfg.real("phantom.amplitude");
    const auto cy = cfg.reals("phantom.center_y");
    require(cy.size() == 2, "phantom.center_y", "expected two numbers");
    p.center = Vec3(cfg.real("phantom.center_x") * c, cy[0], cy[1]);
    p.sigma = cfg.real("phantom.sigma");
    p.support = cfg.real("phantom.support");
    require(p.sigma > 0 && p.support > 0, "phantom.sigma", "sigma and support must be > 0");
    const auto r = cfg.reals("phantom.radii");
    require(r.size() == 3 && r[0] > 0 && r[1] > 0 && r[2] > 0, "phantom.radii", "expected three positive numbers");
    p.radii = Vec3(r[0] * c, r[1], r[2]);
    p.k = cfg.real("phantom.k");
    p.c = c;
    p.rho_c1 = cfg.real("phantom.rho_c1");
    p.rho_c2 = cfg.real("phantom.rho_c2");
    p.rho_w = cfg.real("phantom.rho_w");
    require(p.rho_w > 0, "phantom.rho_w", "must be > 0");
    p.lateral = cfg.real("phantom.lateral");
    require(p.lateral > 0, "phantom.lateral", "must be > 0");
    p.amplitude2 = cfg.real("phantom.amplitude2");
    return p;
}

MetricPtr slab_metric(const SlabConfig& s, double c) {
    if (s.epsilon == 0.0) return make_radial_chart(s.profile, s.R, c);
    // Artificial boundary bent by epsilon: tabulated flow-out chart.
    const RadialProfile prof = s.profile;
    AmbientSpeed speed = [prof](const Vec3& u) { return prof(u.norm()); };
    AdaptedChartBox box;
    box.x_min = -0.25 * c;
    box.x_max = 1.25 * c;
    box.y_half = 1.5 * s.y_half;
    box.dims = {std::max(9, s.dims[0]), std::max(17, s.dims[1] + 1), std::max(17, s.dims[2] + 1)};
    return build_adapted_chart(speed, ball_boundary(s.R, s.epsilon, c), box);
}

LocalProblem make_slab_problem(const SlabConfig& s, double c) {
    if (!(c > 0 && c < s.R)) throw ValidationError("chart offset c must lie in (0, R)");
    LocalProblem p;
    p.c = c;
    p.metric = slab_metric(s, c);
    p.box = GridBox::from_extent(s.dims, {0.0, -s.y_half, -s.y_half}, {c, s.y_half, s.y_half});
    p.x_floor = s.x_floor_frac * c;
    p.rays = s.rays;
    p.cutoff = s.cutoff;
    p.F = s.F_over_c * c;
    p.cutoff.F = p.F;
    // K snapped to grid nodes so it is a node box.
    const double dx = p.box.d[0], dy = p.box.d[1];
    const double eps = 1e-9;
    p.K.x_lo = std::ceil(p.x_floor / dx - eps) * dx;
    p.K.x_hi = std::floor(s.K_x_hi_frac * c / dx + eps) * dx;
    const double ky = std::floor((s.K_y_half + s.y_half) / dy + eps) * dy - s.y_half;
    p.K.y_lo = Vec2(-ky, -ky);
    p.K.y_hi = Vec2(ky, ky);
    if (p.K.x_hi < p.K.x_lo) throw ValidationError("support region K contains no grid nodes; refine grid.dims");
    return p;
}

MetricPtr data_metric(const SlabConfig& s, const LocalProblem& p) {
    if (s.perturb_amplitude == 0.0) return p.metric;
    std::mt19937_64 rng(s.seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const Vec3 centre(p.K.x_lo + (p.K.x_hi - p.K.x_lo) * u(rng), p.K.y_lo[0] + (p.K.y_hi[0] - p.K.y_lo[0]) * u(rng),
                      p.K.y_lo[1] + (p.K.y_hi[1] - p.K.y_lo[1]) * u(rng));
    return perturb_metric(p.metric, s.perturb_amplitude, centre, s.perturb_width);
}

}  // namespace georay
