#pragma once

#include "georay/config.hpp"
#include "georay/inversion.hpp"
#include "georay/phantom.hpp"

#include <array>

namespace georay {

// Slab model: the sphere-adapted chart of a radial medium in a ball, grid box
// x in [0, c], |y_k| <= y_half. Lengths in x scale with c so the same
// configuration describes every offset of the small-c schedule.
struct SlabConfig {
    MetricKind kind = MetricKind::euclidean;
    RadialProfile profile{1.0, 0.0};
    double R = 1.0;
    double epsilon = 0.0;
    double perturb_amplitude = 0.0;
    double perturb_width = 0.15;
    unsigned seed = 0;
    std::array<int, 3> dims{16, 16, 16};
    double y_half = 0.5;
    double x_floor_frac = 0.25;
    double K_x_hi_frac = 0.9;
    double K_y_half = 0.25;
    RaySpec rays{1.0, 0.5, 0.5 / 64, 9, 16};
    CutoffSpec cutoff{CutoffMode::constant_nu, 1.0 / 16, 1.0, 4.0, 0.1, 1.0, true};
    double F_over_c = 2.0;
};

SlabConfig slab_from_config(const RunConfig& cfg);
SolveConfig solve_from_config(const RunConfig& cfg);
// Phantom with x lengths resolved against the offset c.
PhantomSpec phantom_from_config(const RunConfig& cfg, double c);

MetricPtr slab_metric(const SlabConfig& s, double c);
LocalProblem make_slab_problem(const SlabConfig& s, double c);
// Data metric: the slab metric with the configured conformal bump centred at a
// seed-dependent point of K (identity when perturb_amplitude = 0).
MetricPtr data_metric(const SlabConfig& s, const LocalProblem& p);

}  // namespace georay
