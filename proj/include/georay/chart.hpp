#pragma once

#include "georay/metric.hpp"

#include <array>
#include <functional>

namespace georay {

// rho > 0 inside X; x~ = -rho - eps |z - p|^2; x_c = x~ + c.
struct BoundaryChart {
    Vec3 p = Vec3(0, 0, 1);
    std::function<double(const Vec3&)> rho;
    double epsilon = 0.0;
    double c = 0.0;

    double x_tilde(const Vec3& z) const { return -rho(z) - epsilon * (z - p).squaredNorm(); }
    double x_c(const Vec3& z) const { return x_tilde(z) + c; }
    Vec3 grad_x_c(const Vec3& z) const;
    Vec3 grad_rho(const Vec3& z) const;
};

// Ball of radius R about the origin, convexity point on the +z axis.
BoundaryChart ball_boundary(double R, double epsilon, double c);

struct BoundaryChartCheck {
    double x_tilde_at_p = 0.0;
    double grad_mismatch = 0.0;  // |grad x~(p) + grad rho(p)|
    bool ok = false;
};
BoundaryChartCheck check_boundary_chart(const BoundaryChart& b);

// Conformal ambient metric c(u)^{-2} |du|^2.
using AmbientSpeed = std::function<double(const Vec3&)>;

// Coordinates from the normal flow-out of {x_c = 0}; y are stereographic
// coordinates of the radial projection, scaled to arclength at |u| = |p|.
class AdaptedChart {
public:
    AdaptedChart(AmbientSpeed speed, BoundaryChart b, double flow_step = 1e-3);

    Vec3 surface_point(const Vec2& y) const;
    Vec3 map(double x, const Vec2& y) const;
    Vec3 flow_field(const Vec3& u) const;  // V = grad x_c / |grad x_c|^2
    // Full 3x3 metric in (x, y1, y2) from the flow map.
    Mat3 metric_matrix(double x, const Vec2& y) const;
    // Largest off-diagonal x-y entry of the dual metric.
    double dual_cross_term(double x, const Vec2& y) const;
    double jacobian(double x, const Vec2& y) const;

    const BoundaryChart& boundary() const { return b_; }

private:
    Vec3 dmap_dy(double x, const Vec2& y, int k) const;
    AmbientSpeed speed_;
    BoundaryChart b_;
    double step_;
    Mat3 rot_;  // e3 -> p/|p|
    double scale_;
};

struct AdaptedChartBox {
    double x_min = 0.0;
    double x_max = 0.1;
    double y_half = 0.2;
    std::array<int, 3> dims{9, 17, 17};
};

struct AdaptedChartReport {
    double max_cross_term = 0.0;
    double min_jacobian = 0.0;
};

// Tabulated block-diagonal model (tricubic interpolation of F and H).
MetricPtr build_adapted_chart(AmbientSpeed speed, const BoundaryChart& b, const AdaptedChartBox& box,
                              AdaptedChartReport* report = nullptr);

}  // namespace georay
