#pragma once

#include "georay/field.hpp"
#include "georay/geodesic.hpp"

#include <string>
#include <vector>

namespace georay {

struct RaySpec {
    double kappa = 1.0;   // |lambda| <= kappa x
    double delta0 = 0.5;  // half-width of the parameter interval
    double h = 0.5 / 256;
    int n_lambda = 9;
    int n_omega = 16;
};

// Gauss-Legendre nodes and weights on [-1, 1] (Golub-Welsch).
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

struct RayGrid {
    std::vector<Vec3> base;              // (x, y1, y2), x >= x_floor
    std::vector<std::size_t> base_node;  // grid index of each base point
    std::vector<double> lam_nodes, lam_weights;  // reference nodes on [-1, 1]
    std::vector<double> omega_angles, omega_weights;
    double kappa = 1.0;
    double t_span = 0.5;
    double h = 0.5 / 256;

    std::size_t n_base() const { return base.size(); }
    int n_lambda() const { return static_cast<int>(lam_nodes.size()); }
    int n_omega() const { return static_cast<int>(omega_angles.size()); }
    std::size_t size() const { return n_base() * n_lambda() * n_omega(); }
    std::size_t index(std::size_t b, int i, int j) const { return (b * n_lambda() + i) * n_omega() + j; }

    double lambda(std::size_t b, int i) const { return kappa * base[b][0] * lam_nodes[i]; }
    double lambda_weight(std::size_t b, int i) const { return kappa * base[b][0] * lam_weights[i]; }
    Vec2 omega(int j) const { return Vec2(std::cos(omega_angles[j]), std::sin(omega_angles[j])); }
    RayParams params(std::size_t b, int i, int j) const;
    // Partner ray tracing the same curve backwards: (-lambda, -omega).
    // Returns -1 when the node sets are not symmetric.
    int lambda_partner(int i) const { return n_lambda() - 1 - i; }
    int omega_partner(int j) const { return n_omega() % 2 == 0 ? (j + n_omega() / 2) % n_omega() : -1; }
};

// Base points are the grid nodes with x >= x_floor.
RayGrid make_ray_grid(const GridBox& box, double x_floor, const RaySpec& spec);

struct XRayData {
    std::size_t n_base = 0;
    int n_lambda = 0;
    int n_omega = 0;
    double kappa = 0.0, t_span = 0.0, h = 0.0;
    std::vector<double> v;  // base-major, then lambda, then omega

    bool matches(const RayGrid& rg) const;
};

// "georay-xray v1 n_base n_lambda n_omega kappa t_span h\n" + raw LE float64.
void write_xray(const std::string& path, const XRayData& d);
XRayData read_xray(const std::string& path);
void write_xray(std::ostream& os, const XRayData& d);
XRayData read_xray(std::istream& is, const std::string& name = "<stream>");

// Bounding box of the nonzero values of f, padded by one cell; rays leaving
// it for good stop contributing.
ExitRule support_exit_rule(const GridField& f);

template <class Fn>
double xray_single(const MetricModel& m, const Fn& f, const RayParams& p, const ExitRule& ex = ExitRule{}) {
    double s = 0.0;
    march(m, p, ex, [&](double x, double y1, double y2, double w) { s += w * f(Vec3(x, y1, y2)); });
    return s;
}

double xray_single(const MetricModel& m, const GridField& f, const RayParams& p);

XRayData xray_batch(const MetricModel& m, const GridField& f, const RayGrid& rg);

// Single-ray diagnostics: t, x, y1, y2, xi, eta1, eta2.
void write_ray_csv(const std::string& path, const RayPath& path_data);

}  // namespace georay
