#pragma once

#include "georay/xray.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace georay {

enum class CutoffMode { constant_nu, alpha_matched };

std::string to_string(CutoffMode m);
CutoffMode cutoff_mode_from_string(const std::string& s);

// chi(s) = amplitude exp(-s^2 / 2 nu) with a quintic taper over the last
// `taper` fraction of [0, s_max], s_max = s_max_sigmas sqrt(nu).
struct CutoffSpec {
    CutoffMode mode = CutoffMode::alpha_matched;
    double nu = 1.0 / 16;  // constant_nu
    double F = 1.0;        // alpha_matched: nu = alpha(0, y, 0, omega) / F
    double s_max_sigmas = 4.0;
    double taper = 0.1;
    double amplitude = 1.0;
    bool truncate = true;  // false: plain Gaussian (symbol oracles only)
};

double chi_eval(const CutoffSpec& cs, double s, double nu);
double cutoff_nu(const CutoffSpec& cs, const MetricModel& m, const Vec2& y, const Vec2& omega);
double chi_eval(const CutoffSpec& cs, double s, const MetricModel& m, const Vec2& y, const Vec2& omega);
inline double cutoff_s_max(const CutoffSpec& cs, double nu) {
    return cs.truncate ? cs.s_max_sigmas * std::sqrt(nu) : std::numeric_limits<double>::infinity();
}

// Axis-aligned region in adapted coordinates (support prior K).
struct SupportRegion {
    double x_lo = 0.0, x_hi = 0.0;
    Vec2 y_lo = Vec2::Zero(), y_hi = Vec2::Zero();
    bool contains(const Vec3& z, double tol = 1e-12) const {
        return z[0] >= x_lo - tol && z[0] <= x_hi + tol && z[1] >= y_lo[0] - tol && z[1] <= y_hi[0] + tol &&
               z[2] >= y_lo[1] - tol && z[2] <= y_hi[1] + tol;
    }
};

class ConjugatedOp {
public:
    ConjugatedOp(MetricPtr metric, const GridBox& box, double x_floor, const RaySpec& rays, const CutoffSpec& cutoff,
                 double F);

    const MetricModel& metric() const { return *metric_; }
    MetricPtr metric_ptr() const { return metric_; }
    const GridBox& box() const { return box_; }
    const RayGrid& rays() const { return rg_; }
    const CutoffSpec& cutoff() const { return cs_; }
    double F() const { return F_; }
    double x_floor() const { return x_floor_; }

    // x^{-1} chi(lambda/x) w_lambda w_omega
    double ray_weight(std::size_t b, int i, int j) const { return wts_[rg_.index(b, i, j)]; }
    // x^{-1} e^{-F/x} at base point b
    double row_scale(std::size_t b) const;

    GridField apply_A(const GridField& f) const;  // matrix-free, rays traced on demand
    // A f at the listed base points only (empty = all); zero elsewhere.
    GridField apply_A_rows(const GridField& f, const std::vector<std::size_t>& rows) const;
    GridField apply_B(const GridField& g) const;
    // Average of data with the cutoff weights, then conjugation: the right-hand
    // side g of B f~ = g, on base points (zero below x_floor).
    GridField data_to_rhs(const XRayData& d) const;
    GridField average(const XRayData& d) const;  // L applied to data (A f when d = I f)

private:
    MetricPtr metric_;
    GridBox box_;
    double x_floor_;
    RayGrid rg_;
    CutoffSpec cs_;
    double F_;
    std::vector<double> wts_;
};

// Rectangular discretization of B: rows = ray-grid base points, columns =
// grid nodes inside K. Stored as A-values with diagonal conjugation scales.
class SparseB {
public:
    std::size_t rows() const { return row_ptr_.size() - 1; }
    std::size_t cols() const { return col_nodes_.size(); }
    std::size_t nnz() const { return val_.size(); }
    const std::vector<std::size_t>& col_nodes() const { return col_nodes_; }
    const std::vector<std::size_t>& row_nodes() const { return row_nodes_; }
    const GridBox& box() const { return box_; }
    const std::vector<double>& row_scale() const { return rs_; }
    const std::vector<double>& col_scale() const { return cscale_; }

    void apply(const double* f, double* out) const;    // B f, f on columns
    void apply_t(const double* g, double* out) const;  // B^T g
    void apply_A(const double* f, double* out) const;  // unconjugated A restricted to K
    Eigen::MatrixXd dense() const;

    // Field <-> vector helpers
    std::vector<double> gather_cols(const GridField& f) const;
    GridField scatter_cols(const std::vector<double>& v) const;
    std::vector<double> gather_rows(const GridField& g) const;
    GridField scatter_rows(const std::vector<double>& v) const;

    // Row entries as (grid node, B value) for kernel probes.
    std::vector<std::pair<std::size_t, double>> row(std::size_t r) const;

    friend SparseB assemble_sparse(const ConjugatedOp& op, const SupportRegion& K,
                                   const std::vector<std::size_t>& row_subset);

private:
    GridBox box_;
    std::vector<std::size_t> row_nodes_, col_nodes_;
    std::vector<std::size_t> row_ptr_{0};
    std::vector<std::uint32_t> col_;
    std::vector<double> val_;  // A entries
    std::vector<double> rs_;   // x^{-1} e^{-F/x} per row
    std::vector<double> cscale_;  // e^{F/x} per column
};

// row_subset: base-point indices to assemble (empty = all).
SparseB assemble_sparse(const ConjugatedOp& op, const SupportRegion& K,
                        const std::vector<std::size_t>& row_subset = {});

// Dense B on K-supported columns; refuses more than max_cols columns.
Eigen::MatrixXd assemble_dense(const ConjugatedOp& op, const SupportRegion& K, std::size_t max_cols = 20000);

// K-columns of a region on a box: grid node indices inside K.
std::vector<std::size_t> region_nodes(const GridBox& box, const SupportRegion& K);

}  // namespace georay
