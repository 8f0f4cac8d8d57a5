#include "georay/normal_op.hpp"
#include "georay/phantom.hpp"
#include "georay/simd.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace georay {

std::string to_string(CutoffMode m) { return m == CutoffMode::constant_nu ? "constant_nu" : "alpha_matched"; }

CutoffMode cutoff_mode_from_string(const std::string& s) {
    if (s == "constant_nu") return CutoffMode::constant_nu;
    if (s == "alpha_matched") return CutoffMode::alpha_matched;
    throw ValidationError("unknown cutoff mode '" + s + "' (expected constant_nu or alpha_matched)");
}

double chi_eval(const CutoffSpec& cs, double s, double nu) {
    const double a = std::abs(s);
    if (!cs.truncate) return cs.amplitude * std::exp(-s * s / (2 * nu));
    const double smax = cutoff_s_max(cs, nu);
    if (a >= smax) return 0.0;
    double v = cs.amplitude * std::exp(-s * s / (2 * nu));
    if (cs.taper > 0) {
        const double start = (1.0 - cs.taper) * smax;
        if (a > start) v *= smooth_step_down((a - start) / (cs.taper * smax));
    }
    return v;
}

double cutoff_nu(const CutoffSpec& cs, const MetricModel& m, const Vec2& y, const Vec2& omega) {
    if (cs.mode == CutoffMode::constant_nu) return cs.nu;
    const double a = alpha_eval(m, 0.0, y, omega);
    if (!(a > 0)) {
        std::ostringstream os;
        os << "alpha_matched cutoff needs alpha > 0; alpha(0, (" << y[0] << ", " << y[1] << "), omega) = " << a;
        throw DomainError(os.str());
    }
    return a / cs.F;
}

double chi_eval(const CutoffSpec& cs, double s, const MetricModel& m, const Vec2& y, const Vec2& omega) {
    return chi_eval(cs, s, cutoff_nu(cs, m, y, omega));
}

ConjugatedOp::ConjugatedOp(MetricPtr metric, const GridBox& box, double x_floor, const RaySpec& rays,
                           const CutoffSpec& cutoff, double F)
    : metric_(std::move(metric)), box_(box), x_floor_(x_floor), cs_(cutoff), F_(F) {
    if (!(F_ > 0)) throw ValidationError("F must be > 0 for the conjugated operator");
    if (!(x_floor_ > 0)) throw ValidationError("x_floor must be > 0");
    if (cs_.mode == CutoffMode::constant_nu && !(cs_.nu > 0)) throw ValidationError("cutoff.nu must be > 0");
    rg_ = make_ray_grid(box_, x_floor_, rays);
    wts_.assign(rg_.size(), 0.0);
    for (std::size_t b = 0; b < rg_.n_base(); ++b) {
        const double x = rg_.base[b][0];
        const Vec2 y(rg_.base[b][1], rg_.base[b][2]);
        for (int j = 0; j < rg_.n_omega(); ++j) {
            const double nu = cutoff_nu(cs_, *metric_, y, rg_.omega(j));
            for (int i = 0; i < rg_.n_lambda(); ++i) {
                const double s = rg_.kappa * rg_.lam_nodes[i];
                wts_[rg_.index(b, i, j)] =
                    chi_eval(cs_, s, nu) / x * rg_.lambda_weight(b, i) * rg_.omega_weights[j];
            }
        }
    }
}

double ConjugatedOp::row_scale(std::size_t b) const {
    const double x = rg_.base[b][0];
    return std::exp(-F_ / x) / x;
}

namespace {

// Visits each distinct curve once with the summed weight of all rays tracing it.
template <class Fn>
void for_each_curve(const ConjugatedOp& op, std::size_t b, Fn&& fn) {
    const RayGrid& rg = op.rays();
    const int nl = rg.n_lambda(), nw = rg.n_omega();
    const bool paired = nw % 2 == 0;
    for (int j = 0; j < (paired ? nw / 2 : nw); ++j)
        for (int i = 0; i < nl; ++i) {
            double w = op.ray_weight(b, i, j);
            if (paired) w += op.ray_weight(b, rg.lambda_partner(i), rg.omega_partner(j));
            if (w == 0.0) continue;
            fn(rg.params(b, i, j), w);
        }
}

}  // namespace

GridField ConjugatedOp::apply_A(const GridField& f) const { return apply_A_rows(f, {}); }

GridField ConjugatedOp::apply_A_rows(const GridField& f, const std::vector<std::size_t>& rows) const {
    if (!(f.box() == box_)) throw ValidationError("apply_A: field grid differs from the operator grid");
    GridField out(box_);
    const ExitRule ex = support_exit_rule(f);
    if (std::isinf(ex.x_exit) && ex.x_exit < 0) return out;
    const long nb = static_cast<long>(rows.empty() ? rg_.n_base() : rows.size());
#pragma omp parallel for schedule(dynamic, 8)
    for (long r = 0; r < nb; ++r) {
        const std::size_t b = rows.empty() ? static_cast<std::size_t>(r) : rows[r];
        double s = 0.0;
        for_each_curve(*this, b, [&](const RayParams& p, double w) { s += w * xray_single(*metric_, f, p, ex); });
        out[rg_.base_node[b]] = s;
    }
    return out;
}

GridField ConjugatedOp::apply_B(const GridField& g) const {
    if (!(g.box() == box_)) throw ValidationError("apply_B: field grid differs from the operator grid");
    GridField w(box_);
    for (std::size_t idx = 0; idx < box_.size(); ++idx) {
        if (g[idx] == 0.0) continue;
        const double x = box_.coord(0, box_.unflatten(idx)[0]);
        const double v = x > 0 ? std::exp(F_ / x) * g[idx] : std::numeric_limits<double>::infinity();
        if (!std::isfinite(v)) {
            std::ostringstream os;
            os << "apply_B: weight e^{F/x} overflows at x = " << x << " (F = " << F_ << ")";
            throw NumericalError(os.str());
        }
        w[idx] = v;
    }
    GridField a = apply_A(w);
    for (std::size_t b = 0; b < rg_.n_base(); ++b) a[rg_.base_node[b]] *= row_scale(b);
    return a;
}

GridField ConjugatedOp::average(const XRayData& d) const {
    if (!d.matches(rg_)) throw ValidationError("x-ray data dimensions do not match the configured ray grid");
    GridField out(box_);
    for (std::size_t b = 0; b < rg_.n_base(); ++b) {
        double s = 0.0;
        for (int i = 0; i < rg_.n_lambda(); ++i)
            for (int j = 0; j < rg_.n_omega(); ++j) s += ray_weight(b, i, j) * d.v[rg_.index(b, i, j)];
        out[rg_.base_node[b]] = s;
    }
    return out;
}

GridField ConjugatedOp::data_to_rhs(const XRayData& d) const {
    GridField g = average(d);
    for (std::size_t b = 0; b < rg_.n_base(); ++b) g[rg_.base_node[b]] *= row_scale(b);
    return g;
}

std::vector<std::size_t> region_nodes(const GridBox& box, const SupportRegion& K) {
    std::vector<std::size_t> out;
    for (std::size_t idx = 0; idx < box.size(); ++idx)
        if (K.contains(box.node(idx))) out.push_back(idx);
    return out;
}

SparseB assemble_sparse(const ConjugatedOp& op, const SupportRegion& K, const std::vector<std::size_t>& row_subset) {
    const GridBox& box = op.box();
    const RayGrid& rg = op.rays();
    SparseB S;
    S.box_ = box;
    S.col_nodes_ = region_nodes(box, K);
    if (S.col_nodes_.empty()) throw ValidationError("support region K contains no grid nodes");
    if (S.col_nodes_.size() >= (1u << 31)) throw ValidationError("too many columns");
    std::vector<std::int64_t> col_of(box.size(), -1);
    for (std::size_t c = 0; c < S.col_nodes_.size(); ++c) col_of[S.col_nodes_[c]] = static_cast<std::int64_t>(c);
    for (std::size_t c : S.col_nodes_) {
        const double x = box.coord(0, box.unflatten(c)[0]);
        if (!(x > 0)) throw ValidationError("support region K must lie in x > 0");
        S.cscale_.push_back(std::exp(op.F() / x));
    }

    std::vector<std::size_t> rows = row_subset;
    if (rows.empty()) {
        rows.resize(rg.n_base());
        for (std::size_t b = 0; b < rows.size(); ++b) rows[b] = b;
    }

    int lo[3] = {box.n[0], box.n[1], box.n[2]}, hi[3] = {-1, -1, -1};
    for (std::size_t c : S.col_nodes_) {
        const auto ijk = box.unflatten(c);
        for (int a = 0; a < 3; ++a) {
            lo[a] = std::min(lo[a], ijk[a]);
            hi[a] = std::max(hi[a], ijk[a]);
        }
    }
    ExitRule ex;
    ex.x_exit = box.coord(0, hi[0] + 1);
    for (int a = 1; a < 3; ++a) {
        ex.y_lo[a - 1] = box.coord(a, lo[a] - 1);
        ex.y_hi[a - 1] = box.coord(a, hi[a] + 1);
    }

    const std::size_t nr = rows.size();
    std::vector<std::vector<std::pair<std::uint32_t, double>>> row_data(nr);
    const std::size_t n2 = box.n[2], n12 = static_cast<std::size_t>(box.n[1]) * n2;
    const std::size_t nc = S.col_nodes_.size();

#pragma omp parallel
    {
        std::vector<double> acc(nc, 0.0);
        std::vector<std::uint32_t> touched;
#pragma omp for schedule(dynamic, 4)
        for (long r = 0; r < static_cast<long>(nr); ++r) {
            const std::size_t b = rows[r];
            touched.clear();
            for_each_curve(op, b, [&](const RayParams& p, double wr) {
                march(op.metric(), p, ex, [&](double x, double y1, double y2, double wt) {
                    const double z[3] = {x, y1, y2};
                    int i0[3];
                    double t[3];
                    for (int a = 0; a < 3; ++a) {
                        const double s = (z[a] - box.lo[a]) / box.d[a];
                        if (!(s >= 0.0) || s > box.n[a] - 1) return;
                        int i = static_cast<int>(s);
                        if (i > box.n[a] - 2) i = box.n[a] - 2;
                        i0[a] = i;
                        t[a] = s - i;
                    }
                    const std::size_t base = box.index(i0[0], i0[1], i0[2]);
                    const double w = wr * wt;
                    for (int corner = 0; corner < 8; ++corner) {
                        const int cx = corner >> 2, cy = (corner >> 1) & 1, cz = corner & 1;
                        const std::size_t node = base + cx * n12 + cy * n2 + cz;
                        const std::int64_t c = col_of[node];
                        if (c < 0) continue;
                        const double cw = (cx ? t[0] : 1 - t[0]) * (cy ? t[1] : 1 - t[1]) * (cz ? t[2] : 1 - t[2]);
                        if (cw == 0.0) continue;
                        if (acc[c] == 0.0) touched.push_back(static_cast<std::uint32_t>(c));
                        acc[c] += w * cw;
                    }
                });
            });
            std::sort(touched.begin(), touched.end());
            touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
            auto& rd = row_data[r];
            rd.reserve(touched.size());
            for (std::uint32_t c : touched) {
                if (acc[c] != 0.0) rd.emplace_back(c, acc[c]);
                acc[c] = 0.0;
            }
        }
    }

    S.row_ptr_.assign(1, 0);
    for (std::size_t r = 0; r < nr; ++r) {
        for (const auto& [c, v] : row_data[r]) {
            S.col_.push_back(c);
            S.val_.push_back(v);
        }
        std::vector<std::pair<std::uint32_t, double>>().swap(row_data[r]);
        S.row_ptr_.push_back(S.col_.size());
        S.row_nodes_.push_back(rg.base_node[rows[r]]);
        S.rs_.push_back(op.row_scale(rows[r]));
    }
    return S;
}

void SparseB::apply_A(const double* f, double* out) const {
    simd::spmv_csr(rows(), row_ptr_.data(), col_.data(), val_.data(), f, out);
}

void SparseB::apply(const double* f, double* out) const {
    std::vector<double> w(cols());
    for (std::size_t c = 0; c < cols(); ++c) w[c] = cscale_[c] * f[c];
    simd::spmv_csr(rows(), row_ptr_.data(), col_.data(), val_.data(), w.data(), out);
    for (std::size_t r = 0; r < rows(); ++r) out[r] *= rs_[r];
}

void SparseB::apply_t(const double* g, double* out) const {
    std::vector<double> a(rows());
    for (std::size_t r = 0; r < rows(); ++r) a[r] = rs_[r] * g[r];
    std::fill(out, out + cols(), 0.0);
    simd::spmv_csr_t(rows(), row_ptr_.data(), col_.data(), val_.data(), a.data(), out);
    for (std::size_t c = 0; c < cols(); ++c) out[c] *= cscale_[c];
}

Eigen::MatrixXd SparseB::dense() const {
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows()), static_cast<Eigen::Index>(cols()));
    for (std::size_t r = 0; r < rows(); ++r)
        for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) M(r, col_[k]) = rs_[r] * val_[k] * cscale_[col_[k]];
    return M;
}

std::vector<std::pair<std::size_t, double>> SparseB::row(std::size_t r) const {
    std::vector<std::pair<std::size_t, double>> out;
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
        out.emplace_back(col_nodes_[col_[k]], rs_[r] * val_[k] * cscale_[col_[k]]);
    return out;
}

std::vector<double> SparseB::gather_cols(const GridField& f) const {
    std::vector<double> v(cols());
    for (std::size_t c = 0; c < cols(); ++c) v[c] = f[col_nodes_[c]];
    return v;
}

GridField SparseB::scatter_cols(const std::vector<double>& v) const {
    GridField f(box_);
    for (std::size_t c = 0; c < cols(); ++c) f[col_nodes_[c]] = v[c];
    return f;
}

std::vector<double> SparseB::gather_rows(const GridField& g) const {
    std::vector<double> v(rows());
    for (std::size_t r = 0; r < rows(); ++r) v[r] = g[row_nodes_[r]];
    return v;
}

GridField SparseB::scatter_rows(const std::vector<double>& v) const {
    GridField f(box_);
    for (std::size_t r = 0; r < rows(); ++r) f[row_nodes_[r]] = v[r];
    return f;
}

Eigen::MatrixXd assemble_dense(const ConjugatedOp& op, const SupportRegion& K, std::size_t max_cols) {
    const std::size_t n = region_nodes(op.box(), K).size();
    if (n > max_cols) {
        std::ostringstream os;
        os << "assemble_dense: " << n << " columns exceed the cap of " << max_cols
           << "; coarsen each axis by a factor of at least " << std::ceil(std::cbrt(double(n) / max_cols) * 100) / 100;
        throw ValidationError(os.str());
    }
    return assemble_sparse(op, K).dense();
}

}  // namespace georay
