#include "georay/xray.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>

namespace georay {

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    if (n < 1) throw ValidationError("Gauss-Legendre order must be >= 1");
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        const double b = k / std::sqrt(4.0 * k * k - 1.0);
        J(k, k - 1) = J(k - 1, k) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    nodes.resize(n);
    weights.resize(n);
    for (int k = 0; k < n; ++k) {
        nodes[k] = es.eigenvalues()[k];
        const double v = es.eigenvectors()(0, k);
        weights[k] = 2.0 * v * v;
    }
    // exact symmetry, so partner rays coincide
    for (int k = 0; k < n / 2; ++k) {
        const double a = 0.5 * (nodes[n - 1 - k] - nodes[k]);
        const double w = 0.5 * (weights[k] + weights[n - 1 - k]);
        nodes[k] = -a;
        nodes[n - 1 - k] = a;
        weights[k] = weights[n - 1 - k] = w;
    }
    if (n % 2 == 1) nodes[n / 2] = 0.0;
}

RayParams RayGrid::params(std::size_t b, int i, int j) const {
    RayParams p;
    p.x = base[b][0];
    p.y = Vec2(base[b][1], base[b][2]);
    p.lambda = lambda(b, i);
    p.omega = omega(j);
    p.t_span = t_span;
    p.h = h;
    return p;
}

RayGrid make_ray_grid(const GridBox& box, double x_floor, const RaySpec& spec) {
    if (!(spec.kappa > 0)) throw ValidationError("ray.kappa must be > 0");
    if (spec.n_lambda < 1 || spec.n_omega < 1) throw ValidationError("ray node counts must be >= 1");
    if (!(spec.delta0 > 0) || !(spec.h > 0) || spec.h > spec.delta0 / 16)
        throw ValidationError("ray.h must satisfy 0 < h <= delta0/16");
    RayGrid rg;
    rg.kappa = spec.kappa;
    rg.t_span = spec.delta0;
    rg.h = spec.h;
    gauss_legendre(spec.n_lambda, rg.lam_nodes, rg.lam_weights);
    rg.omega_angles.resize(spec.n_omega);
    rg.omega_weights.assign(spec.n_omega, 2 * pi / spec.n_omega);
    for (int j = 0; j < spec.n_omega; ++j) rg.omega_angles[j] = 2 * pi * j / spec.n_omega;
    for (std::size_t idx = 0; idx < box.size(); ++idx) {
        const Vec3 z = box.node(idx);
        if (z[0] >= x_floor - 1e-12) {
            rg.base.push_back(z);
            rg.base_node.push_back(idx);
        }
    }
    if (rg.base.empty()) throw ValidationError("no grid nodes with x >= x_floor");
    return rg;
}

bool XRayData::matches(const RayGrid& rg) const {
    auto close = [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); };
    return n_base == rg.n_base() && n_lambda == rg.n_lambda() && n_omega == rg.n_omega() && close(kappa, rg.kappa) &&
           close(t_span, rg.t_span) && close(h, rg.h);
}

void write_xray(std::ostream& os, const XRayData& d) {
    std::ostringstream h;
    h << std::setprecision(17) << "georay-xray v1 " << d.n_base << ' ' << d.n_lambda << ' ' << d.n_omega << ' '
      << d.kappa << ' ' << d.t_span << ' ' << d.h << '\n';
    os << h.str();
    write_le_doubles(os, d.v.data(), d.v.size());
}

XRayData read_xray(std::istream& is, const std::string& name) {
    std::string line;
    if (!std::getline(is, line)) throw ValidationError("xray file " + name + ": missing header");
    std::istringstream h(line);
    std::string magic, ver;
    XRayData d;
    h >> magic >> ver >> d.n_base >> d.n_lambda >> d.n_omega >> d.kappa >> d.t_span >> d.h;
    if (!h || magic != "georay-xray" || ver != "v1" || d.n_lambda < 1 || d.n_omega < 1)
        throw ValidationError("xray file " + name + ": bad header '" + line + "'");
    d.v.resize(d.n_base * d.n_lambda * d.n_omega);
    read_le_doubles(is, d.v.data(), d.v.size());
    for (double x : d.v)
        if (!std::isfinite(x)) throw ValidationError("xray file " + name + ": non-finite values");
    return d;
}

void write_xray(const std::string& path, const XRayData& d) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ValidationError("cannot open for writing: " + path);
    write_xray(os, d);
}

XRayData read_xray(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ValidationError("cannot open xray data file: " + path);
    return read_xray(is, path);
}

ExitRule support_exit_rule(const GridField& f) {
    const GridBox& b = f.box();
    int lo[3] = {b.n[0], b.n[1], b.n[2]}, hi[3] = {-1, -1, -1};
    for (std::size_t idx = 0; idx < b.size(); ++idx) {
        if (f[idx] == 0.0) continue;
        const auto c = b.unflatten(idx);
        for (int a = 0; a < 3; ++a) {
            lo[a] = std::min(lo[a], c[a]);
            hi[a] = std::max(hi[a], c[a]);
        }
    }
    ExitRule ex;
    if (hi[0] < 0) {
        // zero field: every ray exits at once
        ex.x_exit = -std::numeric_limits<double>::infinity();
        return ex;
    }
    ex.x_exit = b.coord(0, hi[0] + 1);
    for (int a = 1; a < 3; ++a) {
        ex.y_lo[a - 1] = b.coord(a, lo[a] - 1);
        ex.y_hi[a - 1] = b.coord(a, hi[a] + 1);
    }
    return ex;
}

double xray_single(const MetricModel& m, const GridField& f, const RayParams& p) {
    validate_ray_params(p);
    return xray_single(m, f, p, support_exit_rule(f));
}

XRayData xray_batch(const MetricModel& m, const GridField& f, const RayGrid& rg) {
    XRayData d;
    d.n_base = rg.n_base();
    d.n_lambda = rg.n_lambda();
    d.n_omega = rg.n_omega();
    d.kappa = rg.kappa;
    d.t_span = rg.t_span;
    d.h = rg.h;
    d.v.assign(rg.size(), 0.0);
    const ExitRule ex = support_exit_rule(f);
    if (std::isinf(ex.x_exit) && ex.x_exit < 0) return d;
    std::mutex mu;
    std::vector<std::string> failures;
    const long nb = static_cast<long>(rg.n_base());
#pragma omp parallel for schedule(dynamic, 16)
    for (long b = 0; b < nb; ++b) {
        for (int i = 0; i < rg.n_lambda(); ++i)
            for (int j = 0; j < rg.n_omega(); ++j) {
                try {
                    d.v[rg.index(b, i, j)] = xray_single(m, f, rg.params(b, i, j), ex);
                } catch (const std::exception& e) {
                    std::lock_guard<std::mutex> lock(mu);
                    std::ostringstream os;
                    os << "(base " << b << ", lambda " << i << ", omega " << j << "): " << e.what();
                    failures.push_back(os.str());
                }
            }
    }
    if (!failures.empty()) {
        std::sort(failures.begin(), failures.end());
        std::ostringstream os;
        os << failures.size() << " ray(s) failed; first: " << failures.front();
        throw NumericalError(os.str());
    }
    return d;
}

void write_ray_csv(const std::string& path, const RayPath& r) {
    std::ofstream os(path);
    if (!os) throw ValidationError("cannot open for writing: " + path);
    os << std::setprecision(17) << "t,x,y1,y2,xi,eta1,eta2\n";
    for (std::size_t k = 0; k < r.t.size(); ++k)
        os << r.t[k] << ',' << r.z[k][0] << ',' << r.z[k][1] << ',' << r.z[k][2] << ',' << r.zeta[k][0] << ','
           << r.zeta[k][1] << ',' << r.zeta[k][2] << '\n';
}

}  // namespace georay
