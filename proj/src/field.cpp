#include "georay/field.hpp"
#include "georay/phantom.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace georay {

GridBox GridBox::from_extent(std::array<int, 3> dims, std::array<double, 3> lo, std::array<double, 3> hi) {
    GridBox b;
    b.n = dims;
    b.lo = lo;
    for (int a = 0; a < 3; ++a) {
        if (dims[a] < 2) throw ValidationError("grid needs at least 2 nodes per axis");
        if (!(hi[a] > lo[a])) throw ValidationError("grid extent must be positive on every axis");
        b.d[a] = (hi[a] - lo[a]) / (dims[a] - 1);
    }
    return b;
}

std::array<int, 3> GridBox::unflatten(std::size_t idx) const {
    const int k = static_cast<int>(idx % n[2]);
    idx /= n[2];
    const int j = static_cast<int>(idx % n[1]);
    const int i = static_cast<int>(idx / n[1]);
    return {i, j, k};
}

Vec3 GridBox::node(std::size_t idx) const {
    const auto ijk = unflatten(idx);
    return Vec3(coord(0, ijk[0]), coord(1, ijk[1]), coord(2, ijk[2]));
}

GridField::GridField(const GridBox& box, std::vector<double> values) : box_(box), v_(std::move(values)) {
    if (v_.size() != box_.size()) throw ValidationError("field value count does not match grid dimensions");
}

double GridField::interp(const Vec3& z) const {
    int i0[3];
    double t[3];
    for (int a = 0; a < 3; ++a) {
        const double s = (z[a] - box_.lo[a]) / box_.d[a];
        const int n = box_.n[a];
        if (!(s >= 0.0) || s > n - 1) return 0.0;
        int i = static_cast<int>(s);
        if (i > n - 2) i = n - 2;
        i0[a] = i;
        t[a] = s - i;
    }
    const std::size_t n2 = box_.n[2], n12 = static_cast<std::size_t>(box_.n[1]) * n2;
    const double* p = v_.data() + box_.index(i0[0], i0[1], i0[2]);
    const double c00 = p[0] * (1 - t[2]) + p[1] * t[2];
    const double c01 = p[n2] * (1 - t[2]) + p[n2 + 1] * t[2];
    const double c10 = p[n12] * (1 - t[2]) + p[n12 + 1] * t[2];
    const double c11 = p[n12 + n2] * (1 - t[2]) + p[n12 + n2 + 1] * t[2];
    const double c0 = c00 * (1 - t[1]) + c01 * t[1];
    const double c1 = c10 * (1 - t[1]) + c11 * t[1];
    return c0 * (1 - t[0]) + c1 * t[0];
}

double interp(const GridField& f, const Vec3& z) { return f.interp(z); }

bool GridField::all_finite() const {
    return std::all_of(v_.begin(), v_.end(), [](double v) { return std::isfinite(v); });
}

double GridField::l2() const {
    double s = 0;
    for (double v : v_) s += v * v;
    return std::sqrt(s * box_.cell_volume());
}

NormResult sc_norm_ex(const GridField& f, const WeightedNormSpec& w, int n) {
    if (w.s != 0 && w.s != 1) throw ValidationError("sc_norm supports s in {0, 1}");
    const GridBox& b = f.box();
    NormResult res;
    std::vector<double> u(b.size(), 0.0);
    double excl = 0.0;
    for (std::size_t idx = 0; idx < b.size(); ++idx) {
        const double x = b.coord(0, b.unflatten(idx)[0]);
        if (x < w.x_floor) {
            excl += f[idx] * f[idx];
            continue;
        }
        u[idx] = std::exp(-w.F / x) * std::pow(x, -w.r) * f[idx];
    }
    res.excluded_l2 = std::sqrt(excl * b.cell_volume());
    double sum = 0.0;
    for (int i = 0; i < b.n[0]; ++i) {
        const double x = b.coord(0, i);
        if (x < w.x_floor) continue;
        const double meas = std::pow(x, -n - 1) * b.cell_volume();
        for (int j = 0; j < b.n[1]; ++j)
            for (int k = 0; k < b.n[2]; ++k) {
                const std::size_t idx = b.index(i, j, k);
                ++res.included;
                double term = u[idx] * u[idx];
                if (w.s == 1) {
                    auto diff = [&](int axis, int ii) {
                        int lo = ii - 1, hi = ii + 1;
                        if (lo < 0) lo = ii;
                        if (hi >= b.n[axis]) hi = ii;
                        if (hi == lo) return 0.0;
                        auto at = [&](int q) {
                            std::array<int, 3> c{i, j, k};
                            c[axis] = q;
                            return u[b.index(c[0], c[1], c[2])];
                        };
                        return (at(hi) - at(lo)) / ((hi - lo) * b.d[axis]);
                    };
                    const double dx = x * x * diff(0, i);
                    const double d1 = x * diff(1, j);
                    const double d2 = x * diff(2, k);
                    term += dx * dx + d1 * d1 + d2 * d2;
                }
                sum += term * meas;
            }
    }
    if (res.included == 0) throw DomainError("sc_norm: every grid cell lies below x_floor");
    res.value = std::sqrt(sum);
    return res;
}

double sc_norm(const GridField& f, const WeightedNormSpec& w, int n) { return sc_norm_ex(f, w, n).value; }

void write_le_doubles(std::ostream& os, const double* p, std::size_t n) {
    if constexpr (std::endian::native == std::endian::little) {
        os.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            auto v = std::bit_cast<std::uint64_t>(p[i]);
            char buf[8];
            for (int b = 0; b < 8; ++b) buf[b] = static_cast<char>((v >> (8 * b)) & 0xff);
            os.write(buf, 8);
        }
    }
}

void read_le_doubles(std::istream& is, double* p, std::size_t n) {
    if constexpr (std::endian::native == std::endian::little) {
        is.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            unsigned char buf[8];
            is.read(reinterpret_cast<char*>(buf), 8);
            std::uint64_t v = 0;
            for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(buf[b]) << (8 * b);
            p[i] = std::bit_cast<double>(v);
        }
    }
    if (!is) throw ValidationError("truncated binary payload");
}

void write_field(std::ostream& os, const GridField& f) {
    const GridBox& b = f.box();
    std::ostringstream h;
    h << std::setprecision(17) << "georay-field v1 " << b.n[0] << ' ' << b.n[1] << ' ' << b.n[2] << ' ' << b.lo[0]
      << ' ' << b.lo[1] << ' ' << b.lo[2] << ' ' << b.d[0] << ' ' << b.d[1] << ' ' << b.d[2] << '\n';
    os << h.str();
    write_le_doubles(os, f.values().data(), f.values().size());
}

GridField read_field(std::istream& is, const std::string& name) {
    std::string line;
    if (!std::getline(is, line)) throw ValidationError("field file " + name + ": missing header");
    std::istringstream h(line);
    std::string magic, ver;
    GridBox b;
    h >> magic >> ver >> b.n[0] >> b.n[1] >> b.n[2] >> b.lo[0] >> b.lo[1] >> b.lo[2] >> b.d[0] >> b.d[1] >> b.d[2];
    if (!h || magic != "georay-field" || ver != "v1")
        throw ValidationError("field file " + name + ": bad header '" + line + "'");
    for (int a = 0; a < 3; ++a)
        if (b.n[a] < 1 || !(b.d[a] > 0)) throw ValidationError("field file " + name + ": bad dimensions");
    std::vector<double> v(b.size());
    read_le_doubles(is, v.data(), v.size());
    GridField f(b, std::move(v));
    if (!f.all_finite()) throw ValidationError("field file " + name + ": non-finite values");
    return f;
}

void write_field(const std::string& path, const GridField& f) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ValidationError("cannot open for writing: " + path);
    write_field(os, f);
}

GridField read_field(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ValidationError("cannot open field file: " + path);
    return read_field(is, path);
}

// ---- phantoms

std::string to_string(PhantomKind k) {
    switch (k) {
        case PhantomKind::zero: return "zero";
        case PhantomKind::gaussian_bump: return "gaussian_bump";
        case PhantomKind::poly_bump: return "poly_bump";
        case PhantomKind::shell: return "shell";
        case PhantomKind::two_shell: return "two_shell";
        case PhantomKind::oscillatory: return "oscillatory";
    }
    return "unknown";
}

PhantomKind phantom_kind_from_string(const std::string& s) {
    for (PhantomKind k : {PhantomKind::zero, PhantomKind::gaussian_bump, PhantomKind::poly_bump, PhantomKind::shell,
                          PhantomKind::two_shell, PhantomKind::oscillatory})
        if (to_string(k) == s) return k;
    throw ValidationError("unknown phantom kind '" + s + "'");
}

double smooth_step_down(double u) {
    if (u <= 0.0) return 1.0;
    if (u >= 1.0) return 0.0;
    return 1.0 - u * u * u * (10.0 - 15.0 * u + 6.0 * u * u);
}

Phantom::Phantom(PhantomSpec spec) : spec_(spec) {
    if (spec_.kind == PhantomKind::gaussian_bump && !(spec_.sigma > 0.0 && spec_.support > 0.0))
        throw ValidationError("gaussian_bump needs sigma > 0 and support > 0");
    if ((spec_.kind == PhantomKind::poly_bump || spec_.kind == PhantomKind::oscillatory) &&
        !(spec_.radii.minCoeff() > 0.0))
        throw ValidationError("poly_bump needs positive radii");
    if ((spec_.kind == PhantomKind::shell || spec_.kind == PhantomKind::two_shell) &&
        !(spec_.rho_w > 0.0 && spec_.lateral > 0.0))
        throw ValidationError("shell phantoms need rho_w > 0 and lateral > 0");
}

namespace {
double cubic_bump(double u2) { return u2 < 1.0 ? (1 - u2) * (1 - u2) * (1 - u2) : 0.0; }
}  // namespace

double Phantom::component(const Vec3& z, int idx) const {
    const PhantomSpec& s = spec_;
    const double lat = cubic_bump((z[1] * z[1] + z[2] * z[2]) / (s.lateral * s.lateral));
    if (lat == 0.0) return 0.0;
    const double rho = s.c - z[0];
    const double rc = idx == 0 ? s.rho_c1 : s.rho_c2;
    const double u = (rho - rc) / s.rho_w;
    return (idx == 0 ? s.amplitude : s.amplitude2) * cubic_bump(u * u) * lat;
}

double Phantom::operator()(const Vec3& z) const {
    const PhantomSpec& s = spec_;
    switch (s.kind) {
        case PhantomKind::zero: return 0.0;
        case PhantomKind::gaussian_bump: {
            const double r = (z - s.center).norm();
            if (r >= s.support) return 0.0;
            const double cut = smooth_step_down((r - 0.75 * s.support) / (0.25 * s.support));
            return s.amplitude * std::exp(-r * r / (2 * s.sigma * s.sigma)) * cut;
        }
        case PhantomKind::poly_bump:
        case PhantomKind::oscillatory: {
            const Vec3 q = (z - s.center).cwiseQuotient(s.radii);
            const double b = s.amplitude * cubic_bump(q.squaredNorm());
            return s.kind == PhantomKind::oscillatory ? b * std::sin(s.k * z[1]) : b;
        }
        case PhantomKind::shell: return component(z, 0);
        case PhantomKind::two_shell: return component(z, 0) + component(z, 1);
    }
    return 0.0;
}

void Phantom::support_box(Vec3& lo, Vec3& hi) const {
    const PhantomSpec& s = spec_;
    switch (s.kind) {
        case PhantomKind::zero:
            lo = Vec3::Constant(std::numeric_limits<double>::infinity());
            hi = -lo;
            return;
        case PhantomKind::gaussian_bump:
            lo = s.center - Vec3::Constant(s.support);
            hi = s.center + Vec3::Constant(s.support);
            return;
        case PhantomKind::poly_bump:
        case PhantomKind::oscillatory:
            lo = s.center - s.radii;
            hi = s.center + s.radii;
            return;
        case PhantomKind::shell:
        case PhantomKind::two_shell: {
            const double rmin = s.rho_c1 - s.rho_w;
            const double rmax = (s.kind == PhantomKind::shell ? s.rho_c1 : std::max(s.rho_c1, s.rho_c2)) + s.rho_w;
            const double rlo = s.kind == PhantomKind::shell ? rmin : std::min(s.rho_c1, s.rho_c2) - s.rho_w;
            lo = Vec3(s.c - rmax, -s.lateral, -s.lateral);
            hi = Vec3(s.c - rlo, s.lateral, s.lateral);
            return;
        }
    }
}

GridField make_phantom(const PhantomSpec& spec, const GridBox& box, double x_floor, double c) {
    Phantom ph(spec);
    if (spec.kind == PhantomKind::two_shell && std::abs(spec.rho_c1 - spec.rho_c2) < 2 * spec.rho_w)
        throw ValidationError("two_shell components overlap: |rho_c1 - rho_c2| must be >= 2 rho_w");
    if (spec.kind != PhantomKind::zero) {
        Vec3 lo, hi;
        ph.support_box(lo, hi);
        const double tol = 1e-12;
        std::ostringstream os;
        if (lo[0] < x_floor - tol) os << "support reaches x = " << lo[0] << " below x_floor = " << x_floor << "; ";
        if (hi[0] > c + tol) os << "support reaches x = " << hi[0] << " beyond the boundary x = c = " << c << "; ";
        for (int a = 0; a < 3; ++a)
            if (lo[a] < box.lo[a] - tol || hi[a] > box.hi(a) + tol) os << "support leaves the grid box on axis " << a << "; ";
        if (!os.str().empty()) throw ValidationError("phantom support leaks outside O_c: " + os.str());
    }
    GridField f(box);
    for (std::size_t idx = 0; idx < box.size(); ++idx) f[idx] = ph(box.node(idx));
    return f;
}

}  // namespace georay
