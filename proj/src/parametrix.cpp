#include "georay/parametrix.hpp"
#include "georay/symbol.hpp"
#include "georay/simd.hpp"

#include <fftw3.h>

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

namespace georay {

namespace {

using cd = std::complex<double>;
using CMat = Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct FftPlan {
    int p1 = 0, p2 = 0;
    fftw_complex* buf = nullptr;
    fftw_plan fwd = nullptr, bwd = nullptr;
    FftPlan(int a, int b) : p1(a), p2(b) {
        buf = fftw_alloc_complex(static_cast<std::size_t>(a) * b);
        fwd = fftw_plan_dft_2d(a, b, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
        bwd = fftw_plan_dft_2d(a, b, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    ~FftPlan() {
        fftw_destroy_plan(fwd);
        fftw_destroy_plan(bwd);
        fftw_free(buf);
    }
    FftPlan(const FftPlan&) = delete;
    FftPlan& operator=(const FftPlan&) = delete;
    cd* data() { return reinterpret_cast<cd*>(buf); }
    std::size_t size() const { return static_cast<std::size_t>(p1) * p2; }
};

int fft_size(int n) {
    // smallest 2^a 3^b 5^c >= n
    for (int m = n;; ++m) {
        int r = m;
        for (int f : {2, 3, 5})
            while (r % f == 0) r /= f;
        if (r == 1) return m;
    }
}

}  // namespace

struct Parametrix::Impl {
    GridBox box;
    // rows: x-levels [rx0, nx), all y; columns: x-levels [kx0, kx1], y in [ky_lo, ky_hi]
    int rx0 = 0, nrx = 0;
    int kx0 = 0, nkx = 0;
    int ky_lo[2] = {0, 0}, ky_hi[2] = {0, 0};
    int ny[2] = {0, 0};
    std::vector<std::size_t> row_pos;  // row vector index -> (ir, j1, j2) flattened into nrx*ny0*ny1
    std::vector<std::size_t> col_pos;  // col vector index -> (kx, j1, j2) flattened into nkx*ny0*ny1
    std::unique_ptr<FftPlan> plan;
    struct Block {
        std::vector<CMat> G;   // per frequency, nkx x nrx
        std::vector<double> psi;  // blend weight per column vector entry
    };
    std::vector<Block> blocks;
};

Parametrix::~Parametrix() = default;
Parametrix::Parametrix(Parametrix&&) noexcept = default;
Parametrix& Parametrix::operator=(Parametrix&&) noexcept = default;

Parametrix Parametrix::constant(double value) {
    if (value == 0.0 || !std::isfinite(value)) throw ValidationError("constant symbol must be finite and nonzero");
    Parametrix p;
    p.constant_ = value;
    p.peak_ = std::abs(value);
    return p;
}

Parametrix::Parametrix(const ConjugatedOp& op, const SparseB& S, const ParametrixSpec& spec,
                       const EllipticityReport& cert) {
    if (!cert.ok) throw DomainError("parametrix refused: ellipticity scan did not pass (c_min not above noise floor)");
    if (!(spec.taper_low > 0)) throw ValidationError("taper_low must be > 0");
    if (spec.blocks < 1) throw ValidationError("parametrix blocks must be >= 1");
    impl_ = std::make_unique<Impl>();
    Impl& I = *impl_;
    const GridBox& box = S.box();
    I.box = box;
    I.ny[0] = box.n[1];
    I.ny[1] = box.n[2];

    // row layout
    I.rx0 = box.n[0];
    for (std::size_t node : S.row_nodes()) I.rx0 = std::min(I.rx0, box.unflatten(node)[0]);
    I.nrx = box.n[0] - I.rx0;
    const std::size_t plane = static_cast<std::size_t>(I.ny[0]) * I.ny[1];
    for (std::size_t node : S.row_nodes()) {
        const auto c = box.unflatten(node);
        I.row_pos.push_back((c[0] - I.rx0) * plane + c[1] * I.ny[1] + c[2]);
    }
    if (S.rows() != static_cast<std::size_t>(I.nrx) * plane)
        throw ValidationError("parametrix needs every grid node with x >= x_floor as a row");

    // column layout: K must be a box of nodes
    int lo[3] = {box.n[0], box.n[1], box.n[2]}, hi[3] = {-1, -1, -1};
    for (std::size_t node : S.col_nodes()) {
        const auto c = box.unflatten(node);
        for (int a = 0; a < 3; ++a) {
            lo[a] = std::min(lo[a], c[a]);
            hi[a] = std::max(hi[a], c[a]);
        }
    }
    I.kx0 = lo[0];
    I.nkx = hi[0] - lo[0] + 1;
    for (int a = 0; a < 2; ++a) {
        I.ky_lo[a] = lo[a + 1];
        I.ky_hi[a] = hi[a + 1];
    }
    for (std::size_t node : S.col_nodes()) {
        const auto c = box.unflatten(node);
        I.col_pos.push_back((c[0] - I.kx0) * plane + c[1] * I.ny[1] + c[2]);
    }

    const int P1 = fft_size(2 * I.ny[0]), P2 = fft_size(2 * I.ny[1]);
    I.plan = std::make_unique<FftPlan>(P1, P2);
    const std::size_t nq = static_cast<std::size_t>(P1) * P2;

    // frozen kernels at block centres, on K's x-levels over the full y range
    SupportRegion Kx;
    Kx.x_lo = box.coord(0, I.kx0);
    Kx.x_hi = box.coord(0, I.kx0 + I.nkx - 1);
    Kx.y_lo = Vec2(box.lo[1], box.lo[2]);
    Kx.y_hi = Vec2(box.hi(1), box.hi(2));
    std::vector<std::int64_t> base_of(box.size(), -1);
    for (std::size_t b = 0; b < op.rays().n_base(); ++b) base_of[op.rays().base_node[b]] = static_cast<std::int64_t>(b);

    const int nb = spec.blocks;
    std::vector<int> centres[2];
    for (int a = 0; a < 2; ++a) {
        for (int k = 0; k < nb; ++k) {
            const double t = nb == 1 ? 0.5 : double(k) / (nb - 1);
            centres[a].push_back(static_cast<int>(std::lround(I.ky_lo[a] + t * (I.ky_hi[a] - I.ky_lo[a]))));
        }
    }
    auto hat = [&](int a, int k, int j) {
        if (nb == 1) return 1.0;
        const auto& cs = centres[a];
        if (j <= cs.front()) return k == 0 ? 1.0 : 0.0;
        if (j >= cs.back()) return k == nb - 1 ? 1.0 : 0.0;
        const double c = cs[k];
        if (k > 0 && j >= cs[k - 1] && j <= c) return (j - cs[k - 1]) / double(c - cs[k - 1]);
        if (k < nb - 1 && j >= c && j <= cs[k + 1]) return (cs[k + 1] - j) / double(cs[k + 1] - c);
        return 0.0;
    };

    std::vector<std::vector<CMat>> Ms;
    double peak = 0.0;
    for (int b1 = 0; b1 < nb; ++b1)
        for (int b2 = 0; b2 < nb; ++b2) {
            const int jb1 = centres[0][b1], jb2 = centres[1][b2];
            std::vector<std::size_t> rows;
            for (int ir = 0; ir < I.nrx; ++ir) {
                const std::int64_t b = base_of[box.index(I.rx0 + ir, jb1, jb2)];
                if (b < 0) throw ValidationError("parametrix: block centre is not a base point");
                rows.push_back(static_cast<std::size_t>(b));
            }
            const SparseB R = assemble_sparse(op, Kx, rows);
            // kernel arrays per (ir, kx) with offsets wrapped modulo P
            std::map<std::pair<int, int>, std::vector<cd>> ker;
            for (int ir = 0; ir < I.nrx; ++ir)
                for (const auto& [node, v] : R.row(ir)) {
                    const auto c = box.unflatten(node);
                    const int kx = c[0] - I.kx0;
                    const int d1 = ((c[1] - jb1) % P1 + P1) % P1, d2 = ((c[2] - jb2) % P2 + P2) % P2;
                    auto& arr = ker[{ir, kx}];
                    if (arr.empty()) arr.assign(nq, cd(0, 0));
                    arr[static_cast<std::size_t>(d1) * P2 + d2] += v;
                }
            std::vector<CMat> M(nq, CMat::Zero(I.nrx, I.nkx));
            for (auto& [key, arr] : ker) {
                std::copy(arr.begin(), arr.end(), I.plan->data());
                fftw_execute(I.plan->bwd);  // sum_d k(d) e^{+i eta d}
                const cd* out = I.plan->data();
                for (std::size_t q = 0; q < nq; ++q) M[q](key.first, key.second) = out[q];
            }
            for (std::size_t q = 0; q < nq; ++q) {
                Eigen::JacobiSVD<CMat> svd(M[q]);
                peak = std::max(peak, svd.singularValues()[0]);
            }
            Ms.push_back(std::move(M));
            Impl::Block blk;
            blk.psi.resize(S.cols());
            for (std::size_t c = 0; c < S.cols(); ++c) {
                const auto ijk = box.unflatten(S.col_nodes()[c]);
                blk.psi[c] = hat(0, b1, ijk[1]) * hat(1, b2, ijk[2]);
            }
            I.blocks.push_back(std::move(blk));
        }
    peak_ = peak;
    if (!(peak > 0)) throw NumericalError("parametrix: frozen kernel vanishes (zero operator)");
    const double floor_v = spec.taper_low * peak;
    for (std::size_t k = 0; k < I.blocks.size(); ++k) {
        auto& G = I.blocks[k].G;
        G.resize(nq);
        for (std::size_t q = 0; q < nq; ++q) {
            Eigen::JacobiSVD<CMat> svd(Ms[k][q], Eigen::ComputeThinU | Eigen::ComputeThinV);
            Eigen::VectorXd inv = svd.singularValues();
            for (Eigen::Index i = 0; i < inv.size(); ++i) {
                if (inv[i] < floor_v) ++floored_;
                inv[i] = 1.0 / std::max(inv[i], floor_v);
            }
            G[q] = svd.matrixV() * inv.cast<cd>().asDiagonal() * svd.matrixU().adjoint();
        }
        Ms[k].clear();
    }
}

void Parametrix::apply(const std::vector<double>& g, std::vector<double>& f) const {
    if (constant_ != 0.0) {
        f.resize(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) f[i] = g[i] / constant_;
        return;
    }
    const Impl& I = *impl_;
    if (g.size() != I.row_pos.size()) throw ValidationError("parametrix: row vector size mismatch");
    FftPlan& P = *I.plan;
    const std::size_t nq = P.size(), plane = static_cast<std::size_t>(I.ny[0]) * I.ny[1];
    // transforms of each row level
    std::vector<double> grid(static_cast<std::size_t>(I.nrx) * plane, 0.0);
    for (std::size_t r = 0; r < g.size(); ++r) grid[I.row_pos[r]] = g[r];
    std::vector<cd> ghat(static_cast<std::size_t>(I.nrx) * nq);
    for (int ir = 0; ir < I.nrx; ++ir) {
        std::fill(P.data(), P.data() + nq, cd(0, 0));
        for (int j1 = 0; j1 < I.ny[0]; ++j1)
            for (int j2 = 0; j2 < I.ny[1]; ++j2)
                P.data()[static_cast<std::size_t>(j1) * P.p2 + j2] = grid[ir * plane + j1 * I.ny[1] + j2];
        fftw_execute(P.fwd);
        std::copy(P.data(), P.data() + nq, ghat.begin() + ir * nq);
    }
    f.assign(I.col_pos.size(), 0.0);
    std::vector<cd> fhat(static_cast<std::size_t>(I.nkx) * nq);
    Eigen::VectorXcd gv(I.nrx);
    for (const auto& blk : I.blocks) {
        for (std::size_t q = 0; q < nq; ++q) {
            for (int ir = 0; ir < I.nrx; ++ir) gv[ir] = ghat[ir * nq + q];
            const Eigen::VectorXcd fv = blk.G[q] * gv;
            for (int kx = 0; kx < I.nkx; ++kx) fhat[kx * nq + q] = fv[kx];
        }
        const double norm = 1.0 / static_cast<double>(nq);
        std::vector<double> level(plane);
        for (int kx = 0; kx < I.nkx; ++kx) {
            std::copy(fhat.begin() + kx * nq, fhat.begin() + (kx + 1) * nq, P.data());
            fftw_execute(P.bwd);
            for (int j1 = 0; j1 < I.ny[0]; ++j1)
                for (int j2 = 0; j2 < I.ny[1]; ++j2)
                    level[j1 * I.ny[1] + j2] = P.data()[static_cast<std::size_t>(j1) * P.p2 + j2].real() * norm;
            for (std::size_t c = 0; c < I.col_pos.size(); ++c) {
                const std::size_t pos = I.col_pos[c];
                if (pos / plane != static_cast<std::size_t>(kx)) continue;
                f[c] += blk.psi[c] * level[pos % plane];
            }
        }
    }
}

void Parametrix::apply_t(const std::vector<double>& f, std::vector<double>& g) const {
    if (constant_ != 0.0) {
        g.resize(f.size());
        for (std::size_t i = 0; i < f.size(); ++i) g[i] = f[i] / constant_;
        return;
    }
    const Impl& I = *impl_;
    if (f.size() != I.col_pos.size()) throw ValidationError("parametrix: column vector size mismatch");
    FftPlan& P = *I.plan;
    const std::size_t nq = P.size(), plane = static_cast<std::size_t>(I.ny[0]) * I.ny[1];
    std::vector<double> gridg(static_cast<std::size_t>(I.nrx) * plane, 0.0);
    std::vector<cd> fhat(static_cast<std::size_t>(I.nkx) * nq), ghat(static_cast<std::size_t>(I.nrx) * nq);
    Eigen::VectorXcd fv(I.nkx);
    for (const auto& blk : I.blocks) {
        std::vector<double> grid(static_cast<std::size_t>(I.nkx) * plane, 0.0);
        for (std::size_t c = 0; c < f.size(); ++c) grid[I.col_pos[c]] = blk.psi[c] * f[c];
        for (int kx = 0; kx < I.nkx; ++kx) {
            std::fill(P.data(), P.data() + nq, cd(0, 0));
            for (int j1 = 0; j1 < I.ny[0]; ++j1)
                for (int j2 = 0; j2 < I.ny[1]; ++j2)
                    P.data()[static_cast<std::size_t>(j1) * P.p2 + j2] = grid[kx * plane + j1 * I.ny[1] + j2];
            fftw_execute(P.fwd);
            std::copy(P.data(), P.data() + nq, fhat.begin() + kx * nq);
        }
        for (std::size_t q = 0; q < nq; ++q) {
            for (int kx = 0; kx < I.nkx; ++kx) fv[kx] = fhat[kx * nq + q];
            const Eigen::VectorXcd gv = blk.G[q].adjoint() * fv;
            for (int ir = 0; ir < I.nrx; ++ir) ghat[ir * nq + q] = gv[ir];
        }
        const double norm = 1.0 / static_cast<double>(nq);
        for (int ir = 0; ir < I.nrx; ++ir) {
            std::copy(ghat.begin() + ir * nq, ghat.begin() + (ir + 1) * nq, P.data());
            fftw_execute(P.bwd);
            for (int j1 = 0; j1 < I.ny[0]; ++j1)
                for (int j2 = 0; j2 < I.ny[1]; ++j2)
                    gridg[ir * plane + j1 * I.ny[1] + j2] +=
                        P.data()[static_cast<std::size_t>(j1) * P.p2 + j2].real() * norm;
        }
    }
    g.resize(I.row_pos.size());
    for (std::size_t r = 0; r < g.size(); ++r) g[r] = gridg[I.row_pos[r]];
}

GridField Parametrix::apply(const GridField& g) const {
    if (constant_ != 0.0) {
        GridField out(g.box());
        for (std::size_t i = 0; i < g.values().size(); ++i) out[i] = g[i] / constant_;
        return out;
    }
    const Impl& I = *impl_;
    if (!(g.box() == I.box)) throw ValidationError("parametrix: field grid differs from the operator grid");
    const std::size_t plane = static_cast<std::size_t>(I.ny[0]) * I.ny[1];
    std::vector<double> gv(I.row_pos.size());
    for (std::size_t r = 0; r < gv.size(); ++r) {
        const std::size_t pos = I.row_pos[r];
        const int ir = static_cast<int>(pos / plane), j = static_cast<int>(pos % plane);
        gv[r] = g.at(I.rx0 + ir, j / I.ny[1], j % I.ny[1]);
    }
    std::vector<double> fv;
    apply(gv, fv);
    GridField out(I.box);
    for (std::size_t c = 0; c < fv.size(); ++c) {
        const std::size_t pos = I.col_pos[c];
        const int kx = static_cast<int>(pos / plane), j = static_cast<int>(pos % plane);
        out.at(I.kx0 + kx, j / I.ny[1], j % I.ny[1]) = fv[c];
    }
    return out;
}

DefectEstimate parametrix_defect(const SparseB& S, const Parametrix& G, int max_iter, double rtol, unsigned seed) {
    if (G.is_constant() && S.rows() != S.cols())
        throw ValidationError("a constant parametrix needs a square system (rows and columns in the same space)");
    const std::size_t n = S.cols();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    std::vector<double> v(n), Bv(S.rows()), GBv, Ev(n), t(S.rows()), w(n), u;
    for (double& x : v) x = nd(rng);
    auto normalize = [](std::vector<double>& x) {
        const double s = std::sqrt(simd::dot(x.data(), x.data(), x.size()));
        for (double& y : x) y /= s;
    };
    normalize(v);
    DefectEstimate est;
    double prev = 0.0;
    for (int it = 1; it <= max_iter; ++it) {
        S.apply(v.data(), Bv.data());
        G.apply(Bv, GBv);
        for (std::size_t i = 0; i < n; ++i) Ev[i] = v[i] - GBv[i];
        // E^T Ev = Ev - B^T G^T Ev
        G.apply_t(Ev, u);
        S.apply_t(u.data(), w.data());
        for (std::size_t i = 0; i < n; ++i) w[i] = Ev[i] - w[i];
        const double lam = simd::dot(v.data(), w.data(), n);
        est.norm = std::sqrt(std::max(lam, 0.0));
        est.iterations = it;
        v = w;
        normalize(v);
        if (it > 3 && std::abs(est.norm - prev) <= rtol * est.norm) break;
        prev = est.norm;
    }
    return est;
}

}  // namespace georay
