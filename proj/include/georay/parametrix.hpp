#pragma once

#include "georay/normal_op.hpp"

#include <complex>
#include <memory>
#include <vector>

namespace georay {

struct EllipticityReport;

struct ParametrixSpec {
    double taper_low = 1e-3;  // singular values floored at taper_low * peak
    int blocks = 1;           // frozen kernels per y axis
};

// Frozen-coefficient parametrix G for the rectangular discretization S: the
// kernel of B at a block-centre y is Fourier transformed in y (periodic
// embedding, zero padding) and the resulting per-frequency x-matrices are
// pseudo-inverted. G maps row vectors to K-column vectors; blocks are blended
// by a partition of unity in y.
class Parametrix {
public:
    Parametrix(const ConjugatedOp& op, const SparseB& S, const ParametrixSpec& spec, const EllipticityReport& cert);
    // Synthetic constant symbol: G g = g / value on any vector space.
    static Parametrix constant(double value);
    ~Parametrix();
    Parametrix(Parametrix&&) noexcept;
    Parametrix& operator=(Parametrix&&) noexcept;

    void apply(const std::vector<double>& g_rows, std::vector<double>& f_cols) const;
    void apply_t(const std::vector<double>& f_cols, std::vector<double>& g_rows) const;
    GridField apply(const GridField& g) const;  // field in, field out

    bool is_constant() const { return constant_ != 0.0; }
    double peak_singular_value() const { return peak_; }
    int floored_count() const { return floored_; }

private:
    Parametrix() = default;
    struct Impl;
    std::unique_ptr<Impl> impl_;
    double constant_ = 0.0;
    double peak_ = 0.0;
    int floored_ = 0;
};

struct DefectEstimate {
    double norm = 0.0;  // ||Id - G B|| on K-supported vectors
    int iterations = 0;
};

// Power iteration on E^T E, E = Id - G B, deterministic start vector.
DefectEstimate parametrix_defect(const SparseB& S, const Parametrix& G, int max_iter = 60, double rtol = 1e-4,
                                 unsigned seed = 7);

}  // namespace georay
