#pragma once

#include "georay/types.hpp"

#include <array>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace georay {

// Node-centred uniform grid in adapted coordinates (x, y1, y2).
struct GridBox {
    std::array<int, 3> n{8, 8, 8};
    std::array<double, 3> lo{0.0, 0.0, 0.0};
    std::array<double, 3> d{1.0, 1.0, 1.0};

    static GridBox from_extent(std::array<int, 3> dims, std::array<double, 3> lo, std::array<double, 3> hi);

    std::size_t size() const { return static_cast<std::size_t>(n[0]) * n[1] * n[2]; }
    std::size_t index(int i, int j, int k) const { return (static_cast<std::size_t>(i) * n[1] + j) * n[2] + k; }
    std::array<int, 3> unflatten(std::size_t idx) const;
    double coord(int axis, int i) const { return lo[axis] + d[axis] * i; }
    double hi(int axis) const { return lo[axis] + d[axis] * (n[axis] - 1); }
    Vec3 node(std::size_t idx) const;
    double cell_volume() const { return d[0] * d[1] * d[2]; }
    bool operator==(const GridBox& o) const { return n == o.n && lo == o.lo && d == o.d; }
};

class GridField {
public:
    GridField() = default;
    explicit GridField(const GridBox& box, double fill = 0.0) : box_(box), v_(box.size(), fill) {}
    GridField(const GridBox& box, std::vector<double> values);

    const GridBox& box() const { return box_; }
    std::vector<double>& values() { return v_; }
    const std::vector<double>& values() const { return v_; }
    double& operator[](std::size_t i) { return v_[i]; }
    double operator[](std::size_t i) const { return v_[i]; }
    double& at(int i, int j, int k) { return v_[box_.index(i, j, k)]; }
    double at(int i, int j, int k) const { return v_[box_.index(i, j, k)]; }

    // Trilinear interpolation, zero outside the box.
    double interp(const Vec3& z) const;
    double operator()(const Vec3& z) const { return interp(z); }

    bool all_finite() const;
    double l2() const;  // plain sum-of-squares norm times cell volume, square-rooted

private:
    GridBox box_;
    std::vector<double> v_;
};

double interp(const GridField& f, const Vec3& z);

struct WeightedNormSpec {
    int s = 0;
    double r = 0.0;
    double F = 0.0;
    double c = 0.0;  // bookkeeping: grid x is x_c for this offset
    double x_floor = 0.0;
};

struct NormResult {
    double value = 0.0;
    double excluded_l2 = 0.0;  // mass of f on cells with x < x_floor (should be 0)
    std::size_t included = 0;
};

// Discrete H_sc^{s,r} norm of e^{-F/x} f in dimension n (measure x^{-n-1}).
NormResult sc_norm_ex(const GridField& f, const WeightedNormSpec& w, int n = 3);
double sc_norm(const GridField& f, const WeightedNormSpec& w, int n = 3);

// File format: "georay-field v1 nx ny1 ny2 x0 y10 y20 dx dy1 dy2\n" + raw LE float64.
void write_field(const std::string& path, const GridField& f);
GridField read_field(const std::string& path);
void write_field(std::ostream& os, const GridField& f);
GridField read_field(std::istream& is, const std::string& name = "<stream>");

// Little-endian raw float64 helpers shared by the file formats.
void write_le_doubles(std::ostream& os, const double* p, std::size_t n);
void read_le_doubles(std::istream& is, double* p, std::size_t n);

}  // namespace georay
