#pragma once

#include <array>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hodoflow {

inline constexpr double kPi = 3.14159265358979323846;

enum class ChartKind { cylinder, cone, sphere2, sphere3 };

struct CoordsOutOfRange : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Coordinate interval. Periodic axes (azimuthal angles) accept any finite value;
// bounded axes are open intervals, so poles and the cone tip are excluded.
struct CoordRange {
    double lo = 0.0;
    double hi = 0.0;
    bool periodic = false;
};

struct SurfaceChart {
    ChartKind kind = ChartKind::cylinder;
    double alpha = 0.0;   // cone opening parameter sin^2(theta0), in (0,1)
    double radius = 1.0;  // R for cylinder and spheres

    static SurfaceChart cylinder(double R = 1.0);
    static SurfaceChart cone(double alpha);
    static SurfaceChart sphere2(double R);
    static SurfaceChart sphere3(double R);

    int dim() const;
    int embed_dim() const;
    const std::vector<std::string>& coord_names() const;
    CoordRange coord_range(int i) const;
    std::string name() const;

    // True if every coordinate is strictly inside its range (bounded axes by
    // at least `margin`); periodic axes only need to be finite.
    bool interior(std::span<const double> coords, double margin = 0.0) const;
    void require_interior(std::span<const double> coords, const char* where,
                          double margin = 0.0) const;
};

struct MetricTensor {
    int n = 0;
    std::array<std::array<double, 3>, 3> g{};
    double operator()(int i, int j) const { return g[i][j]; }
};

// gamma[i][j][k] = Gamma^i_{jk}, symmetric in (j,k).
struct ChristoffelSymbols {
    int n = 0;
    std::array<std::array<std::array<double, 3>, 3>, 3> gamma{};
    double operator()(int i, int j, int k) const { return gamma[i][j][k]; }
    double max_abs() const;
};

// Diagonal metric of the chart at an interior point.
// sphere3 carries the round metric diag(R^2, R^2 sin^2 phi1, R^2 sin^2 phi1 sin^2 phi2);
// this is the form consistent with the connection coefficients and with conservation
// of all six momenta (see tests), and it is cross-checked against christoffel_fd.
MetricTensor metric_at(const SurfaceChart& chart, std::span<const double> coords);

// Closed-form connection coefficients.
ChristoffelSymbols christoffel_at(const SurfaceChart& chart, std::span<const double> coords);

// Independent cross-check: central differences of the metric pushed through the
// Levi-Civita formula. Requires bounded coordinates at distance > 2h from range ends.
// Agrees with christoffel_at to O(h^2).
ChristoffelSymbols christoffel_fd(const SurfaceChart& chart, std::span<const double> coords,
                                  double h);

// Euclidean embedding (R^3, or R^4 for sphere3). Closed-range endpoints (poles,
// the cone tip) are allowed here.
std::array<double, 4> embed(const SurfaceChart& chart, std::span<const double> coords);

}  // namespace hodoflow
