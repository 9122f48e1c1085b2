#pragma once

#include <algorithm>
#include <cmath>

// Raw integral expressions shared by the geodesic monitor and the hodograph
// residuals. Velocities are coordinate velocities.

namespace hodoflow::kernels {

struct ConeIntegrals {
    double H = 0, L3 = 0, I3 = 0, I4 = 0;
    bool i4_defined = false;
};

// I4 needs no sigma: both arctan arguments are built from pointwise-conserved
// combinations (u r - H t and r^2 v), so it is single-valued along the flow.
inline ConeIntegrals cone_integrals(double alpha, double t, double r, double phi, double u,
                                    double v) {
    ConeIntegrals out;
    out.H = u * u + alpha * r * r * v * v;
    out.L3 = alpha * r * r * v;
    out.I3 = r * r - 2.0 * r * u * t + out.H * t * t;
    out.i4_defined = v != 0.0;
    if (out.i4_defined) {
        const double sa = std::sqrt(alpha);
        out.I4 = phi + (std::atan((u * r - out.H * t) / (sa * r * r * v)) -
                        std::atan(u / (sa * r * v))) /
                           sa;
    }
    return out;
}

struct S2Integrals {
    double H = 0, L1 = 0, L2 = 0, L3 = 0, I1 = 0, I2 = 0;
    bool i_defined = false;  // I1/I2; false on the zero-velocity and equatorial-circle states
};

inline S2Integrals s2_integrals(double R, int sigma, double t, double theta, double phi,
                                double u, double v) {
    S2Integrals out;
    const double R2 = R * R;
    const double s = std::sin(theta), c = std::cos(theta);
    const double cp = std::cos(phi), sp = std::sin(phi);
    const double w2 = u * u + s * s * v * v;
    out.H = R2 * w2;
    out.L1 = -R2 * (s * c * cp * v + sp * u);
    out.L2 = -R2 * (s * c * sp * v - cp * u);
    out.L3 = R2 * s * s * v;
    const double d2 = u * u + s * s * c * c * v * v;
    out.i_defined = w2 > 0.0 && d2 > 0.0;
    if (out.i_defined) {
        const double w = std::sqrt(w2);
        const double X = std::clamp(c * std::sqrt(w2 / d2), -1.0, 1.0);
        out.I1 = t + sigma * std::asin(X) / w;
        out.I2 = phi + std::atan(v * s * c / u) -
                 std::atan((s * s * v / w) * std::tan(w * t + sigma * std::asin(X)));
    }
    return out;
}

}  // namespace hodoflow::kernels
