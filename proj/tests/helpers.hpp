#pragma once

#include <cmath>
#include <random>

#include "hodoflow/geodesics.hpp"

namespace testutil {

using namespace hodoflow;

inline double urand(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// random interior coordinates, bounded axes kept `margin` away from the ends
inline std::array<double, 3> random_coords(const SurfaceChart& chart, std::mt19937_64& rng,
                                           double margin) {
    std::array<double, 3> x{};
    for (int i = 0; i < chart.dim(); ++i) {
        const CoordRange r = chart.coord_range(i);
        if (r.periodic) {
            x[i] = urand(rng, 0.0, 2.0 * kPi);
        } else if (std::isinf(r.hi)) {
            x[i] = chart.kind == ChartKind::cone ? urand(rng, std::max(margin, 0.3), 3.0)
                                                 : urand(rng, -2.0, 2.0);
        } else {
            x[i] = urand(rng, r.lo + margin, r.hi - margin);
        }
    }
    return x;
}

inline PhaseState random_state(const SurfaceChart& chart, std::mt19937_64& rng, double margin,
                               double vmax) {
    PhaseState s;
    s.x = random_coords(chart, rng, margin);
    for (int i = 0; i < chart.dim(); ++i) s.u[i] = urand(rng, -vmax, vmax);
    return s;
}

// sphere2 state with the ratio k = |L3| / (R sqrt(H)) confined to [kmin, kmax]:
// keeps the geodesic away from the poles and off the equatorial circle where
// the time-dependent integrals degenerate
inline PhaseState random_s2_state_banded(const SurfaceChart& s2, std::mt19937_64& rng,
                                         double kmin, double kmax) {
    (void)s2;
    while (true) {
        const double theta = urand(rng, 0.4, kPi - 0.4);
        const double s = std::sin(theta);
        const double w = urand(rng, 0.4, 1.2);
        const double psi = urand(rng, 0.0, 2.0 * kPi);
        const double k = s * std::abs(std::sin(psi));
        if (k < kmin || k > kmax) continue;
        PhaseState st;
        st.x = {theta, urand(rng, 0.0, 2.0 * kPi), 0.0};
        st.u = {w * std::cos(psi), w * std::sin(psi) / s, 0.0};
        return st;
    }
}

}  // namespace testutil
