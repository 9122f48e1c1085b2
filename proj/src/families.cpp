#include "hodoflow/families.hpp"

#include <cmath>

#include "hodoflow/geodesics.hpp"
#include "hodoflow/linalg.hpp"

namespace hodoflow {

namespace {

constexpr double kDegenerate = 1e-13;

FieldSample invalid(const char* reason) {
    FieldSample s;
    s.valid = false;
    s.reason = reason;
    return s;
}

FieldSample valid2(double u, double v) {
    FieldSample s;
    s.u = {u, v, 0.0};
    s.valid = true;
    return s;
}

bool is_integer(double x) { return x == std::floor(x); }

// xi = (Y/d)^m with the principal branch; integer m admits negative bases.
bool power_xi(double Y, double d, double m, double& xi) {
    const double base = Y / d;
    if (!is_integer(m) && !(base > 0.0)) return false;
    xi = std::pow(base, m);
    return std::isfinite(xi);
}

// Scalar equation of the s2_simplest family: q(w) = (t - F1) w + sigma*asin(X(w)),
// X(w) = cos(theta) * w / sqrt(w^2 - F2^2), on w > wmin = |F2|/sin(theta).
struct SimplestEq {
    double tmf;  // t - F1
    double F22;
    double c;
    int sigma;
    double operator()(double w) const {
        const double arg = std::clamp(c * w / std::sqrt(w * w - F22), -1.0, 1.0);
        return tmf * w + sigma * std::asin(arg);
    }
};

}  // namespace

const char* family_name(FamilyId id) {
    switch (id) {
        case FamilyId::cone_linear: return "cone_linear";
        case FamilyId::cone_stationary: return "cone_stationary";
        case FamilyId::s2_simplest: return "s2_simplest";
        case FamilyId::s2_stat_linear: return "s2_stat_linear";
        case FamilyId::s2_stat_quadratic: return "s2_stat_quadratic";
        case FamilyId::s2_stat_power: return "s2_stat_power";
        case FamilyId::s2_stat_log: return "s2_stat_log";
        case FamilyId::s3_stat_linear: return "s3_stat_linear";
    }
    return "?";
}

std::optional<FamilyId> family_from_name(std::string_view name) {
    for (FamilyId id :
         {FamilyId::cone_linear, FamilyId::cone_stationary, FamilyId::s2_simplest,
          FamilyId::s2_stat_linear, FamilyId::s2_stat_quadratic, FamilyId::s2_stat_power,
          FamilyId::s2_stat_log, FamilyId::s3_stat_linear})
        if (name == family_name(id)) return id;
    return std::nullopt;
}

SolutionFamily SolutionFamily::cone_stationary(double alpha, double a1, double a2, int sheet) {
    SolutionFamily f;
    f.id = FamilyId::cone_stationary;
    f.chart = SurfaceChart::cone(alpha);
    f.a1 = a1;
    f.a2 = a2;
    f.sheet = sheet;
    return f;
}

SolutionFamily SolutionFamily::cone_linear(double alpha, double a1, double b1, double a2,
                                           int sheet) {
    SolutionFamily f;
    f.id = FamilyId::cone_linear;
    f.chart = SurfaceChart::cone(alpha);
    f.a1 = a1;
    f.b1 = b1;
    f.a2 = a2;
    f.sheet = sheet;
    return f;
}

SolutionFamily SolutionFamily::s2_simplest(double R, double F1, double F2, int sheet) {
    SolutionFamily f;
    f.id = FamilyId::s2_simplest;
    f.chart = SurfaceChart::sphere2(R);
    f.F1 = F1;
    f.F2 = F2;
    f.sheet = sheet;
    return f;
}

SolutionFamily SolutionFamily::s2_stationary_linear(double R, double a1, double a2, double b1,
                                                    double b2) {
    SolutionFamily f;
    f.id = FamilyId::s2_stat_linear;
    f.chart = SurfaceChart::sphere2(R);
    f.a1 = a1;
    f.a2 = a2;
    f.b1 = b1;
    f.b2 = b2;
    return f;
}

SolutionFamily SolutionFamily::s2_stationary_quadratic(double R, double a1, double a2, double b1,
                                                       double b2, double c1, double c2,
                                                       int sheet) {
    SolutionFamily f;
    f.id = FamilyId::s2_stat_quadratic;
    f.chart = SurfaceChart::sphere2(R);
    f.a1 = a1;
    f.a2 = a2;
    f.b1 = b1;
    f.b2 = b2;
    f.c1 = c1;
    f.c2 = c2;
    f.sheet = sheet;
    return f;
}

SolutionFamily SolutionFamily::s2_stationary_power(double R, double a, double b, double d,
                                                   double m) {
    if (m == 0.0) throw UnsupportedFamily("s2_stat_power: m must be nonzero");
    if (a == 0.0 && b == 0.0) throw UnsupportedFamily("s2_stat_power: a^2 + b^2 must be positive");
    SolutionFamily f;
    f.id = FamilyId::s2_stat_power;
    f.chart = SurfaceChart::sphere2(R);
    f.a = a;
    f.b = b;
    f.d = d;
    f.m = m;
    return f;
}

SolutionFamily SolutionFamily::s2_stationary_log(double R, double a, double b) {
    if (a == 0.0 && b == 0.0) throw UnsupportedFamily("s2_stat_log: a^2 + b^2 must be positive");
    SolutionFamily f;
    f.id = FamilyId::s2_stat_log;
    f.chart = SurfaceChart::sphere2(R);
    f.a = a;
    f.b = b;
    return f;
}

SolutionFamily SolutionFamily::s3_stationary_linear(double R, std::array<double, 3> a,
                                                    std::array<double, 3> b,
                                                    std::array<double, 3> c,
                                                    std::array<double, 3> dd) {
    SolutionFamily f;
    f.id = FamilyId::s3_stat_linear;
    f.chart = SurfaceChart::sphere3(R);
    f.a3 = a;
    f.b3 = b;
    f.c3 = c;
    f.d3 = dd;
    return f;
}

FieldSample eval_field(const SolutionFamily& fam, double t, std::span<const double> coords) {
    const SurfaceChart& chart = fam.chart;
    if (!chart.interior(coords)) return invalid("coords outside chart");
    const double R2 = chart.radius * chart.radius;

    switch (fam.id) {
        case FamilyId::cone_stationary: {
            const double r = coords[0];
            const double ar2 = chart.alpha * r * r;
            const double v = fam.a2 / ar2;
            const double rad = fam.a1 - fam.a2 * fam.a2 / ar2;
            if (rad < 0.0) return invalid("negative radicand");
            return valid2(fam.sheet * std::sqrt(rad), v);
        }
        case FamilyId::cone_linear: {
            const double r = coords[0];
            const double ar2 = chart.alpha * r * r;
            const double v = fam.a2 / ar2;
            const double den = 1.0 - fam.b1 * t * t;
            if (std::abs(den) < kDegenerate) return invalid("on blow-up slice 1 - b1 t^2 = 0");
            const double q = fam.a2 * fam.a2 / ar2;
            const double disc = fam.legacy_variant
                                    ? fam.b1 * fam.b1 * r * r * t * t + fam.a1 * den - q * den * den
                                    : fam.b1 * r * r + fam.a1 * den - q * den * den;
            if (disc < 0.0) return invalid("negative radicand");
            const double u = (-fam.b1 * r * t + fam.sheet * std::sqrt(disc)) / den;
            return valid2(u, v);
        }
        case FamilyId::s2_simplest: {
            const double theta = coords[0];
            const double s = std::sin(theta), c = std::cos(theta);
            const double v = fam.F2 / (s * s);
            if (std::abs(c) < kDegenerate) {
                // the arcsin term vanishes on the equator: solvable only at t = F1
                return invalid("equator slice is degenerate for this family");
            }
            const SimplestEq q{t - fam.F1, fam.F2 * fam.F2, c, fam.sheet};
            const double wmin = std::abs(fam.F2) / s;
            // outward scan for a sign change, then safeguarded bisection
            double wlo = wmin * (1.0 + 1e-14) + 1e-300;
            double qlo = q(wlo);
            double whi = std::max(wlo * 2.0, wlo + 1.0);
            double qhi = q(whi);
            int expand = 0;
            while (qlo * qhi > 0.0 && expand++ < 60) {
                wlo = whi;
                qlo = qhi;
                whi *= 2.0;
                qhi = q(whi);
            }
            if (qlo * qhi > 0.0) return invalid("no root of the scalar w-equation");
            for (int it = 0; it < 200; ++it) {
                const double wm = 0.5 * (wlo + whi);
                const double qm = q(wm);
                if (qm == 0.0 || (whi - wlo) < 1e-15 * whi) {
                    wlo = whi = wm;
                    break;
                }
                if ((qm > 0.0) == (qhi > 0.0)) {
                    whi = wm;
                    qhi = qm;
                } else {
                    wlo = wm;
                    qlo = qm;
                }
            }
            const double w = 0.5 * (wlo + whi);
            const double rad = w * w - fam.F2 * fam.F2 / (s * s);
            if (rad < -1e-12) return invalid("negative radicand");
            return valid2(fam.sheet * std::sqrt(std::max(rad, 0.0)), v);
        }
        case FamilyId::s2_stat_linear: {
            const double s = std::sin(coords[0]), c = std::cos(coords[0]);
            const double cp = std::cos(coords[1]), sp = std::sin(coords[1]);
            const double D = c - s * (fam.b1 * cp + fam.b2 * sp);
            if (std::abs(D) < kDegenerate) return invalid("on blow-up circle");
            const double num = fam.a1 * cp + fam.a2 * sp;
            const double v = num / (s * D);
            const double u =
                fam.a1 * sp - fam.a2 * cp + s * num * (fam.b1 * sp - fam.b2 * cp) / D;
            return valid2(u / R2, v / R2);
        }
        case FamilyId::s2_stat_quadratic: {
            const double s = std::sin(coords[0]), c = std::cos(coords[0]);
            const double cp = std::cos(coords[1]), sp = std::sin(coords[1]);
            const double A = s * s * s * s * (fam.c1 * cp + fam.c2 * sp);
            const double B = s * s * (fam.b1 * cp + fam.b2 * sp) - s * c;
            const double C = fam.a1 * cp + fam.a2 * sp;
            if (std::abs(A) < kDegenerate) return invalid("quadratic coefficient vanishes");
            const double disc = B * B - 4.0 * A * C;
            if (disc < 0.0) return invalid("negative radicand");
            const double v = (-B + fam.sheet * std::sqrt(disc)) / (2.0 * A);
            const double xi = s * s * v;
            const double u = sp * (fam.a1 + fam.b1 * xi + fam.c1 * xi * xi) -
                             cp * (fam.a2 + fam.b2 * xi + fam.c2 * xi * xi);
            return valid2(u / R2, v / R2);
        }
        case FamilyId::s2_stat_power: {
            const double s = std::sin(coords[0]), c = std::cos(coords[0]);
            const double A = std::hypot(fam.a, fam.b);
            const double ah = std::atan2(fam.a, fam.b);  // sin(ah) = a/A, cos(ah) = b/A
            const double spa = std::sin(coords[1] + ah), cpa = std::cos(coords[1] + ah);
            if (std::abs(spa) < kDegenerate) return invalid("sin(phi + alpha) vanishes");
            const double Y = (c / s) / (A * spa);
            double xi;
            if (!power_xi(Y, fam.d, fam.m, xi)) return invalid("outside power-branch domain");
            const double u = -(cpa / spa) * (c / s) * xi;
            const double v = xi / (s * s);
            if (!std::isfinite(u) || !std::isfinite(v)) return invalid("field not finite");
            return valid2(u / R2, v / R2);
        }
        case FamilyId::s2_stat_log: {
            const double s = std::sin(coords[0]), c = std::cos(coords[0]);
            const double A2 = fam.a * fam.a + fam.b * fam.b;
            const double ah = std::atan2(fam.a, fam.b);
            const double spa = std::sin(coords[1] + ah), cpa = std::cos(coords[1] + ah);
            if (std::abs(spa) < kDegenerate) return invalid("sin(phi + alpha) vanishes");
            const double cot = c / s;
            const double xi = std::exp(-cot * cot / (A2 * spa * spa));
            const double u = -(cpa / spa) * cot * xi;
            const double v = xi / (s * s);
            return valid2(u / R2, v / R2);
        }
        case FamilyId::s3_stat_linear: {
            double P[3][3], Q[3][3], C[3][3];
            s3_momentum_matrices(coords, P, Q);
            for (int i = 0; i < 3; ++i)
                for (int k = 0; k < 3; ++k) {
                    C[i][k] = fam.legacy_variant
                                  ? Q[i][k] - fam.b3[i] * P[0][k] - fam.c3[i] * Q[1][k] -
                                        fam.d3[i] * Q[2][k]
                                  : Q[i][k] - fam.b3[i] * P[0][k] - fam.c3[i] * P[1][k] -
                                        fam.d3[i] * P[2][k];
                }
            if (std::abs(linalg::det(C, 3)) < kDegenerate) return invalid("singular C matrix");
            double rhs[3] = {fam.a3[0], fam.a3[1], fam.a3[2]};
            double u[3];
            if (!linalg::solve(C, rhs, u, 3)) return invalid("singular C matrix");
            FieldSample out;
            out.valid = true;
            for (int i = 0; i < 3; ++i) out.u[i] = u[i] / R2;
            return out;
        }
    }
    return invalid("unknown family");
}

AsymptoticExponents asymptotic_exponents(const SolutionFamily& fam, FieldLocation where) {
    switch (fam.id) {
        case FamilyId::s2_stat_linear:
            return where == FieldLocation::north_pole ? AsymptoticExponents{0.0, -1.0, false}
                                                      : AsymptoticExponents{0.0, 0.0, false};
        case FamilyId::s2_stat_power:
            return where == FieldLocation::north_pole
                       ? AsymptoticExponents{-1.0 - fam.m, -2.0 - fam.m, false}
                       : AsymptoticExponents{fam.m + 1.0, fam.m, false};
        case FamilyId::s2_stat_log:
            return where == FieldLocation::north_pole ? AsymptoticExponents{-1.0, -2.0, true}
                                                      : AsymptoticExponents{1.0, 0.0, true};
        default:
            throw UnsupportedFamily(std::string("asymptotic_exponents: unsupported family ") +
                                    family_name(fam.id));
    }
}

Potential1D reduced_1d_potential(const SolutionFamily& fam) {
    switch (fam.id) {
        case FamilyId::s2_simplest: {
            const double F22 = fam.F2 * fam.F2;
            return {[F22](double theta) {
                        const double s = std::sin(theta);
                        return -0.5 * F22 / (s * s);
                    },
                    [F22](double theta) {
                        const double s = std::sin(theta);
                        return F22 * std::cos(theta) / (s * s * s);
                    }};
        }
        case FamilyId::cone_stationary:
        case FamilyId::cone_linear: {
            const double a22 = fam.a2 * fam.a2;
            const double alpha = fam.chart.alpha;
            return {[a22, alpha](double r) { return -0.5 * a22 / (alpha * r * r); },
                    [a22, alpha](double r) { return a22 / (alpha * r * r * r); }};
        }
        default:
            throw UnsupportedFamily(std::string("reduced_1d_potential: unsupported family ") +
                                    family_name(fam.id));
    }
}

HodographSystem family_hodograph_system(const SolutionFamily& fam) {
    switch (fam.id) {
        case FamilyId::cone_stationary: {
            const double a1 = fam.a1, a2 = fam.a2;
            return make_cone_alt_system(
                fam.chart, [a1](double, double) { return a1; },
                [a2](double, double) { return a2; });
        }
        case FamilyId::cone_linear: {
            const double a1 = fam.a1, b1 = fam.b1, a2 = fam.a2;
            return make_cone_alt_system(
                fam.chart, [a1, b1](double i3, double) { return a1 + b1 * i3; },
                [a2](double, double) { return a2; });
        }
        case FamilyId::s2_simplest: {
            const double f1 = fam.F1, f2 = fam.F2;
            return make_s2_system(
                fam.chart, [f1](double, double) { return f1; },
                [f2](double, double) { return f2; }, fam.sheet);
        }
        case FamilyId::s2_stat_linear:
            return make_s2_stationary_system(fam.chart, ScalarFn::linear(fam.a1, fam.b1),
                                             ScalarFn::linear(fam.a2, fam.b2));
        case FamilyId::s2_stat_quadratic:
            return make_s2_stationary_system(fam.chart,
                                             ScalarFn::quadratic(fam.a1, fam.b1, fam.c1),
                                             ScalarFn::quadratic(fam.a2, fam.b2, fam.c2));
        case FamilyId::s2_stat_power:
            return make_s2_stationary_system(fam.chart,
                                             ScalarFn::power_product(fam.a, fam.d, fam.m),
                                             ScalarFn::power_product(fam.b, fam.d, fam.m));
        case FamilyId::s2_stat_log:
            return make_s2_stationary_system(fam.chart, ScalarFn::log_product(fam.a),
                                             ScalarFn::log_product(fam.b));
        case FamilyId::s3_stat_linear: {
            const auto a = fam.a3, b = fam.b3, c = fam.c3, d = fam.d3;
            auto Fi = [](double ai, double bi, double ci, double di) {
                return [ai, bi, ci, di](double L1, double L2, double L3) {
                    return ai + bi * L1 + ci * L2 + di * L3;
                };
            };
            return make_s3_stationary_system(fam.chart, Fi(a[0], b[0], c[0], d[0]),
                                             Fi(a[1], b[1], c[1], d[1]),
                                             Fi(a[2], b[2], c[2], d[2]));
        }
    }
    throw UnsupportedFamily("family_hodograph_system: unknown family");
}

FieldFn family_field(const SolutionFamily& family) {
    return [family](double t, std::span<const double> coords) {
        return eval_field(family, t, coords);
    };
}

std::optional<double> find_blowup_time(const SolutionFamily& fam, double r, double t_lo,
                                       double t_hi) {
    const double coords[2] = {r, 0.0};
    auto recip_u = [&](double t) -> std::optional<double> {
        const FieldSample s = eval_field(fam, t, std::span<const double>(coords, 2));
        if (!s.valid) return std::nullopt;
        if (std::isinf(s.u[0])) return 0.0;
        return 1.0 / s.u[0];
    };
    const int scan = 400;
    double prev_t = t_lo;
    auto prev_q = recip_u(t_lo);
    for (int k = 1; k <= scan; ++k) {
        const double tk = t_lo + (t_hi - t_lo) * k / scan;
        const auto qk = recip_u(tk);
        if (prev_q && qk && *prev_q * *qk <= 0.0 && (*prev_q != 0.0 || *qk != 0.0)) {
            // golden-ratio probes so the singular slice is never re-hit exactly
            double lo = prev_t, hi = tk, qlo = *prev_q;
            for (int it = 0; it < 120; ++it) {
                const double width = hi - lo;
                if (width < 1e-10) break;
                double mid = lo + 0.61803398874989485 * width;
                auto qm = recip_u(mid);
                if (!qm) {
                    mid = lo + 0.38196601125010515 * width;
                    qm = recip_u(mid);
                }
                if (!qm) {
                    if (width < 1e-6) return 0.5 * (lo + hi);
                    return std::nullopt;
                }
                if (*qm == 0.0) return mid;
                if ((*qm > 0.0) == (qlo > 0.0)) {
                    lo = mid;
                    qlo = *qm;
                } else {
                    hi = mid;
                }
            }
            return 0.5 * (lo + hi);
        }
        if (qk) {
            // invalid probes never displace the bracket end
            prev_t = tk;
            prev_q = qk;
        }
    }
    return std::nullopt;
}

}  // namespace hodoflow
