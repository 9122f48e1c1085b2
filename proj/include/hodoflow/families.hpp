#pragma once

#include <functional>
#include <optional>
#include <string_view>

#include "hodoflow/charts.hpp"
#include "hodoflow/hodograph.hpp"

namespace hodoflow {

enum class FamilyId {
    cone_linear,
    cone_stationary,
    s2_simplest,
    s2_stat_linear,
    s2_stat_quadratic,
    s2_stat_power,
    s2_stat_log,
    s3_stat_linear,
};

const char* family_name(FamilyId id);
std::optional<FamilyId> family_from_name(std::string_view name);

struct UnsupportedFamily : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// An explicitly evaluable velocity field together with the parameters that tie
// it to its generating hodograph system. The stationary sphere families are
// parametrized in momentum form; their fields scale exactly as 1/R^2 with the
// chart radius. `legacy_variant` switches two families (cone_linear,
// s3_stat_linear) to alternative coefficient forms that are retained only for
// negative regression tests: they do not satisfy the flow equation.
struct SolutionFamily {
    FamilyId id = FamilyId::cone_stationary;
    SurfaceChart chart;
    double a1 = 0, a2 = 0, b1 = 0, b2 = 0, c1 = 0, c2 = 0;
    double a = 0, b = 0, d = 1, m = 1;
    double F1 = 0, F2 = 0;  // s2_simplest constants
    std::array<double, 3> a3{}, b3{}, c3{}, d3{};
    int sheet = +1;
    bool legacy_variant = false;

    static SolutionFamily cone_stationary(double alpha, double a1, double a2, int sheet = +1);
    static SolutionFamily cone_linear(double alpha, double a1, double b1, double a2,
                                      int sheet = +1);
    static SolutionFamily s2_simplest(double R, double F1, double F2, int sheet = +1);
    static SolutionFamily s2_stationary_linear(double R, double a1, double a2, double b1,
                                               double b2);
    static SolutionFamily s2_stationary_quadratic(double R, double a1, double a2, double b1,
                                                  double b2, double c1, double c2, int sheet = +1);
    static SolutionFamily s2_stationary_power(double R, double a, double b, double d, double m);
    static SolutionFamily s2_stationary_log(double R, double a, double b);
    static SolutionFamily s3_stationary_linear(double R, std::array<double, 3> a,
                                               std::array<double, 3> b, std::array<double, 3> c,
                                               std::array<double, 3> dd);

    bool is_stationary() const {
        return id != FamilyId::cone_linear && id != FamilyId::s2_simplest;
    }
};

struct FieldSample {
    std::array<double, 3> u{};
    bool valid = false;
    const char* reason = nullptr;  // set when invalid
};

// A velocity field as a callable: (t, coords) -> sample with validity flag.
using FieldFn = std::function<FieldSample(double t, std::span<const double> coords)>;

// Wraps eval_field of a family.
FieldFn family_field(const SolutionFamily& family);

// Evaluates the family field at (t, coords). Invalid points (negative radicand,
// excluded angle, no root of the scalar equation) come back flagged, never as
// silent NaN.
FieldSample eval_field(const SolutionFamily& family, double t, std::span<const double> coords);

enum class FieldLocation { north_pole, equator };

struct AsymptoticExponents {
    double u_exp = 0.0;
    double v_exp = 0.0;
    // log family: power-law prefactor exponents with an essential exponential
    // cutoff on top (the field still tends to zero at the pole)
    bool exp_suppressed = false;
};

// Predicted leading power laws of the stationary sphere2 families near the
// named location. Supported: s2_stat_linear, s2_stat_power, s2_stat_log.
AsymptoticExponents asymptotic_exponents(const SolutionFamily& family, FieldLocation where);

// For the phi-independent reductions (s2_simplest, cone families with constant
// azimuthal parameter) the radial equation reads du/dt + u du/dx = p'(x); this
// returns p and its analytic derivative.
struct Potential1D {
    std::function<double(double)> p;
    std::function<double(double)> dp;
};
Potential1D reduced_1d_potential(const SolutionFamily& family);

// Generating hodograph system of the family (same parameters), used by the
// closed-form/hodograph equivalence checks and the CLI.
HodographSystem family_hodograph_system(const SolutionFamily& family);

// Locates the finite-time value blow-up of the cone_linear minus sheet at fixed
// radius by bisection on 1/u over [t_lo, t_hi]; nullopt when no blow-up is
// bracketed.
std::optional<double> find_blowup_time(const SolutionFamily& family, double r, double t_lo,
                                       double t_hi);

}  // namespace hodoflow
