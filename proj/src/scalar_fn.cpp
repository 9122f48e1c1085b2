#include "hodoflow/scalar_fn.hpp"

#include <algorithm>
#include <cmath>

namespace hodoflow {

ScalarFn ScalarFn::constant(double a) {
    ScalarFn f;
    f.type_ = Type::constant;
    f.a_ = a;
    return f;
}

ScalarFn ScalarFn::linear(double a, double b) {
    ScalarFn f;
    f.type_ = Type::linear;
    f.a_ = a;
    f.b_ = b;
    return f;
}

ScalarFn ScalarFn::quadratic(double a, double b, double c) {
    ScalarFn f;
    f.type_ = Type::quadratic;
    f.a_ = a;
    f.b_ = b;
    f.c_ = c;
    return f;
}

ScalarFn ScalarFn::power_product(double coef, double d, double m) {
    if (m == 0.0) throw std::invalid_argument("power_product: m must be nonzero");
    ScalarFn f;
    f.type_ = Type::power_product;
    f.coef_ = coef;
    f.d_ = d;
    f.m_ = m;
    return f;
}

ScalarFn ScalarFn::log_product(double coef) {
    ScalarFn f;
    f.type_ = Type::log_product;
    f.coef_ = coef;
    return f;
}

ScalarFn ScalarFn::tabulated(std::vector<double> x, std::vector<double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("tabulated: need matching x/y with >= 2 knots");
    for (size_t i = 1; i < x.size(); ++i)
        if (!(x[i] > x[i - 1])) throw std::invalid_argument("tabulated: x must be increasing");

    const size_t n = x.size();
    std::vector<double> d(n - 1), slope(n);
    for (size_t i = 0; i + 1 < n; ++i) d[i] = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
    slope[0] = d[0];
    slope[n - 1] = d[n - 2];
    for (size_t i = 1; i + 1 < n; ++i)
        slope[i] = (d[i - 1] * d[i] <= 0.0) ? 0.0 : 0.5 * (d[i - 1] + d[i]);
    // Fritsch-Carlson limiter keeps the interpolant monotone on monotone data
    for (size_t i = 0; i + 1 < n; ++i) {
        if (d[i] == 0.0) {
            slope[i] = slope[i + 1] = 0.0;
            continue;
        }
        const double alpha = slope[i] / d[i], beta = slope[i + 1] / d[i];
        const double s2 = alpha * alpha + beta * beta;
        if (s2 > 9.0) {
            const double tau = 3.0 / std::sqrt(s2);
            slope[i] = tau * alpha * d[i];
            slope[i + 1] = tau * beta * d[i];
        }
    }

    auto table = std::make_shared<Table>();
    table->x = std::move(x);
    table->y = std::move(y);
    table->slope = std::move(slope);
    ScalarFn f;
    f.type_ = Type::tabulated;
    f.table_ = std::move(table);
    return f;
}

int ScalarFn::Table::interval(double q) const {
    const auto it = std::upper_bound(x.begin(), x.end(), q);
    int i = static_cast<int>(it - x.begin()) - 1;
    return std::clamp(i, 0, static_cast<int>(x.size()) - 2);
}

bool ScalarFn::in_domain(double x) const {
    switch (type_) {
        case Type::power_product: {
            const double e = 1.0 + 1.0 / m_;
            if (e == std::floor(e)) return true;
            return x > 0.0;
        }
        case Type::log_product:
            return x > 0.0 && x < 1.0;
        case Type::tabulated:
            return x >= table_->x.front() && x <= table_->x.back();
        default:
            return true;
    }
}

double ScalarFn::operator()(double x) const {
    switch (type_) {
        case Type::constant:
            return a_;
        case Type::linear:
            return a_ + b_ * x;
        case Type::quadratic:
            return a_ + b_ * x + c_ * x * x;
        case Type::power_product:
            return coef_ * d_ * std::pow(x, 1.0 + 1.0 / m_);
        case Type::log_product:
            return coef_ * x * std::sqrt(std::log(1.0 / x));
        case Type::tabulated: {
            const Table& T = *table_;
            const int i = T.interval(x);
            const double h = T.x[i + 1] - T.x[i];
            const double s = (x - T.x[i]) / h;
            const double s2 = s * s, s3 = s2 * s;
            return (2 * s3 - 3 * s2 + 1) * T.y[i] + (s3 - 2 * s2 + s) * h * T.slope[i] +
                   (-2 * s3 + 3 * s2) * T.y[i + 1] + (s3 - s2) * h * T.slope[i + 1];
        }
    }
    return 0.0;
}

double ScalarFn::deriv(double x) const {
    switch (type_) {
        case Type::constant:
            return 0.0;
        case Type::linear:
            return b_;
        case Type::quadratic:
            return b_ + 2.0 * c_ * x;
        case Type::power_product: {
            const double e = 1.0 + 1.0 / m_;
            return coef_ * d_ * e * std::pow(x, e - 1.0);
        }
        case Type::log_product: {
            const double L = std::sqrt(std::log(1.0 / x));
            return coef_ * (L - 0.5 / L);
        }
        case Type::tabulated: {
            const Table& T = *table_;
            const int i = T.interval(x);
            const double h = T.x[i + 1] - T.x[i];
            const double s = (x - T.x[i]) / h;
            const double s2 = s * s;
            return ((6 * s2 - 6 * s) * T.y[i] + (3 * s2 - 4 * s + 1) * h * T.slope[i] +
                    (-6 * s2 + 6 * s) * T.y[i + 1] + (3 * s2 - 2 * s) * h * T.slope[i + 1]) /
                   h;
        }
    }
    return 0.0;
}

}  // namespace hodoflow
