#pragma once

#include <memory>
#include <stdexcept>
#include <vector>

namespace hodoflow {

// One-variable parameter function for the stationary hodograph systems, with an
// analytic derivative. Built-ins cover the parametric families plus a tabulated
// escape hatch (monotone cubic, Fritsch-Carlson).
class ScalarFn {
  public:
    ScalarFn() : type_(Type::constant) {}

    static ScalarFn constant(double a);
    static ScalarFn linear(double a, double b);                // a + b x
    static ScalarFn quadratic(double a, double b, double c);   // a + b x + c x^2
    static ScalarFn power_product(double coef, double d, double m);  // coef * d * x^(1 + 1/m)
    static ScalarFn log_product(double coef);                  // coef * x * sqrt(log(1/x))
    static ScalarFn tabulated(std::vector<double> x, std::vector<double> y);

    double operator()(double x) const;
    double deriv(double x) const;
    bool in_domain(double x) const;

  private:
    enum class Type { constant, linear, quadratic, power_product, log_product, tabulated };

    struct Table {
        std::vector<double> x, y, slope;  // slope = Hermite tangents
        int interval(double q) const;
    };

    Type type_;
    double a_ = 0.0, b_ = 0.0, c_ = 0.0;
    double coef_ = 0.0, d_ = 1.0, m_ = 1.0;
    std::shared_ptr<const Table> table_;
};

}  // namespace hodoflow
