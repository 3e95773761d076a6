#pragma once

#include <string>

namespace stefan {

/// Scalar coefficient law of one variable: a constant, scale*x^exponent or
/// scale*exp(rate*x). Used for λ(T), C(T) and for diffusivities d(u).
class CoefficientFn {
public:
    enum class Kind { constant, power_law, exponential };

    static CoefficientFn constant(double value);
    static CoefficientFn power_law(double scale, double exponent);
    static CoefficientFn exponential(double scale, double rate);

    Kind kind() const { return kind_; }
    double scale() const { return scale_; }
    /// Exponent for power laws, rate for exponentials, 0 for constants.
    double shape() const { return shape_; }

    double operator()(double x) const;

    /// Exact ∫_lo^hi f(s) ds. Throws DomainError when the integral diverges
    /// (power law with exponent <= -1 touching 0, negative base).
    double integral(double lo, double hi) const;

    /// Returns hi such that integral(lo, hi) == value.
    double inverse_integral(double lo, double value) const;

    /// True when ∫_0^x f converges for x > 0.
    bool integrable_at_zero() const;

    std::string describe() const;

private:
    CoefficientFn(Kind kind, double scale, double shape);

    Kind kind_;
    double scale_;
    double shape_;
};

}  // namespace stefan
