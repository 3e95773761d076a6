#include "stefan/coefficient.hpp"

#include <cmath>
#include <sstream>

#include "stefan/errors.hpp"

namespace stefan {

namespace {

bool is_minus_one(double p) { return std::abs(p + 1.0) <= 1e-14; }

}  // namespace

CoefficientFn::CoefficientFn(Kind kind, double scale, double shape)
    : kind_(kind), scale_(scale), shape_(shape) {
    if (!std::isfinite(scale) || scale <= 0.0)
        throw ValidationError("coefficient scale must be positive and finite, got " +
                              std::to_string(scale));
    if (!std::isfinite(shape))
        throw ValidationError("coefficient exponent/rate must be finite");
}

CoefficientFn CoefficientFn::constant(double value) { return {Kind::constant, value, 0.0}; }

CoefficientFn CoefficientFn::power_law(double scale, double exponent) {
    return {Kind::power_law, scale, exponent};
}

CoefficientFn CoefficientFn::exponential(double scale, double rate) {
    return {Kind::exponential, scale, rate};
}

double CoefficientFn::operator()(double x) const {
    switch (kind_) {
        case Kind::constant: return scale_;
        case Kind::power_law: return scale_ * std::pow(x, shape_);
        case Kind::exponential: return scale_ * std::exp(shape_ * x);
    }
    return scale_;
}

bool CoefficientFn::integrable_at_zero() const {
    return kind_ != Kind::power_law || shape_ > -1.0;
}

double CoefficientFn::integral(double lo, double hi) const {
    if (!std::isfinite(lo) || !std::isfinite(hi))
        throw DomainError("integration bounds must be finite");
    switch (kind_) {
        case Kind::constant: return scale_ * (hi - lo);
        case Kind::power_law: {
            if (lo < 0.0 || hi < 0.0)
                throw DomainError("power-law coefficient is defined for non-negative arguments only");
            if (shape_ <= -1.0 && (lo == 0.0 || hi == 0.0))
                throw DomainError("power-law integral with exponent " + std::to_string(shape_) +
                                  " diverges at 0");
            if (is_minus_one(shape_)) return scale_ * std::log(hi / lo);
            const double p1 = shape_ + 1.0;
            return scale_ * (std::pow(hi, p1) - std::pow(lo, p1)) / p1;
        }
        case Kind::exponential: {
            if (shape_ == 0.0) return scale_ * (hi - lo);
            return scale_ / shape_ * std::exp(shape_ * lo) * std::expm1(shape_ * (hi - lo));
        }
    }
    return 0.0;
}

double CoefficientFn::inverse_integral(double lo, double value) const {
    switch (kind_) {
        case Kind::constant: return lo + value / scale_;
        case Kind::power_law: {
            if (is_minus_one(shape_)) return lo * std::exp(value / scale_);
            const double p1 = shape_ + 1.0;
            const double base = std::pow(lo, p1) + p1 * value / scale_;
            if (base < 0.0 || (base == 0.0 && p1 < 0.0))
                throw DomainError("value outside the range of the power-law integral");
            return std::pow(base, 1.0 / p1);
        }
        case Kind::exponential: {
            if (shape_ == 0.0) return lo + value / scale_;
            const double arg = shape_ * value / (scale_ * std::exp(shape_ * lo));
            if (arg <= -1.0) throw DomainError("value outside the range of the exponential integral");
            return lo + std::log1p(arg) / shape_;
        }
    }
    return lo;
}

std::string CoefficientFn::describe() const {
    std::ostringstream os;
    os.precision(17);
    switch (kind_) {
        case Kind::constant: os << scale_; break;
        case Kind::power_law: os << scale_ << "*s^(" << shape_ << ")"; break;
        case Kind::exponential: os << scale_ << "*exp(" << shape_ << "*s)"; break;
    }
    return os.str();
}

}  // namespace stefan
