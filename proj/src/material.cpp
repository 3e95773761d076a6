#include "stefan/material.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "stefan/errors.hpp"

namespace stefan {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool same(double x, double y) { return std::abs(x - y) <= 1e-12 * std::max(1.0, std::abs(y)); }

bool constant_like(const CoefficientFn& f) {
    return f.kind() == CoefficientFn::Kind::constant || f.shape() == 0.0;
}

bool positive_finite(double x) { return std::isfinite(x) && x > 0.0; }

std::string induced(const PhaseCoefficients& c) {
    return "D = C/λ with λ(T) = " + c.conductivity.describe() + ", C(T) = " + c.capacity.describe();
}

double evaluate_D(DiffusivityKind kind, double coeff, double rate, double X) {
    switch (kind) {
        case DiffusivityKind::constant: return coeff * coeff;
        case DiffusivityKind::inverse_square: return coeff * coeff / (X * X);
        case DiffusivityKind::exponential: return coeff * coeff * std::exp(rate * X);
    }
    return coeff * coeff;
}

}  // namespace

std::string to_string(DiffusivityKind kind) {
    switch (kind) {
        case DiffusivityKind::constant: return "constant";
        case DiffusivityKind::inverse_square: return "inverse_square";
        case DiffusivityKind::exponential: return "exponential";
    }
    return "unknown";
}

void MaterialModel::validate() const {
    if (!(Tv > Tm && Tm > T0 && T0 > 0.0))
        throw ValidationError("temperatures must satisfy Tv > Tm > T0 > 0");
    if (!positive_finite(Hv)) throw ValidationError("Hv must be positive");
    if (!positive_finite(Hm)) throw ValidationError("Hm must be positive");
    if (!positive_finite(q0)) throw ValidationError("q0 must be positive");
    for (const auto* ph : {&liquid, &solid}) {
        if (!ph->conductivity.integrable_at_zero())
            throw ValidationError("conductivity " + ph->conductivity.describe() +
                                  " is not integrable at T = 0");
    }
}

void TransformedProblem::validate() const {
    if (!positive_finite(a) || !positive_finite(b)) throw ValidationError("a and b must be positive");
    for (double x : {U1, U2, V2, V0, liquid_exp_rate, solid_exp_rate})
        if (!std::isfinite(x)) throw ValidationError("transformed boundary values must be finite");
    if (!positive_finite(Hv)) throw ValidationError("Hv must be positive");
    if (!positive_finite(Hm)) throw ValidationError("Hm must be positive");
    if (!std::isfinite(q0) || q0 < 0.0) throw ValidationError("q0 must be non-negative");
    if (U1 < U2) throw ValidationError("U1 must not be below U2 (Tv > Tm)");
    if (V2 < V0) throw ValidationError("V2 must not be below V0 (Tm > T0)");
    if (liquid_kind == DiffusivityKind::inverse_square && !(U2 > 0.0))
        throw ValidationError("inverse-square liquid requires U > 0 on [U2, U1]");
    if (solid_kind == DiffusivityKind::inverse_square && !(V0 > 0.0))
        throw ValidationError("inverse-square solid requires V > 0 on [V0, V2]");
    if (liquid_kind == DiffusivityKind::exponential && liquid_exp_rate == 0.0)
        throw ValidationError("exponential liquid diffusivity needs a non-zero rate");
    if (solid_kind == DiffusivityKind::exponential && solid_exp_rate == 0.0)
        throw ValidationError("exponential solid diffusivity needs a non-zero rate");
}

double TransformedProblem::D1(double U) const { return evaluate_D(liquid_kind, a, liquid_exp_rate, U); }
double TransformedProblem::D2(double V) const { return evaluate_D(solid_kind, b, solid_exp_rate, V); }

PhaseMap::PhaseMap(const PhaseCoefficients& coeffs, double fallback_ref) : coeffs_(coeffs) {
    const CoefficientFn& lam = coeffs.conductivity;
    const CoefficientFn& cap = coeffs.capacity;
    if (!lam.integrable_at_zero())
        throw ValidationError("conductivity " + lam.describe() + " is not integrable at T = 0");
    small_ref_T_ = cap.integrable_at_zero() ? 0.0 : fallback_ref;
    if (!(small_ref_T_ >= 0.0)) throw ValidationError("invalid reference temperature");

    const double l0 = lam.scale();
    const double c0 = cap.scale();

    if (constant_like(lam)) {
        if (constant_like(cap)) {
            kind_ = DiffusivityKind::constant;
            coeff_ = std::sqrt(c0 / l0);
            return;
        }
        if (cap.kind() == CoefficientFn::Kind::exponential) {
            kind_ = DiffusivityKind::exponential;
            coeff_ = std::sqrt(c0 / l0);
            exp_rate_ = cap.shape() / l0;
            return;
        }
        if (cap.kind() == CoefficientFn::Kind::power_law && same(cap.shape(), -2.0)) {
            kind_ = DiffusivityKind::inverse_square;
            coeff_ = std::sqrt(c0 * l0);
            return;
        }
    } else if (lam.kind() == CoefficientFn::Kind::power_law) {
        const double k = lam.shape();
        const double m = constant_like(cap) ? 0.0 : cap.shape();
        if (constant_like(cap) || cap.kind() == CoefficientFn::Kind::power_law) {
            if (same(m, k)) {
                kind_ = DiffusivityKind::constant;
                coeff_ = std::sqrt(c0 / l0);
                return;
            }
            if (same(m, -k - 2.0)) {
                kind_ = DiffusivityKind::inverse_square;
                coeff_ = std::sqrt(c0 * l0) / (k + 1.0);
                return;
            }
        }
    } else if (lam.kind() == CoefficientFn::Kind::exponential) {
        const double p = lam.shape();
        const double s = constant_like(cap) ? 0.0 : cap.shape();
        if (constant_like(cap) || cap.kind() == CoefficientFn::Kind::exponential) {
            if (same(s, p)) {
                kind_ = DiffusivityKind::constant;
                coeff_ = std::sqrt(c0 / l0);
                return;
            }
            if (p > 0.0 && same(s, -p)) {
                kind_ = DiffusivityKind::inverse_square;
                coeff_ = std::sqrt(c0 * l0) / p;
                big_offset_ = l0 / p;
                return;
            }
        }
    }
    throw UnsupportedDiffusivity("UnsupportedDiffusivity: " + induced(coeffs) +
                                 " is not of the form a², a²/U² or b²·exp(κV)");
}

double PhaseMap::big(double T) const {
    if (!std::isfinite(T) || T < 0.0) throw DomainError("temperature must be finite and non-negative");
    return coeffs_.conductivity.integral(0.0, T) + big_offset_;
}

double PhaseMap::temperature(double U) const {
    if (!std::isfinite(U)) throw DomainError("transformed value must be finite");
    const double base = big_offset_;
    if (U < base) throw DomainError("transformed value below the image of T >= 0");
    return coeffs_.conductivity.inverse_integral(0.0, U - base);
}

double PhaseMap::small(double T) const {
    if (!std::isfinite(T) || T < 0.0) throw DomainError("temperature must be finite and non-negative");
    return coeffs_.capacity.integral(small_ref_T_, T);
}

double PhaseMap::temperature_from_small(double u) const {
    return coeffs_.capacity.inverse_integral(small_ref_T_, u);
}

double PhaseMap::diffusivity(double u) const {
    const double T = temperature_from_small(u);
    return coeffs_.conductivity(T) / coeffs_.capacity(T);
}

double PhaseMap::D(double U) const {
    const double T = temperature(U);
    return coeffs_.capacity(T) / coeffs_.conductivity(T);
}

double PhaseMap::small_reference() const {
    // u* is where U vanishes (before the canonical offset is applied).
    if (big_offset_ != 0.0 || small_ref_T_ != 0.0) return -kInf;
    return 0.0;
}

double kirchhoff_small(const CoefficientFn& capacity, double T) {
    if (!std::isfinite(T)) throw DomainError("temperature must be finite");
    if (T < 0.0) throw DomainError("temperature must be non-negative");
    if (!capacity.integrable_at_zero())
        throw DomainError("capacity " + capacity.describe() + " is not integrable at 0");
    return capacity.integral(0.0, T);
}

double kirchhoff_big(const CoefficientFn& diffusivity, double u, double ref) {
    if (!std::isfinite(u) || !std::isfinite(ref)) throw DomainError("arguments must be finite");
    if (u < ref) throw DomainError("u lies below the reference point u*");
    if (u == ref) return 0.0;
    return diffusivity.integral(ref, u);
}

double inverse_kirchhoff(const MaterialModel& model, Phase phase, double U) {
    return PhaseMap(model.phase(phase), model.T0).temperature(U);
}

TransformedProblem build_transformed_problem(const MaterialModel& model) {
    model.validate();
    const PhaseMap liquid(model.liquid, model.T0);
    const PhaseMap solid(model.solid, model.T0);
    TransformedProblem p;
    p.liquid_kind = liquid.kind();
    p.solid_kind = solid.kind();
    p.a = liquid.coeff();
    p.b = solid.coeff();
    p.liquid_exp_rate = liquid.exp_rate();
    p.solid_exp_rate = solid.exp_rate();
    p.U1 = liquid.big(model.Tv);
    p.U2 = liquid.big(model.Tm);
    p.V2 = solid.big(model.Tm);
    p.V0 = solid.big(model.T0);
    p.Hv = model.Hv;
    p.Hm = model.Hm;
    p.q0 = model.q0;
    p.ref_u = liquid.small_reference();
    p.ref_v = solid.small_reference();
    p.validate();
    return p;
}

}  // namespace stefan
