#pragma once

#include <string>

#include "stefan/coefficient.hpp"
#include "stefan/errors.hpp"

namespace stefan {

/// Integrable diffusivity families of the reduced ODEs
///   U'' + (ω/2)·D(U)·U' = 0.
enum class DiffusivityKind {
    constant,        ///< D(U) = a²
    inverse_square,  ///< D(U) = a²/U²
    exponential,     ///< D(V) = b²·exp(κV)
};

std::string to_string(DiffusivityKind kind);

enum class Phase { liquid, solid };

struct PhaseCoefficients {
    CoefficientFn conductivity;  ///< λ(T), W/(K·m)
    CoefficientFn capacity;      ///< C(T), J/(K·m³)
};

/// Physical two-phase model. All quantities SI.
struct MaterialModel {
    PhaseCoefficients liquid;
    PhaseCoefficients solid;
    double Hv = 0.0;  ///< latent heat of evaporation, J/m³
    double Hm = 0.0;  ///< latent heat of melting, J/m³
    double Tv = 0.0;
    double Tm = 0.0;
    double T0 = 0.0;
    double q0 = 0.0;  ///< flux amplitude, q(t) = q0/√t

    void validate() const;
    const PhaseCoefficients& phase(Phase p) const { return p == Phase::liquid ? liquid : solid; }
};

/// Boundary value problem for the reduced ODEs in the variables U, V.
struct TransformedProblem {
    DiffusivityKind liquid_kind = DiffusivityKind::constant;
    DiffusivityKind solid_kind = DiffusivityKind::constant;
    double a = 1.0;
    double b = 1.0;
    /// κ in D = a²·exp(κU) / b²·exp(κV); only read for exponential kinds.
    double liquid_exp_rate = 1.0;
    double solid_exp_rate = 1.0;
    double U1 = 0.0;
    double U2 = 0.0;
    double V2 = 0.0;
    double V0 = 0.0;
    double Hv = 0.0;
    double Hm = 0.0;
    double q0 = 0.0;
    /// Lower reference points u*, v* of the second Kirchhoff integral
    /// (−inf when the reference lies at T → −∞ or at a divergent end).
    double ref_u = 0.0;
    double ref_v = 0.0;

    void validate() const;
    double D1(double U) const;
    double D2(double V) const;
};

/// Two-stage Kirchhoff transform of one phase: T ↦ u = ∫C dT and
/// T ↦ U = ∫d du = ∫λ dT (plus the offset that puts D in canonical form).
class PhaseMap {
public:
    /// `fallback_ref` is used as the lower limit of u = ∫C dT when C is not
    /// integrable at 0.
    PhaseMap(const PhaseCoefficients& coeffs, double fallback_ref);

    DiffusivityKind kind() const { return kind_; }
    /// a (liquid) or b (solid).
    double coeff() const { return coeff_; }
    double exp_rate() const { return exp_rate_; }

    double big(double T) const;
    double temperature(double U) const;
    double small(double T) const;
    double temperature_from_small(double u) const;
    /// d(u) = λ/C at the temperature belonging to u.
    double diffusivity(double u) const;
    /// D(U) = 1/d evaluated through the temperature.
    double D(double U) const;
    /// u* in the notation of the small variable.
    double small_reference() const;

private:
    PhaseCoefficients coeffs_;
    DiffusivityKind kind_ = DiffusivityKind::constant;
    double coeff_ = 1.0;
    double exp_rate_ = 1.0;
    double big_offset_ = 0.0;
    double small_ref_T_ = 0.0;
};

/// u = ∫_0^T C(s) ds.
double kirchhoff_small(const CoefficientFn& capacity, double T);

/// U = ∫_{ref}^{u} d(s) ds.
double kirchhoff_big(const CoefficientFn& diffusivity, double u, double ref);

/// Physical temperature belonging to transformed value U (or V) of a phase.
double inverse_kirchhoff(const MaterialModel& model, Phase phase, double U);

TransformedProblem build_transformed_problem(const MaterialModel& model);

}  // namespace stefan
