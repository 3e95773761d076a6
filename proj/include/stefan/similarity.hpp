#pragma once

#include <limits>
#include <optional>
#include <utility>
#include <variant>

#include "stefan/implicit_relation.hpp"
#include "stefan/material.hpp"

namespace stefan {

/// U(ω) = c2 + c1·(√π/coeff)·erf(coeff·ω/2); solution for D = coeff².
struct ErfProfile {
    double c1 = 0.0;
    double c2 = 0.0;
    double coeff = 1.0;
    /// c2 + c1·√π/coeff computed without cancellation; NaN when unknown.
    double at_infinity = std::numeric_limits<double>::quiet_NaN();
};

/// Parametric solution for D = coeff²/U²:
///   U(τ) = c1·(√π/2·erf τ + c2),  ω(τ) = (2τU + c1·e^{−τ²})/coeff.
struct ParametricPowerProfile {
    double c1 = 0.0;
    double c2 = 0.0;
    double coeff = 1.0;
    double tau_lo = 0.0;
    double tau_hi = 0.0;  ///< may be +inf for the solid phase
};

/// Parametric solution for D(V) = coeff²·exp(κV), written for W = κV:
///   W(ν) = W_anchor + ∫_{ν_anchor}^{ν} ds/g(s),  ω(ν) = ν·e^{−W/2},
/// with g from the implicit relation with constant c3.
struct ParametricExpProfile {
    double c3 = 0.0;
    double nu_anchor = 0.0;
    double value_anchor = 0.0;  ///< V at nu_anchor
    double coeff = 1.0;
    double kappa = 1.0;
    ImplicitBranch branch = ImplicitBranch::lower;
    double nu_lo = 0.0;
};

using Profile = std::variant<ErfProfile, ParametricPowerProfile, ParametricExpProfile>;

/// Value and ω-derivatives of a profile at one point.
struct ProfileSample {
    double value = 0.0;
    double slope = 0.0;
    double curvature = 0.0;
};

struct ParametricPoint {
    double omega = 0.0;
    double value = 0.0;
};

struct SimilaritySolution {
    Profile liquid;
    Profile solid;
    double omega1 = 0.0;
    double omega2 = 0.0;
    std::optional<double> tau1;
    std::optional<double> tau2;
    std::optional<double> nu2;
    TransformedProblem problem;
};

// -- erf family ------------------------------------------------------------

ErfProfile fit_erf_liquid(const TransformedProblem& p, double omega1, double omega2);
ErfProfile fit_erf_solid(const TransformedProblem& p, double omega2);
double eval_erf(const ErfProfile& profile, double omega);

// -- inverse-square family ------------------------------------------------

/// Liquid profile through (τ1, U1) and (τ2, U2); working range τ1..τ2 ± 10%.
ParametricPowerProfile fit_power_liquid(const TransformedProblem& p, double tau1, double tau2);
/// Solid profile through (ν2, V2) with V → V0 as ν → ∞.
ParametricPowerProfile fit_power_solid(const TransformedProblem& p, double nu2);
ParametricPoint eval_param_power(const ParametricPowerProfile& profile, double tau);

// -- exponential family ---------------------------------------------------

/// Root g of ln|2g−ν| − ν/(2g−ν) − (b²/4)ν² = c3 (double precision entry point).
double solve_implicit_g(double c3, double b, double nu, ImplicitBranch branch = ImplicitBranch::upper);
/// Solid profile anchored at (ν2, V2) whose slope parameter there is g2;
/// c3 follows from the implicit relation and the branch from sign(2g2 − ν2).
ParametricExpProfile fit_exp_solid(const TransformedProblem& p, double nu2, double g2);
ParametricPoint eval_param_exp(const ParametricExpProfile& profile, double nu);
/// V(ν → ∞) together with the truncation bound of the tail integral.
std::pair<double, double> exp_profile_limit(const ParametricExpProfile& profile);

// -- shared ---------------------------------------------------------------

double invert_omega(const ParametricPowerProfile& profile, double omega);
double invert_omega(const ParametricExpProfile& profile, double omega);

/// Evaluates value and analytic ω-derivatives at ω.
ProfileSample sample(const Profile& profile, double omega);
double eval(const Profile& profile, double omega);

struct OdeResidual {
    double residual = 0.0;
    /// max(|U''|, |(ω/2)·D·U'|), the natural size of the two terms.
    double scale = 0.0;
};

/// U'' + (ω/2)·D(U)·U' for the diffusivity family the profile belongs to.
OdeResidual ode_residual(const Profile& profile, double omega);

struct FieldValue {
    Phase phase = Phase::liquid;
    double value = 0.0;  ///< U in the liquid, V in the solid
};

/// Transformed field at (t, x); throws DomainError for x < S1(t).
FieldValue reconstruct_transformed(const SimilaritySolution& sol, double t, double x);

/// Physical temperature at (t, x).
double reconstruct_field(const SimilaritySolution& sol, const MaterialModel& model, double t, double x);

}  // namespace stefan
