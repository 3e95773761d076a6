#include "stefan/similarity.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "stefan/errors.hpp"
#include "stefan/quadrature.hpp"
#include "stefan/special.hpp"

namespace stefan {

namespace {

constexpr double kSqrtPi = sqrt_pi_v<double>;
constexpr double kInf = std::numeric_limits<double>::infinity();

std::string interval_text(double lo, double hi) {
    std::ostringstream os;
    os.precision(17);
    os << "[" << lo << ", " << hi << "]";
    return os.str();
}

bool within(double value, double target) {
    return std::abs(value - target) <= 1e-12 * std::max(1.0, std::abs(target));
}

// Bracketed Newton for an increasing map f on [lo, hi] (hi may be +inf).
template <class F, class DF>
double invert_increasing(F&& f, DF&& df, double lo, double hi, double target) {
    double f_lo = f(lo);
    if (target < f_lo) {
        if (within(f_lo, target)) return lo;
        throw DomainError("omega " + std::to_string(target) + " outside the admissible interval " +
                          interval_text(f_lo, std::isinf(hi) ? kInf : f(hi)));
    }
    if (std::isinf(hi)) {
        double step = std::max(1.0, std::abs(lo));
        hi = lo + step;
        while (f(hi) < target) {
            lo = hi;
            step *= 2;
            hi = lo + step;
            if (step > 1e12) throw DomainError("omega outside the image of the parametric map");
        }
    } else {
        const double f_hi = f(hi);
        if (target > f_hi) {
            if (within(f_hi, target)) return hi;
            throw DomainError("omega " + std::to_string(target) + " outside the admissible interval " +
                              interval_text(f_lo, f_hi));
        }
    }
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        const double r = f(x) - target;
        if (r == 0.0) return x;
        if (r < 0.0)
            lo = x;
        else
            hi = x;
        double next = x - r / df(x);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - x) <= 2e-16 * std::max(1.0, std::abs(x))) return next;
        x = next;
    }
    return x;
}

// ---- exponential family helpers -----------------------------------------

// Integrand 1/g(ν) with a per-call memo on ν.
class ExpIntegrand {
public:
    explicit ExpIntegrand(const ParametricExpProfile& p) : p_(p) {}

    double g(double nu) {
        auto it = cache_.find(nu);
        if (it != cache_.end()) return it->second;
        const double value = stefan::solve_implicit_g<double>(p_.c3, p_.coeff, nu, p_.branch);
        cache_.emplace(nu, value);
        return value;
    }
    double operator()(double nu) { return 1.0 / g(nu); }

private:
    const ParametricExpProfile& p_;
    std::unordered_map<double, double> cache_;
};

QuadratureOptions<double> exp_quadrature() { return {1e-12, 1e-10, 4000}; }

void check_exp_nu(const ParametricExpProfile& p, double nu) {
    if (!(nu >= p.nu_lo))
        throw DomainError("nu " + std::to_string(nu) + " below the working range starting at " +
                          std::to_string(p.nu_lo));
}

// W = κV at ν.
double exp_w(const ParametricExpProfile& p, ExpIntegrand& integrand, double nu) {
    const double w_anchor = p.kappa * p.value_anchor;
    if (nu == p.nu_anchor) return w_anchor;
    auto res = integrate<double>(integrand, p.nu_anchor, nu, exp_quadrature());
    return w_anchor + res.value;
}

// ---- samples per family -------------------------------------------------

ProfileSample sample_erf(const ErfProfile& p, double omega) {
    const double k = p.coeff;
    const double slope = p.c1 * std::exp(-k * k * omega * omega / 4.0);
    return {eval_erf(p, omega), slope, -k * k * omega / 2.0 * slope};
}

ProfileSample sample_power_tau(const ParametricPowerProfile& p, double tau) {
    const auto pt = eval_param_power(p, tau);
    const double U = pt.value;
    const double U_tau = p.c1 * std::exp(-tau * tau);
    const double slope = p.coeff * U_tau / (2.0 * U);
    const double curvature = slope * (-2.0 * tau - U_tau / U) * p.coeff / (2.0 * U);
    return {U, slope, curvature};
}

ProfileSample sample_exp_nu(const ParametricExpProfile& p, ExpIntegrand& integrand, double nu) {
    const double w = exp_w(p, integrand, nu);
    const double g = integrand.g(nu);
    const double h = 2.0 * g - nu;
    const double b = p.coeff;
    const double ew = std::exp(w / 2.0);
    const double w_omega = 2.0 * ew / h;
    const double h_nu = (h + b * b * nu * h * h / 2.0) / (h + nu);
    const double dwo_dnu = 2.0 * ew * (1.0 / (2.0 * g * h) - h_nu / (h * h));
    const double omega_nu = h / (2.0 * g * ew);
    const double w_omega2 = dwo_dnu / omega_nu;
    return {w / p.kappa, w_omega / p.kappa, w_omega2 / p.kappa};
}

}  // namespace

// ---------------------------------------------------------------------------

ErfProfile fit_erf_liquid(const TransformedProblem& p, double omega1, double omega2) {
    if (!(omega1 > 0.0 && omega2 > omega1))
        throw DomainError("fit_erf_liquid requires omega2 > omega1 > 0");
    const double a = p.a;
    const double x1 = a * omega1 / 2.0;
    const double x2 = a * omega2 / 2.0;
    const double delta = erf_diff(x2, x1);
    if (!(delta > 0.0)) throw SingularFit("erf(a*omega2/2) equals erf(a*omega1/2); interval is degenerate");
    ErfProfile prof;
    prof.coeff = a;
    prof.c1 = a / kSqrtPi * (p.U2 - p.U1) / delta;
    prof.c2 = p.U1 - prof.c1 * kSqrtPi / a * std::erf(x1);
    return prof;
}

ErfProfile fit_erf_solid(const TransformedProblem& p, double omega2) {
    if (!(omega2 > 0.0)) throw DomainError("fit_erf_solid requires omega2 > 0");
    const double b = p.b;
    const double x2 = b * omega2 / 2.0;
    const double tail = std::erfc(x2);
    if (tail < std::numeric_limits<double>::epsilon())
        throw SingularFit("erf(b*omega2/2) is 1 to machine precision; omega2 too large for b");
    ErfProfile prof;
    prof.coeff = b;
    prof.c1 = b / kSqrtPi * (p.V2 - p.V0) / erf_minus_one(x2);
    prof.c2 = p.V0 - prof.c1 * kSqrtPi / b;
    prof.at_infinity = p.V0;
    return prof;
}

double eval_erf(const ErfProfile& profile, double omega) {
    const double x = profile.coeff * omega / 2.0;
    const double scale = profile.c1 * kSqrtPi / profile.coeff;
    // Far tail: erf(x) rounds towards 1, so work with erfc.
    if (x > 0.5 && std::isfinite(profile.at_infinity)) return profile.at_infinity - scale * std::erfc(x);
    return profile.c2 + scale * std::erf(x);
}

// ---------------------------------------------------------------------------

ParametricPowerProfile fit_power_liquid(const TransformedProblem& p, double tau1, double tau2) {
    if (!(tau2 > tau1)) throw DomainError("fit_power_liquid requires tau2 > tau1");
    if (p.U1 == p.U2) throw SingularFit("U1 == U2 leaves the inverse-square profile undetermined");
    const double delta = erf_diff(tau2, tau1);
    if (!(delta > 0.0)) throw SingularFit("erf(tau2) equals erf(tau1)");
    ParametricPowerProfile prof;
    prof.coeff = p.a;
    prof.c1 = 2.0 / kSqrtPi * (p.U2 - p.U1) / delta;
    prof.c2 = p.U1 / prof.c1 - kSqrtPi / 2.0 * std::erf(tau1);
    const double margin = 0.1 * (tau2 - tau1);
    prof.tau_lo = tau1;
    prof.tau_hi = tau2;
    // Widen only as far as U stays positive (U is monotone in τ).
    ParametricPowerProfile probe = prof;
    probe.tau_lo = tau1 - margin;
    probe.tau_hi = tau2 + margin;
    auto U = [&](double tau) { return prof.c1 * (kSqrtPi / 2.0 * std::erf(tau) + prof.c2); };
    if (U(probe.tau_lo) > 0.0) prof.tau_lo = probe.tau_lo;
    if (U(probe.tau_hi) > 0.0) prof.tau_hi = probe.tau_hi;
    return prof;
}

ParametricPowerProfile fit_power_solid(const TransformedProblem& p, double nu2) {
    if (p.V2 == p.V0) throw SingularFit("V2 == V0 leaves the inverse-square profile undetermined");
    const double tail = std::erfc(nu2);
    if (tail < std::numeric_limits<double>::epsilon())
        throw SingularFit("erf(nu2) is 1 to machine precision");
    ParametricPowerProfile prof;
    prof.coeff = p.b;
    prof.c1 = 2.0 / kSqrtPi * (p.V2 - p.V0) / erf_minus_one(nu2);
    prof.c2 = p.V2 / prof.c1 - kSqrtPi / 2.0 * std::erf(nu2);
    prof.tau_lo = nu2 - 0.1 * std::max(std::abs(nu2), 0.1);
    prof.tau_hi = kInf;
    return prof;
}

ParametricPoint eval_param_power(const ParametricPowerProfile& profile, double tau) {
    if (!(tau >= profile.tau_lo && tau <= profile.tau_hi))
        throw DomainError("tau " + std::to_string(tau) + " outside the working range " +
                          interval_text(profile.tau_lo, profile.tau_hi));
    const double U = profile.c1 * (kSqrtPi / 2.0 * std::erf(tau) + profile.c2);
    if (!(U > 0.0)) throw DomainError("U(tau) <= 0: outside the monotone domain of omega(tau)");
    return {(2.0 * tau * U + profile.c1 * std::exp(-tau * tau)) / profile.coeff, U};
}

// ---------------------------------------------------------------------------

double solve_implicit_g(double c3, double b, double nu, ImplicitBranch branch) {
    return stefan::solve_implicit_g<double>(c3, b, nu, branch);
}

ParametricExpProfile fit_exp_solid(const TransformedProblem& p, double nu2, double g2) {
    if (!(nu2 > 0.0)) throw DomainError("fit_exp_solid requires nu2 > 0");
    const double h2 = 2.0 * g2 - nu2;
    ParametricExpProfile prof;
    prof.coeff = p.b;
    prof.kappa = p.solid_exp_rate;
    prof.nu_anchor = nu2;
    prof.value_anchor = p.V2;
    if (h2 > 0.0) {
        prof.branch = ImplicitBranch::upper;
    } else if (h2 < -nu2) {
        prof.branch = ImplicitBranch::lower;
    } else {
        throw DomainError("g2 lies between 0 and nu2/2, where omega(nu) is not monotone");
    }
    prof.c3 = implicit_relation_lhs(g2, nu2, p.b);
    // Keep the working range where the branch still has a root.
    prof.nu_lo = nu2;
    for (double factor : {0.9, 0.95, 0.99, 0.999}) {
        try {
            (void)stefan::solve_implicit_g<double>(prof.c3, prof.coeff, factor * nu2, prof.branch);
            prof.nu_lo = factor * nu2;
            break;
        } catch (const NoRoot&) {
        }
    }
    return prof;
}

ParametricPoint eval_param_exp(const ParametricExpProfile& profile, double nu) {
    check_exp_nu(profile, nu);
    ExpIntegrand integrand(profile);
    const double w = exp_w(profile, integrand, nu);
    return {nu * std::exp(-w / 2.0), w / profile.kappa};
}

std::pair<double, double> exp_profile_limit(const ParametricExpProfile& profile) {
    ExpIntegrand integrand(profile);
    auto res = integrate_to_infinity<double>(integrand, profile.nu_anchor, 2.0 / profile.coeff,
                                             exp_quadrature());
    const double w = profile.kappa * profile.value_anchor + res.value;
    return {w / profile.kappa, res.truncation_bound / std::abs(profile.kappa)};
}

// ---------------------------------------------------------------------------

double invert_omega(const ParametricPowerProfile& profile, double omega) {
    auto f = [&](double tau) { return eval_param_power(profile, tau).omega; };
    auto df = [&](double tau) { return 2.0 * eval_param_power(profile, tau).value / profile.coeff; };
    return invert_increasing(f, df, profile.tau_lo, profile.tau_hi, omega);
}

double invert_omega(const ParametricExpProfile& profile, double omega) {
    ExpIntegrand integrand(profile);
    double last_nu = profile.nu_anchor;
    double last_w = profile.kappa * profile.value_anchor;
    // Integrate incrementally from the previous iterate.
    auto w_at = [&](double nu) {
        check_exp_nu(profile, nu);
        if (nu == last_nu) return last_w;
        auto res = integrate<double>(integrand, last_nu, nu, exp_quadrature());
        last_w += res.value;
        last_nu = nu;
        return last_w;
    };
    auto f = [&](double nu) { return nu * std::exp(-w_at(nu) / 2.0); };
    auto df = [&](double nu) {
        const double g = integrand.g(nu);
        return std::exp(-w_at(nu) / 2.0) * (2.0 * g - nu) / (2.0 * g);
    };
    return invert_increasing(f, df, profile.nu_lo, kInf, omega);
}

ProfileSample sample(const Profile& profile, double omega) {
    return std::visit(
        [omega](const auto& p) -> ProfileSample {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, ErfProfile>) {
                return sample_erf(p, omega);
            } else if constexpr (std::is_same_v<T, ParametricPowerProfile>) {
                return sample_power_tau(p, invert_omega(p, omega));
            } else {
                const double nu = invert_omega(p, omega);
                ExpIntegrand integrand(p);
                return sample_exp_nu(p, integrand, nu);
            }
        },
        profile);
}

double eval(const Profile& profile, double omega) {
    if (const auto* erf_profile = std::get_if<ErfProfile>(&profile)) return eval_erf(*erf_profile, omega);
    if (const auto* power = std::get_if<ParametricPowerProfile>(&profile))
        return eval_param_power(*power, invert_omega(*power, omega)).value;
    const auto& ex = std::get<ParametricExpProfile>(profile);
    return eval_param_exp(ex, invert_omega(ex, omega)).value;
}

OdeResidual ode_residual(const Profile& profile, double omega) {
    const ProfileSample s = sample(profile, omega);
    double D = 0.0;
    if (const auto* erf_profile = std::get_if<ErfProfile>(&profile)) {
        D = erf_profile->coeff * erf_profile->coeff;
    } else if (const auto* power = std::get_if<ParametricPowerProfile>(&profile)) {
        D = power->coeff * power->coeff / (s.value * s.value);
    } else {
        const auto& ex = std::get<ParametricExpProfile>(profile);
        D = ex.coeff * ex.coeff * std::exp(ex.kappa * s.value);
    }
    const double transport = omega / 2.0 * D * s.slope;
    return {s.curvature + transport, std::max(std::abs(s.curvature), std::abs(transport))};
}

FieldValue reconstruct_transformed(const SimilaritySolution& sol, double t, double x) {
    if (!(t > 0.0)) throw DomainError("time must be positive");
    double omega = x / std::sqrt(t);
    if (omega < sol.omega1) {
        if (sol.omega1 - omega > 1e-12 * sol.omega1)
            throw DomainError("x lies below the evaporation front S1(t): material removed");
        omega = sol.omega1;
    }
    if (omega <= sol.omega2) return {Phase::liquid, eval(sol.liquid, omega)};
    return {Phase::solid, eval(sol.solid, omega)};
}

double reconstruct_field(const SimilaritySolution& sol, const MaterialModel& model, double t, double x) {
    const FieldValue f = reconstruct_transformed(sol, t, x);
    return inverse_kirchhoff(model, f.phase, f.value);
}

}  // namespace stefan
