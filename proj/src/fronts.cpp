#include "stefan/fronts.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "stefan/quadrature.hpp"
#include "stefan/special.hpp"

namespace stefan {

namespace {

template <class Real>
struct Equation {
    Real value;
    Real scale;
};

template <class Real>
Real max_abs(std::initializer_list<Real> terms) {
    Real m = 0;
    for (Real t : terms) m = std::max(m, Real(std::abs(t)));
    return m;
}

template <class Real>
struct RawResiduals {
    std::vector<Equation<Real>> eq;
    Real omega1 = 0;
    Real omega2 = 0;
    std::optional<Real> g2;
    std::optional<Real> c3;
};

template <class Real>
Residuals to_residuals(const RawResiduals<Real>& r) {
    Residuals out;
    for (const auto& e : r.eq) {
        out.raw.push_back(static_cast<double>(e.value));
        out.scaled.push_back(e.scale > 0 ? static_cast<double>(e.value / e.scale) : static_cast<double>(e.value));
    }
    out.omega1 = static_cast<double>(r.omega1);
    out.omega2 = static_cast<double>(r.omega2);
    if (r.g2) out.g2 = static_cast<double>(*r.g2);
    if (r.c3) out.c3 = static_cast<double>(*r.c3);
    return out;
}

// Liquid erf constant C1 for the interval [ω1, ω2].
template <class Real>
Real liquid_c1(const TransformedProblem& p, Real w1, Real w2) {
    const Real a = p.a;
    const Real delta = erf_diff<Real>(a * w2 / 2, a * w1 / 2);
    if (!(delta > 0)) throw SingularFit("erf difference vanishes on [omega1, omega2]");
    return a / sqrt_pi_v<Real> * (Real(p.U2) - Real(p.U1)) / delta;
}

template <class Real>
RawResiduals<Real> ex1(const TransformedProblem& p, Real w1, Real w2) {
    using std::exp;
    if (!(w1 > 0 && w2 > w1)) throw DomainError("case 1 residuals require omega2 > omega1 > 0");
    const Real a = p.a, b = p.b;
    const Real c1 = liquid_c1<Real>(p, w1, w2);
    const Real tail = erf_minus_one<Real>(b * w2 / 2);
    if (tail == 0) throw SingularFit("erf(b*omega2/2) - 1 underflows");
    const Real c3 = b / sqrt_pi_v<Real> * (Real(p.V2) - Real(p.V0)) / tail;

    const Real liquid_at_1 = c1 * exp(-a * a * w1 * w1 / 4);
    const Real liquid_at_2 = c1 * exp(-a * a * w2 * w2 / 4);
    const Real solid_at_2 = c3 * exp(-b * b * w2 * w2 / 4);
    const Real evap = w1 * Real(p.Hv) / 2;
    const Real melt = w2 * Real(p.Hm) / 2;
    const Real q0 = p.q0;

    RawResiduals<Real> r;
    r.eq.push_back({liquid_at_1 - (evap - q0), max_abs<Real>({liquid_at_1, evap, q0})});
    r.eq.push_back({liquid_at_2 + melt - solid_at_2, max_abs<Real>({liquid_at_2, melt, solid_at_2})});
    r.omega1 = w1;
    r.omega2 = w2;
    return r;
}

template <class Real>
RawResiduals<Real> ex2(const TransformedProblem& p, Real t1, Real t2, Real n2) {
    using std::exp;
    using std::sqrt;
    if (!(t2 > t1)) throw DomainError("case 2 residuals require tau2 > tau1");
    const Real a = p.a, b = p.b;
    const Real U1 = p.U1, U2 = p.U2, V2 = p.V2, V0 = p.V0;
    const Real Hv = p.Hv, Hm = p.Hm, q0 = p.q0;
    if (!(U1 > 0 && U2 > 0 && V2 > 0 && V0 > 0))
        throw DomainError("case 2 needs positive U and V at the fronts");
    const Real sp = sqrt_pi_v<Real>;
    const Real dtau = erf_diff<Real>(t2, t1);
    if (!(dtau > 0)) throw SingularFit("erf(tau2) - erf(tau1) vanishes");
    const Real dnu = erf_minus_one<Real>(n2);
    if (dnu == 0) throw SingularFit("erf(nu2) - 1 underflows");
    const Real e1 = exp(-t1 * t1), e2 = exp(-t2 * t2), en = exp(-n2 * n2);
    const Real liquid_amp = (U2 - U1) / sp / dtau;  // (U2−U1)/(√π·Δerf)
    const Real solid_amp = (V2 - V0) / sp / dnu;

    RawResiduals<Real> r;
    {
        const Real lhs = liquid_amp * (a * a / U1 - Hv) * e1;
        const Real t_evap = U1 * Hv * t1;
        const Real t_flux = a * q0;
        r.eq.push_back({lhs - (t_evap - t_flux), max_abs<Real>({liquid_amp * a * a / U1 * e1,
                                                                 liquid_amp * Hv * e1, t_evap, t_flux})});
    }
    {
        const Real lhs = a * b * solid_amp / V2 * en;
        const Real t_cond = liquid_amp * (a * a / U2) * e2;
        const Real t_latent = liquid_amp * Hm * e2;
        const Real t_move = U2 * Hm * t2;
        r.eq.push_back({lhs - (t_cond + t_latent + t_move), max_abs<Real>({lhs, t_cond, t_latent, t_move})});
    }
    {
        const Real l1 = t2 * U2 / a, l2 = liquid_amp * e2 / a;
        const Real s1 = n2 * V2 / b, s2 = solid_amp * en / b;
        r.eq.push_back({(l1 + l2) - (s1 + s2), max_abs<Real>({l1, l2, s1, s2})});
    }
    r.omega1 = 2 / a * (t1 * U1 + liquid_amp * e1);
    r.omega2 = 2 / a * (t2 * U2 + liquid_amp * e2);
    return r;
}

template <class Real>
Real g2_of(const TransformedProblem& p, Real w1, Real n2) {
    using std::exp;
    const Real a = p.a;
    const Real kappa = p.solid_exp_rate;
    const Real W2 = kappa * Real(p.V2);
    const Real w2 = n2 * exp(-W2 / 2);
    const Real flux = w2 * Real(p.Hm) / 2 +
                      (w1 * Real(p.Hv) / 2 - Real(p.q0)) * exp(a * a / 4 * (w1 * w1 - w2 * w2));
    if (flux == 0) throw DomainError("total flux at omega2 vanishes: g2 undefined");
    return n2 / 2 + exp(W2 / 2) / (kappa * flux);
}

template <class Real>
RawResiduals<Real> ex3(const TransformedProblem& p, Real w1, Real n2) {
    using std::abs;
    using std::exp;
    if (!(w1 > 0 && n2 > 0)) throw DomainError("case 3 residuals require omega1 > 0 and nu2 > 0");
    const Real a = p.a, b = p.b;
    const Real kappa = p.solid_exp_rate;
    const Real W2 = kappa * Real(p.V2);
    const Real w2 = n2 * exp(-W2 / 2);
    if (!(w2 > w1)) throw DomainError("case 3 requires omega2 = nu2*exp(-V2/2) > omega1");

    const Real c1 = liquid_c1<Real>(p, w1, w2);
    const Real liquid_at_1 = c1 * exp(-a * a * w1 * w1 / 4);
    const Real evap = w1 * Real(p.Hv) / 2;
    const Real q0 = p.q0;

    const Real g2 = g2_of<Real>(p, w1, n2);
    const Real h2 = 2 * g2 - n2;
    ImplicitBranch branch;
    if (h2 > 0)
        branch = ImplicitBranch::upper;
    else if (h2 < -n2)
        branch = ImplicitBranch::lower;
    else
        throw DomainError("2g2 - nu2 lies in [-nu2, 0]: parametrisation not monotone");
    const Real c3 = implicit_relation_lhs<Real>(g2, n2, b);

    QuadratureOptions<Real> qopts;
    qopts.abs_tol = Real(1e-12);
    qopts.rel_tol = Real(1e-10);
    qopts.max_intervals = 4000;
    auto integrand = [&](Real nu) { return 1 / solve_implicit_g<Real>(c3, b, nu, branch); };
    const auto tail = integrate_to_infinity<Real>(integrand, n2, 2 / b, qopts);
    const Real jump = tail.value / kappa;

    RawResiduals<Real> r;
    r.eq.push_back({liquid_at_1 - (evap - q0), max_abs<Real>({liquid_at_1, evap, q0})});
    r.eq.push_back({Real(p.V2) + jump - Real(p.V0), max_abs<Real>({Real(p.V2), jump, Real(p.V0)})});
    r.omega1 = w1;
    r.omega2 = w2;
    r.g2 = g2;
    r.c3 = c3;
    return r;
}

template <class Real>
Residuals dispatch(const FrontSystem& sys, std::span<const double> x) {
    if (x.size() != sys.unknown_count())
        throw DomainError("unknown vector has the wrong length for " + to_string(sys.case_tag));
    switch (sys.case_tag) {
        case FrontCase::ex1_const_const: return to_residuals(ex1<Real>(sys.problem, x[0], x[1]));
        case FrontCase::ex2_invsq_invsq: return to_residuals(ex2<Real>(sys.problem, x[0], x[1], x[2]));
        case FrontCase::ex3_const_exp: return to_residuals(ex3<Real>(sys.problem, x[0], x[1]));
    }
    throw DomainError("unknown front case");
}

// --- scanning ------------------------------------------------------------

std::vector<double> log_grid(double lo, double hi, int n) {
    std::vector<double> g(n);
    const double llo = std::log(lo), lhi = std::log(hi);
    for (int i = 0; i < n; ++i) g[i] = std::exp(llo + (lhi - llo) * (i + 0.5) / n);
    return g;
}

std::vector<double> lin_grid(double lo, double hi, int n) {
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i) g[i] = lo + (hi - lo) * (i + 0.5) / n;
    return g;
}

struct GridPoint {
    bool feasible = false;
    std::vector<double> x;
    std::vector<double> r;
    double norm = std::numeric_limits<double>::infinity();
};

GridPoint probe(const FrontSystem& sys, std::vector<double> x) {
    GridPoint gp;
    gp.x = std::move(x);
    try {
        auto res = evaluate_residuals(sys, gp.x);
        gp.r = res.scaled;
        gp.norm = res.max_scaled();
        gp.feasible = std::isfinite(gp.norm);
    } catch (const Error&) {
        gp.feasible = false;
    }
    return gp;
}

// Sign-change test over the corners of one grid cell.
bool brackets(const std::vector<const GridPoint*>& corners) {
    const std::size_t m = corners.front()->r.size();
    for (const auto* c : corners)
        if (!c->feasible) return false;
    for (std::size_t k = 0; k < m; ++k) {
        bool pos = false, neg = false;
        for (const auto* c : corners) {
            if (c->r[k] >= 0) pos = true;
            if (c->r[k] <= 0) neg = true;
        }
        if (!(pos && neg)) return false;
    }
    return true;
}

ScanResult scan_2d(const FrontSystem& sys, const std::vector<double>& xs,
                   const std::vector<double>& gaps, bool gap_is_nu) {
    const int n = static_cast<int>(xs.size());
    const int m = static_cast<int>(gaps.size());
    const double w2_to_nu =
        gap_is_nu ? std::exp(sys.problem.solid_exp_rate * sys.problem.V2 / 2.0) : 1.0;
    std::vector<GridPoint> grid(static_cast<std::size_t>(n) * m);
    ScanResult out;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) {
            const double w1 = xs[i];
            const double w2 = w1 + gaps[j];
            grid[i * m + j] = probe(sys, {w1, gap_is_nu ? w2 * w2_to_nu : w2});
            if (grid[i * m + j].feasible) ++out.feasible_points;
        }
    if (out.feasible_points == 0) return out;
    double best_cell = std::numeric_limits<double>::infinity();
    for (int i = 0; i + 1 < n; ++i)
        for (int j = 0; j + 1 < m; ++j) {
            std::vector<const GridPoint*> corners = {&grid[i * m + j], &grid[(i + 1) * m + j],
                                                     &grid[i * m + j + 1], &grid[(i + 1) * m + j + 1]};
            if (!brackets(corners)) continue;
            ++out.sign_change_cells;
            const double w1 = std::sqrt(xs[i] * xs[i + 1]);
            const double gap = std::sqrt(gaps[j] * gaps[j + 1]);
            const double w2 = w1 + gap;
            GridPoint center = probe(sys, {w1, gap_is_nu ? w2 * w2_to_nu : w2});
            if (center.feasible && center.norm < best_cell) {
                best_cell = center.norm;
                out.guess = center.x;
                out.best_norm = center.norm;
            }
        }
    if (out.guess.empty()) {
        const auto best = std::min_element(grid.begin(), grid.end(),
                                           [](const GridPoint& l, const GridPoint& r) { return l.norm < r.norm; });
        out.guess = best->x;
        out.best_norm = best->norm;
    }
    return out;
}

ScanResult scan_ex2(const FrontSystem& sys, int n) {
    const auto t1s = lin_grid(-2.0, 3.0, n);
    const auto gaps = log_grid(1e-3, 4.0, n);
    const auto n2s = lin_grid(-2.0, 4.0, n);
    const std::size_t nn = static_cast<std::size_t>(n);
    std::vector<GridPoint> grid(nn * nn * nn);
    ScanResult out;
    auto idx = [nn](std::size_t i, std::size_t j, std::size_t k) { return (i * nn + j) * nn + k; };
    for (std::size_t i = 0; i < nn; ++i)
        for (std::size_t j = 0; j < nn; ++j)
            for (std::size_t k = 0; k < nn; ++k) {
                auto& gp = grid[idx(i, j, k)];
                gp = probe(sys, {t1s[i], t1s[i] + gaps[j], n2s[k]});
                // Fronts must be ordered and positive.
                if (gp.feasible) {
                    auto res = residual_ex2(sys.problem, t1s[i], t1s[i] + gaps[j], n2s[k]);
                    if (!(res.omega1 > 0.0 && res.omega2 > res.omega1)) gp.feasible = false;
                }
                if (gp.feasible) ++out.feasible_points;
            }
    if (out.feasible_points == 0) return out;
    double best_cell = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < nn; ++i)
        for (std::size_t j = 0; j + 1 < nn; ++j)
            for (std::size_t k = 0; k + 1 < nn; ++k) {
                std::vector<const GridPoint*> corners;
                for (int c = 0; c < 8; ++c)
                    corners.push_back(&grid[idx(i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1))]);
                if (!brackets(corners)) continue;
                ++out.sign_change_cells;
                const double t1 = 0.5 * (t1s[i] + t1s[i + 1]);
                const double gap = std::sqrt(gaps[j] * gaps[j + 1]);
                const double n2 = 0.5 * (n2s[k] + n2s[k + 1]);
                GridPoint center = probe(sys, {t1, t1 + gap, n2});
                if (center.feasible && center.norm < best_cell) {
                    best_cell = center.norm;
                    out.guess = center.x;
                    out.best_norm = center.norm;
                }
            }
    if (out.guess.empty()) {
        const GridPoint* best = nullptr;
        for (const auto& gp : grid)
            if (gp.feasible && (!best || gp.norm < best->norm)) best = &gp;
        out.guess = best->x;
        out.best_norm = best->norm;
    }
    return out;
}

double inf_norm(const Eigen::VectorXd& v) { return v.cwiseAbs().maxCoeff(); }

}  // namespace

// ---------------------------------------------------------------------------

std::string to_string(FrontCase c) {
    switch (c) {
        case FrontCase::ex1_const_const: return "const_const";
        case FrontCase::ex2_invsq_invsq: return "invsq_invsq";
        case FrontCase::ex3_const_exp: return "const_exp";
    }
    return "unknown";
}

FrontCase parse_front_case(const std::string& text) {
    for (auto c : {FrontCase::ex1_const_const, FrontCase::ex2_invsq_invsq, FrontCase::ex3_const_exp})
        if (text == to_string(c)) return c;
    throw ValidationError("unknown case tag '" + text + "' (expected const_const, invsq_invsq or const_exp)");
}

std::string to_string(SolverFailure::Kind kind) {
    switch (kind) {
        case SolverFailure::Kind::max_iterations: return "MaxIterations";
        case SolverFailure::Kind::singular_jacobian: return "SingularJacobian";
        case SolverFailure::Kind::no_bracket: return "NoBracket";
        case SolverFailure::Kind::stalled: return "Stalled";
    }
    return "Unknown";
}

FrontCase detect_case(const TransformedProblem& p) {
    using K = DiffusivityKind;
    if (p.liquid_kind == K::constant && p.solid_kind == K::constant) return FrontCase::ex1_const_const;
    if (p.liquid_kind == K::inverse_square && p.solid_kind == K::inverse_square)
        return FrontCase::ex2_invsq_invsq;
    if (p.liquid_kind == K::constant && p.solid_kind == K::exponential) return FrontCase::ex3_const_exp;
    throw UnsupportedDiffusivity("UnsupportedDiffusivity: no closed-form front system for liquid D1 " +
                                 to_string(p.liquid_kind) + " with solid D2 " + to_string(p.solid_kind));
}

std::size_t FrontSystem::unknown_count() const { return case_tag == FrontCase::ex2_invsq_invsq ? 3 : 2; }

std::vector<std::string> FrontSystem::unknown_names() const {
    switch (case_tag) {
        case FrontCase::ex1_const_const: return {"omega1", "omega2"};
        case FrontCase::ex2_invsq_invsq: return {"tau1", "tau2", "nu2"};
        case FrontCase::ex3_const_exp: return {"omega1", "nu2"};
    }
    return {};
}

FrontSystem make_front_system(const TransformedProblem& p) {
    p.validate();
    return {detect_case(p), p};
}

double Residuals::max_scaled() const {
    double m = 0.0;
    for (double r : scaled) m = std::max(m, std::abs(r));
    return m;
}

Residuals residual_ex1(const TransformedProblem& p, double omega1, double omega2) {
    return to_residuals(ex1<double>(p, omega1, omega2));
}

Residuals residual_ex2(const TransformedProblem& p, double tau1, double tau2, double nu2) {
    return to_residuals(ex2<double>(p, tau1, tau2, nu2));
}

Residuals residual_ex3(const TransformedProblem& p, double omega1, double nu2) {
    return to_residuals(ex3<double>(p, omega1, nu2));
}

double case3_g2(const TransformedProblem& p, double omega1, double nu2) {
    return g2_of<double>(p, omega1, nu2);
}

Residuals evaluate_residuals(const FrontSystem& sys, std::span<const double> x) {
    return dispatch<double>(sys, x);
}

Residuals evaluate_residuals_extended(const FrontSystem& sys, std::span<const double> x) {
    return dispatch<long double>(sys, x);
}

ScanResult bracket_scan(const FrontSystem& sys, int points_per_axis) {
    const TransformedProblem& p = sys.problem;
    ScanResult result;
    if (sys.case_tag == FrontCase::ex2_invsq_invsq) {
        result = scan_ex2(sys, points_per_axis);
    } else {
        // Liquid flux is negative for U1 > U2, so ω1·Hv/2 − q0 < 0.
        const double w1_max = 2.0 * p.q0 / p.Hv;
        if (!(w1_max > 0.0))
            throw SolverFailure(SolverFailure::Kind::no_bracket,
                                "NoBracket: feasible omega1 interval (0, 2*q0/Hv) is empty");
        const auto w1s = log_grid(w1_max * 1e-4, w1_max, points_per_axis);
        double span = 10.0 * w1_max;
        const bool nu = sys.case_tag == FrontCase::ex3_const_exp;
        for (int attempt = 0; attempt <= 3; ++attempt, span *= 10.0) {
            result = scan_2d(sys, w1s, log_grid(span * 1e-5, span, points_per_axis), nu);
            if (result.sign_change_cells > 0) break;
        }
    }
    if (result.feasible_points == 0)
        throw SolverFailure(SolverFailure::Kind::no_bracket,
                            "NoBracket: no feasible point in the scan region for " + to_string(sys.case_tag));
    return result;
}

FrontSolveResult solve_fronts(const FrontSystem& sys, std::optional<std::vector<double>> guess,
                              const SolverOptions& opts) {
    FrontSolveResult out;
    if (!guess) {
        const ScanResult scan = bracket_scan(sys, opts.scan_points);
        guess = scan.guess;
        out.used_scan = true;
        out.multiple_candidates = scan.sign_change_cells > 1;
    }
    const std::size_t n = sys.unknown_count();
    if (guess->size() != n) throw DomainError("initial guess has the wrong number of unknowns");

    auto F = [&](const Eigen::VectorXd& x) {
        const auto r = evaluate_residuals(sys, std::span<const double>(x.data(), n));
        return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(r.scaled.data(), n));
    };

    Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(guess->data(), n);
    Eigen::VectorXd r;
    try {
        r = F(x);
    } catch (const Error& e) {
        throw SolverFailure(SolverFailure::Kind::no_bracket,
                            std::string("initial guess is not admissible: ") + e.what(), out);
    }
    double norm = inf_norm(r);
    out.residual_history.push_back(norm);

    auto finish = [&]() {
        out.unknowns.assign(x.data(), x.data() + n);
        const auto res = evaluate_residuals(sys, out.unknowns);
        out.omega1 = res.omega1;
        out.omega2 = res.omega2;
        out.residual_norm = norm;
        return out;
    };

    for (int it = 0; it < opts.max_iterations; ++it) {
        if (norm < opts.tolerance) return finish();

        Eigen::MatrixXd J(n, n);
        for (std::size_t j = 0; j < n; ++j) {
            const double h = opts.fd_relative_step * std::max(1.0, std::abs(x[j]));
            Eigen::VectorXd xp = x;
            xp[j] += h;
            try {
                J.col(j) = (F(xp) - r) / h;
            } catch (const Error&) {
                xp[j] = x[j] - h;
                J.col(j) = (r - F(xp)) / h;
            }
        }
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(J, Eigen::ComputeFullU | Eigen::ComputeFullV);
        const auto& sv = svd.singularValues();
        const double cond = sv(n - 1) > 0.0 ? sv(0) / sv(n - 1) : std::numeric_limits<double>::infinity();
        out.condition_estimate = cond;
        out.iterations = it + 1;
        if (!(cond <= opts.max_condition)) {
            out.unknowns.assign(x.data(), x.data() + n);
            out.residual_norm = norm;
            throw SolverFailure(SolverFailure::Kind::singular_jacobian,
                                "SingularJacobian: condition estimate " + std::to_string(cond), out);
        }
        const Eigen::VectorXd dx = svd.solve(-r);

        double lambda = 1.0;
        bool accepted = false;
        Eigen::VectorXd x_new, r_new;
        double norm_new = norm;
        for (int bt = 0; bt <= opts.max_backtracks; ++bt, lambda *= 0.5) {
            x_new = x + lambda * dx;
            try {
                r_new = F(x_new);
            } catch (const Error&) {
                continue;
            }
            norm_new = inf_norm(r_new);
            if (std::isfinite(norm_new) && norm_new < norm) {
                accepted = true;
                break;
            }
        }
        const double step = (lambda * dx).cwiseAbs().maxCoeff();
        const double xscale = std::max(x.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
        if (!accepted) {
            out.unknowns.assign(x.data(), x.data() + n);
            out.residual_norm = norm;
            if (norm < 1e3 * opts.tolerance && dx.cwiseAbs().maxCoeff() < 1e-10 * xscale) return finish();
            throw SolverFailure(SolverFailure::Kind::stalled,
                                "Stalled: line search found no decrease of the residual norm " +
                                    std::to_string(norm),
                                out);
        }
        x = x_new;
        r = r_new;
        norm = norm_new;
        out.residual_history.push_back(norm);
        if (step < opts.step_tolerance * xscale) {
            if (norm < opts.tolerance) return finish();
            out.unknowns.assign(x.data(), x.data() + n);
            out.residual_norm = norm;
            throw SolverFailure(SolverFailure::Kind::stalled,
                                "Stalled: step below tolerance with residual " + std::to_string(norm), out);
        }
    }
    if (norm < opts.tolerance) return finish();
    out.unknowns.assign(x.data(), x.data() + n);
    out.residual_norm = norm;
    throw SolverFailure(SolverFailure::Kind::max_iterations,
                        "MaxIterations: residual " + std::to_string(norm) + " after " +
                            std::to_string(opts.max_iterations) + " iterations",
                        out);
}

// ---------------------------------------------------------------------------

std::vector<BoundaryCheck> boundary_residuals(const SimilaritySolution& sol) {
    const TransformedProblem& p = sol.problem;
    const double w1 = sol.omega1, w2 = sol.omega2;
    const ProfileSample l1 = sample(sol.liquid, w1);
    const ProfileSample l2 = sample(sol.liquid, w2);
    const ProfileSample s2 = sample(sol.solid, w2);

    double v_inf = 0.0;
    if (const auto* e = std::get_if<ErfProfile>(&sol.solid)) {
        v_inf = e->c2 + e->c1 * sqrt_pi_v<double> / e->coeff;
    } else if (const auto* pw = std::get_if<ParametricPowerProfile>(&sol.solid)) {
        v_inf = pw->c1 * (sqrt_pi_v<double> / 2.0 + pw->c2);
    } else {
        v_inf = exp_profile_limit(std::get<ParametricExpProfile>(sol.solid)).first;
    }

    auto rel = [](double value, double target, double scale) {
        return std::abs(value - target) / std::max({std::abs(target), scale, 1e-300});
    };
    const double liquid_span = std::abs(p.U1 - p.U2);
    const double solid_span = std::abs(p.V2 - p.V0);
    const double evap = w1 * p.Hv / 2.0 - p.q0;
    const double melt = w2 * p.Hm / 2.0;

    std::vector<BoundaryCheck> checks;
    checks.push_back({"evaporation_flux", std::abs(l1.slope - evap) /
                                              std::max({std::abs(l1.slope), w1 * p.Hv / 2.0, p.q0})});
    checks.push_back({"U(omega1)=U1", rel(l1.value, p.U1, liquid_span)});
    checks.push_back({"stefan_flux", std::abs(s2.slope - l2.slope - melt) /
                                         std::max({std::abs(s2.slope), std::abs(l2.slope), melt})});
    checks.push_back({"U(omega2)=U2", rel(l2.value, p.U2, liquid_span)});
    checks.push_back({"V(omega2)=V2", rel(s2.value, p.V2, solid_span)});
    checks.push_back({"V(inf)=V0", rel(v_inf, p.V0, solid_span)});
    return checks;
}

SimilaritySolution assemble_solution(const FrontSystem& sys, const FrontSolveResult& res) {
    const TransformedProblem& p = sys.problem;
    if (res.unknowns.size() != sys.unknown_count()) throw DomainError("result does not match the system");
    SimilaritySolution sol;
    sol.problem = p;
    sol.omega1 = res.omega1;
    sol.omega2 = res.omega2;
    const auto& x = res.unknowns;
    switch (sys.case_tag) {
        case FrontCase::ex1_const_const:
            sol.omega1 = x[0];
            sol.omega2 = x[1];
            sol.liquid = fit_erf_liquid(p, x[0], x[1]);
            sol.solid = fit_erf_solid(p, x[1]);
            break;
        case FrontCase::ex2_invsq_invsq: {
            sol.tau1 = x[0];
            sol.tau2 = x[1];
            sol.nu2 = x[2];
            sol.liquid = fit_power_liquid(p, x[0], x[1]);
            sol.solid = fit_power_solid(p, x[2]);
            const auto& liq = std::get<ParametricPowerProfile>(sol.liquid);
            sol.omega1 = eval_param_power(liq, x[0]).omega;
            sol.omega2 = eval_param_power(liq, x[1]).omega;
            break;
        }
        case FrontCase::ex3_const_exp: {
            sol.nu2 = x[1];
            sol.omega1 = x[0];
            sol.omega2 = x[1] * std::exp(-p.solid_exp_rate * p.V2 / 2.0);
            sol.liquid = fit_erf_liquid(p, sol.omega1, sol.omega2);
            sol.solid = fit_exp_solid(p, x[1], case3_g2(p, x[0], x[1]));
            break;
        }
    }
    if (!(sol.omega1 > 0.0 && sol.omega2 > sol.omega1))
        throw InternalConsistencyError("assembled fronts violate 0 < omega1 < omega2");
    for (const auto& check : boundary_residuals(sol)) {
        if (!(check.scaled_residual <= 1e-8)) {
            std::ostringstream os;
            os << "boundary condition " << check.name << " violated: scaled residual " << check.scaled_residual;
            throw InternalConsistencyError(os.str());
        }
    }
    return sol;
}

}  // namespace stefan
