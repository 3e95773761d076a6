#include "stefan/oracle_pde.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

#include "stefan/csv.hpp"

namespace stefan {

namespace {

// Thomas algorithm; `diag` and `rhs` are overwritten.
void solve_tridiagonal(const std::vector<double>& lower, std::vector<double>& diag, const std::vector<double>& upper,
                       std::vector<double>& rhs) {
    const std::size_t n = diag.size();
    for (std::size_t i = 1; i < n; ++i) {
        const double m = lower[i] / diag[i - 1];
        diag[i] -= m * upper[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    rhs[n - 1] /= diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
}

double trapezoid(const std::vector<double>& f, double h) {
    double s = 0.5 * (f.front() + f.back());
    for (std::size_t i = 1; i + 1 < f.size(); ++i) s += f[i];
    return s * h;
}

// One-sided second-order derivatives on a uniform grid of spacing h.
double left_derivative(const std::vector<double>& f, double h) { return (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h); }

double right_derivative(const std::vector<double>& f, double h) {
    const std::size_t n = f.size() - 1;
    return (3.0 * f[n] - 4.0 * f[n - 1] + f[n - 2]) / (2.0 * h);
}

// Operator of the front-fixed equation on [x_lo(t), x_hi(t)] mapped to [0, 1]:
//   (1/L²)(d f_ξ)_ξ + c(ξ) f_ξ,  c = (x_lo'(1−ξ) + x_hi'ξ)/L.
struct MovingGrid {
    double length;
    double speed_lo;
    double speed_hi;
};

double apply_operator(const std::vector<double>& f, const CanonicalMap& map, const MovingGrid& g, std::size_t i) {
    const std::size_t n = f.size() - 1;
    const double h = 1.0 / static_cast<double>(n);
    const double xi = static_cast<double>(i) * h;
    const double dm = 0.5 * (map.d(f[i - 1]) + map.d(f[i]));
    const double dp = 0.5 * (map.d(f[i]) + map.d(f[i + 1]));
    const double k = 1.0 / (g.length * g.length * h * h);
    const double c = (g.speed_lo * (1.0 - xi) + g.speed_hi * xi) / g.length;
    return k * (dp * (f[i + 1] - f[i]) - dm * (f[i] - f[i - 1])) + c * (f[i + 1] - f[i - 1]) / (2.0 * h);
}

// θ-step for one phase. `lagged` supplies d(u) for the implicit part.
std::vector<double> theta_step(const std::vector<double>& old, const std::vector<double>& lagged,
                               const CanonicalMap& map, const MovingGrid& g_old, const MovingGrid& g_new,
                               double dt, double theta) {
    const std::size_t n = old.size() - 1;
    const std::size_t m = n - 1;
    const double h = 1.0 / static_cast<double>(n);
    std::vector<double> lower(m), diag(m), upper(m), rhs(m);
    const double k = 1.0 / (g_new.length * g_new.length * h * h);
    for (std::size_t r = 0; r < m; ++r) {
        const std::size_t i = r + 1;
        const double xi = static_cast<double>(i) * h;
        const double dm = 0.5 * (map.d(lagged[i - 1]) + map.d(lagged[i]));
        const double dp = 0.5 * (map.d(lagged[i]) + map.d(lagged[i + 1]));
        const double adv = (g_new.speed_lo * (1.0 - xi) + g_new.speed_hi * xi) / g_new.length / (2.0 * h);
        const double lo = -dt * theta * (k * dm - adv);
        const double up = -dt * theta * (k * dp + adv);
        lower[r] = lo;
        upper[r] = up;
        diag[r] = 1.0 + dt * theta * k * (dm + dp);
        rhs[r] = old[i] + (theta < 1.0 ? dt * (1.0 - theta) * apply_operator(old, map, g_old, i) : 0.0);
        if (i == 1) rhs[r] -= lo * old[0];
        if (i == n - 1) rhs[r] -= up * old[n];
    }
    solve_tridiagonal(lower, diag, upper, rhs);
    std::vector<double> out(old);
    for (std::size_t r = 0; r < m; ++r) out[r + 1] = rhs[r];
    return out;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

double max_abs(const std::vector<double>& a) {
    double m = 0.0;
    for (double x : a) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace

void OracleConfig::validate() const {
    if (!(t_start > 0.0 && t_end > t_start)) throw ValidationError("oracle needs t_end > t_start > 0");
    if (n_liquid < 16 || n_solid < 16) throw ValidationError("oracle grids need at least 16 cells per phase");
    if (!(far_field_factor >= 10.0)) throw ValidationError("far_field_factor must be at least 10");
    if (!(cfl > 0.0 && cfl < 1.0)) throw ValidationError("cfl must lie in (0, 1)");
    if (!(theta >= 0.5 && theta <= 1.0)) throw ValidationError("theta must lie in [0.5, 1]");
    if (samples < 2) throw ValidationError("oracle needs at least 2 samples");
    if (max_picard < 1 || !(picard_tol > 0.0)) throw ValidationError("invalid Picard iteration settings");
}

CanonicalMap::CanonicalMap(DiffusivityKind kind, double coeff, double rate) : kind_(kind), coeff_(coeff), rate_(rate) {}

double CanonicalMap::to_small(double U) const {
    const double c2 = coeff_ * coeff_;
    switch (kind_) {
        case DiffusivityKind::constant: return c2 * U;
        case DiffusivityKind::inverse_square: return -c2 / U;
        case DiffusivityKind::exponential: return c2 / rate_ * std::exp(rate_ * U);
    }
    return U;
}

double CanonicalMap::to_big(double u) const {
    const double c2 = coeff_ * coeff_;
    switch (kind_) {
        case DiffusivityKind::constant: return u / c2;
        case DiffusivityKind::inverse_square: return -c2 / u;
        case DiffusivityKind::exponential: return std::log(rate_ * u / c2) / rate_;
    }
    return u;
}

double CanonicalMap::d(double u) const {
    switch (kind_) {
        case DiffusivityKind::constant: return 1.0 / (coeff_ * coeff_);
        case DiffusivityKind::inverse_square: return coeff_ * coeff_ / (u * u);
        case DiffusivityKind::exponential: return 1.0 / (rate_ * u);
    }
    return 1.0;
}

double OracleState::omega1_hat() const { return s1 / std::sqrt(t); }
double OracleState::omega2_hat() const { return s2 / std::sqrt(t); }

PdeOracle::PdeOracle(const TransformedProblem& p, OracleConfig cfg)
    : p_(p),
      cfg_(cfg),
      liquid_(p.liquid_kind, p.a, p.liquid_exp_rate),
      solid_(p.solid_kind, p.b, p.solid_exp_rate) {
    p_.validate();
    cfg_.validate();
    u1_ = liquid_.to_small(p.U1);
    u2_ = liquid_.to_small(p.U2);
    v2_ = solid_.to_small(p.V2);
    v0_ = solid_.to_small(p.V0);
}

OracleState PdeOracle::init_from_similarity(const SimilaritySolution& sol) const {
    OracleState s;
    s.t = s.t0 = cfg_.t_start;
    const double root_t = std::sqrt(s.t);
    s.s1 = sol.omega1 * root_t;
    s.s2 = sol.omega2 * root_t;
    s.xf = s.xf0 = cfg_.far_field_factor * s.s2;
    const int n = cfg_.n_liquid, m = cfg_.n_solid;
    s.u.resize(n + 1);
    s.v.resize(m + 1);
    for (int i = 1; i < n; ++i) {
        const double x = s.s1 + (s.s2 - s.s1) * i / n;
        s.u[i] = liquid_.to_small(eval(sol.liquid, x / root_t));
    }
    for (int j = 1; j < m; ++j) {
        const double x = s.s2 + (s.xf - s.s2) * j / m;
        s.v[j] = solid_.to_small(eval(sol.solid, x / root_t));
    }
    s.u.front() = u1_;
    s.u.back() = u2_;
    s.v.front() = v2_;
    s.v.back() = v0_;
    return s;
}

FrontSpeeds PdeOracle::front_speeds(const OracleState& s) const {
    const double L = s.s2 - s.s1;
    const double M = s.xf - s.s2;
    const double hl = 1.0 / cfg_.n_liquid;
    const double hs = 1.0 / cfg_.n_solid;
    const double flux_l1 = liquid_.d(s.u.front()) * left_derivative(s.u, hl) / L;
    const double flux_l2 = liquid_.d(s.u.back()) * right_derivative(s.u, hl) / L;
    const double flux_s2 = solid_.d(s.v.front()) * left_derivative(s.v, hs) / M;
    return {(flux_l1 + p_.q0 / std::sqrt(s.t)) / p_.Hv, (flux_s2 - flux_l2) / p_.Hm};
}

double PdeOracle::far_flux(const OracleState& s) const {
    const double M = s.xf - s.s2;
    return solid_.d(s.v.back()) * right_derivative(s.v, 1.0 / cfg_.n_solid) / M;
}

double PdeOracle::energy(const OracleState& s) const {
    const double L = s.s2 - s.s1;
    const double M = s.xf - s.s2;
    return trapezoid(s.u, L / cfg_.n_liquid) + trapezoid(s.v, M / cfg_.n_solid) + (p_.Hv + u1_) * s.s1 +
           (p_.Hm - u2_ + v2_) * s.s2 - v0_ * s.xf;
}

double PdeOracle::suggested_dt(const OracleState& s) const {
    return cfg_.cfl * s.t / std::max(cfg_.n_liquid, cfg_.n_solid);
}

OracleState PdeOracle::step(const OracleState& s, double dt) const {
    if (!(dt > 0.0)) throw DomainError("time step must be positive");
    const double theta = cfg_.theta;
    const FrontSpeeds v_old = front_speeds(s);
    const double xf_speed_old = s.xf / (2.0 * s.t);
    const MovingGrid gl_old{s.s2 - s.s1, v_old.s1, v_old.s2};
    const MovingGrid gs_old{s.xf - s.s2, v_old.s2, xf_speed_old};

    OracleState next = s;
    next.t = s.t + dt;
    next.xf = s.xf0 * std::sqrt(next.t / s.t0);
    const double xf_speed = next.xf / (2.0 * next.t);
    next.s1 = s.s1 + dt * v_old.s1;
    next.s2 = s.s2 + dt * v_old.s2;
    FrontSpeeds v_new = v_old;

    const double u_scale = std::max(max_abs(s.u), 1e-300);
    const double v_scale = std::max(max_abs(s.v), 1e-300);
    for (int it = 0; it < cfg_.max_picard; ++it) {
        if (!(next.s2 > next.s1) || !std::isfinite(next.s1) || !std::isfinite(next.s2)) {
            std::ostringstream os;
            os.precision(17);
            os << "fronts collided at t = " << next.t << " (s1 = " << next.s1 << ", s2 = " << next.s2 << ")";
            throw SimulationAbort(os.str());
        }
        const MovingGrid gl{next.s2 - next.s1, v_new.s1, v_new.s2};
        const MovingGrid gs{next.xf - next.s2, v_new.s2, xf_speed};
        std::vector<double> u = theta_step(s.u, next.u, liquid_, gl_old, gl, dt, theta);
        std::vector<double> v = theta_step(s.v, next.v, solid_, gs_old, gs, dt, theta);
        const double du = max_abs_diff(u, next.u) / u_scale;
        const double dv = max_abs_diff(v, next.v) / v_scale;
        next.u = std::move(u);
        next.v = std::move(v);
        v_new = front_speeds(next);
        const double s1 = s.s1 + dt * (theta * v_new.s1 + (1.0 - theta) * v_old.s1);
        const double s2 = s.s2 + dt * (theta * v_new.s2 + (1.0 - theta) * v_old.s2);
        const double ds = std::max(std::abs(s1 - next.s1), std::abs(s2 - next.s2)) / next.s2;
        next.s1 = s1;
        next.s2 = s2;
        if (std::max({du, dv, ds}) <= cfg_.picard_tol) break;
    }
    for (double x : next.u)
        if (!std::isfinite(x)) throw SimulationAbort("non-finite liquid field at t = " + num17(next.t));
    for (double x : next.v)
        if (!std::isfinite(x)) throw SimulationAbort("non-finite solid field at t = " + num17(next.t));
    if (!(next.s2 > next.s1)) throw SimulationAbort("fronts collided at t = " + num17(next.t));
    return next;
}

FieldSnapshot snapshot(const PdeOracle& oracle, const OracleState& s) {
    FieldSnapshot snap;
    snap.t = s.t;
    const std::size_t n = s.u.size() - 1, m = s.v.size() - 1;
    for (std::size_t i = 0; i <= n; ++i) {
        snap.x.push_back(s.s1 + (s.s2 - s.s1) * static_cast<double>(i) / static_cast<double>(n));
        snap.value.push_back(oracle.liquid_map().to_big(s.u[i]));
        snap.phase.push_back(Phase::liquid);
    }
    for (std::size_t j = 0; j <= m; ++j) {
        snap.x.push_back(s.s2 + (s.xf - s.s2) * static_cast<double>(j) / static_cast<double>(m));
        snap.value.push_back(oracle.solid_map().to_big(s.v[j]));
        snap.phase.push_back(Phase::solid);
    }
    // Pinned nodes carry the boundary values exactly.
    const auto& p = oracle.problem();
    snap.value[0] = p.U1;
    snap.value[n] = p.U2;
    snap.value[n + 1] = p.V2;
    snap.value.back() = p.V0;
    return snap;
}

OracleTrajectory run(const SimilaritySolution& sol, const OracleConfig& cfg) {
    const PdeOracle oracle(sol.problem, cfg);
    OracleTrajectory traj;
    traj.omega1 = sol.omega1;
    traj.omega2 = sol.omega2;
    OracleState state = oracle.init_from_similarity(sol);

    const double e0 = oracle.energy(state);
    double supplied = 0.0;  // ∫(q + far flux) dt
    double delivered = 0.0; // ∫q dt
    auto source = [&](const OracleState& s) { return sol.problem.q0 / std::sqrt(s.t) + oracle.far_flux(s); };
    auto record = [&](const OracleState& s) {
        TrajectorySample smp{s.t, s.s1, s.s2, s.omega1_hat(), s.omega2_hat(), 0.0};
        if (delivered > 0.0) smp.energy_defect = (oracle.energy(s) - e0 - supplied) / delivered;
        traj.samples.push_back(smp);
        traj.snapshots.push_back(snapshot(oracle, s));
    };
    record(state);
    const double ratio = cfg.t_end / cfg.t_start;
    for (int k = 1; k < cfg.samples; ++k) {
        const double target = k + 1 == cfg.samples
                                  ? cfg.t_end
                                  : cfg.t_start * std::pow(ratio, static_cast<double>(k) / (cfg.samples - 1));
        const double span = target - state.t;
        const long nsub = std::max(1L, static_cast<long>(std::ceil(span / oracle.suggested_dt(state))));
        const double dt = span / static_cast<double>(nsub);
        for (long i = 0; i < nsub; ++i) {
            const double before = source(state);
            state = oracle.step(state, dt);
            if (i + 1 == nsub) state.t = target;
            supplied += 0.5 * dt * (before + source(state));
            delivered = 2.0 * sol.problem.q0 * (std::sqrt(state.t) - std::sqrt(cfg.t_start));
            ++traj.steps;
        }
        record(state);
    }
    return traj;
}

ErrorReport compare(const OracleTrajectory& traj, const SimilaritySolution& sol, const MaterialModel* model) {
    ErrorReport rep;
    rep.field_in_temperature = model != nullptr;
    if (traj.samples.empty()) return rep;
    const double w1 = sol.omega1, w2 = sol.omega2;
    const double w1_start = traj.samples.front().omega1_hat;
    const double w2_start = traj.samples.front().omega2_hat;
    double sum1 = 0.0, sum2 = 0.0, sumf = 0.0;
    const auto& p = sol.problem;
    auto to_reported = [&](Phase ph, double value) {
        return model ? inverse_kirchhoff(*model, ph, value) : value;
    };
    const double hi = model ? std::max(model->Tv, model->Tm) : std::max(p.U1, p.V2);
    const double lo = model ? std::min(model->T0, model->Tm) : std::min(p.U2, p.V0);
    const double range = std::max(hi - lo, 1e-300);

    for (std::size_t k = 0; k < traj.samples.size(); ++k) {
        const auto& smp = traj.samples[k];
        SampleError e;
        e.t = smp.t;
        e.front1 = std::abs(smp.omega1_hat - w1) / w1;
        e.front2 = std::abs(smp.omega2_hat - w2) / w2;
        rep.drift1 = std::max(rep.drift1, std::abs(smp.omega1_hat - w1_start) / w1);
        rep.drift2 = std::max(rep.drift2, std::abs(smp.omega2_hat - w2_start) / w2);
        rep.max_energy_defect = std::max(rep.max_energy_defect, std::abs(smp.energy_defect));
        if (k < traj.snapshots.size()) {
            const auto& snap = traj.snapshots[k];
            const double root_t = std::sqrt(snap.t);
            for (std::size_t i = 0; i < snap.x.size(); ++i) {
                const double w = snap.x[i] / root_t;
                double exact;
                if (snap.phase[i] == Phase::liquid)
                    exact = eval(sol.liquid, std::clamp(w, w1, w2));
                else
                    exact = eval(sol.solid, std::max(w, w2));
                const double diff = std::abs(to_reported(snap.phase[i], snap.value[i]) -
                                             to_reported(snap.phase[i], exact));
                e.field = std::max(e.field, diff / range);
            }
        }
        rep.max_front1 = std::max(rep.max_front1, e.front1);
        rep.max_front2 = std::max(rep.max_front2, e.front2);
        rep.max_field = std::max(rep.max_field, e.field);
        sum1 += e.front1 * e.front1;
        sum2 += e.front2 * e.front2;
        sumf += e.field * e.field;
        rep.per_sample.push_back(e);
    }
    const double n = static_cast<double>(traj.samples.size());
    rep.rms_front1 = std::sqrt(sum1 / n);
    rep.rms_front2 = std::sqrt(sum2 / n);
    rep.rms_field = std::sqrt(sumf / n);
    return rep;
}

void write_trajectory_csv(std::ostream& os, const OracleTrajectory& traj) {
    os << "t,s1,s2,omega1_hat,omega2_hat\n";
    for (const auto& s : traj.samples)
        os << num17(s.t) << ',' << num17(s.s1) << ',' << num17(s.s2) << ',' << num17(s.omega1_hat) << ','
           << num17(s.omega2_hat) << '\n';
}

void write_field_csv(std::ostream& os, const std::vector<FieldSnapshot>& snapshots, const MaterialModel* model) {
    os << "t,x,T,phase\n";
    for (const auto& snap : snapshots) {
        for (std::size_t i = 0; i < snap.x.size(); ++i) {
            const double value = model ? inverse_kirchhoff(*model, snap.phase[i], snap.value[i]) : snap.value[i];
            os << num17(snap.t) << ',' << num17(snap.x[i]) << ',' << num17(value) << ','
               << (snap.phase[i] == Phase::liquid ? "liquid" : "solid") << '\n';
        }
    }
}

}  // namespace stefan
