#pragma once

#include <algorithm>
#include <iosfwd>
#include <optional>
#include <vector>

#include "stefan/errors.hpp"
#include "stefan/material.hpp"
#include "stefan/similarity.hpp"

namespace stefan {

/// Front-fixing finite-difference solver of the moving-boundary problem in
/// the small variables u, v. Used to check that a similarity solution really
/// solves the PDE system.
struct OracleConfig {
    double t_start = 1.0;
    double t_end = 100.0;
    int n_liquid = 256;
    int n_solid = 256;
    /// Solid domain ends at far_field_factor·S2(t*)·√(t/t*).
    double far_field_factor = 10.0;
    /// Time step is cfl·t/max(n_liquid, n_solid).
    double cfl = 0.5;
    /// 0.5 is Crank–Nicolson, 1 is backward Euler.
    double theta = 0.5;
    /// Geometrically spaced sample times, including both ends.
    int samples = 41;
    int max_picard = 50;
    double picard_tol = 1e-13;

    void validate() const;
};

/// Map between U (or V) and the small variable u with du/dU = D(U); in these
/// variables the flux d(u)·u_x equals U_x.
class CanonicalMap {
public:
    CanonicalMap(DiffusivityKind kind, double coeff, double rate);

    double to_small(double U) const;
    double to_big(double u) const;
    /// d(u) = 1/D(U(u)).
    double d(double u) const;

private:
    DiffusivityKind kind_;
    double coeff_;
    double rate_;
};

struct OracleState {
    double t = 0.0;
    double s1 = 0.0;
    double s2 = 0.0;
    double xf = 0.0;    ///< far-field boundary
    double xf0 = 0.0;   ///< far-field boundary at t_start
    double t0 = 0.0;    ///< t_start
    std::vector<double> u;  ///< liquid, ξ = (x − S1)/(S2 − S1) on a uniform grid including ends
    std::vector<double> v;  ///< solid, η = (x − S2)/(X_f − S2)

    double omega1_hat() const;
    double omega2_hat() const;
};

struct FrontSpeeds {
    double s1 = 0.0;
    double s2 = 0.0;
};

class PdeOracle {
public:
    PdeOracle(const TransformedProblem& p, OracleConfig cfg);

    const TransformedProblem& problem() const { return p_; }
    const OracleConfig& config() const { return cfg_; }
    const CanonicalMap& liquid_map() const { return liquid_; }
    const CanonicalMap& solid_map() const { return solid_; }

    OracleState init_from_similarity(const SimilaritySolution& sol) const;
    FrontSpeeds front_speeds(const OracleState& s) const;
    /// Flux d2·v_x leaving through the far-field boundary.
    double far_flux(const OracleState& s) const;
    /// ∫u + ∫v + (Hv + u1)S1 + (Hm − u2 + v2)S2 − v0·X_f; its rate of change
    /// equals q(t) + far_flux.
    double energy(const OracleState& s) const;
    /// One θ-step of size dt; throws SimulationAbort on front collision.
    OracleState step(const OracleState& s, double dt) const;
    double suggested_dt(const OracleState& s) const;

private:
    TransformedProblem p_;
    OracleConfig cfg_;
    CanonicalMap liquid_;
    CanonicalMap solid_;
    double u1_, u2_, v2_, v0_;
};

struct TrajectorySample {
    double t = 0.0;
    double s1 = 0.0;
    double s2 = 0.0;
    double omega1_hat = 0.0;
    double omega2_hat = 0.0;
    /// Energy balance defect relative to the energy delivered so far.
    double energy_defect = 0.0;
};

struct FieldSnapshot {
    double t = 0.0;
    std::vector<double> x;
    std::vector<double> value;  ///< U in the liquid, V in the solid
    std::vector<Phase> phase;
};

struct OracleTrajectory {
    std::vector<TrajectorySample> samples;
    std::vector<FieldSnapshot> snapshots;
    long steps = 0;
    double omega1 = 0.0;  ///< similarity fronts the run started from
    double omega2 = 0.0;
};

FieldSnapshot snapshot(const PdeOracle& oracle, const OracleState& s);

OracleTrajectory run(const SimilaritySolution& sol, const OracleConfig& cfg);

struct SampleError {
    double t = 0.0;
    double front1 = 0.0;  ///< |ω̂1 − ω1|/ω1
    double front2 = 0.0;
    double field = 0.0;   ///< max |Δ| over the range of the exact field
};

struct ErrorReport {
    double max_front1 = 0.0;
    double max_front2 = 0.0;
    double rms_front1 = 0.0;
    double rms_front2 = 0.0;
    /// max_t |ω̂k(t) − ω̂k(t*)|/ωk
    double drift1 = 0.0;
    double drift2 = 0.0;
    double max_field = 0.0;
    double rms_field = 0.0;
    double max_energy_defect = 0.0;
    /// Field errors measured in temperature (true) or in U, V (false).
    bool field_in_temperature = false;
    std::vector<SampleError> per_sample;

    double max_front() const { return std::max(max_front1, max_front2); }
    double max_drift() const { return std::max(drift1, drift2); }
};

/// Fronts and fields of a trajectory against the similarity solution. With a
/// material model the field error is measured in temperature.
ErrorReport compare(const OracleTrajectory& traj, const SimilaritySolution& sol,
                    const MaterialModel* model = nullptr);

/// `t,s1,s2,omega1_hat,omega2_hat`
void write_trajectory_csv(std::ostream& os, const OracleTrajectory& traj);
/// `t,x,T,phase`; without a model the third column holds U or V.
void write_field_csv(std::ostream& os, const std::vector<FieldSnapshot>& snapshots, const MaterialModel* model);

}  // namespace stefan
