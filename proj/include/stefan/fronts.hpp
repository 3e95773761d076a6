#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stefan/errors.hpp"
#include "stefan/material.hpp"
#include "stefan/similarity.hpp"

namespace stefan {

/// Diffusivity pairings with a closed-form similarity solution.
enum class FrontCase {
    ex1_const_const,  ///< D1 = a², D2 = b²; unknowns (ω1, ω2)
    ex2_invsq_invsq,  ///< D1 = a²/U², D2 = b²/V²; unknowns (τ1, τ2, ν2)
    ex3_const_exp,    ///< D1 = a², D2 = b²·exp(κV); unknowns (ω1, ν2)
};

std::string to_string(FrontCase c);
FrontCase parse_front_case(const std::string& text);

/// Picks the case from the diffusivity kinds; throws UnsupportedDiffusivity.
FrontCase detect_case(const TransformedProblem& p);

struct FrontSystem {
    FrontCase case_tag = FrontCase::ex1_const_const;
    TransformedProblem problem;

    std::size_t unknown_count() const;
    std::vector<std::string> unknown_names() const;
};

FrontSystem make_front_system(const TransformedProblem& p);

/// Residuals of one transcendental system. `scaled[i]` is `raw[i]` divided by
/// the largest magnitude among the terms of equation i.
struct Residuals {
    std::vector<double> raw;
    std::vector<double> scaled;
    double omega1 = 0.0;
    double omega2 = 0.0;
    /// Case 3 only: g(ν2) and the relation constant c3.
    std::optional<double> g2;
    std::optional<double> c3;

    double max_scaled() const;
};

Residuals residual_ex1(const TransformedProblem& p, double omega1, double omega2);
Residuals residual_ex2(const TransformedProblem& p, double tau1, double tau2, double nu2);
Residuals residual_ex3(const TransformedProblem& p, double omega1, double nu2);

Residuals evaluate_residuals(const FrontSystem& sys, std::span<const double> x);
/// Same residuals recomputed in long double arithmetic.
Residuals evaluate_residuals_extended(const FrontSystem& sys, std::span<const double> x);

/// g(ν2) of case 3 from the front constants and boundary data.
double case3_g2(const TransformedProblem& p, double omega1, double nu2);

struct SolverOptions {
    double tolerance = 1e-10;
    double step_tolerance = 1e-13;
    int max_iterations = 100;
    int max_backtracks = 30;
    double fd_relative_step = 1e-6;
    double max_condition = 1e14;
    int scan_points = 64;
};

struct FrontSolveResult {
    std::vector<double> unknowns;
    double omega1 = 0.0;
    double omega2 = 0.0;
    double residual_norm = 0.0;
    int iterations = 0;
    double condition_estimate = 0.0;
    std::vector<double> residual_history;
    bool used_scan = false;
    /// The scan saw more than one sign-change cell.
    bool multiple_candidates = false;
};

class SolverFailure : public Error {
public:
    enum class Kind { max_iterations, singular_jacobian, no_bracket, stalled };

    SolverFailure(Kind kind, const std::string& what, FrontSolveResult partial = {})
        : Error(what), kind_(kind), partial_(std::move(partial)) {}

    Kind kind() const { return kind_; }
    const FrontSolveResult& partial() const { return partial_; }

private:
    Kind kind_;
    FrontSolveResult partial_;
};

std::string to_string(SolverFailure::Kind kind);

struct ScanResult {
    std::vector<double> guess;
    double best_norm = 0.0;
    std::size_t feasible_points = 0;
    std::size_t sign_change_cells = 0;
};

ScanResult bracket_scan(const FrontSystem& sys, int points_per_axis = 64);

FrontSolveResult solve_fronts(const FrontSystem& sys, std::optional<std::vector<double>> guess = {},
                              const SolverOptions& opts = {});

/// Residuals of every boundary condition of the assembled solution, each
/// scaled by the magnitude of the quantities it compares.
struct BoundaryCheck {
    std::string name;
    double scaled_residual = 0.0;
};

std::vector<BoundaryCheck> boundary_residuals(const SimilaritySolution& sol);

/// Fits the profiles for a converged result and validates every boundary
/// condition to 1e-8 (InternalConsistencyError otherwise).
SimilaritySolution assemble_solution(const FrontSystem& sys, const FrontSolveResult& res);

}  // namespace stefan
