#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "stefan/fronts.hpp"
#include "stefan/material.hpp"
#include "stefan/oracle_pde.hpp"

namespace stefan::cli {

inline constexpr const char* kToolName = "stefan-similarity";
inline constexpr const char* kToolVersion = "1.0.0";

enum ExitCode : int {
    exit_ok = 0,
    exit_config = 2,
    exit_solver = 3,
    exit_verification = 4,
};

enum class OutputFormat { csv, jsonl };

OutputFormat parse_format(const std::string& text);
std::string to_string(OutputFormat f);

/// Raised for anything wrong with the configuration; the message starts with
/// the dotted name of the offending field.
class ConfigError : public ValidationError {
public:
    ConfigError(const std::string& field, const std::string& what)
        : ValidationError(field + ": " + what), field_(field) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

struct VerifyBounds {
    double max_front_drift = 1e-2;
    double max_field_error = 1e-2;
    /// Relative corruption applied to ω2 before the oracle starts.
    double perturb_omega2 = 0.0;
};

struct FieldRequest {
    std::vector<double> times{1.0};
    /// Explicit positions; when empty, `points` positions on [0, x_max_factor·S2(t)].
    std::vector<double> xs;
    int points = 101;
    double x_max_factor = 5.0;
};

enum class SweepParameter { q0, Hv, Hm, T0 };

SweepParameter parse_sweep_parameter(const std::string& text);
std::string to_string(SweepParameter p);

struct SweepRequest {
    SweepParameter parameter = SweepParameter::q0;
    double from = 0.5;
    double to = 2.0;
    int points = 16;
    /// from/to multiply the configured value instead of replacing it.
    bool relative = true;
};

struct RunConfig {
    std::optional<MaterialModel> material;
    /// Synthetic problem that bypasses the material transform.
    std::optional<TransformedProblem> transformed;
    std::optional<FrontCase> case_tag;
    SolverOptions solver;
    std::optional<OracleConfig> oracle;
    VerifyBounds verify;
    FieldRequest field;
    SweepRequest sweep;
    std::filesystem::path out_dir = "out";
    OutputFormat format = OutputFormat::csv;
    std::uint64_t config_hash = 0;

    TransformedProblem problem() const;
    FrontCase resolved_case() const;
    void validate() const;
};

std::uint64_t fnv1a64(const std::string& bytes);
std::string hash_hex(std::uint64_t h);

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// Tool version, config hash and case tag.
struct Metadata {
    std::string tool;
    std::string version;
    std::string config_hash;
    std::string case_tag;
};

Metadata metadata(const RunConfig& cfg);

int cmd_solve(const RunConfig& cfg, std::ostream& log);
int cmd_field(const RunConfig& cfg, std::ostream& log);
int cmd_verify(const RunConfig& cfg, std::ostream& log);
int cmd_sweep(const RunConfig& cfg, std::ostream& log);

/// Full command line front end; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace stefan::cli
