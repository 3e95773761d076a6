#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <future>
#include <sstream>
#include <thread>
#include <variant>

#include "CLI11.hpp"
#include "json.hpp"
#include "stefan/cli.hpp"
#include "stefan/csv.hpp"

namespace stefan::cli {

namespace {

using nlohmann::ordered_json;

// -- tabular output ---------------------------------------------------------

using Cell = std::variant<std::monostate, double, std::string>;

struct Table {
    std::string stem;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
    /// Extra `key: value` lines after the standard metadata.
    std::vector<std::pair<std::string, std::string>> notes;
};

ordered_json meta_json(const Metadata& m) {
    return ordered_json{{"tool", m.tool}, {"version", m.version}, {"config_hash", m.config_hash}, {"case", m.case_tag}};
}

void ensure_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) throw ConfigError("output.dir", "cannot create " + dir.string());
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw ConfigError("output.dir", "cannot write " + path.string());
    return os;
}

std::filesystem::path write_table(const RunConfig& cfg, const Metadata& meta, const Table& table) {
    const auto path = cfg.out_dir / (table.stem + (cfg.format == OutputFormat::csv ? ".csv" : ".jsonl"));
    auto os = open_output(path);
    if (cfg.format == OutputFormat::csv) {
        os << "# tool: " << meta.tool << ' ' << meta.version << '\n';
        os << "# config_hash: " << meta.config_hash << '\n';
        os << "# case: " << meta.case_tag << '\n';
        for (const auto& [k, v] : table.notes) os << "# " << k << ": " << v << '\n';
        for (std::size_t i = 0; i < table.columns.size(); ++i) os << (i ? "," : "") << table.columns[i];
        os << '\n';
        for (const auto& row : table.rows) {
            for (std::size_t i = 0; i < row.size(); ++i) {
                if (i) os << ',';
                if (auto d = std::get_if<double>(&row[i])) os << num17(*d);
                if (auto s = std::get_if<std::string>(&row[i])) os << *s;
            }
            os << '\n';
        }
    } else {
        auto m = meta_json(meta);
        for (const auto& [k, v] : table.notes) m[k] = v;
        os << ordered_json{{"meta", m}}.dump() << '\n';
        for (const auto& row : table.rows) {
            ordered_json obj;
            for (std::size_t i = 0; i < row.size(); ++i) {
                const auto& col = table.columns[i];
                if (auto d = std::get_if<double>(&row[i])) obj[col] = *d;
                else if (auto s = std::get_if<std::string>(&row[i])) obj[col] = *s;
                else obj[col] = nullptr;
            }
            os << obj.dump() << '\n';
        }
    }
    return path;
}

std::filesystem::path write_json(const RunConfig& cfg, const std::string& name, const ordered_json& doc) {
    const auto path = cfg.out_dir / name;
    auto os = open_output(path);
    os << doc.dump(2) << '\n';
    return path;
}

std::string phase_name(Phase p) { return p == Phase::liquid ? "liquid" : "solid"; }

// -- solving ----------------------------------------------------------------

struct Solved {
    FrontSystem system;
    FrontSolveResult result;
    SimilaritySolution solution;
};

Solved solve_config(const RunConfig& cfg, const TransformedProblem& p) {
    Solved s;
    s.system = make_front_system(p);
    s.result = solve_fronts(s.system, std::nullopt, cfg.solver);
    s.solution = assemble_solution(s.system, s.result);
    return s;
}

ordered_json result_json(const FrontSolveResult& r) {
    return ordered_json{{"unknowns", r.unknowns},
                        {"residual_norm", r.residual_norm},
                        {"iterations", r.iterations},
                        {"residual_history", r.residual_history}};
}

/// Writes diagnostics.json for a failed solve and returns exit_solver.
int solver_failure(const RunConfig& cfg, const Metadata& meta, const Error& e, std::ostream& log) {
    ordered_json doc{{"meta", meta_json(meta)}, {"status", "failed"}, {"message", e.what()}};
    if (auto sf = dynamic_cast<const SolverFailure*>(&e)) {
        doc["failure"] = to_string(sf->kind());
        doc["partial"] = result_json(sf->partial());
    } else {
        doc["failure"] = "Error";
    }
    const auto path = write_json(cfg, "diagnostics.json", doc);
    log << "solver failure: " << e.what() << "\nwrote " << path.string() << '\n';
    return exit_solver;
}

ordered_json problem_json(const TransformedProblem& p) {
    ordered_json j{{"liquid_kind", to_string(p.liquid_kind)},
                   {"solid_kind", to_string(p.solid_kind)},
                   {"a", p.a},
                   {"b", p.b}};
    if (p.solid_kind == DiffusivityKind::exponential) j["kappa"] = p.solid_exp_rate;
    j["U1"] = p.U1;
    j["U2"] = p.U2;
    j["V2"] = p.V2;
    j["V0"] = p.V0;
    j["Hv"] = p.Hv;
    j["Hm"] = p.Hm;
    j["q0"] = p.q0;
    return j;
}

Table profile_table(const SimilaritySolution& sol) {
    Table t{"profiles", {"omega", "U", "V"}, {}, {}};
    const int n = 200;
    for (int i = 0; i <= n; ++i) {
        const double w = sol.omega1 + (sol.omega2 - sol.omega1) * i / n;
        t.rows.push_back({w, eval(sol.liquid, w), std::monostate{}});
    }
    for (int i = 0; i <= n; ++i) {
        const double w = sol.omega2 * (1.0 + 4.0 * i / n);
        t.rows.push_back({w, std::monostate{}, eval(sol.solid, w)});
    }
    return t;
}

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> out;
    if (n == 1) return {lo};
    for (int i = 0; i < n; ++i) out.push_back(lo + (hi - lo) * i / (n - 1));
    return out;
}

}  // namespace

Metadata metadata(const RunConfig& cfg) {
    std::string tag;
    try {
        tag = to_string(cfg.case_tag ? *cfg.case_tag : cfg.resolved_case());
    } catch (const Error&) {
        tag = "unknown";
    }
    return Metadata{kToolName, kToolVersion, "fnv1a64:" + hash_hex(cfg.config_hash), tag};
}

int cmd_solve(const RunConfig& cfg, std::ostream& log) {
    const Metadata meta = metadata(cfg);
    ensure_dir(cfg.out_dir);
    const TransformedProblem p = cfg.problem();
    Solved s;
    try {
        s = solve_config(cfg, p);
    } catch (const Error& e) {
        return solver_failure(cfg, meta, e, log);
    }
    const auto& r = s.result;
    const auto names = s.system.unknown_names();
    ordered_json unknowns = ordered_json::object();
    for (std::size_t i = 0; i < names.size(); ++i) unknowns[names[i]] = r.unknowns[i];
    const Residuals res = evaluate_residuals(s.system, r.unknowns);
    ordered_json aux = ordered_json::object();
    if (s.solution.tau1) aux["tau1"] = *s.solution.tau1;
    if (s.solution.tau2) aux["tau2"] = *s.solution.tau2;
    if (s.solution.nu2) aux["nu2"] = *s.solution.nu2;
    if (res.g2) aux["g2"] = *res.g2;
    if (res.c3) aux["c3"] = *res.c3;
    ordered_json checks = ordered_json::object();
    for (const auto& c : boundary_residuals(s.solution)) checks[c.name] = c.scaled_residual;

    ordered_json doc{{"meta", meta_json(meta)},
                     {"case", meta.case_tag},
                     {"omega1", r.omega1},
                     {"omega2", r.omega2},
                     {"unknowns", unknowns},
                     {"auxiliary", aux},
                     {"problem", problem_json(p)},
                     {"residuals", res.scaled},
                     {"residual_norm", r.residual_norm},
                     {"iterations", r.iterations},
                     {"residual_history", r.residual_history},
                     {"condition_estimate", r.condition_estimate},
                     {"used_scan", r.used_scan},
                     {"multiple_candidates", r.multiple_candidates},
                     {"boundary_checks", checks}};
    const auto fronts = write_json(cfg, "fronts.json", doc);
    const auto profiles = write_table(cfg, meta, profile_table(s.solution));
    log << "omega1 = " << num17(r.omega1) << "\nomega2 = " << num17(r.omega2) << "\niterations = " << r.iterations
        << "\nwrote " << fronts.string() << "\nwrote " << profiles.string() << '\n';
    if (r.multiple_candidates) log << "warning: the scan found more than one sign-change cell\n";
    return exit_ok;
}

int cmd_field(const RunConfig& cfg, std::ostream& log) {
    const Metadata meta = metadata(cfg);
    ensure_dir(cfg.out_dir);
    Solved s;
    try {
        s = solve_config(cfg, cfg.problem());
    } catch (const Error& e) {
        return solver_failure(cfg, meta, e, log);
    }
    Table t{"field", {"t", "x", "T", "phase"}, {}, {}};
    if (!cfg.material) t.notes.push_back({"values", "transformed U (liquid) and V (solid)"});
    for (double time : cfg.field.times) {
        const double S1 = s.solution.omega1 * std::sqrt(time);
        const double S2 = s.solution.omega2 * std::sqrt(time);
        const auto xs = cfg.field.xs.empty() ? linspace(0.0, cfg.field.x_max_factor * S2, cfg.field.points)
                                             : cfg.field.xs;
        for (double x : xs) {
            if (x < S1) {
                t.rows.push_back({time, x, std::monostate{}, std::string("removed")});
                continue;
            }
            const FieldValue fv = reconstruct_transformed(s.solution, time, x);
            const double value = cfg.material ? reconstruct_field(s.solution, *cfg.material, time, x) : fv.value;
            t.rows.push_back({time, x, value, phase_name(fv.phase)});
        }
    }
    const auto path = write_table(cfg, meta, t);
    log << "rows = " << t.rows.size() << "\nwrote " << path.string() << '\n';
    return exit_ok;
}

int cmd_verify(const RunConfig& cfg, std::ostream& log) {
    if (!cfg.oracle) throw ConfigError("oracle", "missing section");
    const Metadata meta = metadata(cfg);
    ensure_dir(cfg.out_dir);
    Solved s;
    try {
        s = solve_config(cfg, cfg.problem());
    } catch (const Error& e) {
        return solver_failure(cfg, meta, e, log);
    }
    const OracleConfig& oc = *cfg.oracle;
    const VerifyBounds& vb = cfg.verify;
    SimilaritySolution start = s.solution;
    start.omega2 *= 1.0 + vb.perturb_omega2;

    ordered_json doc{{"meta", meta_json(meta)},
                     {"bounds", {{"max_front_drift", vb.max_front_drift}, {"max_field_error", vb.max_field_error}}},
                     {"perturb_omega2", vb.perturb_omega2},
                     {"omega1", s.solution.omega1},
                     {"omega2", s.solution.omega2},
                     {"oracle",
                      {{"t_start", oc.t_start},
                       {"t_end", oc.t_end},
                       {"n_liquid", oc.n_liquid},
                       {"n_solid", oc.n_solid},
                       {"far_field_factor", oc.far_field_factor},
                       {"cfl", oc.cfl},
                       {"theta", oc.theta},
                       {"samples", oc.samples}}}};

    bool passed = true;
    if (oc.t_end == oc.t_start) {
        doc["passed"] = true;
        doc["max_front_drift"] = 0.0;
        doc["max_field_error"] = 0.0;
        doc["note"] = "empty time interval";
        doc["samples"] = ordered_json::array();
    } else {
        OracleTrajectory traj;
        try {
            traj = run(start, oc);
        } catch (const SimulationAbort& e) {
            doc["passed"] = false;
            doc["error"] = e.what();
            const auto path = write_json(cfg, "verify.json", doc);
            log << "verification aborted: " << e.what() << "\nwrote " << path.string() << '\n';
            return exit_verification;
        }
        const ErrorReport rep = compare(traj, start, cfg.material ? &*cfg.material : nullptr);
        passed = rep.max_drift() <= vb.max_front_drift && rep.max_field <= vb.max_field_error;
        ordered_json samples = ordered_json::array();
        const double w1s = traj.samples.front().omega1_hat, w2s = traj.samples.front().omega2_hat;
        for (std::size_t k = 0; k < traj.samples.size(); ++k) {
            const auto& smp = traj.samples[k];
            const auto& err = rep.per_sample[k];
            samples.push_back({{"t", smp.t},
                               {"omega1_hat", smp.omega1_hat},
                               {"omega2_hat", smp.omega2_hat},
                               {"drift1", std::abs(smp.omega1_hat - w1s) / start.omega1},
                               {"drift2", std::abs(smp.omega2_hat - w2s) / start.omega2},
                               {"front_error1", err.front1},
                               {"front_error2", err.front2},
                               {"field_error", err.field},
                               {"energy_defect", smp.energy_defect}});
        }
        doc["passed"] = passed;
        doc["max_front_drift"] = rep.max_drift();
        doc["drift1"] = rep.drift1;
        doc["drift2"] = rep.drift2;
        doc["max_front_error"] = rep.max_front();
        doc["max_field_error"] = rep.max_field;
        doc["field_in_temperature"] = rep.field_in_temperature;
        doc["max_energy_defect"] = rep.max_energy_defect;
        doc["steps"] = traj.steps;
        doc["samples"] = samples;

        Table t{"trajectory", {"t", "s1", "s2", "omega1_hat", "omega2_hat"}, {}, {}};
        for (const auto& smp : traj.samples) t.rows.push_back({smp.t, smp.s1, smp.s2, smp.omega1_hat, smp.omega2_hat});
        log << "wrote " << write_table(cfg, meta, t).string() << '\n';
        log << "max front drift = " << num17(rep.max_drift()) << "\nmax field error = " << num17(rep.max_field)
            << '\n';
    }
    const auto path = write_json(cfg, "verify.json", doc);
    log << (passed ? "verification passed" : "verification FAILED") << "\nwrote " << path.string() << '\n';
    return passed ? exit_ok : exit_verification;
}

int cmd_sweep(const RunConfig& cfg, std::ostream& log) {
    const Metadata meta = metadata(cfg);
    ensure_dir(cfg.out_dir);
    SweepRequest req = cfg.sweep;
    Table t{"sweep", {"param", "omega1", "omega2", "residual", "iterations", "status"}, {}, {}};
    t.notes.push_back({"parameter", to_string(req.parameter)});
    if (req.from > req.to) {
        std::swap(req.from, req.to);
        log << "warning: sweep range endpoints reversed; using [" << num17(req.from) << ", " << num17(req.to)
            << "]\n";
        t.notes.push_back({"warning", "range endpoints reversed and normalized"});
    }

    double base = 0.0;
    switch (req.parameter) {
        case SweepParameter::q0: base = cfg.material ? cfg.material->q0 : cfg.transformed->q0; break;
        case SweepParameter::Hv: base = cfg.material ? cfg.material->Hv : cfg.transformed->Hv; break;
        case SweepParameter::Hm: base = cfg.material ? cfg.material->Hm : cfg.transformed->Hm; break;
        case SweepParameter::T0: base = cfg.material->T0; break;
    }
    std::vector<double> values = linspace(req.from, req.to, req.points);
    if (req.relative)
        for (double& v : values) v *= base;

    struct Point {
        std::optional<FrontSolveResult> result;
        std::string status;
    };
    std::vector<Point> points(values.size());
    auto solve_point = [&](std::size_t i) {
        const double value = values[i];
        try {
            TransformedProblem p;
            if (cfg.material) {
                MaterialModel m = *cfg.material;
                switch (req.parameter) {
                    case SweepParameter::q0: m.q0 = value; break;
                    case SweepParameter::Hv: m.Hv = value; break;
                    case SweepParameter::Hm: m.Hm = value; break;
                    case SweepParameter::T0: m.T0 = value; break;
                }
                m.validate();
                p = build_transformed_problem(m);
            } else {
                p = *cfg.transformed;
                switch (req.parameter) {
                    case SweepParameter::q0: p.q0 = value; break;
                    case SweepParameter::Hv: p.Hv = value; break;
                    case SweepParameter::Hm: p.Hm = value; break;
                    case SweepParameter::T0: break;
                }
                p.validate();
            }
            points[i].result = solve_config(cfg, p).result;
            points[i].status = "ok";
        } catch (const SolverFailure& e) {
            points[i].status = to_string(e.kind());
        } catch (const ValidationError&) {
            points[i].status = "ValidationError";
        } catch (const UnsupportedDiffusivity&) {
            points[i].status = "UnsupportedDiffusivity";
        } catch (const Error&) {
            points[i].status = "Error";
        }
    };

    // Points are independent; workers pull indices and results land in order.
    std::atomic<std::size_t> next{0};
    const std::size_t workers =
        std::min<std::size_t>(values.size(), std::max(1u, std::thread::hardware_concurrency()));
    std::vector<std::future<void>> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.push_back(std::async(std::launch::async, [&] {
            for (std::size_t i = next++; i < values.size(); i = next++) solve_point(i);
        }));
    }
    for (auto& f : pool) f.get();

    std::size_t failed = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto& pt = points[i];
        if (pt.result) {
            t.rows.push_back({values[i], pt.result->omega1, pt.result->omega2, pt.result->residual_norm,
                              static_cast<double>(pt.result->iterations), pt.status});
        } else {
            ++failed;
            t.rows.push_back({values[i], std::monostate{}, std::monostate{}, std::monostate{}, std::monostate{},
                              pt.status});
        }
    }
    const auto path = write_table(cfg, meta, t);
    log << "points = " << values.size() << ", failed = " << failed << "\nwrote " << path.string() << '\n';
    return exit_ok;
}

namespace {

std::vector<double> parse_list(const std::string& text, const std::string& flag) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item.erase(0, item.find_first_not_of(" \t"));
        item.erase(item.find_last_not_of(" \t") + 1);
        if (item.empty()) continue;
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.size() || !std::isfinite(v)) throw ConfigError(flag, "not a number: '" + item + "'");
        out.push_back(v);
    }
    return out;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Similarity solutions of the two-phase Stefan problem with evaporation", "stefan"};
    app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);
    app.require_subcommand(1);

    std::string config_path, out_dir, format;
    std::optional<double> tol;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "Configuration file")->required();
        sub->add_option("--out", out_dir, "Output directory");
        sub->add_option("--tol", tol, "Newton residual tolerance");
        sub->add_option("--format", format, "Tabular output format")->check(CLI::IsMember({"csv", "jsonl"}));
    };
    auto* solve = app.add_subcommand("solve", "Solve for the front constants and write fronts.json, profiles");
    auto* field = app.add_subcommand("field", "Write the temperature field at given times");
    auto* verify = app.add_subcommand("verify", "Check the similarity solution against the PDE oracle");
    auto* sweep = app.add_subcommand("sweep", "Solve across a range of one parameter");
    for (auto* sub : {solve, field, verify, sweep}) add_common(sub);

    std::optional<std::string> times, xs;
    field->add_option("--times", times, "Comma-separated times (s)");
    field->add_option("--xs", xs, "Comma-separated positions (m)");
    std::optional<double> perturb;
    verify->add_option("--perturb-omega2", perturb, "Relative corruption of omega2 before the oracle run");
    std::optional<std::string> param;
    std::optional<double> from, to;
    std::optional<int> points;
    bool absolute = false;
    sweep->add_option("--param", param, "q0, Hv, Hm or T0");
    sweep->add_option("--from", from, "Range start");
    sweep->add_option("--to", to, "Range end");
    sweep->add_option("--points", points, "Number of points");
    sweep->add_flag("--absolute", absolute, "Treat the range as absolute values instead of factors");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_config;
    }

    try {
        RunConfig cfg = load_config(config_path);
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (!format.empty()) cfg.format = parse_format(format);
        if (tol) {
            if (!(*tol > 0.0) || !std::isfinite(*tol)) throw ConfigError("--tol", "must be positive");
            cfg.solver.tolerance = *tol;
        }
        if (times) cfg.field.times = parse_list(*times, "--times");
        if (xs) cfg.field.xs = parse_list(*xs, "--xs");
        if (perturb) {
            if (!(*perturb > -1.0)) throw ConfigError("--perturb-omega2", "must exceed -1");
            cfg.verify.perturb_omega2 = *perturb;
        }
        if (param) cfg.sweep.parameter = parse_sweep_parameter(*param);
        if (from) cfg.sweep.from = *from;
        if (to) cfg.sweep.to = *to;
        if (points) {
            if (*points < 1) throw ConfigError("--points", "must be at least 1");
            cfg.sweep.points = *points;
        }
        if (absolute) cfg.sweep.relative = false;
        for (double t : cfg.field.times)
            if (!(t > 0.0)) throw ConfigError("--times", "entries must be positive");
        cfg.validate();

        if (solve->parsed()) return cmd_solve(cfg, out);
        if (field->parsed()) return cmd_field(cfg, out);
        if (verify->parsed()) return cmd_verify(cfg, out);
        return cmd_sweep(cfg, out);
    } catch (const ValidationError& e) {
        err << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const UnsupportedDiffusivity& e) {
        err << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_solver;
    }
}

}  // namespace stefan::cli
