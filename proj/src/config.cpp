#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "stefan/cli.hpp"

#define TOML_EXCEPTIONS 1
#include "toml.hpp"

namespace stefan::cli {

namespace {

std::string join(const std::string& prefix, const std::string& key) {
    return prefix.empty() ? key : prefix + "." + key;
}

/// Read-only view of one TOML table that remembers which keys were consumed.
class Section {
public:
    Section(const toml::table* table, std::string name) : table_(table), name_(std::move(name)) {}

    bool present() const { return table_ != nullptr; }
    const std::string& name() const { return name_; }

    bool has(const std::string& key) const { return table_ && table_->contains(key); }

    std::optional<double> number(const std::string& key) {
        const toml::node* n = take(key);
        if (!n) return std::nullopt;
        double v = 0.0;
        if (auto i = n->value_exact<int64_t>()) {
            v = static_cast<double>(*i);
        } else if (auto d = n->value_exact<double>()) {
            v = *d;
        } else {
            throw ConfigError(join(name_, key), "expected a number");
        }
        if (!std::isfinite(v)) throw ConfigError(join(name_, key), "must be finite");
        return v;
    }

    double required_number(const std::string& key) {
        auto v = number(key);
        if (!v) throw ConfigError(join(name_, key), "missing");
        return *v;
    }

    double positive(const std::string& key) {
        const double v = required_number(key);
        if (!(v > 0.0)) throw ConfigError(join(name_, key), "must be positive");
        return v;
    }

    std::optional<int> integer(const std::string& key) {
        const toml::node* n = take(key);
        if (!n) return std::nullopt;
        auto i = n->value_exact<int64_t>();
        if (!i) throw ConfigError(join(name_, key), "expected an integer");
        if (*i < -1000000000 || *i > 1000000000) throw ConfigError(join(name_, key), "out of range");
        return static_cast<int>(*i);
    }

    std::optional<std::string> string(const std::string& key) {
        const toml::node* n = take(key);
        if (!n) return std::nullopt;
        auto s = n->value_exact<std::string>();
        if (!s) throw ConfigError(join(name_, key), "expected a string");
        return *s;
    }

    std::optional<bool> boolean(const std::string& key) {
        const toml::node* n = take(key);
        if (!n) return std::nullopt;
        auto b = n->value_exact<bool>();
        if (!b) throw ConfigError(join(name_, key), "expected true or false");
        return *b;
    }

    std::optional<std::vector<double>> numbers(const std::string& key) {
        const toml::node* n = take(key);
        if (!n) return std::nullopt;
        const toml::array* arr = n->as_array();
        if (!arr) throw ConfigError(join(name_, key), "expected an array of numbers");
        std::vector<double> out;
        for (const auto& el : *arr) {
            if (auto i = el.value_exact<int64_t>()) {
                out.push_back(static_cast<double>(*i));
            } else if (auto d = el.value_exact<double>()) {
                out.push_back(*d);
            } else {
                throw ConfigError(join(name_, key), "expected an array of numbers");
            }
            if (!std::isfinite(out.back())) throw ConfigError(join(name_, key), "entries must be finite");
        }
        return out;
    }

    /// Rejects keys nobody asked for, so typos do not pass silently.
    void finish(const std::set<std::string>& subtables = {}) const {
        if (!table_) return;
        for (const auto& [k, node] : *table_) {
            const std::string key(k.str());
            if (used_.count(key) || subtables.count(key)) continue;
            throw ConfigError(join(name_, key), "unknown key");
        }
    }

private:
    const toml::node* take(const std::string& key) {
        if (!table_) return nullptr;
        used_.insert(key);
        return table_->get(key);
    }

    const toml::table* table_;
    std::string name_;
    std::set<std::string> used_;
};

const toml::table* subtable(const toml::table* parent, const std::string& key, const std::string& name) {
    if (!parent) return nullptr;
    const toml::node* n = parent->get(key);
    if (!n) return nullptr;
    const toml::table* t = n->as_table();
    if (!t) throw ConfigError(name, "expected a section");
    return t;
}

CoefficientFn parse_coefficient(const toml::table* phase, const std::string& key, const std::string& name) {
    Section s(subtable(phase, key, name), name);
    if (!s.present()) throw ConfigError(name, "missing section");
    const auto kind = s.string("kind");
    if (!kind) throw ConfigError(name + ".kind", "missing");
    CoefficientFn fn = CoefficientFn::constant(1.0);
    if (*kind == "constant") {
        fn = CoefficientFn::constant(s.positive("value"));
    } else if (*kind == "power_law") {
        const double scale = s.positive("scale");
        fn = CoefficientFn::power_law(scale, s.required_number("exponent"));
    } else if (*kind == "exponential") {
        const double scale = s.positive("scale");
        fn = CoefficientFn::exponential(scale, s.required_number("rate"));
    } else {
        throw ConfigError(name + ".kind", "unknown kind '" + *kind + "' (constant, power_law, exponential)");
    }
    s.finish();
    return fn;
}

PhaseCoefficients parse_phase(const toml::table& root, const std::string& name) {
    const toml::table* phase = subtable(&root, name, name);
    if (!phase) throw ConfigError(name, "missing section");
    PhaseCoefficients pc{parse_coefficient(phase, "lambda", name + ".lambda"),
                         parse_coefficient(phase, "C", name + ".C")};
    Section(phase, name).finish({"lambda", "C"});
    return pc;
}

MaterialModel parse_material(const toml::table& root) {
    Section s(subtable(&root, "material", "material"), "material");
    const auto unit = CoefficientFn::constant(1.0);
    MaterialModel m{{unit, unit}, {unit, unit}};
    m.Hv = s.positive("Hv");
    m.Hm = s.positive("Hm");
    m.Tv = s.positive("Tv");
    m.Tm = s.positive("Tm");
    m.T0 = s.positive("T0");
    m.q0 = s.positive("q0");
    s.finish();
    if (!(m.Tv > m.Tm)) throw ConfigError("material.Tm", "must be below Tv");
    if (!(m.Tm > m.T0)) throw ConfigError("material.T0", "must be below Tm");
    m.liquid = parse_phase(root, "liquid");
    m.solid = parse_phase(root, "solid");
    try {
        m.validate();
    } catch (const UnsupportedDiffusivity&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError("material", e.what());
    }
    return m;
}

TransformedProblem parse_transformed(const toml::table& root, FrontCase c) {
    Section s(subtable(&root, "transformed", "transformed"), "transformed");
    TransformedProblem p;
    switch (c) {
        case FrontCase::ex1_const_const:
            p.liquid_kind = p.solid_kind = DiffusivityKind::constant;
            break;
        case FrontCase::ex2_invsq_invsq:
            p.liquid_kind = p.solid_kind = DiffusivityKind::inverse_square;
            break;
        case FrontCase::ex3_const_exp:
            p.liquid_kind = DiffusivityKind::constant;
            p.solid_kind = DiffusivityKind::exponential;
            break;
    }
    p.a = s.positive("a");
    p.b = s.positive("b");
    if (auto k = s.number("kappa")) {
        if (c != FrontCase::ex3_const_exp) throw ConfigError("transformed.kappa", "only used with case const_exp");
        if (*k == 0.0) throw ConfigError("transformed.kappa", "must be non-zero");
        p.solid_exp_rate = *k;
    }
    p.U1 = s.required_number("U1");
    p.U2 = s.required_number("U2");
    p.V2 = s.required_number("V2");
    p.V0 = s.required_number("V0");
    p.Hv = s.positive("Hv");
    p.Hm = s.positive("Hm");
    p.q0 = s.required_number("q0");
    s.finish();
    try {
        p.validate();
    } catch (const Error& e) {
        throw ConfigError("transformed", e.what());
    }
    return p;
}

SolverOptions parse_solver(const toml::table& root) {
    Section s(subtable(&root, "solver", "solver"), "solver");
    SolverOptions o;
    if (auto v = s.number("tolerance")) o.tolerance = *v;
    if (auto v = s.integer("max_iterations")) o.max_iterations = *v;
    if (auto v = s.integer("scan_points")) o.scan_points = *v;
    if (auto v = s.number("max_condition")) o.max_condition = *v;
    s.finish();
    if (!(o.tolerance > 0.0)) throw ConfigError("solver.tolerance", "must be positive");
    if (o.max_iterations < 1) throw ConfigError("solver.max_iterations", "must be at least 1");
    if (o.scan_points < 8) throw ConfigError("solver.scan_points", "must be at least 8");
    if (!(o.max_condition > 1.0)) throw ConfigError("solver.max_condition", "must exceed 1");
    return o;
}

std::optional<OracleConfig> parse_oracle(const toml::table& root) {
    Section s(subtable(&root, "oracle", "oracle"), "oracle");
    if (!s.present()) return std::nullopt;
    OracleConfig o;
    if (auto v = s.number("t_start")) o.t_start = *v;
    if (auto v = s.number("t_end")) o.t_end = *v;
    if (auto v = s.integer("n_liquid")) o.n_liquid = *v;
    if (auto v = s.integer("n_solid")) o.n_solid = *v;
    if (auto v = s.number("far_field_factor")) o.far_field_factor = *v;
    if (auto v = s.number("cfl")) o.cfl = *v;
    if (auto v = s.number("theta")) o.theta = *v;
    if (auto v = s.integer("samples")) o.samples = *v;
    s.finish();
    if (!(o.t_start > 0.0)) throw ConfigError("oracle.t_start", "must be positive");
    if (o.t_end < o.t_start) throw ConfigError("oracle.t_end", "must not precede t_start");
    if (o.n_liquid < 16) throw ConfigError("oracle.n_liquid", "must be at least 16");
    if (o.n_solid < 16) throw ConfigError("oracle.n_solid", "must be at least 16");
    if (!(o.far_field_factor >= 10.0)) throw ConfigError("oracle.far_field_factor", "must be at least 10");
    if (!(o.cfl > 0.0 && o.cfl < 1.0)) throw ConfigError("oracle.cfl", "must lie in (0, 1)");
    if (!(o.theta >= 0.5 && o.theta <= 1.0)) throw ConfigError("oracle.theta", "must lie in [0.5, 1]");
    if (o.samples < 2) throw ConfigError("oracle.samples", "must be at least 2");
    return o;
}

VerifyBounds parse_verify(const toml::table& root) {
    Section s(subtable(&root, "verify", "verify"), "verify");
    VerifyBounds v;
    if (auto x = s.number("max_front_drift")) v.max_front_drift = *x;
    if (auto x = s.number("max_field_error")) v.max_field_error = *x;
    if (auto x = s.number("perturb_omega2")) v.perturb_omega2 = *x;
    s.finish();
    if (!(v.max_front_drift > 0.0)) throw ConfigError("verify.max_front_drift", "must be positive");
    if (!(v.max_field_error > 0.0)) throw ConfigError("verify.max_field_error", "must be positive");
    if (!(v.perturb_omega2 > -1.0)) throw ConfigError("verify.perturb_omega2", "must exceed -1");
    return v;
}

FieldRequest parse_field(const toml::table& root) {
    Section s(subtable(&root, "field", "field"), "field");
    FieldRequest f;
    if (auto v = s.numbers("times")) f.times = *v;
    if (auto v = s.numbers("xs")) f.xs = *v;
    if (auto v = s.integer("points")) f.points = *v;
    if (auto v = s.number("x_max_factor")) f.x_max_factor = *v;
    s.finish();
    for (double t : f.times)
        if (!(t > 0.0)) throw ConfigError("field.times", "entries must be positive");
    for (double x : f.xs)
        if (!(x >= 0.0)) throw ConfigError("field.xs", "entries must be non-negative");
    if (f.points < 2) throw ConfigError("field.points", "must be at least 2");
    if (!(f.x_max_factor > 0.0)) throw ConfigError("field.x_max_factor", "must be positive");
    return f;
}

SweepRequest parse_sweep(const toml::table& root) {
    Section s(subtable(&root, "sweep", "sweep"), "sweep");
    SweepRequest r;
    if (auto v = s.string("parameter")) r.parameter = parse_sweep_parameter(*v);
    if (auto v = s.number("from")) r.from = *v;
    if (auto v = s.number("to")) r.to = *v;
    if (auto v = s.integer("points")) r.points = *v;
    if (auto v = s.boolean("relative")) r.relative = *v;
    s.finish();
    if (r.points < 1) throw ConfigError("sweep.points", "must be at least 1");
    return r;
}

}  // namespace

OutputFormat parse_format(const std::string& text) {
    if (text == "csv") return OutputFormat::csv;
    if (text == "jsonl") return OutputFormat::jsonl;
    throw ConfigError("format", "expected csv or jsonl, got '" + text + "'");
}

std::string to_string(OutputFormat f) { return f == OutputFormat::csv ? "csv" : "jsonl"; }

SweepParameter parse_sweep_parameter(const std::string& text) {
    if (text == "q0") return SweepParameter::q0;
    if (text == "Hv") return SweepParameter::Hv;
    if (text == "Hm") return SweepParameter::Hm;
    if (text == "T0") return SweepParameter::T0;
    throw ConfigError("sweep.parameter", "expected one of q0, Hv, Hm, T0, got '" + text + "'");
}

std::string to_string(SweepParameter p) {
    switch (p) {
        case SweepParameter::q0: return "q0";
        case SweepParameter::Hv: return "Hv";
        case SweepParameter::Hm: return "Hm";
        case SweepParameter::T0: return "T0";
    }
    return "?";
}

TransformedProblem RunConfig::problem() const {
    if (transformed) return *transformed;
    if (!material) throw ConfigError("material", "missing section");
    return build_transformed_problem(*material);
}

FrontCase RunConfig::resolved_case() const { return detect_case(problem()); }

void RunConfig::validate() const {
    if (!material && !transformed) throw ConfigError("material", "missing section");
    detect_case(problem());
    if (!(solver.tolerance > 0.0)) throw ConfigError("solver.tolerance", "must be positive");
    if (oracle && oracle->t_end > oracle->t_start) {
        try {
            oracle->validate();
        } catch (const Error& e) {
            throw ConfigError("oracle", e.what());
        }
    }
    if (sweep.parameter == SweepParameter::T0 && !material)
        throw ConfigError("sweep.parameter", "T0 needs a [material] section");
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hash_hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

RunConfig parse_config(const std::string& text) {
    toml::table root;
    try {
        root = toml::parse(text);
    } catch (const toml::parse_error& e) {
        std::ostringstream msg;
        msg << e.description() << " at line " << e.source().begin.line << ", column " << e.source().begin.column;
        throw ConfigError("config", msg.str());
    }

    RunConfig cfg;
    cfg.config_hash = fnv1a64(text);
    Section top(&root, "");
    if (auto c = top.string("case")) {
        try {
            cfg.case_tag = parse_front_case(*c);
        } catch (const Error&) {
            throw ConfigError("case", "unknown case tag '" + *c + "' (const_const, invsq_invsq, const_exp)");
        }
    }
    const bool has_material = root.contains("material");
    const bool has_transformed = root.contains("transformed");
    if (has_material && has_transformed) throw ConfigError("transformed", "cannot be combined with [material]");
    if (has_transformed) {
        for (const char* k : {"liquid", "solid"})
            if (root.contains(k)) throw ConfigError(k, "cannot be combined with [transformed]");
        if (!cfg.case_tag) throw ConfigError("case", "required with [transformed]");
        cfg.transformed = parse_transformed(root, *cfg.case_tag);
    } else if (has_material) {
        cfg.material = parse_material(root);
        if (cfg.case_tag) {
            const FrontCase detected = detect_case(build_transformed_problem(*cfg.material));
            if (detected != *cfg.case_tag)
                throw ConfigError("case", "material induces " + to_string(detected) + ", not " +
                                              to_string(*cfg.case_tag));
        }
    } else {
        throw ConfigError("material", "missing section");
    }
    cfg.solver = parse_solver(root);
    cfg.oracle = parse_oracle(root);
    cfg.verify = parse_verify(root);
    cfg.field = parse_field(root);
    cfg.sweep = parse_sweep(root);
    Section out(subtable(&root, "output", "output"), "output");
    if (auto d = out.string("dir")) cfg.out_dir = *d;
    if (auto f = out.string("format")) {
        try {
            cfg.format = parse_format(*f);
        } catch (const ConfigError&) {
            throw ConfigError("output.format", "expected csv or jsonl, got '" + *f + "'");
        }
    }
    out.finish();
    top.finish({"material", "liquid", "solid", "transformed", "solver", "oracle", "verify", "field", "sweep",
                "output"});
    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config", "cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

}  // namespace stefan::cli
