#include "dsmks/io.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "dsmks/error.hpp"

namespace dsmks {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Enumerations <-> names

template <class E>
struct Names {
    std::vector<std::pair<E, const char*>> items;

    const char* name(E e) const {
        for (const auto& [k, v] : items)
            if (k == e) return v;
        return "?";
    }
    E parse(const std::string& s, const std::string& where) const {
        for (const auto& [k, v] : items)
            if (s == v) return k;
        std::string known;
        for (const auto& [k, v] : items) known += (known.empty() ? "" : ", ") + std::string(v);
        throw InvalidArgument(where + ": unknown value \"" + s + "\" (expected one of " + known + ")");
    }
};

const Names<ModelMode> kModes{{{ModelMode::DensitySuppressed, "dsm"}, {ModelMode::MinimalKS, "minimal_ks"}}};
const Names<MotilityKind> kMotility{{{MotilityKind::Exponential, "exponential"}, {MotilityKind::Tabulated, "tabulated"}}};
const Names<SourceFamily> kSources{{{SourceFamily::Zero, "zero"},
                                    {SourceFamily::SubLogistic, "sublogistic"},
                                    {SourceFamily::GeneralizedLogistic, "generalized_logistic"},
                                    {SourceFamily::Constant, "constant"}}};
const Names<ProfileKind> kProfiles{{{ProfileKind::Constant, "constant"},
                                    {ProfileKind::Cosine, "cosine"},
                                    {ProfileKind::Gaussian, "gaussian"},
                                    {ProfileKind::Table, "table"},
                                    {ProfileKind::Elliptic, "elliptic"}}};
const Names<DtMode> kDtModes{{{DtMode::Adaptive, "adaptive"}, {DtMode::Fixed, "fixed"}}};
const Names<TransportScheme> kSchemes{{{TransportScheme::Explicit, "explicit"}, {TransportScheme::Implicit, "implicit"}}};
const Names<SolverMethod> kMethods{{{SolverMethod::Spectral, "spectral"}, {SolverMethod::ConjugateGradient, "cg"}}};

// Strict object reader: every key must be consumed.

class Obj {
public:
    Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw InvalidArgument(path_ + ": expected an object");
    }
    ~Obj() noexcept(false) {
        if (std::uncaught_exceptions() > 0) return;
        for (const auto& [k, v] : j_.items()) {
            if (!used_.count(k)) throw InvalidArgument(where(k) + ": unknown key");
        }
    }

    bool has(const std::string& k) const { return j_.contains(k); }
    std::string where(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

    const json& at(const std::string& k) {
        used_.insert(k);
        return j_.at(k);
    }

    template <class T>
    void read(const std::string& k, T& out) {
        if (!has(k)) return;
        const json& v = at(k);
        try {
            if constexpr (std::is_same_v<T, double>) {
                if (!v.is_number()) throw InvalidArgument("");
                out = v.get<double>();
            } else if constexpr (std::is_same_v<T, int> || std::is_same_v<T, std::uint64_t>) {
                if (!v.is_number_integer()) throw InvalidArgument("");
                out = v.get<T>();
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (!v.is_string()) throw InvalidArgument("");
                out = v.get<std::string>();
            } else {
                out = v.get<T>();
            }
        } catch (const std::exception&) {
            throw InvalidArgument(where(k) + ": wrong type");
        }
    }

    void read(const std::string& k, std::optional<double>& out) {
        if (!has(k)) return;
        if (at(k).is_null()) {
            out.reset();
            return;
        }
        double v = 0.0;
        read(k, v);
        out = v;
    }

    template <class E>
    void read_enum(const std::string& k, const Names<E>& names, E& out) {
        if (!has(k)) return;
        std::string s;
        read(k, s);
        out = names.parse(s, where(k));
    }

    template <class T, std::size_t N>
    void read_array(const std::string& k, std::array<T, N>& out) {
        if (!has(k)) return;
        const json& v = at(k);
        if (!v.is_array() || v.size() < 1 || v.size() > N) {
            throw InvalidArgument(where(k) + ": expected an array of 1.." + std::to_string(N) + " numbers");
        }
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number()) throw InvalidArgument(where(k) + ": expected numbers");
            out[i] = v[i].get<T>();
        }
    }

    void read_vector(const std::string& k, std::vector<double>& out) {
        if (!has(k)) return;
        const json& v = at(k);
        if (!v.is_array()) throw InvalidArgument(where(k) + ": expected an array");
        out.clear();
        for (const auto& x : v) {
            if (!x.is_number()) throw InvalidArgument(where(k) + ": expected numbers");
            out.push_back(x.get<double>());
        }
    }

    Obj sub(const std::string& k) { return Obj(at(k), where(k)); }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

json profile_to_json(const InitialProfile& p) {
    json j;
    j["kind"] = kProfiles.name(p.kind);
    j["value"] = p.value;
    j["amplitude"] = p.amplitude;
    j["modes"] = {p.modes[0], p.modes[1]};
    j["center"] = {p.center[0], p.center[1]};
    j["width"] = p.width;
    if (!p.table.empty()) j["table"] = p.table;
    if (p.mass) j["mass"] = *p.mass;
    if (p.mass_ratio) j["mass_ratio"] = *p.mass_ratio;
    j["noise"] = p.noise;
    return j;
}

InitialProfile profile_from_json(Obj o) {
    InitialProfile p;
    o.read_enum("kind", kProfiles, p.kind);
    o.read("value", p.value);
    o.read("amplitude", p.amplitude);
    o.read_array("modes", p.modes);
    o.read_array("center", p.center);
    o.read("width", p.width);
    o.read_vector("table", p.table);
    o.read("mass", p.mass);
    o.read("mass_ratio", p.mass_ratio);
    o.read("noise", p.noise);
    return p;
}

std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t i = 0; i < text.size() && i + 1 < byte; ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgument("cannot open " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    if (!out) throw Error("cannot write " + path.string());
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(line);
    while (std::getline(is, cur, sep)) out.push_back(cur);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

double parse_double(const std::string& s, const std::string& where) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw InvalidArgument(where + ": not a number: \"" + s + "\"");
    }
}

}  // namespace

json config_to_json(const RunConfig& c) {
    json j;
    j["name"] = c.name;
    j["grid"] = {{"dim", c.grid.dim},
                 {"n", {c.grid.n[0], c.grid.n[1]}},
                 {"length", {c.grid.length[0], c.grid.length[1]}}};
    const auto& m = c.model;
    json motility = {{"kind", kMotility.name(m.motility.kind)}, {"chi", m.motility.chi}};
    if (m.motility.kind == MotilityKind::Tabulated) {
        motility["table_s"] = m.motility.table_s;
        motility["table_gamma"] = m.motility.table_gamma;
    }
    j["model"] = {{"tau", m.tau},
                  {"mode", kModes.name(m.mode)},
                  {"motility", motility},
                  {"source",
                   {{"family", kSources.name(m.source.family)},
                    {"mu", m.source.mu},
                    {"alpha", m.source.alpha},
                    {"lambda", m.source.lambda},
                    {"kappa", m.source.kappa},
                    {"c", m.source.c},
                    {"sample_max", m.source.sample_max}}}};
    j["initial"] = {{"u", profile_to_json(c.u0)}, {"v", profile_to_json(c.v0)}};
    j["T_end"] = c.T_end;
    json dt = {{"policy", kDtModes.name(c.dt.mode)}, {"scheme", kSchemes.name(c.dt.scheme)}, {"safety", c.dt.safety}};
    if (c.dt.mode == DtMode::Fixed) dt["dt"] = c.dt.dt;
    if (c.dt.dt_max) dt["dt_max"] = *c.dt.dt_max;
    j["dt"] = dt;
    j["sample_every"] = c.sample_every;
    j["solver"] = {{"method", kMethods.name(c.solver.method)},
                   {"tol", c.solver.tol},
                   {"max_iterations", c.solver.max_iterations}};
    const auto& d = c.diagnostics;
    j["diagnostics"] = {{"M", d.M},
                        {"C0", d.C0},
                        {"a1_for_b0", d.a1_for_b0},
                        {"blowup_fraction", d.blowup_fraction},
                        {"window_frac", d.window_frac},
                        {"growth_factor", d.growth_factor}};
    j["output"] = {{"snapshot_stride", c.output.snapshot_stride}};
    j["seed"] = c.seed;
    return j;
}

RunConfig config_from_json(const json& j) {
    RunConfig c;
    {
        Obj o(j, "");
        o.read("name", c.name);
        if (o.has("grid")) {
            Obj g = o.sub("grid");
            g.read("dim", c.grid.dim);
            g.read_array("n", c.grid.n);
            g.read_array("length", c.grid.length);
            if (c.grid.dim == 2 && g.has("n") && g.at("n").size() == 1) c.grid.n[1] = c.grid.n[0];
            if (c.grid.dim == 2 && g.has("length") && g.at("length").size() == 1) c.grid.length[1] = c.grid.length[0];
        }
        if (o.has("model")) {
            Obj m = o.sub("model");
            m.read("tau", c.model.tau);
            m.read_enum("mode", kModes, c.model.mode);
            if (m.has("motility")) {
                Obj mo = m.sub("motility");
                mo.read_enum("kind", kMotility, c.model.motility.kind);
                mo.read("chi", c.model.motility.chi);
                mo.read_vector("table_s", c.model.motility.table_s);
                mo.read_vector("table_gamma", c.model.motility.table_gamma);
            }
            if (m.has("source")) {
                Obj s = m.sub("source");
                auto& src = c.model.source;
                s.read_enum("family", kSources, src.family);
                s.read("mu", src.mu);
                s.read("alpha", src.alpha);
                s.read("lambda", src.lambda);
                s.read("kappa", src.kappa);
                s.read("c", src.c);
                s.read("sample_max", src.sample_max);
            }
        }
        if (o.has("initial")) {
            Obj in = o.sub("initial");
            if (in.has("u")) c.u0 = profile_from_json(in.sub("u"));
            if (in.has("v")) c.v0 = profile_from_json(in.sub("v"));
        }
        o.read("T_end", c.T_end);
        if (o.has("dt")) {
            Obj d = o.sub("dt");
            d.read_enum("policy", kDtModes, c.dt.mode);
            d.read_enum("scheme", kSchemes, c.dt.scheme);
            d.read("safety", c.dt.safety);
            d.read("dt", c.dt.dt);
            d.read("dt_max", c.dt.dt_max);
        }
        o.read("sample_every", c.sample_every);
        if (o.has("solver")) {
            Obj s = o.sub("solver");
            s.read_enum("method", kMethods, c.solver.method);
            s.read("tol", c.solver.tol);
            s.read("max_iterations", c.solver.max_iterations);
        }
        if (o.has("diagnostics")) {
            Obj d = o.sub("diagnostics");
            d.read("M", c.diagnostics.M);
            d.read("C0", c.diagnostics.C0);
            d.read("a1_for_b0", c.diagnostics.a1_for_b0);
            d.read("blowup_fraction", c.diagnostics.blowup_fraction);
            d.read("window_frac", c.diagnostics.window_frac);
            d.read("growth_factor", c.diagnostics.growth_factor);
        }
        if (o.has("output")) {
            Obj out = o.sub("output");
            out.read("snapshot_stride", c.output.snapshot_stride);
        }
        o.read("seed", c.seed);
    }
    c.validate();
    return c;
}

RunConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, col] = line_column(text, e.byte);
        std::ostringstream os;
        os << "config parse error at line " << line << ", column " << col << ": " << e.what();
        throw ConfigParseError(os.str());
    }
    return config_from_json(j);
}

RunConfig load_config(const fs::path& path) {
    try {
        return parse_config(read_file(path));
    } catch (const ConfigParseError& e) {
        throw ConfigParseError(path.string() + ": " + e.what());
    }
}

void save_config(const RunConfig& config, const fs::path& path) {
    write_file(path, config_to_json(config).dump(2) + "\n");
}

void set_config_value(json& j, const std::string& path, double value) {
    if (path == "mass" || path == "mass_ratio") {
        auto& u = j["initial"]["u"];
        u.erase("mass");
        u["mass_ratio"] = value;
        return;
    }
    json* node = &j;
    const auto parts = split(path, '.');
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (parts[i].empty()) throw InvalidArgument("malformed parameter path \"" + path + "\"");
        if (!node->is_object() || !node->contains(parts[i])) {
            throw InvalidArgument("unknown parameter \"" + path + "\"");
        }
        node = &(*node)[parts[i]];
    }
    if (node->is_number_integer()) {
        if (value != std::floor(value)) throw InvalidArgument("parameter \"" + path + "\" needs an integer");
        *node = static_cast<long long>(value);
    } else if (node->is_number()) {
        *node = value;
    } else {
        throw InvalidArgument("parameter \"" + path + "\" is not numeric");
    }
}

// Presets

namespace {

RunConfig dichotomy_base(double mass_ratio, SourceFamily family) {
    RunConfig c;
    c.grid.dim = 2;
    c.grid.n = {128, 128};
    c.grid.length = {2.0, 2.0};
    c.model.tau = 1.0;
    c.model.source.family = family;
    c.model.source.mu = 1.0;
    c.model.source.alpha = 1.0;
    c.model.source.lambda = 0.0;
    c.u0.kind = ProfileKind::Gaussian;
    c.u0.value = 0.1;
    c.u0.amplitude = 1.0;
    c.u0.center = {0.0, 0.0};
    c.u0.width = 0.3;
    c.u0.mass_ratio = mass_ratio;
    c.v0.kind = ProfileKind::Elliptic;
    c.T_end = 200.0;
    c.sample_every = 1.0;
    c.dt.scheme = TransportScheme::Implicit;
    c.dt.dt_max = 0.02;
    return c;
}

std::vector<ScenarioPreset> make_presets() {
    std::vector<ScenarioPreset> out;

    {
        RunConfig c;
        c.name = "constant-smoke";
        c.grid.dim = 2;
        c.grid.n = {16, 16};
        c.grid.length = {1.0, 1.0};
        c.model.tau = 1.0;
        c.u0 = constant_profile(1.0);
        c.v0 = constant_profile(0.0);
        c.T_end = 1.0;
        c.sample_every = 0.05;
        out.push_back({c.name, "u = 1, v = 0 on the unit square, no source", c, std::nullopt});
    }
    {
        RunConfig c;
        c.name = "manufactured-1d";
        c.grid.dim = 1;
        c.grid.n = {64, 1};
        c.grid.length = {1.0, 1.0};
        c.model.tau = 1.0;
        c.model.source.family = SourceFamily::SubLogistic;
        c.u0.kind = ProfileKind::Cosine;
        c.u0.value = 1.0;
        c.u0.amplitude = 0.5;
        c.u0.modes = {1, 0};
        c.v0.kind = ProfileKind::Elliptic;
        c.T_end = 1.0;
        c.sample_every = 0.05;
        c.dt.mode = DtMode::Fixed;
        c.dt.dt = 2e-5;
        out.push_back({c.name, "1D smooth run, u = 1 + cos(pi x)/2, f(s) = log(1+s)", c, std::nullopt});
    }
    {
        RunConfig c;
        c.name = "entropy-1d";
        c.grid.dim = 1;
        c.grid.n = {128, 1};
        c.grid.length = {1.0, 1.0};
        c.model.tau = 1.0;
        c.u0.kind = ProfileKind::Cosine;
        c.u0.value = 1.0;
        c.u0.amplitude = 0.5;
        c.u0.modes = {1, 0};
        c.v0.kind = ProfileKind::Elliptic;
        c.T_end = 0.1;
        c.sample_every = 1e-3;
        c.dt.mode = DtMode::Fixed;
        c.dt.dt = 1e-5;
        out.push_back({c.name, "1D smooth run without source, 10^4 fixed steps", c, std::nullopt});
    }
    {
        RunConfig c = dichotomy_base(0.5, SourceFamily::Zero);
        c.name = "subcritical2d";
        c.u0.kind = ProfileKind::Cosine;
        c.u0.value = 1.0;
        c.u0.amplitude = 0.1;
        c.u0.modes = {1, 1};
        out.push_back({c.name, "mass 0.5 x 4pi/chi, no source, near-uniform start", c, Trend::Bounded});
    }
    {
        RunConfig c = dichotomy_base(1.5, SourceFamily::Zero);
        c.name = "supercritical2d";
        out.push_back({c.name, "mass 1.5 x 4pi/chi, no source, corner bump", c, Trend::Growing});
    }
    {
        RunConfig c = dichotomy_base(1.5, SourceFamily::SubLogistic);
        c.name = "sublog2d";
        out.push_back({c.name, "supercritical2d data with f(s) = log(1+s)", c, Trend::Bounded});
    }
    {
        RunConfig c = dichotomy_base(1.5, SourceFamily::SubLogistic);
        c.name = "tau0-sublog";
        c.model.tau = 0.0;
        c.T_end = 20.0;
        out.push_back({c.name, "sublog2d in the parabolic-elliptic case tau = 0", c, std::nullopt});
    }
    {
        RunConfig c = dichotomy_base(1.5, SourceFamily::Zero);
        c.name = "minimalks2d";
        c.model.mode = ModelMode::MinimalKS;
        c.grid.n = {64, 64};
        c.dt = DtPolicy{};
        c.T_end = 5.0;
        c.sample_every = 0.05;
        c.diagnostics.blowup_fraction = 0.5;
        out.push_back({c.name, "minimal Keller-Segel contrast on supercritical2d data", c, std::nullopt});
    }
    {
        RunConfig c = dichotomy_base(1.5, SourceFamily::Zero);
        c.name = "dichotomy2d";
        c.grid.n = {64, 64};
        c.T_end = 100.0;
        out.push_back({c.name, "coarse supercritical2d for mass sweeps", c, std::nullopt});
    }
    return out;
}

}  // namespace

const std::vector<ScenarioPreset>& builtin_presets() {
    static const std::vector<ScenarioPreset> presets = make_presets();
    return presets;
}

const ScenarioPreset& find_preset(const std::string& name) {
    for (const auto& p : builtin_presets())
        if (p.name == name) return p;
    std::string known;
    for (const auto& p : builtin_presets()) known += (known.empty() ? "" : ", ") + p.name;
    throw InvalidArgument("unknown preset \"" + name + "\" (known: " + known + ")");
}

// CSV

const char* const kSeriesHeader =
    "t,mass,linf_u,linf_v,llogl,entropy_E,dissipation_D,lyap_Lambda,cmp_margin,key_residual,mass_residual,"
    "dual_estimate";

std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string series_to_csv(const std::vector<DiagnosticsRecord>& series) {
    std::string out = kSeriesHeader;
    out += '\n';
    for (const auto& r : series) {
        const double row[] = {r.t,       r.mass,       r.linf_u,      r.linf_v,          r.llogl,         r.entropy_E,
                              r.dissipation_D, r.lyap_Lambda, r.cmp_margin, r.key_residual_linf, r.mass_residual,
                              r.dual_estimate};
        for (std::size_t k = 0; k < std::size(row); ++k) {
            if (k) out += ',';
            out += format_double(row[k]);
        }
        out += '\n';
    }
    return out;
}

void write_series(const std::vector<DiagnosticsRecord>& series, const fs::path& path) {
    write_file(path, series_to_csv(series));
}

std::vector<double> SeriesTable::column(const std::string& name) const {
    for (std::size_t c = 0; c < columns.size(); ++c) {
        if (columns[c] != name) continue;
        std::vector<double> out;
        out.reserve(rows.size());
        for (const auto& r : rows) out.push_back(r[c]);
        return out;
    }
    throw InvalidArgument("series has no column \"" + name + "\"");
}

SeriesTable read_series(const fs::path& path) {
    std::istringstream in(read_file(path));
    SeriesTable t;
    std::string line;
    if (!std::getline(in, line)) throw InvalidArgument(path.string() + ": empty series file");
    t.columns = split(line, ',');
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() != t.columns.size()) {
            throw InvalidArgument(path.string() + ":" + std::to_string(lineno) + ": wrong number of columns");
        }
        std::vector<double> row;
        for (const auto& c : cells) row.push_back(parse_double(c, path.string() + ":" + std::to_string(lineno)));
        t.rows.push_back(std::move(row));
    }
    return t;
}

void write_snapshot(const Field& field, double t, const fs::path& path) {
    const Grid& g = field.grid();
    std::string out = std::to_string(g.dim);
    for (int a = 0; a < g.dim; ++a) out += "," + std::to_string(g.n[a]);
    for (int a = 0; a < g.dim; ++a) out += "," + format_double(g.length[a]);
    out += "," + format_double(t) + "\n";
    for (int j = 0; j < g.n[1]; ++j) {
        for (int i = 0; i < g.n[0]; ++i) {
            if (i) out += ',';
            out += format_double(field.at(i, j));
        }
        out += '\n';
    }
    write_file(path, out);
}

Snapshot read_snapshot(const fs::path& path) {
    std::istringstream in(read_file(path));
    const std::string where = path.string();
    std::string line;
    if (!std::getline(in, line)) throw InvalidArgument(where + ": empty snapshot");
    const auto head = split(line, ',');
    if (head.empty()) throw InvalidArgument(where + ": missing header");
    const int dim = static_cast<int>(parse_double(head[0], where));
    if ((dim != 1 && dim != 2) || head.size() != static_cast<std::size_t>(2 * dim + 2)) {
        throw InvalidArgument(where + ": malformed header \"" + line + "\"");
    }
    std::vector<int> n;
    std::vector<double> len;
    for (int a = 0; a < dim; ++a) n.push_back(static_cast<int>(parse_double(head[1 + a], where)));
    for (int a = 0; a < dim; ++a) len.push_back(parse_double(head[1 + dim + a], where));
    Snapshot s;
    s.grid = make_grid(dim, n, len);
    s.t = parse_double(head.back(), where);
    std::vector<double> values;
    values.reserve(s.grid.size());
    int rows = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() != static_cast<std::size_t>(s.grid.n[0])) {
            throw InvalidArgument(where + ": row " + std::to_string(rows + 1) + " has " + std::to_string(cells.size()) +
                                  " values, expected " + std::to_string(s.grid.n[0]));
        }
        for (const auto& c : cells) values.push_back(parse_double(c, where));
        ++rows;
    }
    if (rows != s.grid.n[1]) throw InvalidArgument(where + ": expected " + std::to_string(s.grid.n[1]) + " rows");
    s.field = Field(s.grid, std::move(values));
    return s;
}

// Run output

RunWriter::RunWriter(fs::path dir, const Simulator& sim) : dir_(std::move(dir)), sim_(&sim) {
    std::error_code ec;
    fs::create_directories(dir_ / "snapshots", ec);
    if (ec) throw Error("cannot create " + (dir_ / "snapshots").string() + ": " + ec.message());
}

void RunWriter::snapshot(const SimState& s) {
    char stem[32];
    std::snprintf(stem, sizeof stem, "%06d", snapshot_count_++);
    json entry = {{"t", s.t}, {"step", s.step_count}};
    for (const auto& [name, field] : {std::pair<const char*, const Field*>{"u", &s.u}, {"v", &s.v}, {"h", &s.h}}) {
        const std::string rel = std::string("snapshots/") + name + "_" + stem + ".csv";
        write_snapshot(*field, s.t, dir_ / rel);
        entry[name] = rel;
    }
    snapshots_.push_back(entry);
}

RunCallbacks RunWriter::callbacks() {
    RunCallbacks cb;
    cb.on_snapshot = [this](const SimState& s) { snapshot(s); };
    return cb;
}

void RunWriter::finish(const RunResult& result) {
    write_series(result.series, dir_ / "series.csv");
    json meta;
    meta["config"] = config_to_json(sim_->config());
    meta["b0"] = sim_->b0();
    meta["C_cmp"] = result.final_state.C_cmp;
    meta["pos_tol"] = sim_->pos_tol();
    meta["status"] = to_string(result.status);
    meta["exit_code"] = exit_code(result.status);
    meta["message"] = result.message;
    meta["steps"] = result.steps;
    meta["retries"] = result.retries;
    meta["motility_undershoots"] = result.undershoots;
    if (result.series.size() >= 20) {
        std::vector<double> t, u, v;
        for (const auto& r : result.series) {
            t.push_back(r.t);
            u.push_back(r.linf_u);
            v.push_back(r.linf_v);
        }
        const auto& d = sim_->config().diagnostics;
        meta["classification"] = {
            {"linf_u", to_string(blowup_classify(t, u, d.window_frac, d.growth_factor))},
            {"linf_v", to_string(blowup_classify(t, v, d.window_frac, d.growth_factor))}};
    }
    meta["snapshots"] = snapshots_;
    write_file(dir_ / "run.json", meta.dump(2) + "\n");
}

RunResult run_to_directory(const RunConfig& config, const fs::path& dir) {
    Simulator sim(config);
    RunWriter writer(dir, sim);
    RunCallbacks cb = writer.callbacks();
    const RunResult result = sim.run(cb);
    writer.finish(result);
    return result;
}

}  // namespace dsmks
